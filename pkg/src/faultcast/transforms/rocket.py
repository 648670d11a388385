"""Random convolutional kernel transform with PPV and max pooling.

Each kernel has a random length from {7, 9, 11}, mean-centered standard
normal weights, a uniform bias on [-1, 1], an exponentially drawn dilation
and a fair-coin padding choice.  Multivariate input is handled by summing a
random channel subset before convolution.  Every kernel contributes two
features: the proportion of positive values and the maximum of the
convolution response.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._convolution import (
    convolve_dilated,
    random_channel_subset,
    sum_channels,
)

KERNEL_LENGTHS = (7, 9, 11)


@dataclass
class DilatedKernel:
    weights: np.ndarray
    bias: float
    dilation: int
    padding: bool
    channel_subset: np.ndarray

    @property
    def length(self) -> int:
        return len(self.weights)

    def receptive_field(self) -> int:
        return 1 + (self.length - 1) * self.dilation


class RocketTransform(BaseEstimator, TransformerMixin):
    """Fit a bank of random kernels; transform series into pooled features.

    Parameters
    ----------
    n_kernels : int
        Number of random kernels (2 features each).
    random_state : int
        Seed; fits are deterministic given the seed and input shape.
    """

    def __init__(self, n_kernels=10000, random_state=0):
        self.n_kernels = n_kernels
        self.random_state = random_state

    def fit(self, X, y=None):
        X = np.asarray(X)
        if X.ndim != 3:
            raise ValueError("X must be (n_samples, n_channels, length)")
        _, n_channels, length = X.shape
        if self.n_kernels < 1:
            raise ValueError("n_kernels must be >= 1")
        if length < min(KERNEL_LENGTHS):
            raise ValueError(f"series length {length} too short for a kernel")

        rng = np.random.default_rng(self.random_state)
        kernels = []
        for _ in range(self.n_kernels):
            k_len = int(rng.choice(KERNEL_LENGTHS))
            weights = rng.standard_normal(k_len)
            weights -= weights.mean()
            bias = float(rng.uniform(-1, 1))
            max_exp = np.log2((length - 1) / (k_len - 1))
            dilation = int(2 ** rng.uniform(0, max_exp))
            padding = bool(rng.integers(2))
            subset = random_channel_subset(rng, n_channels)
            kernels.append(
                DilatedKernel(
                    weights=weights,
                    bias=bias,
                    dilation=dilation,
                    padding=padding,
                    channel_subset=subset,
                )
            )
        self.kernels_ = kernels
        self.n_channels_in_ = n_channels
        self.series_length_ = length
        return self

    @property
    def n_features_out(self) -> int:
        return 2 * self.n_kernels

    def transform(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 3 or X.shape[1] != self.n_channels_in_:
            raise ValueError(
                f"expected (n, {self.n_channels_in_}, L) input, got {X.shape}"
            )
        n = X.shape[0]
        out = np.empty((n, 2 * len(self.kernels_)), dtype=np.float64)
        for i, kernel in enumerate(self.kernels_):
            series = sum_channels(X, kernel.channel_subset)
            resp = convolve_dilated(
                series,
                kernel.weights,
                dilation=kernel.dilation,
                bias=kernel.bias,
                padding=kernel.padding,
            )
            out[:, 2 * i] = np.count_nonzero(resp > 0, axis=1) / resp.shape[1]
            out[:, 2 * i + 1] = resp.max(axis=1)
        return out

    def save(self, path) -> None:
        arrays = {
            "n_kernels": np.array(self.n_kernels),
            "random_state": np.array(self.random_state),
            "n_channels": np.array(self.n_channels_in_),
            "length": np.array(self.series_length_),
        }
        for i, k in enumerate(self.kernels_):
            arrays[f"w{i}"] = k.weights
            arrays[f"m{i}"] = np.array(
                [k.bias, k.dilation, int(k.padding)], dtype=np.float64
            )
            arrays[f"c{i}"] = k.channel_subset
        np.savez(path, **arrays)

    @classmethod
    def load(cls, path) -> "RocketTransform":
        with np.load(path) as data:
            model = cls(
                n_kernels=int(data["n_kernels"]),
                random_state=int(data["random_state"]),
            )
            model.n_channels_in_ = int(data["n_channels"])
            model.series_length_ = int(data["length"])
            kernels = []
            for i in range(model.n_kernels):
                bias, dilation, padding = data[f"m{i}"]
                kernels.append(
                    DilatedKernel(
                        weights=data[f"w{i}"],
                        bias=float(bias),
                        dilation=int(dilation),
                        padding=bool(padding),
                        channel_subset=data[f"c{i}"],
                    )
                )
            model.kernels_ = kernels
        return model

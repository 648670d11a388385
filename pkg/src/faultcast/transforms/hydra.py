"""Dictionary-style transform with competing random kernels.

Kernels of length 9 with mean-centered standard normal weights are
organized into groups; at every valid time point the kernel with the
largest convolution response in its group wins.  The winner's hard feature
is incremented and its soft feature accumulates the response value.  The
transform runs over a fixed exponential dilation set and, by default, also
over the first-differenced series.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._convolution import dilated_windows, random_channel_subset, sum_channels

KERNEL_LENGTH = 9


def dilation_set(length) -> np.ndarray:
    """Exponential dilations 2^0 .. 2^floor(log2((L - 1) / 8))."""
    max_exp = int(np.floor(np.log2((length - 1) / (KERNEL_LENGTH - 1))))
    return 2 ** np.arange(max_exp + 1, dtype=np.int64)


class HydraTransform(BaseEstimator, TransformerMixin):
    """Competing-kernel counting features.

    Parameters
    ----------
    n_groups : int
        Number of kernel groups (g).
    kernels_per_group : int
        Kernels competing within each group (k); k=1 is degenerate but
        allowed.
    use_diff : bool
        Also transform the first-differenced series.
    random_state : int
        Seed; fit and transform are deterministic given the seed.
    """

    def __init__(
        self, n_groups=16, kernels_per_group=8, use_diff=True, random_state=0
    ):
        self.n_groups = n_groups
        self.kernels_per_group = kernels_per_group
        self.use_diff = use_diff
        self.random_state = random_state

    def fit(self, X, y=None):
        X = np.asarray(X)
        if X.ndim != 3:
            raise ValueError("X must be (n_samples, n_channels, length)")
        _, n_channels, length = X.shape
        if self.n_groups < 1 or self.kernels_per_group < 1:
            raise ValueError("n_groups and kernels_per_group must be >= 1")
        if length < KERNEL_LENGTH:
            raise ValueError(f"series length {length} < {KERNEL_LENGTH}")

        rng = np.random.default_rng(self.random_state)
        self.dilations_ = dilation_set(length)
        n_reps = 2 if self.use_diff else 1
        weights = {}
        subsets = {}
        for rep in range(n_reps):
            for d in self.dilations_:
                for g in range(self.n_groups):
                    w = rng.standard_normal(
                        (self.kernels_per_group, KERNEL_LENGTH)
                    )
                    w -= w.mean(axis=1, keepdims=True)
                    weights[(rep, int(d), g)] = w
                    subsets[(rep, int(d), g)] = random_channel_subset(
                        rng, n_channels
                    )
        self.weights_ = weights
        self.channel_subsets_ = subsets
        self.n_channels_in_ = n_channels
        self.series_length_ = length
        return self

    @property
    def n_features_out(self) -> int:
        n_reps = 2 if self.use_diff else 1
        return (
            self.n_groups
            * self.kernels_per_group
            * 2
            * len(self.dilations_)
            * n_reps
        )

    def transform(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 3 or X.shape[1] != self.n_channels_in_:
            raise ValueError(
                f"expected (n, {self.n_channels_in_}, L) input, got {X.shape}"
            )
        n = X.shape[0]
        k = self.kernels_per_group
        reps = [X]
        if self.use_diff:
            reps.append(np.diff(X, axis=2))
        blocks = []
        kernel_ids = np.arange(k)
        for rep, data in enumerate(reps):
            for d in self.dilations_:
                for g in range(self.n_groups):
                    series = sum_channels(
                        data, self.channel_subsets_[(rep, int(d), g)]
                    )
                    windows = dilated_windows(series, KERNEL_LENGTH, int(d))
                    resp = windows @ self.weights_[(rep, int(d), g)].T
                    # winner per time point; argmax takes the lowest index
                    # on ties
                    winner = resp.argmax(axis=2)
                    win_resp = np.take_along_axis(
                        resp, winner[:, :, None], axis=2
                    )[:, :, 0]
                    one_hot = winner[:, :, None] == kernel_ids
                    hard = one_hot.sum(axis=1, dtype=np.float64)
                    soft = np.einsum("nt,ntk->nk", win_resp, one_hot)
                    block = np.empty((n, 2 * k), dtype=np.float64)
                    block[:, 0::2] = hard
                    block[:, 1::2] = soft
                    blocks.append(block)
        return np.concatenate(blocks, axis=1)

    def save(self, path) -> None:
        keys = sorted(self.weights_)
        np.savez(
            path,
            n_groups=np.array(self.n_groups),
            kernels_per_group=np.array(self.kernels_per_group),
            use_diff=np.array(self.use_diff),
            random_state=np.array(self.random_state),
            n_channels=np.array(self.n_channels_in_),
            length=np.array(self.series_length_),
            dilations=self.dilations_,
            weights=np.stack([self.weights_[key] for key in keys]),
            subset_sizes=np.array(
                [len(self.channel_subsets_[key]) for key in keys],
                dtype=np.int64,
            ),
            subsets=np.concatenate(
                [self.channel_subsets_[key] for key in keys]
            ),
        )

    @classmethod
    def load(cls, path) -> "HydraTransform":
        with np.load(path) as data:
            model = cls(
                n_groups=int(data["n_groups"]),
                kernels_per_group=int(data["kernels_per_group"]),
                use_diff=bool(data["use_diff"]),
                random_state=int(data["random_state"]),
            )
            model.n_channels_in_ = int(data["n_channels"])
            model.series_length_ = int(data["length"])
            model.dilations_ = data["dilations"]
            n_reps = 2 if model.use_diff else 1
            keys = sorted(
                (rep, int(d), g)
                for rep in range(n_reps)
                for d in model.dilations_
                for g in range(model.n_groups)
            )
            weights = data["weights"]
            sizes = data["subset_sizes"]
            subsets = np.split(data["subsets"], np.cumsum(sizes)[:-1])
            model.weights_ = {key: weights[i] for i, key in enumerate(keys)}
            model.channel_subsets_ = {
                key: subsets[i] for i, key in enumerate(keys)
            }
        return model

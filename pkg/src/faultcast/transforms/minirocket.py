"""Near-deterministic convolutional transform with a fixed kernel set.

The 84 weight patterns are all ways of placing three weights of value 2 on
a length-9 kernel whose remaining six taps are -1, so every pattern sums to
zero.  Dilations are spread exponentially over the series length; biases
are quantiles of convolution outputs of sampled training instances, and the
only pooled feature is the proportion of positive values.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._convolution import dilated_windows, random_channel_subset, sum_channels

KERNEL_LENGTH = 9
N_PATTERNS = 84  # C(9, 3)
MAX_DILATIONS_DEFAULT = 32


def kernel_patterns() -> np.ndarray:
    """The (84, 9) weight matrix: -1 everywhere, 2 at three positions."""
    patterns = np.full((N_PATTERNS, KERNEL_LENGTH), -1.0)
    for row, positions in enumerate(combinations(range(KERNEL_LENGTH), 3)):
        patterns[row, list(positions)] = 2.0
    return patterns


def _dilation_set(length, num_features, max_dilations):
    max_exp = np.log2((length - 1) / (KERNEL_LENGTH - 1))
    count = max(1, min(max_dilations, num_features // N_PATTERNS))
    exponents = np.linspace(0, max_exp, count)
    return np.unique(np.floor(2**exponents).astype(np.int64))


def _allocate(num_features, n_slots):
    base, extra = divmod(num_features, n_slots)
    counts = np.full(n_slots, base, dtype=np.int64)
    counts[:extra] += 1
    return counts


class MiniRocketTransform(BaseEstimator, TransformerMixin):
    """PPV features over the fixed 84-pattern kernel set.

    Parameters
    ----------
    num_features : int
        Total output features; must be at least 84.
    max_dilations : int
        Upper bound on the number of distinct dilations.
    random_state : int
        Seed for channel subsets and bias-sample draws; the transform is
        otherwise deterministic.
    """

    def __init__(
        self,
        num_features=1000,
        max_dilations=MAX_DILATIONS_DEFAULT,
        random_state=0,
    ):
        self.num_features = num_features
        self.max_dilations = max_dilations
        self.random_state = random_state

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 3:
            raise ValueError("X must be (n_samples, n_channels, length)")
        n, n_channels, length = X.shape
        if n == 0:
            raise ValueError("training set must be nonempty")
        if self.num_features < N_PATTERNS:
            raise ValueError(f"num_features must be >= {N_PATTERNS}")
        if length < KERNEL_LENGTH:
            raise ValueError(f"series length {length} < {KERNEL_LENGTH}")

        rng = np.random.default_rng(self.random_state)
        patterns = kernel_patterns()
        dilations = _dilation_set(length, self.num_features, self.max_dilations)
        n_slots = N_PATTERNS * len(dilations)
        counts = _allocate(self.num_features, n_slots)

        subsets = []
        biases = []
        slot = 0
        for d in dilations:
            for k in range(N_PATTERNS):
                subset = random_channel_subset(rng, n_channels)
                sample = int(rng.integers(n))
                series = sum_channels(X[sample : sample + 1], subset)
                resp = dilated_windows(series, KERNEL_LENGTH, int(d))[0] @ (
                    patterns[k]
                )
                m = counts[slot]
                if m > 0:
                    levels = (np.arange(m) + 1) / (m + 1)
                    biases.append(np.quantile(resp, levels))
                else:
                    biases.append(np.empty(0))
                subsets.append(subset)
                slot += 1

        self.patterns_ = patterns
        self.dilations_ = dilations
        self.feature_counts_ = counts
        self.channel_subsets_ = subsets
        self.biases_ = biases
        self.n_channels_in_ = n_channels
        self.series_length_ = length
        return self

    @property
    def n_features_out(self) -> int:
        return int(self.feature_counts_.sum())

    def transform(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 3 or X.shape[1] != self.n_channels_in_:
            raise ValueError(
                f"expected (n, {self.n_channels_in_}, L) input, got {X.shape}"
            )
        n = X.shape[0]
        out = np.empty((n, self.n_features_out), dtype=np.float64)
        col = 0
        slot = 0
        for d in self.dilations_:
            for k in range(N_PATTERNS):
                m = self.feature_counts_[slot]
                if m > 0:
                    series = sum_channels(X, self.channel_subsets_[slot])
                    windows = dilated_windows(series, KERNEL_LENGTH, int(d))
                    resp = windows @ self.patterns_[k]
                    thresholds = self.biases_[slot]
                    out[:, col : col + m] = (
                        resp[:, :, None] > thresholds
                    ).mean(axis=1)
                    col += m
                slot += 1
        return out

    def save(self, path) -> None:
        np.savez(
            path,
            num_features=np.array(self.num_features),
            max_dilations=np.array(self.max_dilations),
            random_state=np.array(self.random_state),
            n_channels=np.array(self.n_channels_in_),
            length=np.array(self.series_length_),
            dilations=self.dilations_,
            feature_counts=self.feature_counts_,
            subset_sizes=np.array(
                [len(s) for s in self.channel_subsets_], dtype=np.int64
            ),
            subsets=np.concatenate(self.channel_subsets_),
            biases=np.concatenate(self.biases_),
        )

    @classmethod
    def load(cls, path) -> "MiniRocketTransform":
        with np.load(path) as data:
            model = cls(
                num_features=int(data["num_features"]),
                max_dilations=int(data["max_dilations"]),
                random_state=int(data["random_state"]),
            )
            model.patterns_ = kernel_patterns()
            model.n_channels_in_ = int(data["n_channels"])
            model.series_length_ = int(data["length"])
            model.dilations_ = data["dilations"]
            model.feature_counts_ = data["feature_counts"]
            sizes = data["subset_sizes"]
            flat_subsets = data["subsets"]
            flat_biases = data["biases"]
            model.channel_subsets_ = list(
                np.split(flat_subsets, np.cumsum(sizes)[:-1])
            )
            model.biases_ = list(
                np.split(flat_biases, np.cumsum(model.feature_counts_)[:-1])
            )
        return model

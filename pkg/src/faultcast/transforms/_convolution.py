"""Shared helpers for dilated convolution over multivariate series."""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import as_strided


def dilated_windows(x, length, dilation):
    """Strided view of all valid dilated windows.

    ``x`` is (n_samples, series_length) and must be C-contiguous; the
    result is a read-only (n_samples, n_positions, length) view where
    position ``t`` holds ``x[:, t + j * dilation]`` for tap ``j``.
    """
    x = np.ascontiguousarray(x)
    n, series_length = x.shape
    n_positions = series_length - (length - 1) * dilation
    if n_positions < 1:
        raise ValueError(
            f"receptive field {(length - 1) * dilation + 1} exceeds "
            f"series length {series_length}"
        )
    sn, sl = x.strides
    view = as_strided(
        x,
        shape=(n, n_positions, length),
        strides=(sn, sl, sl * dilation),
        writeable=False,
    )
    return view


def convolve_dilated(x, weights, dilation=1, bias=0.0, padding=False):
    """Dilated cross-correlation of each row of ``x`` with ``weights``.

    Without padding the output has ``L - (len - 1) * dilation`` positions;
    with padding the series is zero-padded symmetrically by
    ``((len - 1) * dilation) // 2`` on each side.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    weights = np.asarray(weights, dtype=np.float64)
    length = len(weights)
    if padding:
        pad = ((length - 1) * dilation) // 2
        x = np.pad(x, ((0, 0), (pad, pad)))
    windows = dilated_windows(x, length, dilation)
    return windows @ weights + bias


def ppv(response) -> float:
    """Proportion of strictly positive values of a response vector."""
    response = np.asarray(response)
    if response.size == 0:
        raise ValueError("empty response")
    return float(np.count_nonzero(response > 0) / response.size)


def random_channel_subset(rng, n_channels):
    """Random channel indices, size 2**u with u uniform over the exponent
    range [0, log2(n_channels)]."""
    limit = np.log2(n_channels) if n_channels > 1 else 0.0
    size = int(np.floor(2 ** rng.uniform(0, limit)))
    size = max(1, min(size, n_channels))
    return np.sort(rng.choice(n_channels, size=size, replace=False))


def sum_channels(X, channel_indices):
    """Combine a channel subset of (N, D, L) data by summation -> (N, L)."""
    if len(channel_indices) == 1:
        return np.asarray(X[:, channel_indices[0], :], dtype=np.float64)
    return X[:, channel_indices, :].sum(axis=1, dtype=np.float64)

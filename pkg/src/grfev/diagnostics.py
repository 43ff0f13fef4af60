"""Monte Carlo error summaries used to compare samplers with exact oracles."""
from __future__ import annotations

import numpy as np


def batch_means_se(x, n_batches: int = 50) -> float:
    """Standard error of the mean of a correlated series by non-overlapping batch means."""
    x = np.asarray(x, dtype=float).ravel()
    b = len(x) // n_batches
    if b < 1 or n_batches < 2:
        raise ValueError("series too short for the requested number of batches")
    means = x[: b * n_batches].reshape(n_batches, b).mean(axis=1)
    return float(means.std(ddof=1) / np.sqrt(n_batches))


def sd_se(x, n_batches: int = 50) -> float:
    """Batch-means standard error of the sample sd (delta method on the variance)."""
    x = np.asarray(x, dtype=float).ravel()
    sd = x.std()
    return batch_means_se((x - x.mean()) ** 2, n_batches) / (2.0 * sd)


def binned_tv(draws, axis, density, n_bins: int = 30) -> float:
    """Total variation between a histogram of ``draws`` and a gridded density.

    Bins are equal-width over the central 99.9% of the exact mass; the two
    tails outside form one extra bin each.
    """
    draws = np.asarray(draws, dtype=float).ravel()
    axis = np.asarray(axis, dtype=float)
    density = np.asarray(density, dtype=float)
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (density[1:] + density[:-1]) * np.diff(axis))])
    cdf /= cdf[-1]
    lo, hi = np.interp([0.0005, 0.9995], cdf, axis)
    edges = np.linspace(lo, hi, n_bins + 1)
    exact = np.diff(np.concatenate([[0.0], np.interp(edges, axis, cdf), [1.0]]))
    counts = np.histogram(draws, np.concatenate([[-np.inf], edges, [np.inf]]))[0]
    return float(0.5 * np.abs(counts / len(draws) - exact).sum())


def state_tv(codes, probs) -> float:
    """Total variation between empirical frequencies of integer-coded states and ``probs``."""
    probs = np.asarray(probs, dtype=float)
    freq = np.bincount(np.asarray(codes, dtype=np.int64), minlength=len(probs)) / len(codes)
    return float(0.5 * np.abs(freq - probs).sum())

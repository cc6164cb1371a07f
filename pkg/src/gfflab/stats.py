"""Monte-Carlo estimators with standard errors.

Sample arrays have samples along axis 0.  Standard errors for nonlinear
statistics come from a delete-one-block jackknife over contiguous blocks.
"""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .errors import DegenerateDesign, InsufficientSamples

JACKKNIFE_BLOCK = 100


def require_samples(n: int, minimum: int) -> None:
    if n < minimum:
        raise InsufficientSamples(f"{n} samples, at least {minimum} required")


def mean_se(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sample mean and its standard error along axis 0."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    require_samples(n, 2)
    return x.mean(axis=0), x.std(axis=0, ddof=1) / math.sqrt(n)


def jackknife(stat: Callable[[np.ndarray], np.ndarray], x: np.ndarray,
              block: int = JACKKNIFE_BLOCK) -> tuple[np.ndarray, np.ndarray]:
    """Block jackknife estimate and standard error of ``stat(x)``.

    ``x`` is split into ``n // block`` contiguous blocks (a trailing partial
    block is dropped from the resampling but kept in the point estimate).
    """
    x = np.asarray(x)
    n = x.shape[0]
    require_samples(n, 2 * block)
    g = n // block
    full = np.asarray(stat(x), dtype=float)
    usable = x[: g * block]
    reps = np.empty((g,) + full.shape)
    for k in range(g):
        keep = np.concatenate([usable[: k * block], usable[(k + 1) * block:]])
        reps[k] = stat(keep)
    var = (g - 1) / g * ((reps - reps.mean(axis=0)) ** 2).sum(axis=0)
    return full, np.sqrt(var)


def jackknife_means(columns: np.ndarray, fn: Callable[[np.ndarray], np.ndarray],
                    block: int = JACKKNIFE_BLOCK) -> tuple[np.ndarray, np.ndarray]:
    """Block jackknife of ``fn(column means)``.

    Equivalent to :func:`jackknife` for statistics that are smooth functions
    of sample means, at a cost independent of the number of blocks.
    """
    c = np.asarray(columns, dtype=float)
    n = c.shape[0]
    require_samples(n, 2 * block)
    g = n // block
    full = np.asarray(fn(c.mean(axis=0)), dtype=float)
    sums = c[: g * block].reshape(g, block, -1).sum(axis=1)
    loo = (sums.sum(axis=0) - sums) / (g * block - block)
    reps = np.array([fn(row) for row in loo])
    var = (g - 1) / g * ((reps - reps.mean(axis=0)) ** 2).sum(axis=0)
    return full, np.sqrt(var)


def block_means(x: np.ndarray, block: int = JACKKNIFE_BLOCK) -> np.ndarray:
    """Means of contiguous blocks of ``x`` (trailing partial block dropped)."""
    x = np.asarray(x, dtype=float)
    g = x.shape[0] // block
    return x[: g * block].reshape((g, block) + x.shape[1:]).mean(axis=1)


def product_moment(values: np.ndarray, tuples, block: int = JACKKNIFE_BLOCK):
    """``E[prod_j V[:, t_j]]`` for each index tuple, with block-jackknife SE.

    For a plain mean the delete-one-block jackknife reduces to the standard
    error of the block means, which is what is computed here.
    """
    v = np.asarray(values, dtype=float)
    prods = np.column_stack([np.prod(v[:, list(t)], axis=1) for t in tuples])
    require_samples(v.shape[0], 2 * block)
    bm = block_means(prods, block)
    g = bm.shape[0]
    return prods.mean(axis=0), bm.std(axis=0, ddof=1) / math.sqrt(g)


def excess_kurtosis(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    c = x - x.mean()
    m2 = (c ** 2).mean()
    return float((c ** 4).mean() / m2 ** 2 - 3.0)


def _kurtosis_from_sums(s1, s2, s3, s4, n):
    m = s1 / n
    c2 = s2 / n - m ** 2
    c4 = s4 / n - 4 * m * s3 / n + 6 * m ** 2 * s2 / n - 3 * m ** 4
    return c4 / c2 ** 2 - 3.0


def kurtosis_se(x: np.ndarray, block: int = JACKKNIFE_BLOCK) -> tuple[float, float]:
    """Excess kurtosis with a delete-one-block jackknife SE.

    Leave-one-out replicates are formed from block power sums, which gives
    the same numbers as :func:`jackknife` applied to :func:`excess_kurtosis`.
    """
    x = np.asarray(x, dtype=float)
    require_samples(len(x), 2 * block)
    g = len(x) // block
    # centre first for numerical stability; kurtosis is shift invariant
    xc = x - x.mean()
    blocks = xc[: g * block].reshape(g, block)
    sums = np.stack([(blocks ** k).sum(axis=1) for k in (1, 2, 3, 4)])
    tot = sums.sum(axis=1, keepdims=True)
    loo = tot - sums
    reps = _kurtosis_from_sums(*loo, g * block - block)
    var = (g - 1) / g * ((reps - reps.mean()) ** 2).sum()
    return excess_kurtosis(x), float(np.sqrt(var))


def correlation(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.corrcoef(x, y)[0, 1])


def correlation_se(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Pearson correlation with the large-sample SE ``(1 - r^2) / sqrt(n - 1)``."""
    r = correlation(x, y)
    return r, (1 - r * r) / math.sqrt(len(x) - 1)


def zscore(estimate, se, target=0.0):
    se = np.asarray(se, dtype=float)
    return (np.asarray(estimate, dtype=float) - target) / np.where(se > 0, se, np.inf)


def r_squared(y: np.ndarray, fitted: np.ndarray, through_origin: bool = False) -> float:
    y = np.asarray(y, dtype=float)
    ss_res = float(((y - fitted) ** 2).sum())
    ss_tot = float((y ** 2).sum() if through_origin else ((y - y.mean()) ** 2).sum())
    return 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0


def linear_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Ordinary least squares ``y = a x + c``; returns ``(a, c, r2)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.ptp(x) == 0:
        raise DegenerateDesign("all abscissae are equal")
    a, c = np.polyfit(x, y, 1)
    return float(a), float(c), r_squared(y, a * x + c)


def origin_fit(x: np.ndarray, y: np.ndarray, se: np.ndarray | None = None) -> tuple[float, float, float]:
    """Weighted least squares ``y = a x`` with weights ``1 / se^2``.

    Returns ``(a, se_a, r2)`` where ``r2`` is the weighted uncentred coefficient
    of determination.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.ones_like(x) if se is None else 1.0 / np.asarray(se, dtype=float) ** 2
    sxx = float((w * x * x).sum())
    if sxx == 0:
        raise DegenerateDesign("design has no spread")
    a = float((w * x * y).sum()) / sxx
    ss_res = float((w * (y - a * x) ** 2).sum())
    ss_tot = float((w * y * y).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return a, math.sqrt(1.0 / sxx), r2


def normal_sf(x):
    """Upper tail of the standard normal."""
    return 0.5 * np.vectorize(math.erfc)(np.asarray(x, dtype=float) / math.sqrt(2))

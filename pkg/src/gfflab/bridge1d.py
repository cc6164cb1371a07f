"""Brownian bridges on intervals and the checks that single them out among harnesses.

A process here is any object with ``sample(interval, grid, n, seed, stream=0)``
returning an ``(n, len(grid))`` array that vanishes at both ends.  The Gaussian
bridge is the reference; :class:`PoissonJitterBridge` is a deliberately broken
control that the checks must reject.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import HorizonTooShort, InvalidGrid, SubintervalOffGrid
from .stats import correlation, kurtosis_se, linear_fit, normal_sf

DEFAULT_STEPS = 2 ** 10
GRID_TOL = 1e-12


# ---------------------------------------------------------------------------
# paths
# ---------------------------------------------------------------------------

def validate_grid(interval, grid) -> tuple[tuple[float, float], np.ndarray]:
    a, b = map(float, interval)
    g = np.asarray(grid, dtype=float)
    if not a < b:
        raise InvalidGrid(f"interval [{a}, {b}] is empty")
    if g.ndim != 1 or len(g) < 2:
        raise InvalidGrid("grid needs at least the two endpoints")
    if not np.all(np.diff(g) > 0):
        raise InvalidGrid("grid times must be strictly increasing")
    if g[0] != a or g[-1] != b:
        raise InvalidGrid(f"grid runs from {g[0]} to {g[-1]}, interval is [{a}, {b}]")
    return (a, b), g


def uniform_grid(interval=(0.0, 1.0), steps: int = DEFAULT_STEPS) -> np.ndarray:
    a, b = map(float, interval)
    g = np.linspace(a, b, steps + 1)
    g[0], g[-1] = a, b
    return g


@dataclass(frozen=True, eq=False)
class BridgePath:
    """Path values on ``grid`` (one row per path when batched); zero at both ends."""

    interval: tuple
    grid: np.ndarray
    values: np.ndarray
    sigma: float = 1.0

    def at(self, t: float) -> np.ndarray:
        """Values at grid time ``t`` (one per path)."""
        k = _grid_index(self.grid, t)
        return np.asarray(self.values)[..., k]


@dataclass(frozen=True, eq=False)
class ProcessPath:
    """Path of a process on ``[0, T]`` sampled at ``times``."""

    times: np.ndarray
    values: np.ndarray


def _grid_index(grid: np.ndarray, t: float) -> int:
    k = int(np.searchsorted(grid, t - GRID_TOL))
    if k >= len(grid) or abs(grid[k] - t) > GRID_TOL:
        raise SubintervalOffGrid(f"time {t} is not a grid time")
    return k


class GaussianBridge:
    """``sigma`` times a Brownian bridge, sampled by sequential conditioning."""

    name = "gaussian_bridge"

    def __init__(self, sigma: float = 1.0):
        self.sigma = float(sigma)

    def sample(self, interval, grid, n: int, seed: int, stream: int = 0) -> np.ndarray:
        (a, b), g = validate_grid(interval, grid)
        rng = np.random.default_rng([int(seed), int(stream), 0])
        xi = rng.standard_normal((n, len(g) - 2))
        out = np.zeros((n, len(g)))
        x = np.zeros(n)
        for k in range(1, len(g) - 1):
            s, t = g[k - 1], g[k]
            # bridge from (s, x) to (b, 0) evaluated at t
            mean = x * (b - t) / (b - s)
            sd = self.sigma * math.sqrt((t - s) * (b - t) / (b - s))
            x = mean + sd * xi[:, k - 1]
            out[:, k] = x
        return out


class PoissonJitterBridge:
    """Gaussian bridge plus an independent compensated Poisson bridge.

    The jump part ``jump * (N(t) - (t - a) / (b - a) N(b))`` is centred and
    vanishes at both ends.  The Gaussian part is shrunk so that the total
    covariance equals that of ``sigma`` times a Brownian bridge; second-moment
    checks cannot tell the two apart, the fourth cumulant can.
    """

    name = "poisson_jitter_bridge"

    def __init__(self, sigma: float = 1.0, rate: float = 0.5, jump: float = 1.0):
        if rate * jump ** 2 >= sigma ** 2:
            raise ValueError("rate * jump**2 must be below sigma**2")
        self.sigma, self.rate, self.jump = float(sigma), float(rate), float(jump)
        self.gaussian_sigma = math.sqrt(sigma ** 2 - rate * jump ** 2)

    def sample(self, interval, grid, n: int, seed: int, stream: int = 0) -> np.ndarray:
        (a, b), g = validate_grid(interval, grid)
        base = GaussianBridge(self.gaussian_sigma).sample(interval, g, n, seed, stream)
        rng = np.random.default_rng([int(seed), int(stream), 1])
        counts = np.cumsum(rng.poisson(self.rate * np.diff(g), size=(n, len(g) - 1)), axis=1)
        counts = np.concatenate([np.zeros((n, 1)), counts], axis=1)
        frac = (g - a) / (b - a)
        return base + self.jump * (counts - frac * counts[:, -1:])


def sample_bridge(interval, grid, sigma: float, seed: int, n: int | None = None,
                  stream: int = 0) -> BridgePath:
    """``sigma`` times a Brownian bridge on ``grid``; a batch of ``n`` paths when ``n`` is given."""
    (a, b), g = validate_grid(interval, grid)
    vals = GaussianBridge(sigma).sample((a, b), g, 1 if n is None else n, seed, stream)
    return BridgePath((a, b), g, vals[0] if n is None else vals, float(sigma))


def bridge_covariance(s: float, t: float, interval=(0.0, 1.0), sigma: float = 1.0) -> float:
    a, b = interval
    s, t = min(s, t), max(s, t)
    return sigma ** 2 * (s - a) * (b - t) / (b - a)


def markov_1d_decompose(path: BridgePath, sub) -> tuple[np.ndarray, BridgePath]:
    """Linear interpolation between the path's values at the ends of ``sub`` and the remainder.

    Returns ``(linear_part, residual)`` on the grid times inside ``sub``.
    """
    a2, b2 = map(float, sub)
    if not (path.interval[0] <= a2 < b2 <= path.interval[1]):
        raise SubintervalOffGrid(f"[{a2}, {b2}] is not inside {path.interval}")
    i, j = _grid_index(path.grid, a2), _grid_index(path.grid, b2)
    t = path.grid[i:j + 1]
    v = np.asarray(path.values)
    xa, xb = v[..., i:i + 1], v[..., j:j + 1]
    lin = xa + (xb - xa) * (t - a2) / (b2 - a2)
    res = v[..., i:j + 1] - lin
    res[..., 0] = 0.0
    res[..., -1] = 0.0
    return lin, BridgePath((a2, b2), t.copy(), res, path.sigma)


# ---------------------------------------------------------------------------
# Brownian-motion transforms
# ---------------------------------------------------------------------------

def w_transform(path: BridgePath, times=None) -> ProcessPath:
    """``W(t) = (1 + t) X(t / (1 + t))``.

    Without ``times`` the output uses the exact grid ``t = s / (1 - s)`` for
    the grid times ``s < 1``; otherwise ``X`` is interpolated linearly.
    """
    if tuple(map(float, path.interval)) != (0.0, 1.0):
        raise InvalidGrid("w_transform needs a path on [0, 1]")
    v = np.atleast_2d(path.values)
    if times is None:
        s = path.grid[:-1]
        t = s / (1 - s)
        x = v[:, :-1]
    else:
        t = np.asarray(times, dtype=float)
        if (t < 0).any() or not np.all(np.diff(t) > 0):
            raise InvalidGrid("output times must be increasing and nonnegative")
        s = t / (1 + t)
        x = np.stack([np.interp(s, path.grid, row) for row in v])
    w = (1 + t) * x
    return ProcessPath(t, w if np.ndim(path.values) == 2 else w[0])


def bb_transform(bm: ProcessPath, grid=None, sigma: float = 1.0) -> BridgePath:
    """``X(s) = (1 - s) Z(s / (1 - s))`` with ``X(1) = 0``.

    Without ``grid`` the output grid is ``s = t / (1 + t)`` for the input
    times, closed with ``s = 1``.
    """
    times = np.asarray(bm.times, dtype=float)
    z = np.atleast_2d(bm.values)
    if grid is None:
        s = times / (1 + times)
        x = (1 - s) * z
    else:
        (_, _), g = validate_grid((0.0, 1.0), grid)
        s = g[:-1]
        need = s / (1 - s)
        if need.max(initial=0.0) > times[-1] * (1 + 1e-12):
            raise HorizonTooShort(f"needs horizon {need.max():g}, path stops at {times[-1]:g}")
        x = (1 - s) * np.stack([np.interp(need, times, row) for row in z])
    full_s = np.append(s, 1.0)
    vals = np.concatenate([x, np.zeros((len(x), 1))], axis=1)
    return BridgePath((0.0, 1.0), full_s, vals if np.ndim(bm.values) == 2 else vals[0], sigma)


def quadratic_variation(w: ProcessPath) -> np.ndarray:
    """Running mean of ``sum (dW)^2`` across paths, one value per time."""
    v = np.atleast_2d(w.values)
    inc = np.diff(v, axis=1) ** 2
    return np.concatenate([[0.0], np.cumsum(inc.mean(axis=0))])


# ---------------------------------------------------------------------------
# scaling and tightness
# ---------------------------------------------------------------------------

def _moment_z(x: np.ndarray, y: np.ndarray, order: int) -> tuple[float, float, float]:
    px, py = x ** order, y ** order
    mx, my = px.mean(), py.mean()
    se = math.sqrt(px.var(ddof=1) / len(px) + py.var(ddof=1) / len(py))
    return float(mx), float(my), float((mx - my) / se) if se > 0 else 0.0


def scaled_endpoint(process, level: int, n: int, seed: int, stream: int = 0) -> np.ndarray:
    """Direct samples of ``2^{level/2} X(2^{-level})`` on ``[0, 1]``."""
    g = np.array([0.0, 2.0 ** -level, 1.0])
    return 2.0 ** (level / 2) * process.sample((0.0, 1.0), g, n, seed, stream)[:, 1]


def composed_endpoint(process, level: int, n: int, seed: int, stream: int = 0) -> np.ndarray:
    """``2^{-level/2 + 1} sum_{k < level} 2^{k/2} X_k(1/2)`` with independent copies ``X_k``."""
    g = np.array([0.0, 0.5, 1.0])
    total = np.zeros(n)
    for k in range(level):
        mid = process.sample((0.0, 1.0), g, n, seed, stream=(stream << 8) + k + 1)[:, 1]
        total += 2.0 ** (k / 2) * mid
    return 2.0 ** (-level / 2 + 1) * total


def scaling_check(n_levels: int, n_samples: int, seed: int, process=None, levels=None) -> dict:
    """Compare the first four moments of the two sides of the dyadic scaling identity."""
    if n_levels > 20:
        raise ValueError("n_levels must be at most 20")
    process = GaussianBridge() if process is None else process
    levels = list(range(1, n_levels + 1)) if levels is None else list(levels)
    rows = []
    for lv in levels:
        lhs = scaled_endpoint(process, lv, n_samples, seed, stream=2 * lv)
        rhs = composed_endpoint(process, lv, n_samples, seed, stream=2 * lv + 1)
        for order in (1, 2, 3, 4):
            ml, mr, z = _moment_z(lhs, rhs, order)
            rows.append({"level": lv, "moment": order, "direct": ml, "composed": mr, "z": z})
    return {"rows": rows, "max_abs_z": max(abs(r["z"]) for r in rows)}


def tightness_probe(n_levels: int, m_grid, n_samples: int, seed: int = 0, process=None,
                    sigma: float = 1.0) -> dict:
    """Tail probabilities ``P(|X^{[0, 2^n]}(1)| >= M)`` through the composed identity."""
    process = GaussianBridge(sigma) if process is None else process
    m_grid = [float(m) for m in m_grid]
    rows = []
    tails = np.empty((n_levels, len(m_grid)))
    for lv in range(1, n_levels + 1):
        y = composed_endpoint(process, lv, n_samples, seed, stream=1000 + lv)
        sd = sigma * math.sqrt(1 - 2.0 ** -lv)
        for j, m in enumerate(m_grid):
            p = float(np.mean(np.abs(y) >= m))
            oracle = float(2 * normal_sf(m / sd))
            se = math.sqrt(max(oracle * (1 - oracle), 1e-300) / n_samples)
            tails[lv - 1, j] = p
            rows.append({"level": lv, "M": m, "tail": p, "gaussian_tail": oracle, "se": se,
                         "z": (p - oracle) / se if se > 0 else 0.0})
    limit = [float(2 * normal_sf(m / sigma)) for m in m_grid]
    se_lim = [math.sqrt(max(q * (1 - q), 1e-300) / n_samples) for q in limit]
    monotone = bool(np.all(np.diff(tails, axis=1) <= 0))
    uniform = bool(all(tails[:, j].max() <= limit[j] + 3 * se_lim[j] for j in range(len(m_grid))))
    return {"rows": rows, "monotone_in_M": monotone, "uniform_in_n": uniform, "limit_tail": limit}


def scaling_invariance(c: float, times, n: int, seed: int, process=None) -> list[dict]:
    """Moments of ``c^{-1/2} X^{[0, c]}(c t)`` against ``X^{[0, 1]}(t)`` at the given times."""
    process = GaussianBridge() if process is None else process
    times = np.asarray(times, dtype=float)
    g1 = np.concatenate([[0.0], times, [1.0]])
    x1 = process.sample((0.0, 1.0), g1, n, seed, stream=1)[:, 1:-1]
    xc = process.sample((0.0, c), c * g1, n, seed, stream=2)[:, 1:-1] / math.sqrt(c)
    rows = []
    for k, t in enumerate(times):
        for order in (1, 2, 3, 4):
            m1, mc, z = _moment_z(x1[:, k], xc[:, k], order)
            rows.append({"t": float(t), "moment": order, "unit": m1, "scaled": mc, "z": z})
    return rows


def continuity_probe(eps: float, n_levels: int, n: int, seed: int, process=None, t0: float = 0.5) -> list[float]:
    """``P(|X(t0 + 2^{-k}) - X(t0)| > eps)`` along a dyadic refinement."""
    process = GaussianBridge() if process is None else process
    out = []
    for k in range(1, n_levels + 1):
        h = 2.0 ** -(k + 1)
        g = np.array([0.0, t0, t0 + h, 1.0])
        x = process.sample((0.0, 1.0), g, n, seed, stream=k)
        out.append(float(np.mean(np.abs(x[:, 2] - x[:, 1]) > eps)))
    return out


# ---------------------------------------------------------------------------
# the suite
# ---------------------------------------------------------------------------

COV_PAIRS = ((0.25, 0.75), (0.5, 0.5), (0.125, 0.5), (0.3125, 0.9375), (0.75, 0.875))
KURTOSIS_TIMES = (0.25, 0.5, 0.75)


def run_suite(process=None, n_paths: int = 100_000, seed: int = 0, sigma: float = 1.0,
              steps: int = 256, qv_horizon_s: float = 0.75, n_levels: int = 4,
              scaling_samples: int | None = None) -> dict:
    """Run the one-dimensional checks and return a report with pass/fail per check."""
    process = GaussianBridge(sigma) if process is None else process
    grid = uniform_grid((0.0, 1.0), steps)
    x = process.sample((0.0, 1.0), grid, n_paths, seed)
    path = BridgePath((0.0, 1.0), grid, x, sigma)
    checks = {}

    # covariance
    cov_rows = []
    for s, t in COV_PAIRS:
        prod = path.at(s) * path.at(t)
        est, se = float(prod.mean()), float(prod.std(ddof=1) / math.sqrt(n_paths))
        target = bridge_covariance(s, t, sigma=sigma)
        cov_rows.append({"s": s, "t": t, "estimate": est, "se": se, "target": target, "z": (est - target) / se})
    checks["covariance"] = {"rows": cov_rows, "pass": all(abs(r["z"]) <= 3 for r in cov_rows)}

    # Gaussian marginals
    kurt_rows = []
    for t in KURTOSIS_TIMES:
        k, se = kurtosis_se(path.at(t))
        kurt_rows.append({"t": t, "excess_kurtosis": k, "se": se, "z": k / se})
    checks["kurtosis"] = {"rows": kurt_rows, "pass": all(abs(r["z"]) <= 3 for r in kurt_rows)}

    # Brownian-motion transform: increments independent of the past, linear quadratic variation
    keep = grid <= qv_horizon_s + GRID_TOL
    sub_path = BridgePath((0.0, 1.0), np.append(grid[keep], 1.0),
                          np.concatenate([x[:, keep], x[:, -1:]], axis=1), sigma)
    w = w_transform(sub_path)
    t = w.times
    ks, kt = int(np.searchsorted(t, 1.0 - GRID_TOL)), len(t) - 1
    past = w.values[:, ks]
    inc = w.values[:, kt] - w.values[:, ks]
    bound = 3 / math.sqrt(n_paths)
    ind_rows = [
        {"probe": "increment_vs_past", "corr": correlation(past, inc)},
        {"probe": "squared_increment_vs_squared_past", "corr": correlation(past ** 2, inc ** 2)},
    ]
    for r in ind_rows:
        r["bound"] = bound
        r["flag"] = bool(abs(r["corr"]) > bound)
    checks["independence"] = {"s": float(t[ks]), "t": float(t[kt]), "rows": ind_rows,
                              "pass": not any(r["flag"] for r in ind_rows)}
    qv = quadratic_variation(w)
    slope, intercept, r2 = linear_fit(t, qv)
    checks["quadratic_variation"] = {"slope": slope, "intercept": intercept, "r2": r2, "target": sigma ** 2,
                                     "relative_error": abs(slope / sigma ** 2 - 1),
                                     "pass": abs(slope / sigma ** 2 - 1) <= 0.05}

    # dyadic scaling identity
    sc = scaling_check(n_levels, scaling_samples or n_paths, seed + 1, process)
    checks["scaling"] = {**sc, "pass": sc["max_abs_z"] <= 3}

    return {"process": process.name, "sigma": sigma, "n_paths": n_paths, "seed": seed,
            "checks": checks, "pass": all(c["pass"] for c in checks.values())}


def path_csv(path: BridgePath | ProcessPath, row: int = 0) -> str:
    """CSV with columns ``time,value`` for one path."""
    times = path.grid if isinstance(path, BridgePath) else path.times
    vals = np.atleast_2d(path.values)[row]
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(("time", "value"))
    for t, v in zip(times, vals):
        wr.writerow((f"{t:.17g}", f"{v:.17g}"))
    return buf.getvalue()

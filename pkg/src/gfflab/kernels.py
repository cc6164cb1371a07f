"""Two- and four-point kernels of circle averages, the coupling fit and log bounds."""
from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .domain import PointSet, Wedge, build_disk, restrict
from .errors import CoincidentPoints, DegenerateDesign, MeshTooCoarse, PointsTooClose
from .laplace import DirichletOperator, conformal_radius
from .sampler import GffSampler, MarginalSampler, circle_average_weights, harmonic_average_weights, operator_for
from .stats import JACKKNIFE_BLOCK, jackknife, jackknife_means, linear_fit, origin_fit, product_moment, require_samples

MIN_KERNEL_SAMPLES = 100


def as_points(pts) -> np.ndarray:
    if isinstance(pts, PointSet):
        return np.asarray(pts.points, dtype=complex)
    return np.array([complex(p) for p in pts], dtype=complex)


@dataclass(frozen=True, eq=False)
class KernelEstimate:
    order: int
    points: np.ndarray
    eps: float
    tuples: tuple
    mean: np.ndarray
    se: np.ndarray
    n_samples: int

    def value(self, *idx) -> float:
        """Estimate for an index tuple in any order."""
        key = tuple(sorted(idx))
        return float(self.mean[self.tuples.index(key)])

    def error(self, *idx) -> float:
        return float(self.se[self.tuples.index(tuple(sorted(idx)))])


def check_separation(points: np.ndarray, eps: float) -> None:
    for i, j in itertools.combinations(range(len(points)), 2):
        d = abs(points[i] - points[j])
        if d <= 2 * eps:
            raise PointsTooClose(f"points {points[i]} and {points[j]} are {d:.3g} apart, need > {2 * eps:g}")


def average_values(sampler: GffSampler, points, eps: float, n: int, block: int = 1000) -> np.ndarray:
    """Circle averages at ``points`` for ``n`` fresh samples, shape ``(n, k)``."""
    pts = as_points(points)
    dom = sampler.op.domain
    w = np.column_stack([circle_average_weights(dom, z, eps) for z in pts])
    out = np.empty((n, len(pts)))
    done = 0
    for f in sampler.blocks(n, block):
        m = len(f)
        out[done:done + m] = f.values @ w
        done += m
    return out


def _estimate(order: int, sampler, pts, eps, n, tuples, values, block) -> KernelEstimate:
    p = as_points(pts)
    if tuples is None:
        tuples = list(itertools.combinations(range(len(p)), order))
    tuples = tuple(tuple(sorted(t)) for t in tuples)
    for t in tuples:
        check_separation(p[list(t)], eps)
    require_samples(n if values is None else len(values), MIN_KERNEL_SAMPLES)
    v = average_values(sampler, p, eps, n) if values is None else np.asarray(values)
    mean, se = product_moment(v, tuples, block)
    return KernelEstimate(order, p, eps, tuples, mean, se, len(v))


def estimate_k2(sampler: GffSampler, pts, eps: float, n: int, *, tuples=None, values=None,
                block: int = JACKKNIFE_BLOCK) -> KernelEstimate:
    """Monte-Carlo ``E[h_eps(z_i) h_eps(z_j)]`` over all pairs (or the given ``tuples``)."""
    return _estimate(2, sampler, pts, eps, n, tuples, values, block)


def estimate_k4(sampler: GffSampler, pts, eps: float, n: int, *, tuples=None, values=None,
                block: int = JACKKNIFE_BLOCK) -> KernelEstimate:
    """Monte-Carlo ``E[prod_{i in t} h_eps(z_i)]`` over 4-tuples."""
    return _estimate(4, sampler, pts, eps, n, tuples, values, block)


def wick_predict(k2) -> float:
    """Sum over the three pairings of four indices.

    ``k2`` is a mapping with keys ``(1, 2), (1, 3), ..., (3, 4)`` (or the
    strings ``"12"``, ...), or a sequence ``(k12, k13, k14, k23, k24, k34)``.
    """
    if isinstance(k2, dict):
        def g(i, j):
            for key in ((i, j), (j, i), f"{i}{j}", f"{j}{i}", f"k{i}{j}"):
                if key in k2:
                    return float(k2[key])
            raise KeyError((i, j))
        k12, k13, k14, k23, k24, k34 = (g(1, 2), g(1, 3), g(1, 4), g(2, 3), g(2, 4), g(3, 4))
    else:
        k12, k13, k14, k23, k24, k34 = map(float, k2)
    return k12 * k34 + k13 * k24 + k14 * k23


def wick_residual(values: np.ndarray, quad=(0, 1, 2, 3), block: int = JACKKNIFE_BLOCK):
    """``E[X_a X_b X_c X_d]`` minus the pairing sum of estimated second moments.

    Returns ``(k4, wick, diff, se_diff)``; the SE is a block jackknife of the
    difference, so the correlation between the two estimates is accounted for.
    """
    v = np.asarray(values, dtype=float)[:, list(quad)]
    pairs = ((0, 1), (2, 3), (0, 2), (1, 3), (0, 3), (1, 2))
    cols = np.column_stack([np.prod(v, axis=1)] + [v[:, i] * v[:, j] for i, j in pairs])

    def stat(m):
        w = m[1] * m[2] + m[3] * m[4] + m[5] * m[6]
        return np.array([m[0], w, m[0] - w])

    est, se = jackknife_means(cols, stat, block)
    return float(est[0]), float(est[1]), float(est[2]), float(se[2])


def fit_coupling_detail(k2: KernelEstimate, greens) -> dict:
    """Weighted fit ``K2 = a G`` through the origin with residual z-scores."""
    g = np.asarray(greens, dtype=float)
    if len(g) != len(k2.mean):
        raise DegenerateDesign("number of Green values does not match the estimate")
    if len(g) < 2 or np.ptp(g) == 0:
        raise DegenerateDesign("all Green values are equal")
    se = np.where(k2.se > 0, k2.se, np.min(k2.se[k2.se > 0]) if (k2.se > 0).any() else 1.0)
    a, se_a, r2 = origin_fit(g, k2.mean, se)
    resid = k2.mean - a * g
    return {"a_hat": a, "se_a": se_a, "r2": r2, "residual": resid.tolist(),
            "residual_z": (resid / se).tolist()}


def fit_coupling(k2: KernelEstimate, greens) -> tuple[float, float]:
    d = fit_coupling_detail(k2, greens)
    return d["a_hat"], d["r2"]


# ---------------------------------------------------------------------------
# logarithmic bounds
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LogBound:
    kind: str
    values: np.ndarray
    factors: np.ndarray


def _log_factors(pts: np.ndarray, op: DirichletOperator) -> np.ndarray:
    """``log(R(z_i, D) / R(z_i; z_1..z_k))`` with ``R(z_i; ...) = min_j |z_i - z_j| ^ R(z_i, D)/10``."""
    for i, j in itertools.combinations(range(len(pts)), 2):
        if pts[i] == pts[j]:
            raise CoincidentPoints(f"point {pts[i]} repeated")
    out = []
    for i, z in enumerate(pts):
        rad = conformal_radius(op, z)
        near = min(abs(z - w) for j, w in enumerate(pts) if j != i)
        out.append(math.log(rad / min(near, rad / 10)))
    return np.array(out)


def l2_bound(pts, op: DirichletOperator) -> LogBound:
    """``l2 = sqrt(log(R_z / R(z; z, w)) log(R_w / R(w; z, w)))``."""
    p = as_points(pts)
    f = _log_factors(p, op)
    return LogBound("l2", np.array([math.sqrt(f[0] * f[1])]), f)


def l4_bound(pts, op: DirichletOperator) -> LogBound:
    """``l4 = (prod_i [L_i^2 + L_i])^{1/4}`` with ``L_i`` the log factors."""
    p = as_points(pts)
    f = _log_factors(p, op)
    return LogBound("l4", np.array([float(np.prod(f ** 2 + f)) ** 0.25]), f)


def l4_alternative(pts, diameter: float) -> float:
    """Pairwise form ``sum_{i != j} log^2(|z_i - z_j| / (4 diam)) v log^2(10)``."""
    p = as_points(pts)
    total = 0.0
    for i, j in itertools.permutations(range(len(p)), 2):
        d = abs(p[i] - p[j])
        if d == 0:
            raise CoincidentPoints(f"point {p[i]} repeated")
        total += max(math.log(d / (4 * diameter)) ** 2, math.log(10) ** 2)
    return total


def bound_constant(estimates, bounds) -> float:
    """Smallest ``C`` with ``|estimate| <= C * bound`` across a sweep."""
    e = np.abs(np.asarray(estimates, dtype=float))
    b = np.asarray(bounds, dtype=float)
    return float(np.max(e / b))


# ---------------------------------------------------------------------------
# wedge fourth moments
# ---------------------------------------------------------------------------

def wedge_moment_scan(eps_list, angle_list, n: int, *, mesh_delta: float = 1 / 256, seed: int = 0,
                      zero_field: bool = False, block: int = 1000) -> dict:
    """Fourth moment of the harmonic average over the wedge boundary at ``1 - eps``.

    For each half-angle ``a`` the unit disk is discretised at ``mesh_delta``,
    the wedge ``W_a`` is taken as a sub-domain and the field is sampled
    exactly on the support of the harmonic-measure weights.  The exponent of
    ``eps`` is fitted by log-log regression at each ``a``.
    """
    eps_list = [float(e) for e in eps_list]
    if min(eps_list) < 4 * mesh_delta:
        raise MeshTooCoarse(f"eps={min(eps_list):g} needs mesh_delta <= {min(eps_list) / 4:g}")
    dom = build_disk(1.0, mesh_delta)
    op = operator_for(dom)
    rows, fits = [], []
    for ai, a in enumerate(angle_list):
        if a / mesh_delta < 4:
            raise MeshTooCoarse(f"wedge half-angle {a:g} unresolved at mesh {mesh_delta:g}")
        sub = restrict(dom, Wedge(float(a)))
        m4 = []
        for ei, e in enumerate(eps_list):
            w = harmonic_average_weights(dom, 1 - e, sub)
            supp = np.nonzero(w)[0]
            exact_var = float(w @ op.solve(w))
            if zero_field:
                x = np.zeros(n)
            else:
                ms = MarginalSampler(op, supp, seed, counter=(ai * len(eps_list) + ei) << 32)
                x = np.concatenate([ms.sample_block(min(block, n - k)) @ w[supp]
                                    for k in range(0, n, block)])
            est, se = jackknife(lambda v: np.mean(v ** 4), x, JACKKNIFE_BLOCK) if n >= 2 * JACKKNIFE_BLOCK \
                else (float(np.mean(x ** 4)), float("nan"))
            m4.append(float(est))
            rows.append({"half_angle": float(a), "eps": e, "fourth_moment": float(est), "se": float(se),
                         "exact": 0.0 if zero_field else 3 * exact_var ** 2, "n_samples": n})
        if zero_field or min(m4) <= 0:
            fits.append({"half_angle": float(a), "exponent": float("nan"), "r2": float("nan")})
        else:
            slope, intercept, r2 = linear_fit(np.log(eps_list), np.log(m4))
            fits.append({"half_angle": float(a), "exponent": slope, "intercept": intercept, "r2": r2})
    return {"mesh_delta": mesh_delta, "rows": rows, "fits": fits}


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def csv_columns(order: int) -> tuple:
    return ("points", "estimate", "se", "green", f"bound_l{order}", "n_samples", "seed")


def kernel_csv(est: KernelEstimate, greens, bounds, seed: int) -> str:
    """One row per tuple: ``points, estimate, se, green, bound_l2|bound_l4, n_samples, seed``."""
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(csv_columns(est.order))
    for k, t in enumerate(est.tuples):
        pts = ";".join(f"{est.points[i].real:.6g}{est.points[i].imag:+.6g}j" for i in t)
        wr.writerow([pts, f"{est.mean[k]:.12g}", f"{est.se[k]:.12g}", f"{greens[k]:.12g}",
                     f"{bounds[k]:.12g}", est.n_samples, seed])
    return buf.getvalue()

"""Domain Markov decomposition of lattice fields.

For ``D' subset D`` a field splits as ``h = h0 + phi`` where ``phi`` equals
``h`` outside ``D'`` and is the discrete harmonic extension of ``h`` from the
boundary of ``D'`` inside it, and ``h0 = h - phi`` vanishes outside ``D'``.
For the Gaussian free field ``h0`` is a free field on ``D'`` independent of
``phi``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import LatticeDomain, check_subdomain, is_simply_connected
from .errors import InsufficientSamples, NotSimplyConnected
from .laplace import boundary_coupling, harmonic_measure_matrix
from .sampler import ScalarField, operator_for
from .stats import correlation

MIN_INDEPENDENCE_SAMPLES = 1000


@dataclass(frozen=True, eq=False)
class MarkovDecomposition:
    sub: LatticeDomain
    zero_part: ScalarField
    harmonic_part: ScalarField

    @property
    def domain(self) -> LatticeDomain:
        return self.zero_part.domain


def _boundary_trace(f: ScalarField, sub: LatticeDomain) -> np.ndarray:
    """Values of ``f`` on ``sub.boundary``; zero at vertices on the boundary of ``f.domain``."""
    target = f.domain.interior_index(sub.boundary)
    vals = np.asarray(f.values, dtype=float)
    padded = np.concatenate([vals, np.zeros(vals.shape[:-1] + (1,))], axis=-1)
    return padded[..., np.where(target >= 0, target, vals.shape[-1])]


def _sub_index(f: ScalarField, sub: LatticeDomain) -> np.ndarray:
    idx = check_subdomain(f.domain, sub)
    if not is_simply_connected(sub):
        raise NotSimplyConnected("sub-domain interior has a hole")
    return idx


def markov_decompose(f: ScalarField, sub: LatticeDomain) -> MarkovDecomposition:
    """Split ``f`` into a part vanishing outside ``sub`` and a part harmonic inside it."""
    idx = _sub_index(f, sub)
    op_s = operator_for(sub)
    trace = _boundary_trace(f, sub)
    rhs = boundary_coupling(sub) @ np.atleast_2d(trace).T
    inside = op_s.solve(rhs).T
    harm = np.array(f.values, dtype=float, copy=True)
    if f.batched:
        harm[:, idx] = inside
    else:
        harm[idx] = inside[0]
    zero = f.values - harm
    return MarkovDecomposition(sub, ScalarField(f.domain, zero), ScalarField(f.domain, harm))


def harmonic_residual(dec: MarkovDecomposition) -> float:
    """Largest mean-value defect ``|4 phi(x) - sum_{y~x} phi(y)|`` over vertices of the sub-domain."""
    dom = dec.domain
    idx = dom.interior_index(dec.sub.interior)
    phi = np.atleast_2d(dec.harmonic_part.values)
    nb = dom.neighbour_table[idx]
    padded = np.concatenate([phi, np.zeros((phi.shape[0], 1))], axis=1)
    nbv = padded[:, np.where(nb >= 0, nb, phi.shape[1])].sum(axis=2)
    return float(np.abs(4 * phi[:, idx] - nbv).max())


def reassembly_error(f: ScalarField, dec: MarkovDecomposition) -> float:
    return float(np.abs(dec.zero_part.values + dec.harmonic_part.values - f.values).max())


def outside_leak(dec: MarkovDecomposition) -> float:
    """Largest magnitude of the zero part outside the sub-domain."""
    dom = dec.domain
    mask = np.ones(dom.n_interior, dtype=bool)
    mask[dom.interior_index(dec.sub.interior)] = False
    vals = np.atleast_2d(dec.zero_part.values)[:, mask]
    return float(np.abs(vals).max()) if vals.size else 0.0


def independence_check(samples, probes) -> list[dict]:
    """Correlation between ``zero_part . l`` and ``harmonic_part . m`` for each probe ``(l, m)``.

    ``samples`` is a batched :class:`MarkovDecomposition` or a list of
    single-field decompositions.  Under independence the correlation has
    standard error ``1 / sqrt(M)``; rows with ``|corr| > 3 se`` are flagged.
    """
    if isinstance(samples, MarkovDecomposition):
        zero = np.atleast_2d(samples.zero_part.values)
        harm = np.atleast_2d(samples.harmonic_part.values)
    else:
        zero = np.array([s.zero_part.values for s in samples])
        harm = np.array([s.harmonic_part.values for s in samples])
    m = zero.shape[0]
    if m < MIN_INDEPENDENCE_SAMPLES:
        raise InsufficientSamples(f"{m} samples, at least {MIN_INDEPENDENCE_SAMPLES} required")
    se = 1.0 / math.sqrt(m)
    rows = []
    for k, (l, mm) in enumerate(probes):
        corr = correlation(zero @ np.asarray(l, dtype=float), harm @ np.asarray(mm, dtype=float))
        rows.append({"probe": k, "corr": corr, "se": se, "flag": bool(abs(corr) > 3 * se)})
    return rows


def uniqueness_check(f: ScalarField, sub: LatticeDomain, *, max_points: int | None = None,
                     tol: float = 1e-9) -> bool:
    """Recompute the harmonic part through harmonic-measure rows and compare.

    The second route evaluates ``sum_b H(x, b) f(b)`` with ``H`` the exit
    distribution of random walk from ``x``, at every vertex of ``sub`` (or an
    evenly spread subset of ``max_points`` vertices).
    """
    idx = _sub_index(f, sub)
    dec = markov_decompose(f, sub)
    n = sub.n_interior
    pick = np.arange(n) if max_points is None or max_points >= n else np.linspace(0, n - 1, max_points).astype(int)
    rows = harmonic_measure_matrix(operator_for(sub), pick)
    trace = np.atleast_2d(_boundary_trace(f, sub))
    second = trace @ rows.T
    first = np.atleast_2d(dec.harmonic_part.values)[:, idx[pick]]
    scale = max(1.0, float(np.abs(f.values).max(initial=0.0)))
    return bool(np.abs(first - second).max(initial=0.0) <= tol * scale)


def euler_characteristic_ok(sub: LatticeDomain) -> bool:
    """True when the sub-domain is connected without holes."""
    return is_simply_connected(sub)

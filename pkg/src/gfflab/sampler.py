"""Exact sampling of the lattice Gaussian free field and its local averages.

Every average used here is a linear functional of the field, represented by a
weight vector over interior vertices, so a batch of samples of shape
``(m, n)`` is averaged with one matrix-vector product.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from .domain import LatticeDomain, check_subdomain, subdomain_ball
from .errors import (
    DimensionMismatch,
    PointNotInSubdomain,
    SupportEscapesDomain,
    VertexNotInterior,
)
from .laplace import DirichletOperator, assemble, boundary_coupling, point_weights, save_field


# ---------------------------------------------------------------------------
# fields and sampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ScalarField:
    """Values on the interior vertices of a domain; zero on the boundary.

    ``values`` has shape ``(n,)`` for one field or ``(m, n)`` for a batch.
    """

    domain: LatticeDomain
    values: np.ndarray

    def __post_init__(self):
        if np.shape(self.values)[-1] != self.domain.n_interior:
            raise DimensionMismatch(
                f"field has {np.shape(self.values)[-1]} values, domain has {self.domain.n_interior} vertices")

    @property
    def batched(self) -> bool:
        return np.ndim(self.values) == 2

    def __len__(self) -> int:
        return len(self.values) if self.batched else 1

    def apply(self, weights: np.ndarray):
        """Raw sum ``sum_x field(x) weights(x)``; a float or one value per sample."""
        w = np.asarray(weights, dtype=float)
        if w.shape[-1] != self.domain.n_interior:
            raise DimensionMismatch(f"weights have length {w.shape[-1]}, expected {self.domain.n_interior}")
        out = self.values @ w.T
        return out if self.batched or np.ndim(out) else float(out)


def sample_generator(seed: int, index: int) -> np.random.Generator:
    """Random generator of sample number ``index``; independent of batching."""
    return np.random.Generator(np.random.Philox(key=int(seed), counter=int(index) << 128))


@dataclass(eq=False)
class GffSampler:
    """Exact sampler ``h = P C^{-T} xi`` with covariance ``A^{-1}``.

    Sample ``k`` is driven by its own Philox counter, so results depend only
    on ``(seed, k)``; block sizes and worker splits do not change them.
    """

    op: DirichletOperator
    seed: int
    counter: int = 0

    def normals(self, start: int, m: int) -> np.ndarray:
        n = self.op.n
        xi = np.empty((n, m))
        for k in range(m):
            xi[:, k] = sample_generator(self.seed, start + k).standard_normal(n)
        return xi

    def draw(self, start: int, m: int) -> np.ndarray:
        """Samples ``start, ..., start + m - 1`` as an ``(m, n)`` array, without advancing."""
        if m == 0:
            return np.empty((0, self.op.n))
        return self.op.whiten_inverse(self.normals(start, m)).T.copy()

    def sample(self) -> ScalarField:
        vals = self.draw(self.counter, 1)[0]
        self.counter += 1
        return ScalarField(self.op.domain, vals)

    def sample_block(self, m: int) -> ScalarField:
        vals = self.draw(self.counter, m)
        self.counter += m
        return ScalarField(self.op.domain, vals)

    def blocks(self, n_samples: int, block: int = 1000) -> Iterator[ScalarField]:
        """Stream ``n_samples`` samples in consecutive blocks."""
        done = 0
        while done < n_samples:
            m = min(block, n_samples - done)
            yield self.sample_block(m)
            done += m

    def substream(self, offset: int) -> "GffSampler":
        """Independent sampler for worker ``offset`` (counter offset of ``offset << 40``)."""
        return GffSampler(self.op, self.seed, self.counter + (int(offset) << 40))

    def dump(self, path, index: int) -> ScalarField:
        """Write sample ``index`` to ``path`` with header ``{domain_hash, seed, counter}``."""
        f = ScalarField(self.op.domain, self.draw(index, 1)[0])
        save_field(path, f.values, self.op.domain, kind="sample", seed=int(self.seed), counter=int(index))
        return f


# ---------------------------------------------------------------------------
# pairings
# ---------------------------------------------------------------------------

def pair(f: ScalarField, weights: np.ndarray):
    """Discrete pairing ``delta^2 sum_x w(x) h(x)``."""
    return f.domain.mesh_delta ** 2 * f.apply(weights)


def pairing_variance(op: DirichletOperator, weights: np.ndarray) -> float:
    """Exact ``Var(pair(h, w)) = delta^4 w^T G w``."""
    w = np.asarray(weights, dtype=float)
    return float(op.domain.mesh_delta ** 4 * w @ op.solve(w))


def functional_covariance(op: DirichletOperator, w1: np.ndarray, w2: np.ndarray) -> float:
    """Exact covariance of the raw sums ``h . w1`` and ``h . w2``."""
    return float(np.asarray(w1) @ op.solve(np.asarray(w2, dtype=float)))


# ---------------------------------------------------------------------------
# harmonic and circle averages
# ---------------------------------------------------------------------------

_OPERATORS: dict = {}
_WEIGHTS: dict = {}


def operator_for(dom: LatticeDomain) -> DirichletOperator:
    """Factorised operator of ``dom``, cached by domain hash."""
    key = dom.domain_hash
    if key not in _OPERATORS:
        if len(_OPERATORS) > 32:
            _OPERATORS.clear()
        _OPERATORS[key] = assemble(dom)
    return _OPERATORS[key]


def harmonic_average_weights(dom: LatticeDomain, z: complex, sub: LatticeDomain) -> np.ndarray:
    """Weights ``w`` over ``dom`` with ``h . w`` the harmonic extension from ``sub``'s boundary at ``z``.

    Off-vertex ``z`` is handled by bilinear interpolation of the extension.
    """
    key = (dom.domain_hash, sub.domain_hash, complex(z))
    if key in _WEIGHTS:
        return _WEIGHTS[key]
    check_subdomain(dom, sub)
    try:
        idx, bw = point_weights(sub, z)
    except VertexNotInterior as exc:
        raise PointNotInSubdomain(f"point {z} is not inside the sub-domain") from exc
    op_s = operator_for(sub)
    rhs = np.zeros(sub.n_interior)
    np.add.at(rhs, idx, bw)
    g = op_s.solve(rhs)
    hm = boundary_coupling(sub).T @ g  # harmonic measure from z on sub's boundary
    target = dom.interior_index(sub.boundary)
    w = np.zeros(dom.n_interior)
    inside = target >= 0  # boundary vertices of dom carry the value 0
    np.add.at(w, target[inside], hm[inside])
    if len(_WEIGHTS) > 256:
        _WEIGHTS.clear()
    _WEIGHTS[key] = w
    return w


def circle_average_weights(dom: LatticeDomain, z: complex, eps: float) -> np.ndarray:
    return harmonic_average_weights(dom, z, subdomain_ball(dom, z, eps))


def harmonic_average(f: ScalarField, z: complex, sub: LatticeDomain):
    """Value at ``z`` of the harmonic extension of ``f`` from the boundary of ``sub``."""
    check_subdomain(f.domain, sub)
    if not bool(sub.contains(complex(z))):
        raise PointNotInSubdomain(f"point {z} is not inside the sub-domain")
    return f.apply(harmonic_average_weights(f.domain, z, sub))


def circle_average(f: ScalarField, z: complex, eps: float):
    """Harmonic-measure average of ``f`` over the boundary of the lattice ball ``B_z(eps)``."""
    return f.apply(circle_average_weights(f.domain, z, eps))


# ---------------------------------------------------------------------------
# mollifiers
# ---------------------------------------------------------------------------

def bump(r: np.ndarray) -> np.ndarray:
    """Smooth bump ``exp(-1 / (1 - r^2))`` on ``[0, 1)``."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    m = r < 1
    out[m] = np.exp(-1.0 / (1.0 - r[m] ** 2))
    return out


@dataclass(frozen=True)
class MollifierSpec:
    center: complex
    epsilon: float
    profile: Callable[[np.ndarray], np.ndarray] = field(default=bump, compare=False)


def mollifier_weights(dom: LatticeDomain, m: MollifierSpec) -> np.ndarray:
    """Radial weights of mass one in the pairing: ``delta^2 sum w = 1``."""
    z = complex(m.center)
    if dom.distance_to_boundary(z) <= m.epsilon:
        raise SupportEscapesDomain(f"mollifier support B({z}, {m.epsilon:g}) leaves the domain")
    r = np.abs(dom.coords - z) / m.epsilon
    w = np.where(r < 1, m.profile(np.minimum(r, 1.0)), 0.0)
    w = np.maximum(w, 0.0)
    total = w.sum()
    if total <= 0:
        raise SupportEscapesDomain(f"mollifier at {z} of radius {m.epsilon:g} covers no interior vertex")
    return w / (total * dom.mesh_delta ** 2)


def mollified_value(f: ScalarField, m: MollifierSpec):
    return pair(f, mollifier_weights(f.domain, m))


def annulus_weights(dom: LatticeDomain, r_in: float, r_out: float, center: complex = 0j,
                    profile: Callable[[np.ndarray], np.ndarray] = bump) -> np.ndarray:
    """Radial mass-one weights supported on the annulus ``r_in < |v - center| < r_out``."""
    r = np.abs(dom.coords - complex(center))
    half = (r_out - r_in) / 2
    s = np.abs(r - (r_in + half)) / half
    w = np.where(s < 1, profile(np.minimum(s, 1.0)), 0.0)
    total = w.sum()
    if total <= 0:
        raise SupportEscapesDomain(f"annulus ({r_in:g}, {r_out:g}) covers no interior vertex")
    return w / (total * dom.mesh_delta ** 2)


@dataclass(eq=False)
class MarginalSampler:
    """Exact sampler of the field restricted to a few vertices.

    Uses a dense Cholesky factor of ``G[S, S]``; sample ``k`` is driven by the
    same per-sample stream as :class:`GffSampler`.
    """

    op: DirichletOperator
    indices: np.ndarray
    seed: int
    counter: int = 0

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64)
        e = np.zeros((self.op.n, len(self.indices)))
        e[self.indices, np.arange(len(self.indices))] = 1.0
        cov = self.op.solve(e)[self.indices]
        self.factor = np.linalg.cholesky((cov + cov.T) / 2)

    def sample_block(self, m: int) -> np.ndarray:
        k = len(self.indices)
        xi = np.empty((k, m))
        for j in range(m):
            xi[:, j] = sample_generator(self.seed, self.counter + j).standard_normal(k)
        self.counter += m
        return (self.factor @ xi).T


__all__ = [
    "ScalarField", "GffSampler", "MarginalSampler", "MollifierSpec", "sample_generator", "pair",
    "pairing_variance", "functional_covariance", "harmonic_average", "harmonic_average_weights",
    "circle_average", "circle_average_weights", "mollified_value", "mollifier_weights", "annulus_weights",
    "bump", "operator_for",
]

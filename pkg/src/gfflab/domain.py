"""Square-lattice approximations of planar simply connected domains.

A :class:`LatticeDomain` is the set of grid vertices ``v`` (integer pairs) whose
continuum position ``v * mesh_delta`` lies in an open region, together with its
site boundary: the exterior vertices 4-adjacent to the interior.  With this
convention the Dirichlet Laplacian of the domain is a principal submatrix of
the lattice Laplacian and sub-domain operators are principal submatrices of
the parent operator.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import ndimage

from .errors import (
    BallNotContained,
    DisconnectedInterior,
    EmptyInterior,
    MeshTooCoarse,
    PointTooCloseToBoundary,
    SubdomainNotContained,
)

NEIGHBOURS = np.array([(1, 0), (-1, 0), (0, 1), (0, -1)], dtype=np.int64)

# Minimum number of lattice spacings across the radius of a top-level domain.
MIN_RADIUS_RATIO = 8.0


# ---------------------------------------------------------------------------
# continuum regions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Disk:
    radius: float
    center: complex = 0j

    shape = "disk"

    def contains(self, z: np.ndarray) -> np.ndarray:
        return np.abs(z - self.center) < self.radius

    def distance(self, z: complex) -> float:
        return self.radius - abs(z - self.center)

    def params(self) -> dict:
        return {"radius": self.radius, "center": [self.center.real, self.center.imag]}


@dataclass(frozen=True)
class Square:
    side: float
    center: complex = 0j

    shape = "square"

    def contains(self, z: np.ndarray) -> np.ndarray:
        w = z - self.center
        h = self.side / 2
        return (np.abs(w.real) < h) & (np.abs(w.imag) < h)

    def distance(self, z: complex) -> float:
        w = z - self.center
        h = self.side / 2
        return min(h - abs(w.real), h - abs(w.imag))

    def params(self) -> dict:
        return {"side": self.side, "center": [self.center.real, self.center.imag]}


@dataclass(frozen=True)
class Wedge:
    """The truncated sector ``{r e^{i t} : |t| < half_angle, 0 < r < 1}``."""

    half_angle: float

    shape = "wedge"

    def contains(self, z: np.ndarray) -> np.ndarray:
        r = np.abs(z)
        return (r > 0) & (r < 1) & (np.abs(np.angle(z)) < self.half_angle)

    def distance(self, z: complex) -> float:
        r = abs(z)
        if r == 0:
            return 0.0
        theta = abs(math.atan2(z.imag, z.real))
        gap = self.half_angle - theta
        to_ray = r * math.sin(gap) if gap < math.pi / 2 else r
        return min(1 - r, to_ray)

    def params(self) -> dict:
        return {"half_angle": self.half_angle}


@dataclass(frozen=True)
class Mask:
    """A region given directly by a finite set of lattice vertices."""

    vertices: tuple

    shape = "custom"

    def params(self) -> dict:
        return {"vertices": [list(v) for v in self.vertices]}


# ---------------------------------------------------------------------------
# lattice domain
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LatticeDomain:
    mesh_delta: float
    interior: np.ndarray
    boundary: np.ndarray
    region: object = field(repr=False)

    def __post_init__(self):
        for arr in (self.interior, self.boundary):
            arr.setflags(write=False)

    # -- basic facts -------------------------------------------------------
    @property
    def n_interior(self) -> int:
        return len(self.interior)

    @property
    def n_boundary(self) -> int:
        return len(self.boundary)

    @property
    def shape_tag(self) -> dict:
        return {"shape": self.region.shape, **self.region.params()}

    @cached_property
    def coords(self) -> np.ndarray:
        """Continuum positions of the interior vertices as complex numbers."""
        return (self.interior[:, 0] + 1j * self.interior[:, 1]) * self.mesh_delta

    @cached_property
    def boundary_coords(self) -> np.ndarray:
        return (self.boundary[:, 0] + 1j * self.boundary[:, 1]) * self.mesh_delta

    @cached_property
    def _lookup(self):
        allv = np.vstack([self.interior, self.boundary])
        lo = allv.min(axis=0) - 1
        hi = allv.max(axis=0) + 1
        grid = np.full((hi[0] - lo[0] + 1, hi[1] - lo[1] + 1), -1, dtype=np.int64)
        grid[self.interior[:, 0] - lo[0], self.interior[:, 1] - lo[1]] = np.arange(self.n_interior)
        # boundary vertex k is stored as -(k + 2)
        grid[self.boundary[:, 0] - lo[0], self.boundary[:, 1] - lo[1]] = -(np.arange(self.n_boundary) + 2)
        return lo, grid

    def _codes(self, vertices) -> np.ndarray:
        v = np.asarray(vertices, dtype=np.int64).reshape(-1, 2)
        lo, grid = self._lookup
        rel = v - lo
        ok = (rel >= 0).all(axis=1) & (rel[:, 0] < grid.shape[0]) & (rel[:, 1] < grid.shape[1])
        out = np.full(len(v), -1, dtype=np.int64)
        out[ok] = grid[rel[ok, 0], rel[ok, 1]]
        return out

    def interior_index(self, vertices) -> np.ndarray:
        """Interior indices of ``vertices``; ``-1`` where a vertex is not interior."""
        c = self._codes(vertices)
        return np.where(c >= 0, c, -1)

    def boundary_index(self, vertices) -> np.ndarray:
        c = self._codes(vertices)
        return np.where(c <= -2, -c - 2, -1)

    @cached_property
    def neighbour_table(self) -> np.ndarray:
        """``(n, 4)`` table of interior neighbour indices, ``-1`` for boundary."""
        nb = self.interior[:, None, :] + NEIGHBOURS[None, :, :]
        return self.interior_index(nb.reshape(-1, 2)).reshape(-1, 4)

    # -- continuum geometry -----------------------------------------------
    def contains(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if isinstance(self.region, Mask):
            return np.isin(self.interior_index(_snap_nearest(z, self.mesh_delta)), -1, invert=True)
        return self.region.contains(z)

    def distance_to_boundary(self, z: complex) -> float:
        """Distance from ``z`` to the boundary of the continuum region (negative outside)."""
        z = complex(z)
        if isinstance(self.region, Mask):
            d = float(np.min(np.abs(self.boundary_coords - z)))
            return d if self.contains(z) else -d
        return float(self.region.distance(z))

    # -- identity and serialisation ----------------------------------------
    def descriptor(self) -> dict:
        return {"shape": self.region.shape, "params": self.region.params(), "mesh_delta": self.mesh_delta}

    def to_json(self) -> str:
        return json.dumps(self.descriptor(), sort_keys=True)

    @cached_property
    def domain_hash(self) -> str:
        h = hashlib.sha256()
        h.update(np.float64(self.mesh_delta).tobytes())
        h.update(np.ascontiguousarray(self.interior, dtype=np.int64).tobytes())
        h.update(b"|")
        h.update(np.ascontiguousarray(self.boundary, dtype=np.int64).tobytes())
        return h.hexdigest()[:16]

    def __repr__(self) -> str:
        return (f"LatticeDomain({self.region.shape}, delta={self.mesh_delta:g}, "
                f"interior={self.n_interior}, boundary={self.n_boundary})")


# ---------------------------------------------------------------------------
# construction helpers
# ---------------------------------------------------------------------------

def _row_major(v: np.ndarray) -> np.ndarray:
    if len(v) == 0:
        return v.reshape(0, 2)
    order = np.lexsort((v[:, 0], v[:, 1]))
    return np.ascontiguousarray(v[order])


def _site_boundary(interior: np.ndarray) -> np.ndarray:
    nb = (interior[:, None, :] + NEIGHBOURS[None, :, :]).reshape(-1, 2)
    nb = np.unique(nb, axis=0)
    inside = {tuple(v) for v in interior.tolist()}
    keep = np.array([tuple(v) not in inside for v in nb.tolist()], dtype=bool)
    return _row_major(nb[keep])


def _check_connected(interior: np.ndarray) -> None:
    lo = interior.min(axis=0)
    shape = interior.max(axis=0) - lo + 1
    img = np.zeros(shape, dtype=bool)
    img[interior[:, 0] - lo[0], interior[:, 1] - lo[1]] = True
    _, ncomp = ndimage.label(img)  # default structure is 4-connectivity
    if ncomp != 1:
        raise DisconnectedInterior(f"interior has {ncomp} connected components")


def _assemble(vertices: np.ndarray, mesh_delta: float, region) -> LatticeDomain:
    if len(vertices) == 0:
        raise EmptyInterior(f"no lattice vertex of spacing {mesh_delta:g} lies in {region}")
    interior = _row_major(np.asarray(vertices, dtype=np.int64))
    _check_connected(interior)
    return LatticeDomain(float(mesh_delta), interior, _site_boundary(interior), region)


def _candidates(region, mesh_delta: float, reach: float, center: complex = 0j) -> np.ndarray:
    lo_i = math.floor((center.real - reach) / mesh_delta) - 1
    hi_i = math.ceil((center.real + reach) / mesh_delta) + 1
    lo_j = math.floor((center.imag - reach) / mesh_delta) - 1
    hi_j = math.ceil((center.imag + reach) / mesh_delta) + 1
    ii, jj = np.meshgrid(np.arange(lo_i, hi_i + 1), np.arange(lo_j, hi_j + 1), indexing="xy")
    v = np.stack([ii.ravel(), jj.ravel()], axis=1).astype(np.int64)
    z = (v[:, 0] + 1j * v[:, 1]) * mesh_delta
    return v[region.contains(z)]


def _check_delta(mesh_delta: float) -> None:
    if not (mesh_delta > 0 and math.isfinite(mesh_delta)):
        raise ValueError(f"mesh_delta must be positive, got {mesh_delta!r}")


def build_disk(radius: float, mesh_delta: float, center: complex = 0j, *,
               min_ratio: float = MIN_RADIUS_RATIO) -> LatticeDomain:
    """Lattice disk: all vertices ``v`` with ``|v * mesh_delta - center| < radius``.

    Raises :class:`MeshTooCoarse` when ``radius / mesh_delta < min_ratio``.
    ``min_ratio`` may be lowered to build toy domains for exact oracles.
    """
    _check_delta(mesh_delta)
    if radius / mesh_delta < min_ratio:
        raise MeshTooCoarse(f"radius/mesh_delta = {radius / mesh_delta:.3g} < {min_ratio:g}")
    region = Disk(float(radius), complex(center))
    return _assemble(_candidates(region, mesh_delta, radius, complex(center)), mesh_delta, region)


def build_square(side: float, mesh_delta: float, center: complex = 0j, *,
                 min_ratio: float = MIN_RADIUS_RATIO) -> LatticeDomain:
    """Lattice approximation of the open square of the given side length."""
    _check_delta(mesh_delta)
    if side / 2 / mesh_delta < min_ratio:
        raise MeshTooCoarse(f"half-side/mesh_delta = {side / 2 / mesh_delta:.3g} < {min_ratio:g}")
    region = Square(float(side), complex(center))
    return _assemble(_candidates(region, mesh_delta, side, complex(center)), mesh_delta, region)


def build_wedge(half_angle: float, mesh_delta: float, *,
                min_ratio: float = MIN_RADIUS_RATIO) -> LatticeDomain:
    """Lattice approximation of the truncated wedge of opening ``2 * half_angle``."""
    _check_delta(mesh_delta)
    if not 0 < half_angle <= math.pi / 2:
        raise ValueError(f"half_angle must lie in (0, pi/2], got {half_angle!r}")
    if 1 / mesh_delta < min_ratio or half_angle / mesh_delta < 2:
        raise MeshTooCoarse(f"wedge of half-angle {half_angle:.3g} unresolved at mesh {mesh_delta:g}")
    region = Wedge(float(half_angle))
    return _assemble(_candidates(region, mesh_delta, 1.0), mesh_delta, region)


def build_custom(vertices: Iterable[Sequence[int]], mesh_delta: float) -> LatticeDomain:
    """Domain given by an explicit list of interior lattice vertices."""
    _check_delta(mesh_delta)
    v = np.asarray([tuple(map(int, p)) for p in vertices], dtype=np.int64).reshape(-1, 2)
    v = np.unique(v, axis=0) if len(v) else v
    v = _row_major(v)
    return _assemble(v, mesh_delta, Mask(tuple(map(tuple, v.tolist()))))


def build_mask(mask: np.ndarray, mesh_delta: float, origin: Sequence[int] = (0, 0)) -> LatticeDomain:
    """Domain from a boolean image; ``mask[i, j]`` marks vertex ``origin + (i, j)``."""
    ii, jj = np.nonzero(np.asarray(mask, dtype=bool))
    return build_custom(np.stack([ii + origin[0], jj + origin[1]], axis=1), mesh_delta)


def restrict(dom: LatticeDomain, region) -> LatticeDomain:
    """Sub-domain of ``dom`` made of its interior vertices lying in ``region``."""
    keep = region.contains(dom.coords)
    return _assemble(dom.interior[keep], dom.mesh_delta, region)


def subdomain_ball(dom: LatticeDomain, center: complex, radius: float) -> LatticeDomain:
    """Lattice ball ``B_center(radius)`` inside ``dom``.

    The ball must keep a clearance of two lattice spacings from the boundary of
    ``dom``; its interior is then a subset of ``dom.interior`` and its site
    boundary consists of vertices of ``dom``.
    """
    center = complex(center)
    if radius < dom.mesh_delta:
        raise EmptyInterior(f"ball radius {radius:g} is below the mesh size {dom.mesh_delta:g}")
    clearance = dom.distance_to_boundary(center) - radius
    if clearance < 2 * dom.mesh_delta:
        raise BallNotContained(
            f"ball B({center}, {radius:g}) has clearance {clearance:.3g} < 2*delta in {dom!r}")
    return restrict(dom, Disk(float(radius), center))


def check_subdomain(dom: LatticeDomain, sub: LatticeDomain) -> np.ndarray:
    """Return the indices of ``sub.interior`` in ``dom``; raise if not contained."""
    if not math.isclose(sub.mesh_delta, dom.mesh_delta, rel_tol=1e-12):
        raise SubdomainNotContained("sub-domain uses a different mesh")
    idx = dom.interior_index(sub.interior)
    if (idx < 0).any():
        raise SubdomainNotContained(f"{int((idx < 0).sum())} vertices of the sub-domain lie outside {dom!r}")
    return idx


def is_connected(dom: LatticeDomain) -> bool:
    try:
        _check_connected(dom.interior)
    except DisconnectedInterior:
        return False
    return True


def is_simply_connected(dom: LatticeDomain) -> bool:
    """Flood-fill test that the interior has no holes.

    The complement of a 4-connected vertex set has a bounded component exactly
    when the set encloses a hole; complement components are taken with
    8-connectivity, the dual of the interior's 4-connectivity.
    """
    v = dom.interior
    lo = v.min(axis=0) - 1
    shape = v.max(axis=0) - lo + 2
    img = np.ones(shape, dtype=bool)
    img[v[:, 0] - lo[0], v[:, 1] - lo[1]] = False
    _, ncomp = ndimage.label(img, structure=np.ones((3, 3), dtype=bool))
    return ncomp == 1 and is_connected(dom)


# ---------------------------------------------------------------------------
# serialisation
# ---------------------------------------------------------------------------

def from_descriptor(desc: dict) -> LatticeDomain:
    """Rebuild a domain from ``{shape, params, mesh_delta}``.

    Coarseness limits are not re-applied: a descriptor records a domain that
    was valid when it was created.
    """
    shape = desc["shape"]
    p = desc.get("params", {})
    delta = float(desc["mesh_delta"])
    if shape == "disk":
        c = p.get("center", [0.0, 0.0])
        return build_disk(p["radius"], delta, complex(c[0], c[1]), min_ratio=0.0)
    if shape == "square":
        c = p.get("center", [0.0, 0.0])
        return build_square(p["side"], delta, complex(c[0], c[1]), min_ratio=0.0)
    if shape == "wedge":
        return build_wedge(p["half_angle"], delta, min_ratio=0.0)
    if shape == "custom":
        return build_custom(p["vertices"], delta)
    raise ValueError(f"unknown shape {shape!r}")


def from_json(text: str) -> LatticeDomain:
    return from_descriptor(json.loads(text))


# ---------------------------------------------------------------------------
# point sets
# ---------------------------------------------------------------------------

def _snap_nearest(z: np.ndarray, mesh_delta: float) -> np.ndarray:
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    out = np.empty((len(z), 2), dtype=np.int64)
    for k, w in enumerate(z):
        x, y = w.real / mesh_delta, w.imag / mesh_delta
        i0, j0 = math.floor(x), math.floor(y)
        best = None
        for i in (i0, i0 + 1):
            for j in (j0, j0 + 1):
                d = round((i - x) ** 2 + (j - y) ** 2, 12)
                key = (d, i, j)
                if best is None or key < best:
                    best = key
        out[k] = best[1:]
    return out


@dataclass(frozen=True, eq=False)
class PointSet:
    domain: LatticeDomain = field(repr=False)
    points: np.ndarray
    snapped: np.ndarray

    def __len__(self) -> int:
        return len(self.points)

    @property
    def snapped_index(self) -> np.ndarray:
        return self.domain.interior_index(self.snapped)


def make_points(dom: LatticeDomain, points: Iterable[complex]) -> PointSet:
    """Continuum points with their nearest interior vertices.

    Every point must be more than ``2 * mesh_delta`` inside the region.  Ties
    in snapping go to the lexicographically smallest vertex.
    """
    pts = np.array([complex(p) for p in points], dtype=complex)
    for p in pts:
        if dom.distance_to_boundary(p) <= 2 * dom.mesh_delta:
            raise PointTooCloseToBoundary(f"point {p} within 2*delta of the boundary of {dom!r}")
    snapped = _snap_nearest(pts, dom.mesh_delta)
    return PointSet(dom, pts, snapped)


def bilinear_stencil(dom: LatticeDomain, z: complex) -> tuple[np.ndarray, np.ndarray]:
    """Lattice vertices and weights interpolating a vertex function at ``z``.

    Zero-weight corners are dropped, so a point sitting on a vertex yields
    that single vertex with weight 1.
    """
    x, y = z.real / dom.mesh_delta, z.imag / dom.mesh_delta
    i0, j0 = math.floor(x), math.floor(y)
    fx, fy = x - i0, y - j0
    verts, wts = [], []
    for di, wx in ((0, 1 - fx), (1, fx)):
        for dj, wy in ((0, 1 - fy), (1, fy)):
            w = wx * wy
            if w > 1e-14:
                verts.append((i0 + di, j0 + dj))
                wts.append(w)
    wts = np.array(wts)
    return np.array(verts, dtype=np.int64), wts / wts.sum()


def flood_fill_count(dom: LatticeDomain, start: int = 0) -> int:
    """Number of interior vertices reachable from ``start`` (breadth first)."""
    seen = np.zeros(dom.n_interior, dtype=bool)
    seen[start] = True
    frontier = [start]
    nb = dom.neighbour_table
    while frontier:
        nxt = nb[frontier].ravel()
        nxt = nxt[nxt >= 0]
        nxt = np.unique(nxt[~seen[nxt]])
        seen[nxt] = True
        frontier = nxt.tolist()
    return int(seen.sum())


RegionPredicate = Callable[[np.ndarray], np.ndarray]

"""Dirichlet Laplacian, Green's function and harmonic extension on lattice domains.

The operator is ``A = 4 I - adjacency`` restricted to interior vertices, so
``A^{-1}`` is the lattice Green's function normalised to have
``G(z, w) ~ (1 / 2 pi) log(1 / |z - w|)`` at large lattice distance.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu, spsolve_triangular

from .domain import LatticeDomain, bilinear_stencil, build_disk
from .errors import (
    DimensionMismatch,
    FactorizationFailure,
    SolveFailure,
    TooCloseToBoundary,
    VertexNotInterior,
)

GREEN_SLOPE = 1 / (2 * math.pi)


@dataclass(eq=False)
class DirichletOperator:
    """Sparse Dirichlet Laplacian of a domain with a symmetric factorisation.

    ``A = P L D L^T P^T``; sampling uses ``C^T = D^{-1/2} U`` with ``U = D L^T``
    so that ``h = P C^{-T} xi`` has covariance ``A^{-1}``.
    """

    domain: LatticeDomain
    matrix: sp.csc_matrix
    tol: float = 1e-10
    _lu: object = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def lu(self):
        return self._lu

    @cached_property
    def _upper_scaled(self) -> sp.csr_matrix:
        u = self._lu.U.tocsr()
        d = u.diagonal()
        if (d <= 0).any():
            raise FactorizationFailure("operator is not positive definite")
        return sp.csr_matrix(sp.diags(1 / np.sqrt(d)) @ u)

    @property
    def perm(self) -> np.ndarray:
        return self._lu.perm_c

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=float)
        if rhs.shape[0] != self.n:
            raise DimensionMismatch(f"right-hand side has {rhs.shape[0]} rows, operator has {self.n}")
        x = self._lu.solve(rhs)
        if not np.all(np.isfinite(x)):
            raise SolveFailure("non-finite solution")
        return x

    def residual(self, x: np.ndarray, rhs: np.ndarray) -> float:
        return float(np.max(np.abs(self.matrix @ x - rhs))) if np.size(rhs) else 0.0

    def whiten_inverse(self, xi: np.ndarray) -> np.ndarray:
        """Map standard normals ``xi`` (shape ``(n,)`` or ``(n, m)``) to fields with covariance ``A^{-1}``."""
        y = spsolve_triangular(self._upper_scaled, xi, lower=False)
        return y[self._lu.perm_c]


def laplacian_matrix(dom: LatticeDomain) -> sp.csc_matrix:
    """Interior block of ``4 I - adjacency`` in the domain's vertex order."""
    n = dom.n_interior
    nb = dom.neighbour_table
    rows = np.repeat(np.arange(n), 4)
    cols = nb.ravel()
    keep = cols >= 0
    off = sp.csr_matrix((-np.ones(keep.sum()), (rows[keep], cols[keep])), shape=(n, n))
    return (4 * sp.identity(n, format="csr") + off).tocsc()


def assemble(dom: LatticeDomain, tol: float = 1e-10) -> DirichletOperator:
    """Build and factorise the Dirichlet Laplacian of ``dom``."""
    a = laplacian_matrix(dom)
    try:
        lu = splu(a, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                  options=dict(SymmetricMode=True))
    except RuntimeError as exc:
        raise FactorizationFailure(str(exc)) from exc
    if not np.array_equal(lu.perm_r, lu.perm_c):
        raise FactorizationFailure("symmetric pivoting was not preserved")
    op = DirichletOperator(dom, a, tol, lu)
    # check the factorisation on a probe vector
    probe = np.cos(np.arange(op.n, dtype=float))
    if op.residual(op.solve(probe), probe) > max(tol, 1e-10) * max(1.0, np.abs(probe).max()) * 10:
        raise FactorizationFailure("factorisation residual above tolerance")
    return op


# ---------------------------------------------------------------------------
# Green's function
# ---------------------------------------------------------------------------

def _vertex_index(op: DirichletOperator, vertex) -> int:
    idx = int(op.domain.interior_index(np.asarray(vertex).reshape(1, 2))[0])
    if idx < 0:
        raise VertexNotInterior(f"vertex {tuple(vertex)} is not interior to {op.domain!r}")
    return idx


def green_column(op: DirichletOperator, vertex, *, cache_dir: str | os.PathLike | None = None) -> np.ndarray:
    """Column ``G(., vertex)`` of the lattice Green's function.

    With ``cache_dir`` the column is stored on disk keyed by the domain hash
    and the vertex, and later calls read it back.
    """
    idx = _vertex_index(op, vertex)
    if cache_dir is not None:
        path = Path(cache_dir) / f"green_{op.domain.domain_hash}_{idx}.bin"
        if path.exists():
            return load_field(path, op.domain, kind="green")
    e = np.zeros(op.n)
    e[idx] = 1.0
    g = op.solve(e)
    if cache_dir is not None:
        Path(cache_dir).mkdir(parents=True, exist_ok=True)
        save_field(path, g, op.domain, kind="green")
    return g


def green_matrix(op: DirichletOperator, indices) -> np.ndarray:
    """Columns of ``G`` for the given interior indices, shape ``(n, k)``."""
    idx = np.asarray(indices, dtype=np.int64)
    e = np.zeros((op.n, len(idx)))
    e[idx, np.arange(len(idx))] = 1.0
    return op.solve(e)


def point_weights(dom: LatticeDomain, z: complex) -> tuple[np.ndarray, np.ndarray]:
    """Interior indices and bilinear weights representing evaluation at ``z``."""
    verts, w = bilinear_stencil(dom, complex(z))
    idx = dom.interior_index(verts)
    if (idx < 0).any():
        raise VertexNotInterior(f"point {z} is not surrounded by interior vertices")
    return idx, w


def green_at(op: DirichletOperator, z: complex, w: complex) -> float:
    """Bilinearly interpolated lattice Green's function between continuum points."""
    iz, wz = point_weights(op.domain, z)
    iw, ww = point_weights(op.domain, w)
    cols = green_matrix(op, iw) @ ww
    return float(wz @ cols[iz])


# ---------------------------------------------------------------------------
# harmonic extension and harmonic measure
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BoundaryData:
    """Values on the site boundary, in the order of ``domain.boundary``."""

    domain: LatticeDomain
    values: np.ndarray

    @classmethod
    def from_function(cls, dom: LatticeDomain, f) -> "BoundaryData":
        return cls(dom, np.asarray(f(dom.boundary_coords), dtype=float))


def boundary_coupling(dom: LatticeDomain) -> sp.csr_matrix:
    """Matrix ``B`` with ``B[i, b] = 1`` when interior ``i`` neighbours boundary ``b``."""
    nb = dom.interior[:, None, :] + np.array([(1, 0), (-1, 0), (0, 1), (0, -1)])[None]
    bidx = dom.boundary_index(nb.reshape(-1, 2)).reshape(-1, 4)
    rows, slot = np.nonzero(bidx >= 0)
    return sp.csr_matrix((np.ones(len(rows)), (rows, bidx[rows, slot])),
                         shape=(dom.n_interior, dom.n_boundary))


def harmonic_extension(op: DirichletOperator, data: BoundaryData | np.ndarray) -> np.ndarray:
    """Discrete harmonic function in the interior with the given boundary values.

    ``data`` may be one boundary vector or a ``(m, n_boundary)`` batch; the
    result has matching leading shape.
    """
    vals = data.values if isinstance(data, BoundaryData) else np.asarray(data, dtype=float)
    if vals.shape[-1] != op.domain.n_boundary:
        raise DimensionMismatch(
            f"boundary data has length {vals.shape[-1]}, domain has {op.domain.n_boundary} boundary vertices")
    b = boundary_coupling(op.domain)
    rhs = b @ vals.T
    u = op.solve(rhs)
    res = op.residual(u, rhs)
    scale = max(1.0, float(np.abs(vals).max(initial=0.0)))
    if res > 1e-10 * scale:
        raise SolveFailure(f"harmonic extension residual {res:.2e}")
    return u.T


def harmonic_measure_row(op: DirichletOperator, vertex) -> np.ndarray:
    """Exit distribution on the boundary of simple random walk started at ``vertex``."""
    idx = _vertex_index(op, vertex)
    e = np.zeros(op.n)
    e[idx] = 1.0
    g = op.solve(e)  # symmetric, so this is the row G(vertex, .)
    return boundary_coupling(op.domain).T @ g


def harmonic_measure_matrix(op: DirichletOperator, indices) -> np.ndarray:
    """Harmonic-measure rows for several interior indices, shape ``(k, n_boundary)``."""
    g = green_matrix(op, indices)
    return (boundary_coupling(op.domain).T @ g).T


def discrete_laplacian(dom: LatticeDomain, interior_values: np.ndarray,
                       boundary_values: np.ndarray) -> np.ndarray:
    """``sum_{y ~ x} (u(y) - u(x))`` at interior vertices."""
    u = np.asarray(interior_values, dtype=float)
    nb = dom.neighbour_table
    vals = np.where(nb >= 0, u[np.maximum(nb, 0)], 0.0)
    return vals.sum(axis=1) + boundary_coupling(dom) @ boundary_values - 4 * u


# ---------------------------------------------------------------------------
# conformal radius
# ---------------------------------------------------------------------------

_CALIBRATION_FILE = "calibration.json"


def load_calibration() -> dict:
    with resources.files(__package__).joinpath(_CALIBRATION_FILE).open("r") as fh:
        return json.load(fh)


def calibrate(sizes=(32, 64, 128, 256)) -> dict:
    """Fit ``G(0, 0) = s log(N) + s c0`` on lattice disks of radius ``N``.

    The conformal radius of the unit disk at its centre is 1, so the diagonal
    of the Green's function on disks of increasing lattice radius determines
    the two constants used by :func:`conformal_radius`.
    """
    logs, diag = [], []
    for n in sizes:
        dom = build_disk(1.0, 1.0 / n)
        op = assemble(dom)
        diag.append(green_column(op, (0, 0))[dom.interior_index([(0, 0)])[0]])
        logs.append(math.log(n))
    x = np.column_stack([np.log(sizes), np.ones(len(sizes))])
    (s, sc0), *_ = np.linalg.lstsq(x, np.array(diag), rcond=None)
    return {"slope": float(s), "offset": float(sc0 / s), "sizes": list(sizes),
            "diagonal": [float(v) for v in diag]}


def write_calibration(path: str | os.PathLike | None = None, sizes=(32, 64, 128, 256)) -> dict:
    cal = calibrate(sizes)
    target = Path(path) if path else Path(__file__).with_name(_CALIBRATION_FILE)
    target.write_text(json.dumps(cal, indent=2, sort_keys=True) + "\n")
    return cal


def conformal_radius(op: DirichletOperator, z: complex, *, min_clearance: float = 4.0) -> float:
    """Conformal radius of the domain seen from ``z``, read off the lattice Green's function.

    Uses ``G(z, z) = s log(R / delta) + s c0``; the constants come from the
    packaged disk calibration.
    """
    dom = op.domain
    z = complex(z)
    if dom.distance_to_boundary(z) < min_clearance * dom.mesh_delta:
        raise TooCloseToBoundary(f"point {z} is within {min_clearance:g} lattice spacings of the boundary")
    cal = load_calibration()
    idx, w = point_weights(dom, z)
    cols = green_matrix(op, idx)
    # interpolate the diagonal: off-diagonal entries miss the on-site singularity
    g = float(w @ cols[idx, np.arange(len(idx))])
    return dom.mesh_delta * math.exp(g / cal["slope"] - cal["offset"])


# ---------------------------------------------------------------------------
# field serialisation
# ---------------------------------------------------------------------------

def save_field(path: str | os.PathLike, values: np.ndarray, dom: LatticeDomain, kind: str = "field",
               **meta) -> None:
    """Write a vertex field as little-endian float64 with a JSON sidecar header.

    Extra keyword arguments (for example ``seed`` and ``counter`` of a sample
    dump) are stored in the header alongside ``domain_hash``, ``kind`` and
    ``length``.
    """
    path = Path(path)
    arr = np.ascontiguousarray(values, dtype="<f8")
    path.write_bytes(arr.tobytes())
    header = {**meta, "domain_hash": dom.domain_hash, "kind": kind, "length": int(arr.size)}
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(header, sort_keys=True))


def load_field(path: str | os.PathLike, dom: LatticeDomain, kind: str | None = None) -> np.ndarray:
    path = Path(path)
    header = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    if header["domain_hash"] != dom.domain_hash:
        raise DimensionMismatch("field was saved for a different domain")
    if kind is not None and header["kind"] != kind:
        raise DimensionMismatch(f"field kind {header['kind']!r}, expected {kind!r}")
    arr = np.frombuffer(path.read_bytes(), dtype="<f8")
    if arr.size != header["length"]:
        raise DimensionMismatch("field length does not match header")
    return arr.copy()

"""Closed-form conformal maps between canonical domains and pushforward of test functions."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .domain import LatticeDomain
from .errors import ImageEscapesTarget, PointOutsideSource
from .kernels import as_points, estimate_k2


def _arr(z):
    return np.asarray(z, dtype=complex)


def _scalar_or_array(z_in, out):
    return complex(out) if np.ndim(z_in) == 0 else out


class ConformalMap:
    """Base class: subclasses define ``_f``, ``_df``, ``inverse``, ``in_source`` and ``to_dict``."""

    kind = "abstract"

    def in_source(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _check(self, z: np.ndarray) -> None:
        ok = np.asarray(self.in_source(z))
        if not ok.all():
            bad = np.atleast_1d(z)[~np.atleast_1d(ok)][0]
            raise PointOutsideSource(f"{bad} is outside the source domain of {self.kind}")

    def apply(self, z):
        za = _arr(z)
        self._check(za)
        return _scalar_or_array(z, self._f(za))

    def derivative(self, z):
        za = _arr(z)
        self._check(za)
        return _scalar_or_array(z, self._df(za))

    def __call__(self, z):
        return self.apply(z)

    def then(self, other: "ConformalMap") -> "Composition":
        """``other`` after ``self``."""
        return Composition((self, other))


@dataclass(frozen=True)
class MobiusDisk(ConformalMap):
    """Disk automorphism ``z -> e^{i rotation} (z - w) / (1 - conj(w) z)``."""

    w: complex = 0j
    rotation: float = 0.0
    kind = "mobius_disk"

    def __post_init__(self):
        if abs(self.w) >= 1:
            raise ValueError("mobius_disk needs |w| < 1")

    def in_source(self, z):
        return np.abs(z) < 1

    def _f(self, z):
        return cmath.exp(1j * self.rotation) * (z - self.w) / (1 - np.conj(self.w) * z)

    def _df(self, z):
        return cmath.exp(1j * self.rotation) * (1 - abs(self.w) ** 2) / (1 - np.conj(self.w) * z) ** 2

    def inverse(self) -> "MobiusDisk":
        # f^{-1}(u) = (e^{-i t} u + w) / (1 + conj(w) e^{-i t} u) is a disk automorphism with
        # zero at -w e^{i t} and rotation -t
        return MobiusDisk(-self.w * cmath.exp(1j * self.rotation), -self.rotation)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "w": [self.w.real, self.w.imag], "rotation": self.rotation}


@dataclass(frozen=True)
class ScaleTranslate(ConformalMap):
    """``z -> c z + b`` with ``c > 0``."""

    c: float = 1.0
    b: complex = 0j
    kind = "scale_translate"

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("scale_translate needs c > 0")

    def in_source(self, z):
        return np.isfinite(z)

    def _f(self, z):
        return self.c * z + self.b

    def _df(self, z):
        return np.full_like(z, self.c, dtype=complex)

    def inverse(self) -> "ScaleTranslate":
        return ScaleTranslate(1 / self.c, -self.b / self.c)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "c": self.c, "b": [self.b.real, self.b.imag]}


@dataclass(frozen=True)
class WedgePower(ConformalMap):
    """``z -> z^p`` on the sector ``|arg z| < a``; ``p = pi / (2 a)`` unless given.

    With the default exponent the sector opens onto the right half-plane.
    """

    a: float
    p: float | None = None
    kind = "wedge_power"

    @property
    def exponent(self) -> float:
        return math.pi / (2 * self.a) if self.p is None else self.p

    def in_source(self, z):
        return (z != 0) & (np.abs(np.angle(z)) < self.a)

    def _f(self, z):
        return np.exp(self.exponent * np.log(z))

    def _df(self, z):
        return self.exponent * np.exp((self.exponent - 1) * np.log(z))

    def inverse(self) -> "WedgePower":
        return WedgePower(self.a * self.exponent, 1 / self.exponent)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "a": self.a, "p": self.p}


@dataclass(frozen=True)
class HalfPlaneToDisk(ConformalMap):
    """Cayley map ``z -> (z - i) / (z + i)`` from the upper half-plane to the disk."""

    inverse_direction: bool = False
    kind = "half_plane_to_disk"

    def in_source(self, z):
        return np.abs(z) < 1 if self.inverse_direction else z.imag > 0

    def _f(self, z):
        return 1j * (1 + z) / (1 - z) if self.inverse_direction else (z - 1j) / (z + 1j)

    def _df(self, z):
        return 2j / (1 - z) ** 2 if self.inverse_direction else 2j / (z + 1j) ** 2

    def inverse(self) -> "HalfPlaneToDisk":
        return HalfPlaneToDisk(not self.inverse_direction)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "inverse": self.inverse_direction}


@dataclass(frozen=True)
class Composition(ConformalMap):
    """Maps applied left to right: ``maps[-1] o ... o maps[0]``."""

    maps: tuple
    kind = "composition"

    def in_source(self, z):
        ok = np.ones(np.shape(z), dtype=bool)
        cur = np.array(z, dtype=complex)
        for m in self.maps:
            good = np.asarray(m.in_source(cur)) & ok
            ok = good
            cur = np.where(ok, m._f(np.where(ok, cur, _safe_point(m))), 0)
        return ok

    def _f(self, z):
        for m in self.maps:
            z = m._f(z)
        return z

    def _df(self, z):
        d = np.ones_like(z)
        for m in self.maps:
            d = d * m._df(z)
            z = m._f(z)
        return d

    def inverse(self) -> "Composition":
        return Composition(tuple(m.inverse() for m in reversed(self.maps)))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "maps": [m.to_dict() for m in self.maps]}


def _safe_point(m: ConformalMap) -> complex:
    """A point inside the source of ``m``, used to keep masked evaluations finite."""
    if isinstance(m, HalfPlaneToDisk) and not m.inverse_direction:
        return 1j
    if isinstance(m, WedgePower):
        return 0.5 + 0j
    return 0j


def map_from_dict(d: dict) -> ConformalMap:
    kind = d["kind"]
    if kind == "mobius_disk":
        return MobiusDisk(complex(*d.get("w", [0.0, 0.0])), float(d.get("rotation", 0.0)))
    if kind == "scale_translate":
        return ScaleTranslate(float(d.get("c", 1.0)), complex(*d.get("b", [0.0, 0.0])))
    if kind == "wedge_power":
        return WedgePower(float(d["a"]), d.get("p"))
    if kind == "half_plane_to_disk":
        return HalfPlaneToDisk(bool(d.get("inverse", False)))
    if kind == "composition":
        return Composition(tuple(map_from_dict(m) for m in d["maps"]))
    raise ValueError(f"unknown map kind {kind!r}")


# ---------------------------------------------------------------------------
# test-function pushforward
# ---------------------------------------------------------------------------

def interpolate_vertex_function(dom: LatticeDomain, values: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Bilinear interpolation of an interior vertex function (zero elsewhere) at points ``z``."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    x, y = z.real / dom.mesh_delta, z.imag / dom.mesh_delta
    i0, j0 = np.floor(x).astype(np.int64), np.floor(y).astype(np.int64)
    fx, fy = x - i0, y - j0
    padded = np.append(np.asarray(values, dtype=float), 0.0)
    out = np.zeros(len(z))
    for di, wx in ((0, 1 - fx), (1, fx)):
        for dj, wy in ((0, 1 - fy), (1, fy)):
            idx = dom.interior_index(np.stack([i0 + di, j0 + dj], axis=1))
            out += wx * wy * padded[np.where(idx >= 0, idx, len(values))]
    return out


def pushforward_test_fn(m: ConformalMap, weights: np.ndarray, source: LatticeDomain,
                        target: LatticeDomain) -> np.ndarray:
    """Weights ``|(f^{-1})'|^2 (phi o f^{-1})`` on the target lattice.

    ``weights`` are pairing weights on ``source`` (mass ``delta^2 sum w``).
    The map must send the support into the continuum region of ``target``.
    """
    w = np.asarray(weights, dtype=float)
    support = source.coords[w != 0]
    if len(support):
        img = m.apply(support)
        for u in np.atleast_1d(img):
            if target.distance_to_boundary(u) <= 0:
                raise ImageEscapesTarget(f"image point {u} lies outside the target domain")
    inv = m.inverse()
    u = target.coords
    ok = np.asarray(inv.in_source(u))
    pre = np.zeros(len(u), dtype=complex)
    dinv = np.zeros(len(u), dtype=complex)
    pre[ok] = inv._f(u[ok])
    dinv[ok] = inv._df(u[ok])
    vals = np.zeros(len(u))
    vals[ok] = interpolate_vertex_function(source, w, pre[ok]) * np.abs(dinv[ok]) ** 2
    return vals


def pairing_mass(dom: LatticeDomain, weights: np.ndarray) -> float:
    return float(dom.mesh_delta ** 2 * np.sum(weights))


def invariance_experiment(sampler, m: ConformalMap, pts, eps: float, n: int, target_sampler=None,
                          tuples=None) -> dict:
    """Two-point kernel at ``pts`` against the kernel at the image points.

    The image points are estimated with ``target_sampler`` (a sampler on the
    target domain's own lattice); without one, an independent substream of
    ``sampler`` is used, which is only meaningful when the map sends the
    domain onto itself.  ``tuples`` restricts the comparison to the given
    index pairs.  Returns per-pair z-scores of the difference.
    """
    src = as_points(pts)
    img = np.atleast_1d(m.apply(src))
    if target_sampler is None:
        target_sampler = sampler.substream(1)
    k_src = estimate_k2(sampler, src, eps, n, tuples=tuples)
    k_img = estimate_k2(target_sampler, img, eps, n, tuples=tuples)
    rows = []
    for k, (i, j) in enumerate(k_src.tuples):
        se = math.hypot(k_src.se[k], k_img.se[k])
        diff = k_src.mean[k] - k_img.mean[k]
        rows.append({"pair": [i, j], "source": [[src[i].real, src[i].imag], [src[j].real, src[j].imag]],
                     "image": [[img[i].real, img[i].imag], [img[j].real, img[j].imag]],
                     "k2_source": float(k_src.mean[k]), "k2_image": float(k_img.mean[k]),
                     "se_source": float(k_src.se[k]), "se_image": float(k_img.se[k]),
                     "z": float(diff / se) if se > 0 else 0.0})
    return {"map": m.to_dict(), "eps": eps, "n_samples": n, "rows": rows,
            "max_abs_z": max(abs(r["z"]) for r in rows)}

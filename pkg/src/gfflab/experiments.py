"""Experiment definitions, configuration validation and report writing.

Each experiment is a pure function of its resolved configuration returning a
report dictionary and CSV text.  Reports are written with sorted keys and
contain no timestamps, so identical configurations give identical bytes.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import bridge1d
from .conformal import MobiusDisk, invariance_experiment
from .domain import build_disk, make_points, subdomain_ball
from .errors import ConfigInvalid
from .kernels import (
    average_values,
    check_separation,
    bound_constant,
    estimate_k2,
    fit_coupling_detail,
    l2_bound,
    l4_bound,
    wedge_moment_scan,
    wick_residual,
)
from .laplace import green_at, green_matrix
from .markov import (
    harmonic_residual,
    markov_decompose,
    outside_leak,
    reassembly_error,
    uniqueness_check,
)
from .sampler import (
    GffSampler,
    ScalarField,
    annulus_weights,
    circle_average_weights,
    operator_for,
)
from .stats import correlation, linear_fit, mean_se

# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

NON_RESULT_KEYS = ("out", "threads")


def _as_int(key, v):
    if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
        if isinstance(v, float) and v.is_integer():
            return int(v)
        raise ConfigInvalid(key, f"expected an integer, got {v!r}")
    return int(v)


def _as_pos_int(key, v):
    v = _as_int(key, v)
    if v <= 0:
        raise ConfigInvalid(key, f"must be positive, got {v}")
    return v


def _as_seed(key, v):
    v = _as_int(key, v)
    if not 0 <= v < 2 ** 64:
        raise ConfigInvalid(key, "seed must be an unsigned 64-bit integer")
    return v


def _as_pos_float(key, v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigInvalid(key, f"expected a number, got {v!r}")
    v = float(v)
    if not (v > 0 and math.isfinite(v)):
        raise ConfigInvalid(key, f"must be positive and finite, got {v}")
    return v


def _as_float_list(key, v):
    if not isinstance(v, (list, tuple)) or not v:
        raise ConfigInvalid(key, "expected a non-empty list of numbers")
    return [_as_pos_float(key, x) for x in v]


def _as_point(key, v):
    if not isinstance(v, (list, tuple)) or len(v) != 2 or not all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
        raise ConfigInvalid(key, f"expected a point [x, y], got {v!r}")
    return [float(v[0]), float(v[1])]


def _as_points(key, v):
    if not isinstance(v, (list, tuple)) or not v:
        raise ConfigInvalid(key, "expected a non-empty list of points")
    return [_as_point(key, p) for p in v]


def _as_point_groups(size):
    def conv(key, v):
        if not isinstance(v, (list, tuple)) or not v:
            raise ConfigInvalid(key, "expected a non-empty list of point groups")
        out = []
        for g in v:
            pts = _as_points(key, g)
            if len(pts) != size:
                raise ConfigInvalid(key, f"each group needs {size} points, got {len(pts)}")
            out.append(pts)
        return out
    return conv


def _as_str(key, v):
    if not isinstance(v, str):
        raise ConfigInvalid(key, f"expected a string, got {v!r}")
    return v


def _as_opt_threads(key, v):
    return None if v is None else _as_pos_int(key, v)


@dataclass(frozen=True)
class Experiment:
    name: str
    probes: str
    keys: dict  # key -> (converter, default)
    run: Callable[[dict], tuple[dict, str]]


EXPERIMENTS: dict[str, Experiment] = {}


def _register(name: str, probes: str, keys: dict):
    def deco(fn):
        base = {"seed": (_as_seed, 7), "out": (_as_str, f"results/{name}"), "threads": (_as_opt_threads, None)}
        EXPERIMENTS[name] = Experiment(name, probes, {**base, **keys}, fn)
        return fn
    return deco


def resolve_config(name: str, file_cfg: dict | None = None, overrides: dict | None = None) -> dict:
    """Merge defaults, file values and flag overrides; validate every key."""
    if name not in EXPERIMENTS:
        raise ConfigInvalid("experiment", f"unknown experiment {name!r}")
    exp = EXPERIMENTS[name]
    raw = dict(file_cfg or {})
    if "experiment" in raw:
        if raw.pop("experiment") != name:
            raise ConfigInvalid("experiment", f"config file names a different experiment than {name!r}")
    for k, v in (overrides or {}).items():
        if v is not None:
            raw[k] = v
    for k in sorted(raw):
        if k not in exp.keys:
            raise ConfigInvalid(k, f"unknown key for experiment {name!r}")
    cfg = {"experiment": name}
    for k, (conv, default) in exp.keys.items():
        cfg[k] = conv(k, raw[k]) if k in raw else (conv(k, default) if default is not None else None)
    return cfg


def config_hash(cfg: dict) -> str:
    core = {k: v for k, v in cfg.items() if k not in NON_RESULT_KEYS}
    return hashlib.sha256(json.dumps(core, sort_keys=True).encode()).hexdigest()


def load_toml(path: str | os.PathLike) -> dict:
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise ConfigInvalid("config", f"cannot read {path}: {exc.strerror}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigInvalid("config", f"malformed TOML in {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# report plumbing
# ---------------------------------------------------------------------------

def _clean(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [_clean(obj.real), _clean(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def _csv(header, rows) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for r in rows:
        wr.writerow([f"{x:.12g}" if isinstance(x, (float, np.floating)) else x for x in r])
    return buf.getvalue()


def _c(p) -> complex:
    return complex(p[0], p[1])


def execute(cfg: dict) -> tuple[dict, str]:
    """Run a resolved configuration and return ``(report, csv_text)``."""
    exp = EXPERIMENTS[cfg["experiment"]]
    results, checks, data = exp.run(cfg)
    report = {
        "experiment": exp.name,
        "property": exp.probes,
        "config": {k: v for k, v in cfg.items() if k not in NON_RESULT_KEYS},
        "config_hash": config_hash(cfg),
        "seed": cfg["seed"],
        "checks": checks,
        "results": results,
        "pass": all(c["pass"] for c in checks.values()),
    }
    return _clean(report), data


def write_report(report: dict, data: str, out: str | os.PathLike) -> tuple[Path, Path]:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    rp, dp = out / "report.json", out / "data.csv"
    rp.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    dp.write_text(data)
    return rp, dp


def run(cfg: dict) -> int:
    """Execute, write ``report.json`` and ``data.csv``; return 0 on pass and 1 on failure."""
    limiter = None
    if cfg.get("threads"):
        from threadpoolctl import threadpool_limits
        limiter = threadpool_limits(limits=cfg["threads"])
    try:
        report, data = execute(cfg)
    finally:
        if limiter is not None:
            limiter.restore_original_limits()
    write_report(report, data, cfg["out"])
    return 0 if report["pass"] else 1


def _values(sampler: GffSampler, weights: np.ndarray, n: int, block: int = 1000) -> np.ndarray:
    out = np.empty((n, weights.shape[1]))
    done = 0
    for f in sampler.blocks(n, block):
        out[done:done + len(f)] = f.values @ weights
        done += len(f)
    return out


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

DEFAULT_K2_POINTS = [[0.0, 0.0], [0.5, 0.0], [0.0, 0.45], [-0.35, 0.3], [-0.2, -0.55]]


@_register("log-variance", "circle-average variance grows like a multiple of log(1/eps)", {
    "samples": (_as_pos_int, 100_000),
    "mesh": (_as_pos_float, 1 / 64),
    "radii": (_as_float_list, [0.25, 0.125, 0.0625, 0.03125]),
    "center": (_as_point, [0.0, 0.0]),
})
def _log_variance(cfg):
    dom = build_disk(1.0, cfg["mesh"])
    op = operator_for(dom)
    z = _c(cfg["center"])
    radii = cfg["radii"]
    w = np.column_stack([circle_average_weights(dom, z, r) for r in radii])
    v = _values(GffSampler(op, cfg["seed"]), w, cfg["samples"])
    var, se = mean_se(v ** 2)
    exact = np.array([w[:, k] @ op.solve(w[:, k]) for k in range(len(radii))])
    x = np.log(1 / np.array(radii))
    a, c, r2 = linear_fit(x, var)
    first = (var[1] - var[0]) / (x[1] - x[0])
    last = (var[-1] - var[-2]) / (x[-1] - x[-2])
    mismatch = abs(first - last) / (0.5 * (abs(first) + abs(last)))
    checks = {
        "fit_r2": {"value": r2, "threshold": 0.99, "pass": r2 >= 0.99},
        "slope_agreement": {"first_slope": first, "last_slope": last, "relative_mismatch": mismatch,
                            "threshold": 0.05, "pass": mismatch <= 0.05},
    }
    results = {"slope": a, "intercept": c, "slope_times_2pi": a * 2 * math.pi,
               "variance": var, "se": se, "exact_variance": exact, "radii": radii}
    data = _csv(("eps", "variance", "se", "exact_variance"), zip(radii, var, se, exact))
    return results, checks, data


@_register("k2-green", "two-point kernel of circle averages is a multiple of the Green's function", {
    "samples": (_as_pos_int, 10_000),
    "mesh": (_as_pos_float, 1 / 64),
    "eps": (_as_pos_float, 1 / 16),
    "points": (_as_points, DEFAULT_K2_POINTS),
})
def _k2_green(cfg):
    dom = build_disk(1.0, cfg["mesh"])
    op = operator_for(dom)
    pts = [_c(p) for p in cfg["points"]]
    est = estimate_k2(GffSampler(op, cfg["seed"]), pts, cfg["eps"], cfg["samples"])
    greens = [green_at(op, pts[i], pts[j]) for i, j in est.tuples]
    fit = fit_coupling_detail(est, greens)
    bounds = [float(l2_bound([pts[i], pts[j]], op).values[0]) for i, j in est.tuples]
    max_z = max(abs(z) for z in fit["residual_z"])
    checks = {
        "fit_r2": {"value": fit["r2"], "threshold": 0.99, "pass": fit["r2"] >= 0.99},
        "residuals": {"max_abs_z": max_z, "threshold": 3.0, "pass": max_z <= 3.0},
    }
    results = {**fit, "a_hat_log_normalised": fit["a_hat"] / (2 * math.pi), "tuples": est.tuples,
               "estimate": est.mean, "se": est.se, "green": greens, "l2_bound": bounds,
               "l2_bound_constant": bound_constant(est.mean, bounds)}
    rows = []
    for k, (i, j) in enumerate(est.tuples):
        rows.append((f"{pts[i]};{pts[j]}", est.mean[k], est.se[k], greens[k], bounds[k],
                     est.n_samples, cfg["seed"]))
    data = _csv(("points", "estimate", "se", "green", "bound_l2", "n_samples", "seed"), rows)
    return results, checks, data


DEFAULT_WICK_CONFIGS = [
    [[0.0, 0.0], [0.3, 0.0], [0.0, 0.3], [0.3, 0.3]],
    [[-0.2, 0.0], [0.0, 0.0], [0.2, 0.0], [0.4, 0.0]],
    [[0.5, 0.0], [0.0, 0.5], [-0.5, 0.0], [0.0, -0.5]],
    [[0.1, 0.1], [0.28, 0.1], [-0.4, -0.3], [-0.4, -0.12]],
    [[0.0, 0.6], [0.0, 0.4], [0.3, -0.2], [-0.3, -0.2]],
]


@_register("wick", "four-point moments of circle averages follow the pairing rule", {
    "samples": (_as_pos_int, 100_000),
    "mesh": (_as_pos_float, 1 / 32),
    "eps": (_as_pos_float, 1 / 16),
    "configs": (_as_point_groups(4), DEFAULT_WICK_CONFIGS),
})
def _wick(cfg):
    dom = build_disk(1.0, cfg["mesh"])
    op = operator_for(dom)
    pool: list[complex] = []
    quads = []
    for group in cfg["configs"]:
        idx = []
        for p in group:
            z = _c(p)
            if z not in pool:
                pool.append(z)
            idx.append(pool.index(z))
        quads.append(tuple(idx))
    for q in quads:
        check_separation(np.array([pool[i] for i in q]), cfg["eps"])
    v = average_values(GffSampler(op, cfg["seed"]), pool, cfg["eps"], cfg["samples"])
    rows, zs = [], []
    for q in quads:
        k4, wick, diff, se = wick_residual(v, q)
        bound = float(l4_bound([pool[i] for i in q], op).values[0])
        zs.append(diff / se)
        rows.append({"points": [pool[i] for i in q], "k4": k4, "wick": wick, "difference": diff,
                     "se": se, "z": diff / se, "l4_bound": bound})
    max_z = max(abs(z) for z in zs)
    checks = {"wick_rule": {"max_abs_z": max_z, "threshold": 3.0, "pass": max_z <= 3.0}}
    results = {"rows": rows, "l4_bound_constant": bound_constant([r["k4"] for r in rows],
                                                                 [r["l4_bound"] for r in rows])}
    data = _csv(("points", "estimate", "se", "wick", "bound_l4", "n_samples", "seed"),
                [(";".join(str(pool[i]) for i in q), r["k4"], r["se"], r["wick"], r["l4_bound"],
                  cfg["samples"], cfg["seed"]) for q, r in zip(quads, rows)])
    return results, checks, data


DEFAULT_MARKOV_PAIRS = [
    [[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.2, 0.0]], [[0.1, 0.1], [-0.1, 0.2]],
    [[0.3, 0.0], [0.3, 0.1]], [[-0.2, -0.2], [0.2, 0.2]], [[0.0, 0.35], [0.0, -0.35]],
    [[0.25, -0.25], [0.25, -0.25]], [[-0.3, 0.1], [-0.1, 0.1]], [[0.15, 0.3], [0.4, 0.0]],
    [[0.05, -0.4], [-0.05, -0.3]],
]


@_register("markov", "domain Markov decomposition: exact split, free-field zero part, independence", {
    "samples": (_as_pos_int, 10_000),
    "mesh": (_as_pos_float, 1 / 64),
    "sub_center": (_as_point, [0.0, 0.0]),
    "sub_radius": (_as_pos_float, 0.5),
    "pairs": (_as_point_groups(2), DEFAULT_MARKOV_PAIRS),
    "n_probes": (_as_pos_int, 20),
    "n_uniqueness": (_as_pos_int, 100),
})
def _markov(cfg):
    dom = build_disk(1.0, cfg["mesh"])
    op = operator_for(dom)
    sub = subdomain_ball(dom, _c(cfg["sub_center"]), cfg["sub_radius"])
    op_s = operator_for(sub)
    def snap(p):
        return int(make_points(sub, [_c(p)]).snapped_index[0])

    pair_idx = [(snap(a), snap(b)) for a, b in cfg["pairs"]]
    in_dom = dom.interior_index(sub.interior)
    rng = np.random.default_rng([cfg["seed"], 99])
    probe_zero = rng.choice(in_dom, size=cfg["n_probes"])
    probe_harm = rng.choice(dom.n_interior, size=cfg["n_probes"])
    sampler = GffSampler(op, cfg["seed"])
    zvals, hz, hh = [], [], []
    max_err = max_leak = max_res = 0.0
    unique_ok = 0
    unique_done = 0
    for f in sampler.blocks(cfg["samples"], 1000):
        dec = markov_decompose(f, sub)
        max_err = max(max_err, reassembly_error(f, dec))
        max_leak = max(max_leak, outside_leak(dec))
        max_res = max(max_res, harmonic_residual(dec))
        zvals.append(dec.zero_part.values[:, in_dom])
        hz.append(dec.zero_part.values[:, probe_zero])
        hh.append(dec.harmonic_part.values[:, probe_harm])
        if unique_done < cfg["n_uniqueness"]:
            take = min(cfg["n_uniqueness"] - unique_done, len(f))
            for k in range(take):
                unique_ok += uniqueness_check(ScalarField(dom, f.values[k]), sub, max_points=200)
            unique_done += take
    zvals = np.concatenate(zvals)
    hz, hh = np.concatenate(hz), np.concatenate(hh)
    cols = sorted({j for pr in pair_idx for j in pr})
    gsub = green_matrix(op_s, cols)
    cov_rows = []
    for i, j in pair_idx:
        prod = zvals[:, i] * zvals[:, j]
        est, se = float(prod.mean()), float(prod.std(ddof=1) / math.sqrt(len(prod)))
        target = float(gsub[i, cols.index(j)])
        cov_rows.append({"vertices": [sub.interior[i], sub.interior[j]], "estimate": est, "se": se,
                         "green_sub": target, "z": (est - target) / se})
    n = len(hz)
    ind_rows = []
    for k in range(cfg["n_probes"]):
        corr = correlation(hz[:, k], hh[:, k])
        se = 1 / math.sqrt(n)
        ind_rows.append({"probe": k, "corr": corr, "se": se, "flag": bool(abs(corr) > 3 * se)})
    flags = sum(r["flag"] for r in ind_rows)
    max_z = max(abs(r["z"]) for r in cov_rows)
    checks = {
        "exactness": {"reassembly_error": max_err, "outside_leak": max_leak, "threshold": 1e-10,
                      "pass": max_err <= 1e-10 and max_leak <= 1e-10},
        "harmonic_residual": {"value": max_res, "threshold": 1e-10, "pass": max_res <= 1e-10},
        "zero_part_covariance": {"max_abs_z": max_z, "threshold": 3.0, "pass": max_z <= 3.0},
        "independence": {"flags": flags, "n_probes": cfg["n_probes"], "max_flags": 1, "pass": flags <= 1},
        "uniqueness": {"agree": unique_ok, "fields": unique_done, "pass": unique_ok == unique_done},
    }
    results = {"covariance": cov_rows, "independence": ind_rows, "sub_vertices": sub.n_interior}
    data = _csv(("kind", "index", "estimate", "se", "target", "z"),
                [("covariance", k, r["estimate"], r["se"], r["green_sub"], r["z"]) for k, r in enumerate(cov_rows)]
                + [("independence", r["probe"], r["corr"], r["se"], 0.0, r["corr"] / r["se"]) for r in ind_rows])
    return results, checks, data


DEFAULT_CONFORMAL_PAIRS = [
    [[0.0, 0.0], [0.5, 0.0]], [[0.2, 0.1], [-0.3, 0.2]], [[0.1, -0.4], [0.45, 0.1]],
    [[-0.5, 0.0], [0.0, 0.3]], [[0.3, 0.3], [-0.2, -0.3]],
]


@_register("conformal", "two-point kernel is invariant under disk automorphisms", {
    "samples": (_as_pos_int, 10_000),
    "mesh": (_as_pos_float, 1 / 64),
    "eps": (_as_pos_float, 1 / 16),
    "pairs": (_as_point_groups(2), DEFAULT_CONFORMAL_PAIRS),
    "rotation": (_as_pos_float, math.pi / 3),
    "mobius_w": (_as_point, [0.3, 0.0]),
})
def _conformal(cfg):
    dom = build_disk(1.0, cfg["mesh"])
    op = operator_for(dom)
    pts = [_c(p) for pr in cfg["pairs"] for p in pr]
    tuples = [(2 * k, 2 * k + 1) for k in range(len(cfg["pairs"]))]
    maps = {"rotation": MobiusDisk(0j, cfg["rotation"]), "mobius": MobiusDisk(_c(cfg["mobius_w"]), 0.0)}
    results, checks, rows = {}, {}, []
    for k, (name, m) in enumerate(maps.items()):
        src = GffSampler(op, cfg["seed"]).substream(2 * k)
        tgt = GffSampler(op, cfg["seed"]).substream(2 * k + 1)
        rep = invariance_experiment(src, m, pts, cfg["eps"], cfg["samples"], tgt, tuples)
        results[name] = rep
        checks[name] = {"max_abs_z": rep["max_abs_z"], "threshold": 3.0, "pass": rep["max_abs_z"] <= 3.0}
        for r in rep["rows"]:
            rows.append((name, r["pair"][0], r["pair"][1], r["k2_source"], r["se_source"],
                         r["k2_image"], r["se_image"], r["z"]))
    data = _csv(("map", "i", "j", "k2_source", "se_source", "k2_image", "se_image", "z"), rows)
    return results, checks, data


DEFAULT_ANNULI = [[0.5, 0.7], [0.7, 0.85], [0.85, 0.93], [0.93, 0.97]]


def _as_annuli(key, v):
    groups = []
    if not isinstance(v, (list, tuple)) or len(v) < 2:
        raise ConfigInvalid(key, "expected at least two [inner, outer] radius pairs")
    for a in v:
        if not isinstance(a, (list, tuple)) or len(a) != 2:
            raise ConfigInvalid(key, f"expected [inner, outer], got {a!r}")
        lo, hi = _as_pos_float(key, a[0]), _as_pos_float(key, a[1])
        if not lo < hi < 1:
            raise ConfigInvalid(key, f"annulus [{lo}, {hi}] must satisfy inner < outer < 1")
        groups.append([lo, hi])
    return groups


@_register("boundary", "averages over annuli approaching the boundary lose their variance", {
    "samples": (_as_pos_int, 10_000),
    "mesh": (_as_pos_float, 1 / 64),
    "annuli": (_as_annuli, DEFAULT_ANNULI),
})
def _boundary(cfg):
    dom = build_disk(1.0, cfg["mesh"])
    op = operator_for(dom)
    d2 = cfg["mesh"] ** 2
    w = np.column_stack([annulus_weights(dom, a, b) for a, b in cfg["annuli"]])
    v = d2 * _values(GffSampler(op, cfg["seed"]), w, cfg["samples"])
    var, se = mean_se(v ** 2)
    exact = np.array([d2 ** 2 * w[:, k] @ op.solve(w[:, k]) for k in range(w.shape[1])])
    decreasing = bool(np.all(np.diff(var) < 0))
    ratio = float(var[-1] / var[0])
    checks = {
        "strictly_decreasing": {"pass": decreasing},
        "final_ratio": {"value": ratio, "threshold": 0.2, "pass": ratio <= 0.2},
    }
    results = {"annuli": cfg["annuli"], "variance": var, "se": se, "exact_variance": exact}
    data = _csv(("inner", "outer", "variance", "se", "exact_variance"),
                [(a, b, x, s, e) for (a, b), x, s, e in zip(cfg["annuli"], var, se, exact)])
    return results, checks, data


@_register("wedge-scan", "fourth moment of the wedge harmonic average near the arc scales like eps^4", {
    "samples": (_as_pos_int, 10_000),
    "mesh": (_as_pos_float, 1 / 256),
    "eps_list": (_as_float_list, [2.0 ** -3, 2.0 ** -4, 2.0 ** -5, 2.0 ** -6]),
    "angles": (_as_float_list, [math.pi / 4, math.pi / 8]),
})
def _wedge(cfg):
    rep = wedge_moment_scan(cfg["eps_list"], cfg["angles"], cfg["samples"], mesh_delta=cfg["mesh"],
                            seed=cfg["seed"])
    checks = {}
    for fit in rep["fits"]:
        key = f"exponent_a={fit['half_angle']:.6g}"
        checks[key] = {"exponent": fit["exponent"], "r2": fit["r2"], "threshold": 3.0,
                       "pass": fit["exponent"] is not None and fit["exponent"] >= 3.0}
    data = _csv(("half_angle", "eps", "fourth_moment", "se", "exact", "n_samples"),
                [(r["half_angle"], r["eps"], r["fourth_moment"], r["se"], r["exact"], r["n_samples"])
                 for r in rep["rows"]])
    return rep, checks, data


@_register("bridge-suite", "one-dimensional harness checks single out the Brownian bridge", {
    "samples": (_as_pos_int, 100_000),
    "mesh": (_as_pos_float, 1 / 256),
    "sigma": (_as_pos_float, 1.0),
    "n_levels": (_as_pos_int, 4),
    "control_rate": (_as_pos_float, 0.5),
})
def _bridge(cfg):
    steps = int(round(1 / cfg["mesh"]))
    if steps < 8 or steps % 8:
        raise ConfigInvalid("mesh", "the time grid needs 1/mesh to be a multiple of 8")
    gauss = bridge1d.run_suite(bridge1d.GaussianBridge(cfg["sigma"]), cfg["samples"], cfg["seed"],
                               cfg["sigma"], steps, n_levels=cfg["n_levels"])
    try:
        ctrl_proc = bridge1d.PoissonJitterBridge(cfg["sigma"], cfg["control_rate"])
    except ValueError as exc:
        raise ConfigInvalid("control_rate", str(exc)) from exc
    ctrl = bridge1d.run_suite(ctrl_proc, cfg["samples"], cfg["seed"] + 1, cfg["sigma"], steps,
                              n_levels=cfg["n_levels"])
    g = gauss["checks"]
    rejected = not (ctrl["checks"]["kurtosis"]["pass"] and ctrl["checks"]["independence"]["pass"])
    checks = {
        "bridge_covariance": {"pass": g["covariance"]["pass"]},
        "gaussian_marginals": {"pass": g["kurtosis"]["pass"]},
        "increment_independence": {"pass": g["independence"]["pass"]},
        "quadratic_variation": {"slope": g["quadratic_variation"]["slope"],
                                "relative_error": g["quadratic_variation"]["relative_error"],
                                "threshold": 0.05, "pass": g["quadratic_variation"]["pass"]},
        "scaling": {"max_abs_z": g["scaling"]["max_abs_z"], "threshold": 3.0, "pass": g["scaling"]["pass"]},
        "control_rejected": {"kurtosis_pass": ctrl["checks"]["kurtosis"]["pass"],
                             "independence_pass": ctrl["checks"]["independence"]["pass"], "pass": rejected},
    }
    rows = [("bridge", "covariance", f"{r['s']},{r['t']}", r["estimate"], r["se"], r["target"], r["z"])
            for r in g["covariance"]["rows"]]
    rows += [(name, "kurtosis", r["t"], r["excess_kurtosis"], r["se"], 0.0, r["z"])
             for name, rep in (("bridge", gauss), ("control", ctrl)) for r in rep["checks"]["kurtosis"]["rows"]]
    rows += [("bridge", "scaling", f"{r['level']},{r['moment']}", r["direct"], "", r["composed"], r["z"])
             for r in g["scaling"]["rows"]]
    data = _csv(("process", "check", "where", "estimate", "se", "target", "z"), rows)
    return {"bridge": gauss, "control": ctrl}, checks, data


def experiment_names() -> list[str]:
    return list(EXPERIMENTS)


__all__ = ["EXPERIMENTS", "resolve_config", "execute", "run", "write_report", "load_toml",
           "config_hash", "experiment_names"]

import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import dense_inverse, random_walk_exits
from gfflab.domain import build_custom, build_disk, build_square, subdomain_ball
from gfflab.errors import DimensionMismatch, TooCloseToBoundary, VertexNotInterior
from gfflab.laplace import (
    BoundaryData,
    assemble,
    calibrate,
    conformal_radius,
    discrete_laplacian,
    green_at,
    green_column,
    harmonic_extension,
    harmonic_measure_matrix,
    harmonic_measure_row,
    laplacian_matrix,
    load_calibration,
    load_field,
    save_field,
)


def test_single_vertex_matrix_and_green():
    dom = build_custom([(0, 0)], 1.0)
    op = assemble(dom)
    assert laplacian_matrix(dom).toarray().tolist() == [[4.0]]
    assert green_column(op, (0, 0))[0] == pytest.approx(0.25, abs=1e-15)
    assert harmonic_measure_row(op, (0, 0)) == pytest.approx([0.25] * 4, abs=1e-15)


def test_two_by_two_block():
    dom = build_custom([(0, 0), (1, 0), (0, 1), (1, 1)], 1.0)
    a = laplacian_matrix(dom).toarray()
    # row-major order: (0,0), (1,0), (0,1), (1,1)
    expected = np.array([[4, -1, -1, 0], [-1, 4, 0, -1], [-1, 0, 4, -1], [0, -1, -1, 4]], dtype=float)
    assert np.array_equal(a, expected)


def test_disk_matrix_symmetric(op64):
    a = op64.matrix
    assert abs(a - a.T).max() == 0
    assert np.all(a.diagonal() == 4)


def test_green_3x3_centre_against_dense(square3):
    op = assemble(square3)
    c = square3.interior_index([(1, 1)])[0]
    g = green_column(op, (1, 1))
    assert g[c] == pytest.approx(dense_inverse(square3)[c, c], abs=1e-14)
    # by symmetry centre = 3 * edge, corner = edge / 2, so G(c, c) = 3/8
    assert g[c] == pytest.approx(3 / 8, abs=1e-14)


def test_green_columns_against_dense_inverse():
    for dom in (build_disk(1.0, 0.2, min_ratio=0), build_square(1.0, 0.1, min_ratio=0),
                build_custom([(i, j) for i in range(6) for j in range(4) if (i, j) != (5, 3)], 1.0)):
        assert dom.n_interior <= 100
        op = assemble(dom)
        g_dense = dense_inverse(dom)
        for k, v in enumerate(dom.interior):
            assert np.abs(green_column(op, v) - g_dense[:, k]).max() <= 1e-10


def test_green_symmetric_and_positive(op32, disk32):
    rng = np.random.default_rng(0)
    picks = rng.choice(disk32.n_interior, 10, replace=False)
    cols = {k: green_column(op32, disk32.interior[k]) for k in picks}
    for a in picks:
        assert np.all(cols[a] > 0)
        for b in picks:
            assert cols[a][b] == pytest.approx(cols[b][a], abs=1e-12)


def test_green_vertex_errors(op32):
    with pytest.raises(VertexNotInterior):
        green_column(op32, (40, 0))
    with pytest.raises(VertexNotInterior):
        harmonic_measure_row(op32, (32, 0))


def test_green_monotone_in_domain():
    big = build_disk(1.0, 1 / 16)
    small = subdomain_ball(big, 0.1 + 0j, 0.5)
    gb = green_column(assemble(big), (2, 0))
    gs = green_column(assemble(small), (2, 0))
    idx = big.interior_index(small.interior)
    assert np.all(gs <= gb[idx] + 1e-14)


def test_green_cache(tmp_path, op32):
    a = green_column(op32, (3, 4), cache_dir=tmp_path)
    files = list(tmp_path.glob("green_*.bin"))
    assert len(files) == 1 and op32.domain.domain_hash in files[0].name
    b = green_column(op32, (3, 4), cache_dir=tmp_path)
    assert np.array_equal(a, b)
    header = json.loads(files[0].with_suffix(".bin.json").read_text())
    assert header == {"domain_hash": op32.domain.domain_hash, "kind": "green", "length": op32.n}


def test_harmonic_extension_constants_and_linear(op32, disk32):
    u = harmonic_extension(op32, np.full(disk32.n_boundary, 2.5))
    assert np.abs(u - 2.5).max() <= 1e-12
    bd = BoundaryData.from_function(disk32, lambda z: z.real)
    u = harmonic_extension(op32, bd)
    assert np.abs(u - disk32.coords.real).max() <= 1e-12


def test_harmonic_extension_random_residual(op32, disk32):
    bd = np.random.default_rng(1).standard_normal(disk32.n_boundary)
    u = harmonic_extension(op32, bd)
    assert np.abs(discrete_laplacian(disk32, u, bd)).max() <= 1e-10
    # maximum principle
    assert u.max() <= bd.max() + 1e-12 and u.min() >= bd.min() - 1e-12


def test_harmonic_extension_batch_and_mismatch(op16, disk16):
    bd = np.random.default_rng(2).standard_normal((3, disk16.n_boundary))
    u = harmonic_extension(op16, bd)
    assert u.shape == (3, disk16.n_interior)
    assert np.allclose(u[1], harmonic_extension(op16, bd[1]))
    with pytest.raises(DimensionMismatch):
        harmonic_extension(op16, np.zeros(disk16.n_boundary + 1))


def test_harmonic_measure_square_symmetry():
    dom = build_square(1.0, 1 / 16, min_ratio=0)
    op = assemble(dom)
    mu = harmonic_measure_row(op, (0, 0))
    assert mu.sum() == pytest.approx(1.0, abs=1e-10)
    assert np.all(mu >= 0)
    b = dom.boundary
    for f in (lambda v: (-v[0], v[1]), lambda v: (v[1], v[0]), lambda v: (v[0], -v[1])):
        img = dom.boundary_index(np.array([f(v) for v in b.tolist()]))
        assert np.all(img >= 0)
        assert np.abs(mu[img] - mu).max() <= 1e-10


def test_harmonic_measure_disk_uniform(op64, disk64):
    mu = harmonic_measure_row(op64, (0, 0))
    theta = np.angle(disk64.boundary_coords)
    # compare masses in 16 equal sectors against their uniform share
    sectors = np.floor((theta + math.pi) / (2 * math.pi / 16)).astype(int) % 16
    mass = np.bincount(sectors, weights=mu, minlength=16)
    assert np.abs(mass * 16 - 1).max() <= 0.05


def test_harmonic_measure_matches_random_walk(square3):
    op = assemble(square3)
    start = (0, 1)
    mu = harmonic_measure_row(op, start)
    n = 200_000
    exits = random_walk_exits(square3, start, n, seed=0)
    freq = np.bincount(exits, minlength=square3.n_boundary) / n
    se = np.sqrt(np.maximum(mu * (1 - mu), 1e-12) / n)
    assert np.all(np.abs(freq - mu) <= 3 * se)


def test_harmonic_measure_matrix_rows(op16, disk16):
    rows = harmonic_measure_matrix(op16, [0, 5, 100])
    for k, i in enumerate([0, 5, 100]):
        assert np.allclose(rows[k], harmonic_measure_row(op16, disk16.interior[i]), atol=1e-14)


def test_conformal_radius_benchmarks():
    op = assemble(build_disk(1.0, 1 / 128))
    assert conformal_radius(op, 0j) == pytest.approx(1.0, rel=0.05)
    assert conformal_radius(op, 0.5 + 0j) == pytest.approx(0.75, rel=0.07)
    assert conformal_radius(op, 0.3 + 0.4j) == pytest.approx(0.75, rel=0.07)
    op2 = assemble(build_disk(2.0, 1 / 64))
    assert conformal_radius(op2, 0j) == pytest.approx(2.0, rel=0.05)


def test_conformal_radius_clearance(op32):
    with pytest.raises(TooCloseToBoundary):
        conformal_radius(op32, 0.9 + 0j)


def test_calibration_file_reproducible():
    cal = load_calibration()
    fresh = calibrate(sizes=tuple(cal["sizes"][:2]))
    assert fresh["diagonal"] == pytest.approx(cal["diagonal"][:2], rel=1e-12)
    # the diagonal grows like (1 / 2 pi) log N on the square lattice
    assert cal["slope"] == pytest.approx(1 / (2 * math.pi), rel=0.01)


def test_green_at_symmetric(op32):
    a = green_at(op32, 0.11 + 0.2j, -0.3 + 0.05j)
    b = green_at(op32, -0.3 + 0.05j, 0.11 + 0.2j)
    assert a == pytest.approx(b, rel=1e-12)


def test_field_round_trip(tmp_path, disk16):
    vals = np.random.default_rng(3).standard_normal(disk16.n_interior)
    save_field(tmp_path / "f.bin", vals, disk16, kind="sample", seed=5, counter=2)
    assert np.array_equal(load_field(tmp_path / "f.bin", disk16, kind="sample"), vals)
    header = json.loads((tmp_path / "f.bin.json").read_text())
    assert header["seed"] == 5 and header["counter"] == 2 and header["length"] == disk16.n_interior
    with pytest.raises(DimensionMismatch):
        load_field(tmp_path / "f.bin", build_disk(1.0, 1 / 32))


@given(st.integers(0, 2 ** 31), st.sampled_from([1 / 8, 1 / 12, 1 / 16]))
def test_harmonic_extension_property(seed, delta):
    dom = build_disk(1.0, delta)
    op = assemble(dom)
    bd = np.random.default_rng(seed).uniform(-1, 1, dom.n_boundary)
    u = harmonic_extension(op, bd)
    assert np.abs(discrete_laplacian(dom, u, bd)).max() <= 1e-10
    assert u.max() <= bd.max() + 1e-12 and u.min() >= bd.min() - 1e-12


@given(st.integers(0, 2 ** 31))
def test_harmonic_measure_is_probability_property(seed):
    dom = build_disk(1.0, 1 / 12)
    op = assemble(dom)
    v = dom.interior[np.random.default_rng(seed).integers(dom.n_interior)]
    mu = harmonic_measure_row(op, v)
    assert mu.sum() == pytest.approx(1.0, abs=1e-10)
    assert np.all(mu >= -1e-15)

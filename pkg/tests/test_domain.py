import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gfflab.domain import (
    Disk,
    Square,
    build_custom,
    build_disk,
    build_mask,
    build_square,
    build_wedge,
    check_subdomain,
    flood_fill_count,
    from_json,
    is_connected,
    is_simply_connected,
    make_points,
    restrict,
    subdomain_ball,
)
from gfflab.errors import (
    BallNotContained,
    DisconnectedInterior,
    EmptyInterior,
    MeshTooCoarse,
    PointTooCloseToBoundary,
    SubdomainNotContained,
)


def enumerate_disk(radius, delta):
    """Brute-force list of lattice vertices strictly inside the disk, row-major."""
    r = int(math.ceil(radius / delta)) + 1
    return [(i, j) for j in range(-r, r + 1) for i in range(-r, r + 1)
            if math.hypot(i * delta, j * delta) < radius]


def check_invariants(dom):
    inner = {tuple(v) for v in dom.interior.tolist()}
    outer = {tuple(v) for v in dom.boundary.tolist()}
    assert not inner & outer
    for i, j in inner:
        for nb in ((i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)):
            assert nb in inner or nb in outer
    # every boundary vertex touches the interior
    for i, j in outer:
        assert any(nb in inner for nb in ((i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)))
    # row-major ordering: sorted by (y, x)
    keys = [(v[1], v[0]) for v in dom.interior.tolist()]
    assert keys == sorted(keys)
    assert flood_fill_count(dom) == dom.n_interior


def test_tiny_disk_matches_enumeration():
    # strict |v| < 2 in lattice units keeps the diagonal neighbours (norm sqrt 2)
    dom = build_disk(1.0, 0.5, min_ratio=0)
    assert sorted(map(tuple, dom.interior.tolist())) == sorted(enumerate_disk(1.0, 0.5))
    assert dom.n_interior == 9
    check_invariants(dom)


def test_disk_too_coarse():
    with pytest.raises(MeshTooCoarse):
        build_disk(1.0, 1.1)
    with pytest.raises(MeshTooCoarse):
        build_disk(1.0, 0.2)


def test_disk_64_count_against_enumeration(disk64):
    expected = enumerate_disk(1.0, 1 / 64)
    assert disk64.n_interior == len(expected)
    assert abs(disk64.n_interior - math.pi * 64 ** 2) <= 0.01 * math.pi * 64 ** 2
    check_invariants(disk64)


def test_wedge_right_half_disk():
    dom = build_wedge(math.pi / 2, 1 / 32)
    z = dom.coords
    assert np.all(z.real > 0) and np.all(np.abs(z) < 1)
    check_invariants(dom)


def test_thin_wedge_connected_by_flood_fill():
    dom = build_wedge(math.pi / 8, 1 / 128)
    assert flood_fill_count(dom) == dom.n_interior
    assert is_connected(dom)


def test_thin_wedge_too_coarse():
    with pytest.raises((EmptyInterior, MeshTooCoarse)):
        build_wedge(math.pi / 8, 1 / 4)


def test_ball_count(disk64):
    ball = subdomain_ball(disk64, 0j, 0.5)
    assert abs(ball.n_interior - math.pi * 32 ** 2) <= 0.02 * math.pi * 32 ** 2
    assert ball.n_interior == len(enumerate_disk(0.5, 1 / 64))
    idx = check_subdomain(disk64, ball)
    assert np.all(idx >= 0)
    # boundary of the ball lies in the closure of the parent lattice domain
    codes_in = disk64.interior_index(ball.boundary)
    codes_bd = disk64.boundary_index(ball.boundary)
    assert np.all((codes_in >= 0) | (codes_bd >= 0))


def test_ball_errors(disk64):
    with pytest.raises(EmptyInterior):
        subdomain_ball(disk64, 0j, 0.5 / 64)
    with pytest.raises(BallNotContained):
        subdomain_ball(disk64, 0.9 + 0j, 0.2)


def test_reproducible_and_json_round_trip(disk32):
    again = build_disk(1.0, 1 / 32)
    assert np.array_equal(again.interior, disk32.interior)
    assert np.array_equal(again.boundary, disk32.boundary)
    back = from_json(disk32.to_json())
    assert back.domain_hash == disk32.domain_hash
    sq = build_square(1.0, 1 / 32)
    assert from_json(sq.to_json()).domain_hash == sq.domain_hash
    w = build_wedge(math.pi / 4, 1 / 64)
    assert from_json(w.to_json()).domain_hash == w.domain_hash


def test_descriptor_fields(disk32):
    d = disk32.descriptor()
    assert set(d) == {"shape", "params", "mesh_delta"}
    assert d["shape"] == "disk" and d["mesh_delta"] == 1 / 32


def test_points_snap_and_clearance(disk32):
    ps = make_points(disk32, [0.1 + 0.2j, 0.5 / 32 + 0.5j / 32])
    # tie at a cell centre goes to the lexicographically smallest vertex
    assert tuple(disk32.interior[ps.snapped_index[1]]) == (0, 0)
    assert tuple(disk32.interior[ps.snapped_index[0]]) == (3, 6)
    with pytest.raises(PointTooCloseToBoundary):
        make_points(disk32, [0.97 + 0j])


def test_disconnected_mask_rejected():
    with pytest.raises(DisconnectedInterior):
        build_custom([(0, 0), (2, 0)], 1.0)


def test_simple_connectivity():
    ring = np.ones((5, 5), dtype=bool)
    ring[2, 2] = False
    assert not is_simply_connected(build_mask(ring, 1.0))
    assert is_simply_connected(build_mask(np.ones((5, 5), dtype=bool), 1.0))


def test_square_restriction(disk32):
    sub = restrict(disk32, Square(0.5, 0.1 + 0j))
    assert np.all(check_subdomain(disk32, sub) >= 0)
    big = build_disk(1.5, 1 / 32)
    with pytest.raises(SubdomainNotContained):
        check_subdomain(disk32, big)


@given(st.floats(0.3, 1.0), st.sampled_from([1 / 16, 1 / 24, 1 / 32]))
def test_disk_invariants_property(radius, delta):
    dom = build_disk(radius, delta, min_ratio=4)
    check_invariants(dom)
    assert np.all(np.abs(dom.coords) < radius)
    assert np.all(np.abs(dom.boundary_coords) >= radius)


@given(st.floats(-0.3, 0.3), st.floats(-0.3, 0.3), st.floats(0.1, 0.25), st.floats(0.3, 0.9))
def test_nested_balls_property(x, y, r2, frac):
    dom = build_disk(1.0, 1 / 32)
    c = complex(x, y)
    outer = subdomain_ball(dom, c, r2 / frac if r2 / frac < 0.55 else 0.55)
    inner = subdomain_ball(dom, c, min(r2, outer.region.radius * frac))
    assert {tuple(v) for v in inner.interior.tolist()} <= {tuple(v) for v in outer.interior.tolist()}


@given(st.floats(0.2, 1.2), st.floats(0.05, 0.25))
def test_region_distance_property(r, t):
    d = Disk(1.0)
    z = r * np.exp(1j * t)
    assert d.distance(z) == pytest.approx(1 - r)
    assert bool(d.contains(np.array([z]))[0]) == (r < 1)

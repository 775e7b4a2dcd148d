import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import angle_sweep_alignment, distance_preserving_permutations, regular_polygon
from simpoints import (
    HaarSampler,
    Similarity,
    apply_map,
    convex_hull,
    fixed_point_set,
    group_average_scalar,
    haar_sample_orthogonal,
    orbit_align,
    symmetry_group,
    translation_class,
)
from simpoints.errors import BudgetExhausted, SingularMap, ToleranceAmbiguity
from simpoints.functionals import random_similarity
from simpoints.group import expm_skew, rotate_class
from simpoints.maps import AffineMap

SQUARE = [[0, 0], [1, 0], [1, 1], [0, 1]]
TRIANGLE_345 = [[0, 0], [4, 0], [0, 3]]
seeds = st.integers(0, 2**31)


def rot2(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def unit_class(points):
    from simpoints import normalize

    return normalize(convex_hull(points))[0]


# --- maps ---------------------------------------------------------------


def test_similarity_round_trip_and_serialization():
    rng = np.random.default_rng(0)
    S = random_similarity(3, rng)
    T = random_similarity(3, rng)
    x = rng.standard_normal(3)
    np.testing.assert_allclose(S.inverse()(S(x)), x, atol=1e-9 * max(1, np.abs(x).max()))
    np.testing.assert_allclose(S.compose(T)(x), S(T(x)), rtol=1e-12, atol=1e-9)
    R = S.compose(T).rotation
    assert np.abs(R.T @ R - np.eye(3)).max() <= 1e-10
    back = Similarity.from_dict(S.to_dict())
    np.testing.assert_array_equal(back.rotation, S.rotation)
    assert set(S.to_dict()) == {"scale", "rotation", "translation"}


def test_similarity_validation():
    with pytest.raises(ValueError):
        Similarity(-1.0, np.eye(2), np.zeros(2))
    with pytest.raises(ValueError):
        Similarity(1.0, np.array([[1.0, 0.1], [0.0, 1.0]]), np.zeros(2))


def test_affine_map_inverse():
    with pytest.raises(SingularMap):
        AffineMap(np.zeros((2, 2)), np.zeros(2)).inverse()
    A = AffineMap(np.array([[2.0, 1.0], [0.0, 3.0]]), np.array([1.0, -1.0]))
    np.testing.assert_allclose(A.inverse()(A([0.3, 0.7])), [0.3, 0.7], atol=1e-14)
    assert A.as_similarity() is None
    assert AffineMap(3 * rot2(0.4), np.zeros(2)).as_similarity().scale == pytest.approx(3.0)


# --- Haar sampler --------------------------------------------------------


def test_haar_is_orthogonal_and_deterministic():
    a, b = HaarSampler(3, 42), HaarSampler(3, 42)
    for _ in range(50):
        q = haar_sample_orthogonal(a)
        np.testing.assert_array_equal(q, haar_sample_orthogonal(b))
        assert np.abs(q.T @ q - np.eye(3)).max() <= 1e-12
    assert a.count == 50


def test_haar_one_dimensional_signs():
    s = HaarSampler(1, 0)
    vals = np.array([s.sample()[0, 0] for _ in range(10_000)])
    assert set(np.unique(vals)) == {-1.0, 1.0}
    assert abs((vals > 0).mean() - 0.5) <= 0.02


def test_haar_spawn_gives_distinct_streams():
    s = HaarSampler(2, 5)
    a, b = s.spawn(1), s.spawn(2)
    assert not np.allclose(a.sample(), b.sample())
    np.testing.assert_array_equal(s.spawn(1).sample(), HaarSampler(2, 5).spawn(1).sample())


def test_haar_det_balanced():
    s = HaarSampler(3, 1)
    dets = np.array([np.linalg.det(s.sample()) for _ in range(4000)])
    assert abs((dets > 0).mean() - 0.5) < 0.03


# --- symmetry groups -----------------------------------------------------


def test_square_and_triangle_orders():
    assert symmetry_group(convex_hull(SQUARE)).order == 8
    assert symmetry_group(convex_hull(TRIANGLE_345)).order == 1
    assert symmetry_group(convex_hull([[i, j, k] for i in (0, 1) for j in (0, 1) for k in (0, 1)])).order == 48


@pytest.mark.parametrize("m", [5, 6, 7, 8])
def test_regular_polygon_matches_permutation_oracle(m):
    pts = regular_polygon(m, 1.3, 0.2) + [2.0, -1.0]
    assert symmetry_group(convex_hull(pts)).order == distance_preserving_permutations(pts) == 2 * m


def test_regular_tetrahedron_order():
    tet = [[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]]
    assert symmetry_group(convex_hull(tet)).order == distance_preserving_permutations(tet) == 24


def test_near_symmetric_input_is_ambiguous():
    pts = np.array(SQUARE, float)
    pts[2] += [5e-8, 0.0]
    with pytest.raises(ToleranceAmbiguity):
        symmetry_group(convex_hull(pts))


def test_group_closure_and_elements_fix_body():
    body = convex_hull(regular_polygon(6))
    g = symmetry_group(body)
    R = g.rotations
    for a in R:
        assert np.abs(a.T @ a - np.eye(2)).max() <= 1e-10
        for b in R:
            assert g.contains_rotation(a @ b, 1e-8)
    for el in g.elements:
        assert el.scale == 1.0
        mapped = el(body.vertices)
        d = np.linalg.norm(mapped[:, None] - body.vertices[None], axis=-1).min(axis=1)
        assert d.max() <= 1e-8 * body.diameter


@settings(max_examples=10, deadline=None)
@given(seeds, st.sampled_from(["square", "pentagon", "rectangle", "cube"]))
def test_symmetry_group_conjugation(seed, shape):
    rng = np.random.default_rng(seed)
    pts = {
        "square": np.array(SQUARE, float),
        "pentagon": regular_polygon(5),
        "rectangle": np.array([[0, 0], [2, 0], [2, 1], [0, 1]], float),
        "cube": np.array([[i, j, k] for i in (0, 1) for j in (0, 1) for k in (0, 1)], float),
    }[shape]
    body = convex_hull(pts)
    n = body.dim
    S = random_similarity(n, rng)
    g, h = symmetry_group(body), symmetry_group(apply_map(body, S))
    assert g.order == h.order
    Q = S.rotation
    for r in g.rotations:
        assert h.contains_rotation(Q @ r @ Q.T, 1e-7)
    assert fixed_point_set(g).dim == fixed_point_set(h).dim


def test_fixed_point_sets():
    tri = convex_hull(TRIANGLE_345)
    assert fixed_point_set(symmetry_group(tri)).dim == 2
    sq = convex_hull(SQUARE)
    fs = fixed_point_set(symmetry_group(sq))
    assert fs.dim == 0
    np.testing.assert_allclose(fs.point, [0.5, 0.5], atol=1e-12)
    refl = Similarity(1.0, np.diag([-1.0, 1.0, 1.0]), np.zeros(3))
    from simpoints import SymmetryGroup

    group = SymmetryGroup((Similarity.identity(3), refl), 1e-8, np.zeros(3))
    plane = fixed_point_set(group)
    assert plane.dim == 2
    assert np.abs(plane.basis[:, 0]).max() <= 1e-12
    assert abs(plane.point[0]) <= 1e-12


# --- orbit alignment ------------------------------------------------------


def test_orbit_align_self():
    k0 = unit_class([[0, 0], [3, 0], [1, 2]])
    q, r = orbit_align(k0, k0, HaarSampler(2, 0))
    assert r < 1e-8
    assert np.abs(q - np.eye(2)).max() < 1e-6


def test_orbit_align_recovers_rotation_against_sweep():
    tri = np.array([[0, 0], [3, 0], [1, 2]], float)
    k0 = unit_class(tri)
    rotated = rotate_class(k0, rot2(0.7))
    q, r = orbit_align(rotated, k0, HaarSampler(2, 0))
    assert r < 1e-6
    P0 = k0.representative.vertices
    best, theta, det = angle_sweep_alignment(rotated.representative.vertices, P0, step=1e-4)
    assert det == 1 and abs(theta - 0.7) < 1e-4
    ang = np.arctan2(q[1, 0], q[0, 0]) % (2 * np.pi)
    assert abs(ang - theta) < 1e-4


def test_orbit_align_mirror_needs_reflection():
    k0 = unit_class([[0, 0], [3, 0], [1, 2]])
    mirror = rotate_class(k0, np.diag([1.0, -1.0]))
    q, r = orbit_align(mirror, k0, HaarSampler(2, 3))
    assert r < 1e-6
    assert np.linalg.det(q) == pytest.approx(-1.0)


def test_orbit_align_square_lands_in_stabilizer():
    k0 = unit_class(SQUARE)
    q, r = orbit_align(k0, k0, HaarSampler(2, 9))
    assert r < 1e-8
    assert symmetry_group(k0.representative).contains_rotation(q, 1e-6)


def test_orbit_align_threshold_raises_with_best():
    a = unit_class([[0, 0], [3, 0], [1, 2]])
    b = unit_class(SQUARE)
    with pytest.raises(BudgetExhausted) as info:
        orbit_align(a, b, HaarSampler(2, 0), threshold=1e-5)
    assert info.value.residual > 1e-5
    assert info.value.best_q.shape == (2, 2)


@settings(max_examples=8, deadline=None)
@given(seeds)
def test_orbit_residual_symmetric_2d(seed):
    rng = np.random.default_rng(seed)
    a = unit_class(rng.standard_normal((6, 2)))
    b = unit_class(rng.standard_normal((7, 2)))
    q1, r1 = orbit_align(a, b, HaarSampler(2, 1))
    q2, r2 = orbit_align(b, a, HaarSampler(2, 1))
    assert abs(r1 - r2) <= 1e-6


def test_orbit_residual_symmetric_3d():
    rng = np.random.default_rng(4)
    a = unit_class(rng.standard_normal((8, 3)))
    b = unit_class(rng.standard_normal((8, 3)))
    _, r1 = orbit_align(a, b, HaarSampler(3, 1))
    _, r2 = orbit_align(b, a, HaarSampler(3, 1))
    assert abs(r1 - r2) <= 1e-6


def test_orbit_align_3d_rotation():
    rng = np.random.default_rng(2)
    k0 = unit_class(rng.standard_normal((9, 3)))
    q = HaarSampler(3, 77).sample()
    _, r = orbit_align(rotate_class(k0, q), k0, HaarSampler(3, 0))
    assert r < 1e-6


def test_expm_skew_is_orthogonal():
    rng = np.random.default_rng(0)
    for n in (2, 3, 4):
        a = rng.standard_normal((n, n))
        q = expm_skew(a - a.T)
        assert np.abs(q.T @ q - np.eye(n)).max() <= 1e-12
        assert np.linalg.det(q) == pytest.approx(1.0)


# --- group averaging -----------------------------------------------------


@settings(max_examples=20, deadline=None)
@given(seeds, st.floats(-1e6, 1e6, allow_nan=False), st.integers(1, 40))
def test_group_average_constant_exact(seed, c, m):
    k = unit_class(SQUARE)
    assert group_average_scalar(lambda _: c, k, HaarSampler(2, seed), m) == c


@settings(max_examples=10, deadline=None)
@given(seeds, st.integers(1, 30))
def test_group_average_invariant(seed, m):
    k = unit_class([[0, 0], [3, 0], [1, 2], [2.5, 1.5]])
    # a bitwise-invariant function comes back exactly
    count = lambda kk: float(len(kk.representative.vertices))  # noqa: E731
    assert group_average_scalar(count, k, HaarSampler(2, seed), m) == count(k)
    # a geometric invariant is recomputed on rotated vertices, so only up to rounding
    diam = lambda kk: kk.representative.diameter  # noqa: E731
    assert group_average_scalar(diam, k, HaarSampler(2, seed), m) == pytest.approx(diam(k), rel=1e-13)


def test_group_average_vertex_coordinate_vanishes():
    # extreme points keep their input order, so vertices[0] tracks one vertex
    k = translation_class(convex_hull(regular_polygon(32)))
    m = 2000
    est = group_average_scalar(lambda kk: kk.representative.vertices[0, 0], k, HaarSampler(2, 0), m)
    assert abs(est) <= 3 / np.sqrt(m)

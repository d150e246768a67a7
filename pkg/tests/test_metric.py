import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from zerosetkit.errors import (
    AsymmetricMatrix,
    BadParams,
    NegativeEntry,
    NonInjectiveMap,
    TooSmall,
    TriangleViolation,
)
from zerosetkit.metric import (
    EuclideanMap,
    FiniteMetricSpace,
    PointMeasure,
    QuasiParams,
    distortion,
    generate_instance,
    instance_from_json,
    instance_to_json,
    negative_type_test,
    p_average_distortion,
    quasisym_check,
    snowflake_embed,
    validate_metric,
)

from conftest import space_from_points


# -------------------------------------------------------------------------
# validation
# -------------------------------------------------------------------------


def test_validate_metric_accepts_valid():
    D = np.array([[0.0, 1.0, 2.0], [1.0, 0.0, 1.5], [2.0, 1.5, 0.0]])
    space = validate_metric(D)
    assert space.n == 3
    assert space.d(0, 2) == 2.0


def test_validate_metric_rejects_asymmetric():
    D = np.array([[0.0, 1.0], [2.0, 0.0]])
    with pytest.raises(AsymmetricMatrix):
        validate_metric(D)


def test_validate_metric_rejects_negative():
    D = np.array([[0.0, -1.0], [-1.0, 0.0]])
    with pytest.raises(NegativeEntry):
        validate_metric(D)


def test_validate_metric_rejects_triangle_violation():
    D = np.array([[0.0, 1.0, 5.0], [1.0, 0.0, 1.0], [5.0, 1.0, 0.0]])
    with pytest.raises(TriangleViolation):
        validate_metric(D)


def test_validate_metric_rejects_single_point():
    with pytest.raises(TooSmall):
        validate_metric(np.zeros((1, 1)))


@settings(max_examples=50, deadline=None)
@given(
    arrays(
        float,
        st.tuples(st.integers(2, 8), st.integers(1, 4)),
        elements=st.floats(-10, 10),
    )
)
def test_euclidean_point_clouds_always_validate(points):
    from hypothesis import assume

    diff = points[:, None, :] - points[None, :, :]
    D = np.sqrt((diff**2).sum(axis=2))
    n = len(points)
    assume(np.min(D[~np.eye(n, dtype=bool)]) > 0)
    validate_metric((D + D.T) / 2.0)


# -------------------------------------------------------------------------
# generators
# -------------------------------------------------------------------------


def test_hamming_cube_metric(cube3):
    space = cube3.space
    assert space.n == 8
    # opposite corners differ in every coordinate
    assert space.d(0, 7) == 3.0
    assert space.diam == 3.0
    assert cube3.emap is not None and cube3.emap.dim == 3


def test_grid_metric():
    inst = generate_instance("grid", {"rows": 3, "cols": 2})
    assert inst.space.n == 6
    validate_metric(inst.space.dist)


def test_lp_cloud_deterministic():
    a = generate_instance("lp_cloud", {"n": 6, "p": 2.0, "dim": 3}, seed=5)
    b = generate_instance("lp_cloud", {"n": 6, "p": 2.0, "dim": 3}, seed=5)
    assert np.array_equal(a.space.dist, b.space.dist)


def test_diamond_and_expander_are_metrics():
    d = generate_instance("diamond", {"level": 1})
    validate_metric(d.space.dist)
    e = generate_instance("expander_path_metric", {"n": 8, "degree": 3}, seed=0)
    assert e.space.n == 8
    validate_metric(e.space.dist)
    assert np.all(np.isfinite(e.space.dist))  # connected


def test_unknown_family_rejected():
    with pytest.raises(BadParams):
        generate_instance("nope", {})


# -------------------------------------------------------------------------
# snowflakes, distortion, quasisymmetry
# -------------------------------------------------------------------------


def test_snowflake_two_point_space():
    D = np.array([[0.0, 4.0], [4.0, 0.0]])
    space = validate_metric(D)
    emap = snowflake_embed(space, 0.5)
    assert math.isclose(float(np.linalg.norm(emap.coords[0] - emap.coords[1])), 2.0)


def test_snowflake_preserves_metric_axioms(cube3):
    emap = snowflake_embed(cube3.space, 0.5)
    E = emap.image_distances()
    validate_metric((E + E.T) / 2.0)


def test_distortion_identity_is_one():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 2.0], [3.0, 1.0]])
    space = space_from_points(pts)
    rep = distortion(space, EuclideanMap(pts))
    assert math.isclose(rep.distortion, 1.0)
    assert math.isclose(rep.lipschitz, 1.0)


def test_cube2_identity_distortion_sqrt2():
    inst = generate_instance("hamming_cube", {"dim": 2})
    rep = distortion(inst.space, inst.emap)
    assert math.isclose(rep.distortion, math.sqrt(2.0))


def test_distortion_requires_injective():
    D = np.array([[0.0, 1.0], [1.0, 0.0]])
    space = validate_metric(D)
    with pytest.raises(NonInjectiveMap):
        distortion(space, EuclideanMap(np.zeros((2, 2))))


def test_quasisym_check_pass_and_witness(cube3):
    emap = snowflake_embed(cube3.space, 0.5)
    ok, witness = quasisym_check(cube3.space, emap, QuasiParams(0.25, 0.5))
    assert ok and witness is None
    # at s = 1/2 the half-snowflake contracts comparisons only by sqrt(1/2),
    # which loses to a gap of eps = 1/2
    ok2, witness2 = quasisym_check(cube3.space, emap, QuasiParams(0.5, 0.5))
    assert not ok2 and witness2 is not None


def test_negative_type_cube_yes_diamond2_no(cube3):
    ok, _ = negative_type_test(cube3.space)
    assert ok
    d2 = generate_instance("diamond", {"level": 2})
    ok2, witness = negative_type_test(d2.space)
    assert not ok2 and witness is not None


def test_p_average_distortion_identity():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 2.0], [3.0, 1.0]])
    space = space_from_points(pts)
    mu = PointMeasure(np.ones(4))
    d = p_average_distortion(space, EuclideanMap(pts), mu, p=2.0)
    assert math.isclose(d, 1.0)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 1.0))
def test_snowflake_scaling_law(theta):
    D = np.array([[0.0, 4.0], [4.0, 0.0]])
    space = validate_metric(D)
    emap = snowflake_embed(space, theta)
    gap = float(np.linalg.norm(emap.coords[0] - emap.coords[1]))
    assert math.isclose(gap, 4.0**theta, rel_tol=1e-12)


# -------------------------------------------------------------------------
# JSON round trip
# -------------------------------------------------------------------------


def test_instance_json_roundtrip(cube3):
    mu = PointMeasure(np.arange(1.0, 9.0))
    obj = instance_to_json(cube3.space, cube3.emap, mu)
    space, emap, measure = instance_from_json(obj)
    assert np.array_equal(space.dist, cube3.space.dist)
    assert np.array_equal(emap.coords, cube3.emap.coords)
    assert np.array_equal(measure.weights, mu.weights)

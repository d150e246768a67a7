import math

import numpy as np
import pytest

from zerosetkit._rng import RandomnessSpec, substream
from zerosetkit.descent import (
    EmbedConfig,
    MixerConfig,
    ck_scale_index,
    draw_bit_fields,
    euclidean_embed_pipeline,
    frechet_embed,
    log_ball_mass,
    mixed_zeroset_sampler,
)
from zerosetkit.errors import BadParams, EmptyZeroSet, InfiniteIndex
from zerosetkit.metric import PointMeasure, generate_instance
from zerosetkit.randomzero import ZeroSetDistribution, general_zeroset_sampler

from conftest import space_from_points


def _line_space(n):
    return space_from_points(np.arange(n, dtype=float)[:, None])


# -------------------------------------------------------------------------
# scale indices
# -------------------------------------------------------------------------


def _brute_scale_index(space, measure, x, t):
    """Definition-level oracle: the largest k with mu(B(x, 2^k)) <= e^t."""
    w = measure.weights / measure.weights.min()
    cap = math.exp(t)
    k_hi = math.ceil(math.log2(space.diam)) + 1
    k_lo = math.floor(math.log2(space.min_positive_distance)) - 1
    for k in range(k_hi, k_lo - 1, -1):
        if float(w[space.dist[x] <= 2.0**k].sum()) <= cap:
            return k
    return k_lo


def test_ck_scale_index_matches_oracle(cube3):
    space = cube3.space
    rng = substream(7, "test", "ck")
    for _ in range(20):
        mu = PointMeasure(rng.random(space.n) + 0.5)
        t = float(rng.random() * math.log(mu.weights.sum() / mu.weights.min()) * 0.9)
        for x in range(space.n):
            got = ck_scale_index(space, mu, x, t)
            w = mu.weights / mu.weights.min()
            if w[x] > math.exp(t):
                assert got is None
            else:
                assert got == _brute_scale_index(space, mu, x, t)


def test_ck_scale_index_infinite_cap(cube3):
    mu = PointMeasure(np.ones(8))
    with pytest.raises(InfiniteIndex):
        ck_scale_index(cube3.space, mu, 0, t=math.log(8.0) + 1.0)


def test_log_ball_mass_inverts_scale_index(cube3):
    space = cube3.space
    mu = PointMeasure(np.ones(8))
    # ball of radius 2^1 around a corner holds 1 + 3 + 3 = 7 points
    assert math.isclose(log_ball_mass(space, mu, 0, 1.0), math.log(7.0))


# -------------------------------------------------------------------------
# mixer configuration and bit fields
# -------------------------------------------------------------------------


def _dummy_dist(points):
    return ZeroSetDistribution("dummy", {}, lambda i: frozenset(points))


def test_mixer_config_validation():
    with pytest.raises(BadParams):
        MixerConfig(a=1.0, b=2.0, distributions={0: _dummy_dist({0})})
    with pytest.raises(BadParams):
        MixerConfig(a=2.0, b=1.0, distributions={})
    cfg = MixerConfig(a=2.3, b=-1.7, distributions={0: _dummy_dist({0})})
    assert list(cfg.shift_range) == [-1, 0, 1, 2, 3]


def test_draw_bit_fields_ranges_and_determinism():
    rng1 = substream(0, "bits")
    rng2 = substream(0, "bits")
    s1, e1 = draw_bit_fields(rng1, [3, 1, 2, 1])
    s2, e2 = draw_bit_fields(rng2, [1, 2, 3])
    # duplicate indices collapse; identical index sets give identical fields
    assert s1 == s2 and e1 == e2
    assert set(s1) == {1, 2, 3}
    assert all(v in (0, 1) for v in s1.values())
    assert all(v in (0, 1, 2) for v in e1.values())


# -------------------------------------------------------------------------
# Fréchet embedding
# -------------------------------------------------------------------------


def test_frechet_is_exactly_one_lipschitz(cube4, uniform_measure):
    space = cube4.space
    dist = general_zeroset_sampler(space, uniform_measure(space), 2.0, RandomnessSpec(2))
    zero_sets = [dist.draw(k) for k in range(32)]
    emap = frechet_embed(space, zero_sets)
    assert emap.dim == 32
    E = emap.image_distances()
    assert np.all(E <= space.dist + 1e-9)
    # coordinate formula: d(x, Z_j) / sqrt(N)
    Z0 = np.asarray(sorted(zero_sets[0]), dtype=int)
    expect = space.dist[:, Z0].min(axis=1) / math.sqrt(32)
    assert np.allclose(emap.coords[:, 0], expect)


def test_frechet_rejects_empty_inputs(cube3):
    with pytest.raises(BadParams):
        frechet_embed(cube3.space, [])
    with pytest.raises(EmptyZeroSet):
        frechet_embed(cube3.space, [frozenset()])


# -------------------------------------------------------------------------
# the mixer
# -------------------------------------------------------------------------


def test_mixed_sampler_draws_are_valid_and_deterministic():
    space = _line_space(8)
    mu = PointMeasure(np.ones(8))
    dists = {k: _dummy_dist(set(range(8))) for k in range(-2, 4)}
    cfg = MixerConfig(a=3.0, b=-2.0, distributions=dists)
    m1 = mixed_zeroset_sampler(space, mu, cfg, RandomnessSpec(4))
    m2 = mixed_zeroset_sampler(space, mu, cfg, RandomnessSpec(4))
    for k in range(60):
        Z = m1.draw(k)
        assert Z and Z <= frozenset(range(8))
        assert Z == m2.draw(k)


# -------------------------------------------------------------------------
# end-to-end pipeline
# -------------------------------------------------------------------------


def test_embed_pipeline_cube2_lower_bound_and_lipschitz():
    inst = generate_instance("hamming_cube", {"dim": 2})
    mu = PointMeasure(np.ones(4))
    emap, report = euclidean_embed_pipeline(
        inst.space, mu, negative_type=True,
        config=EmbedConfig(n_samples=64, rounds=6),
        randomness=RandomnessSpec(0),
    )
    assert report.distortion >= math.sqrt(2.0) - 1e-6
    E = emap.image_distances()
    assert np.all(E <= inst.space.dist * (1.0 + 1e-12) + 1e-12)
    assert report.lipschitz <= 1.0 + 1e-9


def test_embed_pipeline_deterministic():
    inst = generate_instance("hamming_cube", {"dim": 2})
    mu = PointMeasure(np.ones(4))
    cfg = EmbedConfig(n_samples=16, rounds=3)
    a, _ = euclidean_embed_pipeline(
        inst.space, mu, negative_type=True, config=cfg, randomness=RandomnessSpec(1)
    )
    b, _ = euclidean_embed_pipeline(
        inst.space, mu, negative_type=True, config=cfg, randomness=RandomnessSpec(1)
    )
    assert np.array_equal(a.coords, b.coords)


def test_embed_pipeline_requires_params_with_custom_map():
    inst = generate_instance("hamming_cube", {"dim": 2})
    mu = PointMeasure(np.ones(4))
    with pytest.raises(BadParams):
        euclidean_embed_pipeline(inst.space, mu, phi=inst.emap, params=None)

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from sigcn.episodes import GeneratorConfig, generate_episode
from sigcn.errors import ConfigError, ForegroundEmptyError, ShapeError
from sigcn.matching import (
    MAP_ORDER, episode_maps, min_max_normalize, pixel_activation, pixel_scores, region_activation,
    region_scores,
)


def _instance(rng, c=3, h=4, w=4):
    fs, fq = rng.normal((c, h, w)), rng.normal((c, h, w))
    ms = (rng.uniform((h, w)) > 0.5).astype(float)
    ms[0, 0] = 1.0
    return fs, ms, fq


def test_normalize_examples():
    np.testing.assert_array_equal(min_max_normalize([[1, 3], [3, 5]]), [[0, 0.5], [0.5, 1]])
    np.testing.assert_array_equal(min_max_normalize(np.full((3, 3), 7.0)), np.zeros((3, 3)))
    unit = np.array([[0.0, 0.25], [1.0, 0.5]])
    np.testing.assert_array_equal(min_max_normalize(unit), unit)


def test_pixel_identical_and_orthogonal():
    fs = np.zeros((2, 2, 2))
    fs[:, 0, 0] = [1.0, 0.0]
    ms = np.zeros((2, 2))
    ms[0, 0] = 1
    fq = np.zeros((2, 2, 2))
    fq[:, 0, 0] = [3.0, 0.0]   # parallel to the fg pixel
    fq[:, 1, 1] = [0.0, 2.0]   # orthogonal
    raw = pixel_scores(fs, ms, fq)
    assert raw[0, 0] == pytest.approx(1.0, abs=1e-15)
    assert raw[1, 1] == 0.0


def test_pixel_matches_brute_force(rng):
    for _ in range(20):
        fs, ms, fq = _instance(rng)
        np.testing.assert_allclose(pixel_activation(fs, ms, fq).values, oracles.pixel_map(fs, ms, fq), atol=1e-12)


def test_region_matches_brute_force(rng):
    for r in (1, 2, 3):
        fs, ms, fq = _instance(rng, h=5, w=6)
        np.testing.assert_allclose(region_scores(fs, ms, fq, r), oracles.region_raw(fs, ms, fq, r), atol=1e-12)


def test_region_r1_constant(rng):
    fs, ms, fq = _instance(rng)
    raw = region_scores(fs, ms, fq, 1)
    assert np.all(raw == raw[0, 0])
    np.testing.assert_array_equal(region_activation(fs, ms, fq, 1).values, 0.0)


def test_region_full_grid_equals_pixel_with_full_mask(rng):
    fs, _, fq = _instance(rng)
    ms = np.ones((4, 4))
    np.testing.assert_allclose(region_activation(fs, ms, fq, 4).values,
                               pixel_activation(fs, ms, fq).values, atol=1e-12)


def test_region_r2_hand_case():
    quad = {(0, 0): [1, 0], (0, 1): [0, 1], (1, 0): [1, 1], (1, 1): [1, -1]}
    fq = np.zeros((2, 4, 4))
    for (i, j), v in quad.items():
        fq[:, 2 * i:2 * i + 2, 2 * j:2 * j + 2] = np.array(v, float)[:, None, None]
    fs = np.zeros((2, 4, 4))
    fs[:, 0:2, 0:2] = np.array([2.0, 0.0])[:, None, None]
    fs[:, 0:2, 2:4] = np.array([1.0, 1.0])[:, None, None]
    ms = np.zeros((4, 4))
    ms[0:2, 0:2] = 1
    ms[0, 2] = 1
    raw = region_scores(fs, ms, fq, 2)
    h = np.sqrt(0.5)
    expect = np.kron([[1.0, h], [1.0, h]], np.ones((2, 2)))
    np.testing.assert_allclose(raw, expect, atol=1e-15)
    np.testing.assert_allclose(region_activation(fs, ms, fq, 2).values, np.kron([[1, 0], [1, 0]], np.ones((2, 2))), atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.01, 100.0), st.integers(0, 2 ** 32))
def test_scale_invariance(c, seed):
    from sigcn.rng import SplitMix64
    fs, ms, fq = _instance(SplitMix64(seed))
    for fn in (pixel_activation, lambda a, b, q: region_activation(a, b, q, 2)):
        base = fn(fs, ms, fq).values
        assert np.max(np.abs(fn(c * fs, ms, fq).values - base)) <= 1e-9
        assert np.max(np.abs(fn(fs, ms, c * fq).values - base)) <= 1e-9


def test_range_and_endpoints(rng):
    fs, ms, fq = _instance(rng, h=6, w=6)
    for m in (pixel_activation(fs, ms, fq), region_activation(fs, ms, fq, 3)):
        assert m.values.min() == 0.0 and m.values.max() == 1.0


def test_pixel_invariant_to_support_fg_order(rng):
    # permuting which fg pixel sits where does not change the fg set
    fs, _, fq = _instance(rng)
    ms = np.zeros((4, 4))
    ms[[0, 1, 3], [2, 0, 3]] = 1
    pos = [(0, 2), (1, 0), (3, 3)]
    perm = fs.copy()
    for (a, b), (c, d) in zip(pos, pos[1:] + pos[:1]):
        perm[:, c, d] = fs[:, a, b]
    np.testing.assert_array_equal(pixel_scores(fs, ms, fq), pixel_scores(perm, ms, fq))


def test_zero_query_pixel_scores_zero():
    fs = np.ones((2, 2, 2))
    fq = np.ones((2, 2, 2))
    fq[:, 1, 1] = 0.0
    assert pixel_scores(fs, np.ones((2, 2)), fq)[1, 1] == 0.0


def test_errors(rng):
    fs, ms, fq = _instance(rng)
    with pytest.raises(ShapeError):
        pixel_scores(fs, ms, fq[:, :3])
    with pytest.raises(ForegroundEmptyError):
        pixel_scores(fs, np.zeros((4, 4)), fq)
    with pytest.raises(ConfigError):
        region_scores(fs, ms, fq, 5)


def test_episode_maps_shot_fusion():
    ep = generate_episode(9, GeneratorConfig(shots=3, height=8, width=8))
    maps = episode_maps(ep, 2)
    assert tuple(maps) == tuple(sorted(maps, key=MAP_ORDER.index))
    raw = np.mean([pixel_scores(s.feat_mid, s.mask, ep.query.feat_mid) for s in ep.support], axis=0)
    np.testing.assert_array_equal(maps["mid_pixel"].values, min_max_normalize(raw))

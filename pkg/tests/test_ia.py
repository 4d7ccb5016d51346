import numpy as np
import pytest

import oracles
from sigcn import numerics as nx
from sigcn.episodes import masked_average_pool
from sigcn.errors import ConfigError, ShapeError
from sigcn.ia import associate, fused_support_instance, gram_message, support_instance
from sigcn.numerics.gradcheck import check_gradient


def test_scalar_hand_case():
    vs, v0, v1 = np.full((1, 1, 1), 1.0), np.full((1, 1, 1), 2.0), np.full((1, 1, 1), 3.0)
    assert gram_message(vs, v0).data.item() == 2.0
    assert gram_message(v1, v0).data.item() == 18.0
    t0, _ = associate(v0, v1, vs, 0.5, 0.5)
    assert t0.data.item() == 6.0


def test_zero_weights_halve(rng):
    v0, v1, vs = rng.normal((3, 4, 4)), rng.normal((3, 4, 4)), rng.normal((3, 2, 2))
    t0, t1 = associate(v0, v1, vs, 0.0, 0.0)
    assert np.max(np.abs(t0.data - 0.5 * v0)) <= 1e-12
    assert np.max(np.abs(t1.data - 0.5 * v1)) <= 1e-12


def test_matches_loop(rng):
    for _ in range(10):
        v0, v1, vs = rng.normal((2, 3, 3)), rng.normal((2, 3, 3)), rng.normal((2, 2, 2))
        a, b = rng.uniform(), rng.uniform()
        got = associate(v0, v1, vs, a, b)
        want = oracles.associate(v0, v1, vs, a, b)
        for g, w in zip(got, want):
            assert np.max(np.abs(g.data - w)) <= 1e-10


def test_gram_psd(rng):
    r = rng.normal((4, 9))
    g = r @ r.T
    np.testing.assert_allclose(g, g.T, atol=1e-15)
    for _ in range(50):
        x = rng.normal(4)
        assert x @ g @ x >= -1e-9


def test_beta_zero_ignores_peer(rng):
    v0, v1, vs = rng.normal((2, 3, 3)), rng.normal((2, 3, 3)), rng.normal((2, 2, 2))
    a = associate(v0, v1, vs, 0.7, 0.0)[0].data
    b = associate(v0, v1 + rng.normal((2, 3, 3)), vs, 0.7, 0.0)[0].data
    assert np.max(np.abs(a - b)) <= 1e-12


def test_updates_use_original_peers(rng):
    v0, v1, vs = rng.normal((2, 3, 3)), rng.normal((2, 3, 3)), rng.normal((2, 2, 2))
    t0, t1 = associate(v0, v1, vs)
    s0, s1 = associate(v1, v0, vs)
    np.testing.assert_array_equal(t0.data, s1.data)
    np.testing.assert_array_equal(t1.data, s0.data)


def test_errors(rng):
    with pytest.raises(ShapeError):
        associate(rng.normal((2, 3, 3)), rng.normal((2, 3, 4)), rng.normal((2, 2, 2)))
    with pytest.raises(ShapeError):
        associate(rng.normal((2, 3, 3)), rng.normal((2, 3, 3)), rng.normal((3, 2, 2)))
    with pytest.raises(ConfigError):
        associate(rng.normal((2, 3, 3)), rng.normal((2, 3, 3)), rng.normal((2, 2, 2)), -1.0)


def test_support_instance_total_pool_and_reshape(rng):
    f, m = rng.normal((3, 4, 4)), (rng.uniform((4, 4)) > 0.3).astype(float)
    m[0, 0] = 1
    seq = f.reshape(3, -1).T[m.reshape(-1) > 0]
    np.testing.assert_allclose(support_instance(seq, 1)[:, 0, 0], masked_average_pool(f, m), atol=1e-15)
    rows = rng.normal((9, 3))
    np.testing.assert_array_equal(support_instance(rows, 3), rows.T.reshape(3, 3, 3))
    assert fused_support_instance([f, f], [m, m], 2).shape == (3, 2, 2)


def test_associate_gradient(rng):
    v0, v1, vs = rng.normal((2, 3, 3)), rng.normal((2, 3, 3)), rng.normal((2, 2, 2))
    w = rng.normal((2, 3, 3))

    def fn(a, b, c):
        t0, t1 = associate(a, b, c)
        return nx.sum(nx.mul(nx.add(t0, t1), w))
    assert check_gradient(fn, [v0, v1, vs]) <= 1e-4

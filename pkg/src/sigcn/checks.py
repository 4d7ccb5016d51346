"""Seeded finite-difference suite over every differentiable operation.

Each case draws random inputs, reduces the op output to a scalar with a fixed
random projection, and compares tape gradients with central differences.
"""

import numpy as np

from . import numerics as nx
from .config import Config
from .episodes import generate_episode
from .head import bce_loss, decode, init_decoder, rms_normalize
from .ia import associate
from .numerics.gradcheck import FD_STEP, check_gradient
from .pipeline import instance_features
from .rng import SplitMix64
from .sigr import build_graph, select_salient, sigcn_layer

DEFAULT_TOLERANCE = 1e-4


def _project(out, weights):
    return nx.sum(nx.mul(out, weights))


def _away_from_zero(rng, shape, margin=0.05):
    # keeps relu / clip inputs clear of their kinks by more than the FD step
    x = rng.normal(shape)
    return x + np.sign(x) * margin


def _unary(op, positive=False):
    def case(rng):
        shape = (3, 4)
        x = rng.uniform(shape, 0.5, 2.0) if positive else _away_from_zero(rng, shape)
        w = rng.normal(shape)
        return (lambda a: _project(op(a), w)), [x]
    return case


def _binary(op, positive_b=False):
    def case(rng):
        a = rng.normal((3, 4))
        b = rng.uniform((3, 4), 0.5, 2.0) if positive_b else rng.normal((1, 4))
        w = rng.normal((3, 4))
        return (lambda x, y: _project(op(x, y), w)), [a, b]
    return case


def _matmul(rng):
    a, b, w = rng.normal((4, 3)), rng.normal((3, 5)), rng.normal((4, 5))
    return (lambda x, y: _project(nx.matmul(x, y), w)), [a, b]


def _transpose(rng):
    x, w = rng.normal((2, 3, 4)), rng.normal((4, 2, 3))
    return (lambda a: _project(nx.transpose(a, (2, 0, 1)), w)), [x]


def _reshape(rng):
    x, w = rng.normal((2, 6)), rng.normal((3, 4))
    return (lambda a: _project(nx.reshape(a, (3, 4)), w)), [x]


def _concat(rng):
    a, b, w = rng.normal((2, 3, 3)), rng.normal((1, 3, 3)), rng.normal((3, 3, 3))
    return (lambda x, y: _project(nx.concat([x, y]), w)), [a, b]


def _reduce(op):
    def case(rng):
        x = rng.normal((3, 4))
        return (lambda a: nx.mul(op(a), op(a))), [x]
    return case


def _mean_pool(rng):
    x, w = rng.normal((3, 4, 5)), rng.normal(3)
    return (lambda a: _project(nx.mean_pool(a), w)), [x]


def _resize(rng):
    x, w = rng.normal((2, 4, 5)), rng.normal((2, 7, 9))
    return (lambda a: _project(nx.bilinear_resize(a, (7, 9)), w)), [x]


def _conv2d(dilation, k=3):
    def case(rng):
        x = rng.normal((3, 6, 6))
        wt = rng.normal((2, 3, k, k))
        b = rng.normal(2)
        proj = rng.normal((2, 6, 6))
        return (lambda a, w_, b_: _project(nx.conv2d(a, w_, b_, dilation=dilation), proj)), [x, wt, b]
    return case


def _conv1d(rng):
    x, k, w = rng.normal((7, 3)), rng.normal((5, 3)), rng.normal((7, 3))
    return (lambda a, b: _project(nx.depthwise_conv1d(a, b), w)), [x, k]


def _sigcn_layer(rng):
    xq = rng.normal((3, 4, 4))
    act = rng.uniform((4, 4))
    graph = build_graph(xq, select_salient(act, 0.5))
    theta = rng.normal((3, 3))
    w = rng.normal((16, 3))
    x = _away_from_zero(rng, (16, 3))
    return (lambda a, th: _project(sigcn_layer(a, graph.A_hat, th), w)), [x, theta]


def _associate(rng):
    v0, v1, vs = rng.normal((3, 3, 3)), rng.normal((3, 3, 3)), rng.normal((3, 2, 2))
    w0, w1 = rng.normal((3, 3, 3)), rng.normal((3, 3, 3))

    def fn(a, b, c):
        t0, t1 = associate(a, b, c, 0.5, 0.5)
        return nx.add(_project(t0, w0), _project(t1, w1))
    return fn, [v0, v1, vs]


def _rms(rng):
    x, w = rng.normal((2, 3, 3)), rng.normal((2, 3, 3))
    return (lambda a: _project(rms_normalize(a), w)), [x]


def _bce(rng):
    p = rng.uniform((4, 4), 0.05, 0.95)
    y = (rng.uniform((4, 4)) > 0.5).astype(np.float64)
    return (lambda a: bce_loss(a, y)), [p]


def _decode(rng):
    c = 2
    v0, v1 = rng.normal((c, 4, 4)), rng.normal((c, 4, 4))
    maps = [rng.uniform((4, 4)) for _ in range(4)]
    params = init_decoder(c, int(rng.next_u64() >> 33))
    for name in params:
        if name.endswith(".b"):
            params[name] = rng.normal(params[name].shape, scale=0.5)
    w = rng.normal((6, 6))
    names = ["reduce.w", "aspp.rate2.w", "res0.w", "out.w"]

    def fn(a, b, *ps):
        p = dict(params, **dict(zip(names, ps)))
        return _project(decode(a, b, maps, p, (6, 6)).logits, w)
    return fn, [v0, v1, *[params[n] for n in names]]


def _end_to_end(rng):
    cfg = Config(channels=3, height=6, width=6, k=3, s=2, region_grid=2, sigma=1.0,
                 aspp_rates=(1, 2))
    ep = generate_episode(int(rng.next_u64() >> 1), cfg.generator())
    params = init_decoder(cfg.channels, int(rng.next_u64() >> 33), cfg.aspp_rates)
    # zero-initialized biases put ReLU inputs exactly on the kink wherever a
    # receptive field is all zeros; check at a generic point instead
    for name in params:
        if name.endswith(".b"):
            params[name] = rng.normal(params[name].shape, scale=0.5)
    v0, v1, maps = instance_features(ep, cfg)
    names = sorted(params)

    def fn(*ps):
        p = dict(zip(names, ps))
        return bce_loss(decode(v0, v1, maps, p), ep.query.mask)
    return fn, [params[n] for n in names]


CASES = {
    "add": _binary(nx.add),
    "sub": _binary(nx.sub),
    "mul": _binary(nx.mul),
    "div": _binary(nx.div, positive_b=True),
    "scale": _unary(lambda a: nx.scale(a, -1.7)),
    "relu": _unary(nx.relu),
    "sigmoid": _unary(nx.sigmoid),
    "log": _unary(nx.log, positive=True),
    "sqrt": _unary(nx.sqrt, positive=True),
    "clip": _unary(lambda a: nx.clip(a, -1.0, 1.0)),
    "sum": _reduce(nx.ops.sum),
    "mean": _reduce(nx.mean),
    "mean_pool": _mean_pool,
    "matmul": _matmul,
    "transpose": _transpose,
    "reshape": _reshape,
    "concat": _concat,
    "bilinear_resize": _resize,
    "conv2d": _conv2d(1),
    "conv2d_dilated": _conv2d(2),
    "conv2d_1x1": _conv2d(1, k=1),
    "depthwise_conv1d": _conv1d,
    "sigcn_layer": _sigcn_layer,
    "associate": _associate,
    "rms_normalize": _rms,
    "bce_loss": _bce,
    "decode": _decode,
    "end_to_end_bce": _end_to_end,
}


def run_case(name: str, rng: SplitMix64) -> float:
    fn, inputs = CASES[name](rng)
    return check_gradient(fn, inputs, step=FD_STEP, skip_kinks=True)


def gradient_suite(seed: int = 0, instances: int = 20, names=None) -> dict[str, float]:
    """Max relative error per case over ``instances`` random draws."""
    root = SplitMix64(seed)
    report = {}
    for name in names or CASES:
        case_rng = root.spawn()
        report[name] = max(run_case(name, case_rng.spawn()) for _ in range(instances))
    return report


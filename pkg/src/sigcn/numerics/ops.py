"""Differentiable primitives.

Each primitive is a (forward, vjp) pair over plain ndarrays. ``_apply`` runs the
forward and, when any input is tracked, records the pair on that input's tape.
Inputs may be Tensors, ndarrays or Python scalars.
"""

import numpy as np

from ..errors import LineageError, ShapeError
from .tensor import Tensor


def _apply(name, forward, vjp, inputs, **kwargs):
    tapes = {id(x.tape): x.tape for x in inputs if isinstance(x, Tensor) and x.tape is not None}
    if len(tapes) > 1:
        raise LineageError(f"{name}: inputs are recorded on different tapes")
    arrays = [x.data if isinstance(x, Tensor) else np.asarray(x, dtype=np.float64) for x in inputs]
    with np.errstate(all="ignore"):
        out = forward(*arrays, **kwargs)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError(f"{name}: non-finite output")
    tape = next(iter(tapes.values()), None)
    result = Tensor(out, tape)
    if tape is not None:
        recorded = [x if isinstance(x, Tensor) else a for x, a in zip(inputs, arrays)]
        tape.record(name, recorded, result, forward, vjp, kwargs)
    return result


def _unbroadcast(g, shape):
    g = np.asarray(g)
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g.reshape(shape)


def _check_broadcast(name, a, b):
    try:
        np.broadcast_shapes(a, b)
    except ValueError as exc:
        raise ShapeError(f"{name}: cannot broadcast {a} with {b}") from exc


def _as_shape(x):
    return x.shape if isinstance(x, Tensor) else np.shape(np.asarray(x, dtype=np.float64))


# elementwise -----------------------------------------------------------------

def _add_f(a, b):
    return a + b


def _add_v(g, out, a, b):
    return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)


def add(a, b) -> Tensor:
    _check_broadcast("add", _as_shape(a), _as_shape(b))
    return _apply("add", _add_f, _add_v, [a, b])


def _sub_f(a, b):
    return a - b


def _sub_v(g, out, a, b):
    return _unbroadcast(g, a.shape), -_unbroadcast(g, b.shape)


def sub(a, b) -> Tensor:
    _check_broadcast("sub", _as_shape(a), _as_shape(b))
    return _apply("sub", _sub_f, _sub_v, [a, b])


def _mul_f(a, b):
    return a * b


def _mul_v(g, out, a, b):
    return _unbroadcast(g * b, a.shape), _unbroadcast(g * a, b.shape)


def mul(a, b) -> Tensor:
    _check_broadcast("mul", _as_shape(a), _as_shape(b))
    return _apply("mul", _mul_f, _mul_v, [a, b])


def _div_f(a, b):
    return a / b


def _div_v(g, out, a, b):
    return _unbroadcast(g / b, a.shape), _unbroadcast(-g * a / (b * b), b.shape)


def div(a, b) -> Tensor:
    _check_broadcast("div", _as_shape(a), _as_shape(b))
    return _apply("div", _div_f, _div_v, [a, b])


def _scale_f(x, *, c):
    return c * x


def _scale_v(g, out, x, *, c):
    return (c * g,)


def scale(x, c: float) -> Tensor:
    return _apply("scale", _scale_f, _scale_v, [x], c=float(c))


def _relu_f(x):
    return np.maximum(x, 0.0)


def _relu_v(g, out, x):
    return (g * (x > 0),)


def relu(x) -> Tensor:
    return _apply("relu", _relu_f, _relu_v, [x])


def _sigmoid_f(x):
    # split by sign so neither branch overflows
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def _sigmoid_v(g, out, x):
    return (g * out * (1.0 - out),)


def sigmoid(x) -> Tensor:
    return _apply("sigmoid", _sigmoid_f, _sigmoid_v, [x])


def _log_f(x):
    return np.log(x)


def _log_v(g, out, x):
    return (g / x,)


def log(x) -> Tensor:
    return _apply("log", _log_f, _log_v, [x])


def _sqrt_f(x):
    return np.sqrt(x)


def _sqrt_v(g, out, x):
    return (0.5 * g / out,)


def sqrt(x) -> Tensor:
    return _apply("sqrt", _sqrt_f, _sqrt_v, [x])


def _clip_f(x, *, lo, hi):
    return np.clip(x, lo, hi)


def _clip_v(g, out, x, *, lo, hi):
    return (g * ((x >= lo) & (x <= hi)),)


def clip(x, lo: float, hi: float) -> Tensor:
    return _apply("clip", _clip_f, _clip_v, [x], lo=float(lo), hi=float(hi))


# reductions ------------------------------------------------------------------

def _sum_f(x, *, axis):
    return np.sum(x, axis=axis)


def _sum_v(g, out, x, *, axis):
    if axis is None:
        return (np.broadcast_to(g.reshape(()), x.shape).copy(),)
    kept = tuple(n for i, n in enumerate(x.shape) if i != axis % x.ndim)
    return (np.broadcast_to(np.expand_dims(g.reshape(kept), axis), x.shape).copy(),)


def sum(x, axis: int | None = None) -> Tensor:  # noqa: A001
    return _apply("sum", _sum_f, _sum_v, [x], axis=axis)


def _mean_f(x, *, axis):
    return np.mean(x, axis=axis)


def _mean_v(g, out, x, *, axis):
    n = x.size if axis is None else x.shape[axis]
    (gx,) = _sum_v(g, out, x, axis=axis)
    return (gx / n,)


def mean(x, axis: int | None = None) -> Tensor:
    return _apply("mean", _mean_f, _mean_v, [x], axis=axis)


def mean_pool(x) -> Tensor:
    """Global spatial average: C×H×W -> C."""
    if len(_as_shape(x)) != 3:
        raise ShapeError("mean_pool expects a C×H×W tensor")
    return mean(reshape(x, (_as_shape(x)[0], -1)), axis=1)


# shape ops -------------------------------------------------------------------

def _matmul_f(a, b):
    return a @ b


def _matmul_v(g, out, a, b):
    return g @ b.T, a.T @ g


def matmul(a, b) -> Tensor:
    sa, sb = _as_shape(a), _as_shape(b)
    if len(sa) != 2 or len(sb) != 2:
        raise ShapeError(f"matmul expects matrices, got {sa} and {sb}")
    if sa[1] != sb[0]:
        raise ShapeError(f"matmul inner dims disagree: {sa} x {sb}")
    return _apply("matmul", _matmul_f, _matmul_v, [a, b])


def _transpose_f(x, *, axes):
    return np.transpose(x, axes)


def _transpose_v(g, out, x, *, axes):
    return (np.transpose(g, np.argsort(axes)),)


def transpose(x, axes=None) -> Tensor:
    nd = len(_as_shape(x))
    axes = tuple(reversed(range(nd))) if axes is None else tuple(axes)
    if sorted(axes) != list(range(nd)):
        raise ShapeError(f"bad transpose axes {axes} for rank {nd}")
    return _apply("transpose", _transpose_f, _transpose_v, [x], axes=axes)


def _reshape_f(x, *, shape):
    return np.reshape(x, shape)


def _reshape_v(g, out, x, *, shape):
    return (np.reshape(g, x.shape),)


def reshape(x, shape) -> Tensor:
    src = _as_shape(x)
    try:
        np.empty(src).reshape(shape)
    except ValueError as exc:
        raise ShapeError(f"cannot reshape {src} to {tuple(shape)}") from exc
    return _apply("reshape", _reshape_f, _reshape_v, [x], shape=tuple(shape))


def _concat_f(*xs, axis):
    return np.concatenate(xs, axis=axis)


def _concat_v(g, out, *xs, axis):
    bounds = np.cumsum([x.shape[axis] for x in xs])[:-1]
    return tuple(np.split(g, bounds, axis=axis))


def concat(xs, axis: int = 0) -> Tensor:
    """Concatenate along ``axis`` (channel axis by default)."""
    shapes = [_as_shape(x) for x in xs]
    ref = shapes[0]
    for s in shapes[1:]:
        if len(s) != len(ref) or any(u != v for i, (u, v) in enumerate(zip(s, ref)) if i != axis):
            raise ShapeError(f"concat shapes disagree off axis {axis}: {shapes}")
    return _apply("concat", _concat_f, _concat_v, list(xs), axis=axis)


# resampling ------------------------------------------------------------------

def bilinear_matrix(n_in: int, n_out: int) -> np.ndarray:
    """Row-stochastic (n_out × n_in) interpolation matrix, half-pixel centres."""
    m = np.zeros((n_out, n_in))
    src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    lo = np.floor(src).astype(int)
    hi = np.minimum(lo + 1, n_in - 1)
    w = src - lo
    rows = np.arange(n_out)
    np.add.at(m, (rows, lo), 1.0 - w)
    np.add.at(m, (rows, hi), w)
    return m


def _resize_f(x, *, ry, rx):
    return ry @ x @ rx.T


def _resize_v(g, out, x, *, ry, rx):
    return (ry.T @ g @ rx,)


def bilinear_resize(x, size) -> Tensor:
    """Resize the last two axes of an H×W or C×H×W tensor to ``size``."""
    shp = _as_shape(x)
    if len(shp) not in (2, 3):
        raise ShapeError("bilinear_resize expects H×W or C×H×W")
    h_out, w_out = size
    ry = bilinear_matrix(shp[-2], int(h_out))
    rx = bilinear_matrix(shp[-1], int(w_out))
    return _apply("bilinear_resize", _resize_f, _resize_v, [x], ry=ry, rx=rx)


# convolutions ----------------------------------------------------------------

def _conv2d_f(x, w, b, *, dilation):
    c_out, c_in, kh, kw = w.shape
    _, h, wd = x.shape
    ph, pw = dilation * (kh // 2), dilation * (kw // 2)
    xp = np.pad(x, ((0, 0), (ph, ph), (pw, pw)))
    out = np.zeros((c_out, h * wd))
    for i in range(kh):
        for j in range(kw):
            patch = xp[:, i * dilation:i * dilation + h, j * dilation:j * dilation + wd]
            out += w[:, :, i, j] @ patch.reshape(c_in, -1)
    return out.reshape(c_out, h, wd) + b[:, None, None]


def _conv2d_v(g, out, x, w, b, *, dilation):
    c_out, c_in, kh, kw = w.shape
    _, h, wd = x.shape
    ph, pw = dilation * (kh // 2), dilation * (kw // 2)
    xp = np.pad(x, ((0, 0), (ph, ph), (pw, pw)))
    gxp = np.zeros_like(xp)
    gw = np.zeros_like(w)
    g2 = g.reshape(c_out, -1)
    for i in range(kh):
        for j in range(kw):
            ys, xs = slice(i * dilation, i * dilation + h), slice(j * dilation, j * dilation + wd)
            gw[:, :, i, j] = g2 @ xp[:, ys, xs].reshape(c_in, -1).T
            gxp[:, ys, xs] += (w[:, :, i, j].T @ g2).reshape(c_in, h, wd)
    gx = gxp[:, ph:ph + h, pw:pw + wd]
    return gx, gw, g2.sum(axis=1)


def conv2d(x, w, b=None, dilation: int = 1) -> Tensor:
    """'Same'-padded 2-D convolution (cross-correlation) of a C×H×W input.

    ``w`` is out×in×kh×kw with odd kernel sides; ``b`` has length out.
    """
    xs, ws = _as_shape(x), _as_shape(w)
    if len(xs) != 3 or len(ws) != 4:
        raise ShapeError(f"conv2d expects C×H×W input and 4-D weight, got {xs}, {ws}")
    if ws[1] != xs[0]:
        raise ShapeError(f"conv2d: weight expects {ws[1]} input channels, got {xs[0]}")
    if ws[2] % 2 == 0 or ws[3] % 2 == 0:
        raise ShapeError("conv2d kernel sides must be odd")
    if dilation < 1:
        raise ShapeError("dilation must be >= 1")
    if b is None:
        b = np.zeros(ws[0])
    if _as_shape(b) != (ws[0],):
        raise ShapeError(f"conv2d bias must have length {ws[0]}")
    return _apply("conv2d", _conv2d_f, _conv2d_v, [x, w, b], dilation=int(dilation))


def _conv1d_f(x, k):
    n, _ = x.shape
    taps = k.shape[0]
    half = taps // 2
    xp = np.pad(x, ((half, taps - 1 - half), (0, 0)))
    out = np.zeros_like(x)
    for j in range(taps):
        out += k[j] * xp[j:j + n]
    return out


def _conv1d_v(g, out, x, k):
    n, _ = x.shape
    taps = k.shape[0]
    half = taps // 2
    xp = np.pad(x, ((half, taps - 1 - half), (0, 0)))
    gxp = np.zeros_like(xp)
    gk = np.zeros_like(k)
    for j in range(taps):
        gk[j] = np.sum(g * xp[j:j + n], axis=0)
        gxp[j:j + n] += g * k[j]
    return gxp[half:half + n], gk


def depthwise_conv1d(x, kernel) -> Tensor:
    """Per-channel convolution along the row axis of an N×C matrix.

    ``out[n, c] = sum_j kernel[j, c] * x[n + j - k//2, c]`` with zero padding.
    """
    xs, ks = _as_shape(x), _as_shape(kernel)
    if len(xs) != 2 or len(ks) != 2 or xs[1] != ks[1]:
        raise ShapeError(f"depthwise_conv1d expects N×C input and k×C kernel, got {xs}, {ks}")
    return _apply("depthwise_conv1d", _conv1d_f, _conv1d_v, [x, kernel])

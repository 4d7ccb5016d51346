"""Central finite-difference checks for tape gradients."""

import numpy as np

from .tensor import Tape, grad

FD_STEP = 1e-4
_KINK_OPS = {"relu", "clip"}


def _evaluate(fn, arrays, track_kinks):
    if not track_kinks:
        return float(np.asarray(fn(*arrays)).reshape(-1)[0]), None
    tape = Tape()
    out = fn(*[tape.leaf(a) for a in arrays])
    pattern = []
    for node in tape.nodes:
        if node.op not in _KINK_OPS:
            continue
        x = getattr(node.inputs[0], "data", node.inputs[0])
        if node.op == "relu":
            pattern.append(x > 0)
        else:
            pattern.append((x >= node.kwargs["lo"]) & (x <= node.kwargs["hi"]))
    flat = np.concatenate([p.reshape(-1) for p in pattern]) if pattern else np.zeros(0, bool)
    return float(np.asarray(out).reshape(-1)[0]), flat


def finite_difference(fn, inputs, index, step=FD_STEP, skip_kinks=False):
    """Central-difference gradient of scalar ``fn(*inputs)`` w.r.t. ``inputs[index]``.

    With ``skip_kinks``, entries whose stencil ``x ± step`` changes the on/off
    pattern of any ReLU or clip are returned as NaN: the difference quotient
    straddles a kink there and says nothing about the derivative.
    """
    base = [np.array(x, dtype=np.float64) for x in inputs]
    x0 = base[index]
    g = np.zeros_like(x0)
    for i in np.ndindex(x0.shape):
        xp, xm = x0.copy(), x0.copy()
        xp[i] += step
        xm[i] -= step
        fp, pp = _evaluate(fn, [xp if j == index else b for j, b in enumerate(base)], skip_kinks)
        fm, pm = _evaluate(fn, [xm if j == index else b for j, b in enumerate(base)], skip_kinks)
        if skip_kinks and (pp.shape != pm.shape or np.any(pp != pm)):
            g[i] = np.nan
        else:
            g[i] = (fp - fm) / (2.0 * step)
    return g


def tape_gradients(fn, inputs):
    """Tape gradients of scalar ``fn`` w.r.t. every input, in one backward pass."""
    tape = Tape()
    leaves = [tape.leaf(x) for x in inputs]
    return [g.data for g in grad(fn(*leaves), leaves)]


def tape_gradient(fn, inputs, index):
    return tape_gradients(fn, inputs)[index]


def relative_error(analytic, numeric, floor=1e-8):
    """Max elementwise relative error over entries where either gradient exceeds
    ``floor``; NaN entries in ``numeric`` are ignored."""
    a, n = np.asarray(analytic), np.asarray(numeric)
    mask = ((np.abs(a) > floor) | (np.abs(n) > floor)) & ~np.isnan(n)
    if not mask.any():
        return 0.0
    return float(np.max(np.abs(a - n)[mask] / np.maximum(np.abs(a), np.abs(n))[mask]))


def check_gradient(fn, inputs, index=None, step=FD_STEP, skip_kinks=True):
    """Largest relative error between tape and finite-difference gradients.

    Checks every input when ``index`` is None.
    """
    analytic = tape_gradients(fn, inputs)
    indices = range(len(inputs)) if index is None else [index]
    worst = 0.0
    for k in indices:
        numeric = finite_difference(fn, inputs, k, step, skip_kinks)
        worst = max(worst, relative_error(analytic[k], numeric))
    return worst

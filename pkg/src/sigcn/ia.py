"""Instance association: Gram-matrix message passing between two query
instances and a pooled support instance."""

import numpy as np

from . import numerics as nx
from .episodes import adaptive_pool_rows, foreground_sequence
from .errors import ConfigError, ShapeError

DEFAULT_SIZE = 10
DEFAULT_ALPHA = 0.5
DEFAULT_BETA = 0.5


def support_instance(xtilde_s, s: int = DEFAULT_SIZE) -> np.ndarray:
    """Pool a foreground sequence (N_fg×C) to s² rows and lay it out as C×s×s."""
    if s < 1:
        raise ConfigError("support instance size must be >= 1")
    rows = adaptive_pool_rows(xtilde_s, s * s)
    return rows.T.reshape(rows.shape[1], s, s)


def fused_support_instance(xs_list, ms_list, s: int = DEFAULT_SIZE) -> np.ndarray:
    return np.mean([support_instance(foreground_sequence(x, m), s) for x, m in zip(xs_list, ms_list)], axis=0)


def _flat(v):
    c = np.shape(v)[0]
    return nx.reshape(v, (c, -1))


def gram_message(source, target):
    """``R(source) R(source)^T R(target)``, shaped like ``R(target)`` (C×HW)."""
    rs = _flat(source)
    return nx.matmul(nx.matmul(rs, nx.transpose(rs)), _flat(target))


def associate(vq0, vq1, vs, alpha: float = DEFAULT_ALPHA, beta: float = DEFAULT_BETA):
    """Return the updated pair ``(v0~, v1~)``.

    ``v0~ = (v0 + alpha * m0 + beta * m10) / 2`` with ``m0`` from the support
    instance and ``m10`` from the other query instance; ``v1~`` swaps roles.
    Both updates read the original ``vq0``/``vq1``.
    """
    shapes = [np.shape(vq0), np.shape(vq1), np.shape(vs)]
    if shapes[0] != shapes[1] or len(shapes[0]) != 3 or len(shapes[2]) != 3 or shapes[2][0] != shapes[0][0]:
        raise ShapeError(f"instance shapes disagree: {shapes}")
    if alpha < 0 or beta < 0:
        raise ConfigError("alpha and beta must be >= 0")

    def update(v, peer):
        msg = nx.add(nx.scale(gram_message(vs, v), alpha), nx.scale(gram_message(peer, v), beta))
        return nx.scale(nx.add(v, nx.reshape(msg, shapes[0])), 0.5)

    return update(vq0, vq1), update(vq1, vq0)

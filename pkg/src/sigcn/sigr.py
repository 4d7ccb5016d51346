"""Support-induced graph reasoning.

Salient query pixels (activation >= t) become a fully connected graph with
cosine edge weights. Two GCN layers then propagate node states, where the usual
learned state-update matrix is replaced by a depthwise 1-D convolution over the
node axis whose kernel is a set of k support foreground prototypes.
"""

from dataclasses import dataclass

import numpy as np

from . import numerics as nx
from .episodes import adaptive_pool_rows, foreground_sequence
from .errors import ConfigError, ShapeError
from .matching import cosine_matrix

DEFAULT_THRESHOLD = 0.7
DEFAULT_PROTOTYPES = 5
NUM_LAYERS = 2


def select_salient(a, t: float = DEFAULT_THRESHOLD) -> np.ndarray:
    """Binary salience matrix ``a >= t``.

    An empty selection falls back to the single argmax pixel (first in
    row-major order on ties) so the graph always has a node.
    """
    if not 0.0 <= t <= 1.0:
        raise ConfigError(f"threshold {t} outside [0, 1]")
    a = np.asarray(a, dtype=np.float64)
    s = (a >= t).astype(np.float64)
    if not s.any():
        s.flat[int(np.argmax(a))] = 1.0
    return s


@dataclass
class QueryGraph:
    X: np.ndarray          # N×C node features, row-major pixel order
    salient: np.ndarray    # indices of salient nodes
    A0: np.ndarray         # N×N edge weights, zero off the salient clique and on the diagonal
    A_hat: np.ndarray      # D^-1/2 (A0 + I) D^-1/2
    degree: np.ndarray     # row sums of A0 + I

    @property
    def num_salient(self) -> int:
        return len(self.salient)


def normalize_adjacency(a0: np.ndarray):
    """Symmetric normalization of ``a0 + I``; returns (A_hat, degrees)."""
    a_tilde = a0 + np.eye(len(a0))
    deg = a_tilde.sum(axis=1)
    d = 1.0 / np.sqrt(deg)
    return d[:, None] * a_tilde * d[None, :], deg


def build_graph(xq, s) -> QueryGraph:
    xq = np.asarray(xq, dtype=np.float64)
    s = np.asarray(s)
    if xq.ndim != 3 or s.shape != xq.shape[1:]:
        raise ShapeError(f"query {xq.shape} and salience {s.shape} disagree")
    c = xq.shape[0]
    x = xq.reshape(c, -1).T
    idx = np.flatnonzero(s.reshape(-1))
    a0 = np.zeros((len(x), len(x)))
    # negative similarities are cut to zero so every degree stays >= 1
    block = np.maximum(cosine_matrix(x[idx], x[idx]), 0.0)
    np.fill_diagonal(block, 0.0)
    a0[np.ix_(idx, idx)] = block
    a_hat, deg = normalize_adjacency(a0)
    return QueryGraph(x, idx, a0, a_hat, deg)


def support_prototypes(xs, ms, k: int = DEFAULT_PROTOTYPES) -> np.ndarray:
    """k×C prototypes: means of k contiguous bins of the foreground sequence."""
    if k < 1:
        raise ConfigError("k must be >= 1")
    return adaptive_pool_rows(foreground_sequence(xs, ms), k)


def fused_prototypes(xs_list, ms_list, k: int = DEFAULT_PROTOTYPES) -> np.ndarray:
    """K-shot prototypes, averaged elementwise over shots."""
    return np.mean([support_prototypes(x, m, k) for x, m in zip(xs_list, ms_list)], axis=0)


def sigcn_layer(X, A_hat, theta):
    """One layer: ``relu(A_hat @ conv1d(X; theta))``."""
    if np.shape(theta)[1] != np.shape(X)[1]:
        raise ShapeError(f"prototype width {np.shape(theta)[1]} != node width {np.shape(X)[1]}")
    if np.shape(A_hat) != (np.shape(X)[0],) * 2:
        raise ShapeError("adjacency must be N×N for N nodes")
    return nx.relu(nx.matmul(A_hat, nx.depthwise_conv1d(X, theta)))


def run_branch(xq, activation, xs_list, ms_list, t: float = DEFAULT_THRESHOLD,
               k: int = DEFAULT_PROTOTYPES):
    """Query features (C×H×W) -> updated instance feature (C×H×W).

    ``xq`` may be a tracked Tensor; graph structure and prototypes are treated
    as constants.
    """
    c, h, w = np.shape(xq)
    graph = build_graph(np.asarray(xq), select_salient(activation, t))
    theta = fused_prototypes(xs_list, ms_list, k)
    x = nx.transpose(nx.reshape(xq, (c, h * w)))
    for _ in range(NUM_LAYERS):
        x = sigcn_layer(x, graph.A_hat, theta)
    return nx.reshape(nx.transpose(x), (c, h, w))

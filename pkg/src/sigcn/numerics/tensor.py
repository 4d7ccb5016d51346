"""Immutable float64 tensors and a single-use reverse-mode tape."""

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..errors import LineageError, ShapeError

MAX_RANK = 4


def _freeze(a) -> np.ndarray:
    arr = np.array(a, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    arr.flags.writeable = False
    return arr


class Tensor:
    """A dense float64 array, optionally tracked by a :class:`Tape`.

    Rank 1 to 4, row-major. Scalars are stored as shape ``(1,)``.
    """

    __array_priority__ = 100
    __slots__ = ("data", "tape")

    def __init__(self, data, tape: "Tape | None" = None):
        arr = _freeze(data)
        if arr.ndim > MAX_RANK:
            raise ShapeError(f"rank {arr.ndim} exceeds {MAX_RANK}")
        self.data = arr
        self.tape = tape

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def dims(self) -> list[int]:
        return list(self.data.shape)

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float("nan")

    def numpy(self) -> np.ndarray:
        return self.data

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)

    def __repr__(self):
        tag = "tracked" if self.tape is not None else "const"
        return f"Tensor({self.dims}, {tag})"

    # operator sugar; implementations live in ops
    def __add__(self, other):
        from . import ops
        return ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from . import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from . import ops
        return ops.sub(other, self)

    def __mul__(self, other):
        from . import ops
        return ops.mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        from . import ops
        return ops.div(self, other)

    def __neg__(self):
        from . import ops
        return ops.scale(self, -1.0)

    def __matmul__(self, other):
        from . import ops
        return ops.matmul(self, other)

    def __rmatmul__(self, other):
        from . import ops
        return ops.matmul(other, self)

    @property
    def T(self):
        from . import ops
        return ops.transpose(self)


@dataclass
class Node:
    op: str
    inputs: tuple
    output: Tensor
    forward: Callable
    vjp: Callable
    kwargs: dict = field(default_factory=dict)


class Tape:
    """Ordered record of primitive ops.

    Build once, run backward once per loss; there is no support for
    higher-order derivatives. Not thread-safe: use one tape per inference.
    """

    def __init__(self):
        self.nodes: list[Node] = []
        self._leaves: dict[int, Tensor] = {}

    def leaf(self, data) -> Tensor:
        t = Tensor(data, self)
        self._leaves[id(t)] = t
        return t

    def is_leaf(self, t: Tensor) -> bool:
        return t.tape is self and self._leaves.get(id(t)) is t

    def record(self, op, inputs, output, forward, vjp, kwargs):
        self.nodes.append(Node(op, tuple(inputs), output, forward, vjp, kwargs))

    def replay(self) -> list[np.ndarray]:
        """Re-run every recorded forward from the recorded inputs."""
        outs = []
        for node in self.nodes:
            arrays = [x.data if isinstance(x, Tensor) else x for x in node.inputs]
            out = np.asarray(node.forward(*arrays, **node.kwargs), dtype=np.float64)
            outs.append(out.reshape(node.output.shape))
        return outs

    def backward(self, loss: Tensor) -> dict[int, np.ndarray]:
        if loss.size != 1:
            raise ShapeError(f"loss must be scalar, got dims {loss.dims}")
        grads = {id(loss): np.ones_like(loss.data)}
        for node in reversed(self.nodes):
            g = grads.pop(id(node.output), None)
            if g is None:
                continue
            arrays = [x.data if isinstance(x, Tensor) else x for x in node.inputs]
            in_grads = node.vjp(g, node.output.data, *arrays, **node.kwargs)
            for x, gx in zip(node.inputs, in_grads):
                if gx is None or not isinstance(x, Tensor) or x.tape is not self:
                    continue
                key = id(x)
                grads[key] = grads[key] + gx if key in grads else gx
        return grads


def grad(loss: Tensor, leaf):
    """Gradient of scalar ``loss`` w.r.t. one leaf or a sequence of leaves.

    Leaves on the tape that do not influence the loss get a zero gradient.
    """
    single = isinstance(leaf, Tensor)
    leaves: Sequence[Tensor] = [leaf] if single else list(leaf)
    tape = loss.tape
    if tape is None:
        raise LineageError("loss is not recorded on any tape")
    for x in leaves:
        if not tape.is_leaf(x):
            raise LineageError("requested tensor is not a leaf of the loss's tape")
    grads = tape.backward(loss)
    out = [Tensor(grads.get(id(x), np.zeros_like(x.data))) for x in leaves]
    return out[0] if single else out

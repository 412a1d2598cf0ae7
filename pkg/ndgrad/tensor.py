"""
Reverse-mode automatic differentiation over dense float64 arrays.

A ``Tape`` records every operation applied to its ``Tensor`` nodes in
execution order. ``Tape.backward`` walks the records in reverse and
accumulates gradients of the bound ``ParamTree`` entries. The tape is not
consumed by a backward pass, so several losses built on one forward pass can
be differentiated one after the other.
"""
from __future__ import annotations

from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from ndgrad.errors import NonFiniteError, ShapeMismatchError, TapeError
from ndgrad.params import ParamTree

ArrayLike = Union[float, int, Sequence[float], np.ndarray]
BackwardFn = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]


class Tensor:
    """A node on a tape: a float64 array plus its position in the record."""

    __slots__ = ("data", "tape", "index", "param_name", "requires_grad")

    def __init__(
        self,
        data: np.ndarray,
        tape: "Tape",
        index: int,
        param_name: Optional[str] = None,
        requires_grad: bool = False,
    ):
        self.data = data
        self.tape = tape
        self.index = index
        self.param_name = param_name
        self.requires_grad = requires_grad

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float("nan")

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            raise TypeError("Division by a Tensor is not supported; multiply by a constant")
        return mul(self, 1.0 / np.asarray(other, dtype=np.float64))

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, param={self.param_name})"


class _Record:
    __slots__ = ("parents", "backward")

    def __init__(self, parents: Tuple[int, ...], backward: Optional[BackwardFn]):
        self.parents = parents
        self.backward = backward


def _check_finite(op: str, data: np.ndarray) -> None:
    if not np.all(np.isfinite(data)):
        raise NonFiniteError(f"{op}: non-finite values in result of shape {data.shape}")


class Tape:
    """
    Records a forward pass so that it can be differentiated.

    Args:
        params: ParamTree whose entries are exposed through ``param`` and
            receive gradients on ``backward``. May be None for pure
            computations on constants.
    """

    def __init__(self, params: Optional[ParamTree] = None):
        self.params = params
        self.output: Optional[Tensor] = None
        self._nodes: List[Tensor] = []
        self._records: List[_Record] = []
        self._param_nodes: dict = {}

    def __len__(self) -> int:
        return len(self._nodes)

    def _push(
        self,
        data: np.ndarray,
        parents: Tuple[Tensor, ...] = (),
        backward: Optional[BackwardFn] = None,
        param_name: Optional[str] = None,
        op: str = "op",
    ) -> Tensor:
        _check_finite(op, data)
        requires_grad = param_name is not None or any(p.requires_grad for p in parents)
        node = Tensor(data, self, len(self._nodes), param_name, requires_grad)
        self._nodes.append(node)
        self._records.append(
            _Record(
                tuple(p.index for p in parents),
                backward if requires_grad and parents else None,
            )
        )
        return node

    def constant(self, value: ArrayLike) -> Tensor:
        """Records a leaf that never receives a gradient."""
        if isinstance(value, Tensor):
            if value.tape is not self:
                raise TapeError("Tensor belongs to a different tape")
            return value
        return self._push(np.array(value, dtype=np.float64), op="constant")

    def param(self, name: str) -> Tensor:
        """Returns the leaf bound to a ParamTree entry, creating it on first use."""
        if self.params is None:
            raise TapeError("Tape has no ParamTree bound")
        node = self._param_nodes.get(name)
        if node is None:
            node = self._push(self.params.value(name), param_name=name, op=f"param[{name}]")
            self._param_nodes[name] = node
        return node

    def backward(
        self, output: Optional[Tensor] = None, seed_grad: Optional[ArrayLike] = None
    ) -> None:
        """
        Accumulates d(output)/d(param) into the gradients of the bound ParamTree.

        Args:
            output: Tensor to differentiate; defaults to ``self.output``.
            seed_grad: Upstream gradient with the output's shape; defaults to ones.
        """
        output = output if output is not None else self.output
        if output is None or not self._nodes:
            raise TapeError("backward called before any forward operation was recorded")
        if output.tape is not self:
            raise TapeError("Output tensor belongs to a different tape")
        seed = (
            np.ones_like(output.data)
            if seed_grad is None
            else np.array(seed_grad, dtype=np.float64)
        )
        if seed.shape != output.shape:
            raise ShapeMismatchError("backward", output.shape, seed.shape, "seed vs output")
        _check_finite("backward seed", seed)
        if not output.requires_grad:
            return

        grads: List[Optional[np.ndarray]] = [None] * (output.index + 1)
        grads[output.index] = seed
        for index in range(output.index, -1, -1):
            grad = grads[index]
            if grad is None:
                continue
            node = self._nodes[index]
            record = self._records[index]
            if node.param_name is not None and self.params is not None:
                _check_finite(f"grad[{node.param_name}]", grad)
                self.params.accumulate_grad(node.param_name, grad)
            if record.backward is None:
                continue
            parent_grads = record.backward(grad)
            for parent, parent_grad in zip(record.parents, parent_grads):
                if parent_grad is None or not self._nodes[parent].requires_grad:
                    continue
                if grads[parent] is None:
                    grads[parent] = parent_grad
                else:
                    grads[parent] = grads[parent] + parent_grad
            grads[index] = None


def forward_graph(
    params: Optional[ParamTree],
    inputs: Sequence[ArrayLike],
    graph: Callable[..., Tensor],
) -> Tuple[Tensor, Tape]:
    """
    Runs ``graph(tape, *input_tensors)`` on a fresh tape.

    Returns:
        The output tensor and the tape, which keeps what ``backward`` needs.
    """
    tape = Tape(params)
    tensors = [tape.constant(value) for value in inputs]
    output = graph(tape, *tensors)
    tape.output = output
    return output, tape


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def _as_tensor(value, like: Tensor) -> Tensor:
    if isinstance(value, Tensor):
        if value.tape is not like.tape:
            raise TapeError("Operands belong to different tapes")
        return value
    return like.tape.constant(value)


def _pair(a, b) -> Tuple[Tensor, Tensor]:
    if isinstance(a, Tensor):
        return a, _as_tensor(b, a)
    if isinstance(b, Tensor):
        return _as_tensor(a, b), b
    raise TypeError("At least one operand must be a Tensor")


def _broadcast_shape(op: str, a: Tensor, b: Tensor) -> Tuple[int, ...]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeMismatchError(op, a.shape, b.shape) from None


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def add(a, b) -> Tensor:
    a, b = _pair(a, b)
    _broadcast_shape("add", a, b)
    sa, sb = a.shape, b.shape
    return a.tape._push(
        a.data + b.data,
        (a, b),
        lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)),
        op="add",
    )


def sub(a, b) -> Tensor:
    a, b = _pair(a, b)
    _broadcast_shape("sub", a, b)
    sa, sb = a.shape, b.shape
    return a.tape._push(
        a.data - b.data,
        (a, b),
        lambda g: (_unbroadcast(g, sa), _unbroadcast(-g, sb)),
        op="sub",
    )


def mul(a, b) -> Tensor:
    """Element-wise product with broadcasting."""
    a, b = _pair(a, b)
    _broadcast_shape("mul", a, b)
    da, db = a.data, b.data
    return a.tape._push(
        da * db,
        (a, b),
        lambda g: (_unbroadcast(g * db, da.shape), _unbroadcast(g * da, db.shape)),
        op="mul",
    )


def neg(a: Tensor) -> Tensor:
    return a.tape._push(-a.data, (a,), lambda g: (-g,), op="neg")


def matmul(a, b) -> Tensor:
    """Matrix product of two 2-D tensors."""
    a, b = _pair(a, b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeMismatchError("matmul", a.shape, b.shape)
    da, db = a.data, b.data
    return a.tape._push(
        da @ db, (a, b), lambda g: (g @ db.T, da.T @ g), op="matmul"
    )


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """
    Affine map ``x @ weight.T + bias`` for a batch ``x`` of shape (B, in).

    ``weight`` has shape (out, in) and ``bias`` shape (out,).
    """
    if x.data.ndim != 2 or weight.data.ndim != 2 or x.shape[1] != weight.shape[1]:
        raise ShapeMismatchError("linear", x.shape, weight.shape, "x vs weight")
    dx, dw = x.data, weight.data
    out = dx @ dw.T
    if bias is None:
        return x.tape._push(out, (x, weight), lambda g: (g @ dw, g.T @ dx), op="linear")
    if bias.shape != (weight.shape[0],):
        raise ShapeMismatchError("linear", weight.shape, bias.shape, "weight vs bias")
    return x.tape._push(
        out + bias.data,
        (x, weight, bias),
        lambda g: (g @ dw, g.T @ dx, g.sum(axis=0)),
        op="linear",
    )


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0
    return a.tape._push(a.data * mask, (a,), lambda g: (g * mask,), op="relu")


def sigmoid(a: Tensor) -> Tensor:
    # 分段计算避免 exp 溢出
    x = a.data
    out = np.empty_like(x)
    positive = x >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-x[positive]))
    exp_x = np.exp(x[~positive])
    out[~positive] = exp_x / (1.0 + exp_x)
    return a.tape._push(out, (a,), lambda g: (g * out * (1.0 - out),), op="sigmoid")


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.data)
    return a.tape._push(out, (a,), lambda g: (g * out,), op="exp")


def log(a: Tensor) -> Tensor:
    if np.any(a.data <= 0):
        raise NonFiniteError(f"log: non-positive input of shape {a.shape}")
    x = a.data
    return a.tape._push(np.log(x), (a,), lambda g: (g / x,), op="log")


def square(a: Tensor) -> Tensor:
    x = a.data
    return a.tape._push(x * x, (a,), lambda g: (2.0 * g * x,), op="square")


def softmax(a: Tensor) -> Tensor:
    """Softmax over the last axis, computed with max subtraction."""
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=-1, keepdims=True)

    def backward(g):
        return (out * (g - np.sum(g * out, axis=-1, keepdims=True)),)

    return a.tape._push(out, (a,), backward, op="softmax")


def log_softmax(a: Tensor) -> Tensor:
    """Log of the softmax over the last axis."""
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    out = shifted - log_norm
    probs = np.exp(out)

    def backward(g):
        return (g - probs * np.sum(g, axis=-1, keepdims=True),)

    return a.tape._push(out, (a,), backward, op="log_softmax")


def sum(a: Tensor, axis: Optional[int] = None) -> Tensor:  # noqa: A001
    shape = a.shape
    if axis is None:
        return a.tape._push(
            np.array(a.data.sum()), (a,), lambda g: (np.broadcast_to(g, shape).copy(),), op="sum"
        )
    axis = axis % a.data.ndim
    return a.tape._push(
        a.data.sum(axis=axis),
        (a,),
        lambda g: (np.broadcast_to(np.expand_dims(g, axis), shape).copy(),),
        op="sum",
    )


def mean(a: Tensor, axis: Optional[int] = None) -> Tensor:
    count = a.data.size if axis is None else a.shape[axis]
    return mul(sum(a, axis), 1.0 / count)


def dot(a, b) -> Tensor:
    """Inner product over the last axis: ``sum(a * b, axis=-1)``."""
    a, b = _pair(a, b)
    if a.shape[-1:] != b.shape[-1:]:
        raise ShapeMismatchError("dot", a.shape, b.shape)
    return sum(mul(a, b), axis=-1)


def weighted_sum(weights, items: Sequence[Tensor]) -> Tensor:
    """
    Interpolates ``items`` with per-row weights: ``sum_k weights[:, k] * items[k]``.

    Args:
        weights: Tensor or array of shape (B, K).
        items: K tensors of shape (B, H).
    """
    if not items:
        raise ValueError("weighted_sum needs at least one item")
    anchor = items[0]
    w = _as_tensor(weights, anchor)
    if w.data.ndim != 2 or w.shape[1] != len(items):
        raise ShapeMismatchError("weighted_sum", w.shape, (len(items),), "weights vs items")
    for item in items:
        if item.shape != anchor.shape or item.shape[0] != w.shape[0]:
            raise ShapeMismatchError("weighted_sum", anchor.shape, item.shape)
    wd = w.data
    datas = [item.data for item in items]
    out = np.zeros_like(datas[0])
    for k, data in enumerate(datas):
        out = out + wd[:, k : k + 1] * data

    def backward(g):
        grad_w = np.stack([np.sum(g * data, axis=1) for data in datas], axis=1)
        return (grad_w,) + tuple(wd[:, k : k + 1] * g for k in range(len(datas)))

    return anchor.tape._push(out, (w, *items), backward, op="weighted_sum")


def reshape(a: Tensor, shape: Tuple[int, ...]) -> Tensor:
    original = a.shape
    try:
        out = a.data.reshape(shape)
    except ValueError:
        raise ShapeMismatchError("reshape", original, tuple(shape)) from None
    return a.tape._push(out, (a,), lambda g: (g.reshape(original),), op="reshape")


def slice_last(a: Tensor, start: int, stop: int) -> Tensor:
    """Selects ``a[..., start:stop]``."""
    if not 0 <= start < stop <= a.shape[-1]:
        raise ShapeMismatchError("slice_last", a.shape, (start, stop))
    shape = a.shape

    def backward(g):
        full = np.zeros(shape)
        full[..., start:stop] = g
        return (full,)

    return a.tape._push(a.data[..., start:stop].copy(), (a,), backward, op="slice_last")


def concat(items: Sequence[Tensor], axis: int = -1) -> Tensor:
    if not items:
        raise ValueError("concat needs at least one item")
    tape = items[0].tape
    items = [_as_tensor(item, items[0]) for item in items]
    try:
        out = np.concatenate([item.data for item in items], axis=axis)
    except ValueError:
        raise ShapeMismatchError("concat", items[0].shape, items[-1].shape) from None
    sizes = [item.shape[axis] for item in items]
    bounds = np.cumsum([0] + sizes)

    def backward(g):
        return tuple(
            np.take(g, np.arange(bounds[k], bounds[k + 1]), axis=axis)
            for k in range(len(items))
        )

    return tape._push(out, tuple(items), backward, op="concat")


def bmv(matrices: Tensor, vectors: Tensor) -> Tensor:
    """Batched matrix-vector product: (B, M, N) x (B, N) -> (B, M)."""
    m, v = matrices.data, vectors.data
    if m.ndim != 3 or v.ndim != 2 or m.shape[0] != v.shape[0] or m.shape[2] != v.shape[1]:
        raise ShapeMismatchError("bmv", m.shape, v.shape)
    out = np.einsum("bmn,bn->bm", m, v)

    def backward(g):
        return (np.einsum("bm,bn->bmn", g, v), np.einsum("bmn,bm->bn", m, g))

    return matrices.tape._push(out, (matrices, vectors), backward, op="bmv")


def take(a: Tensor, indices: np.ndarray) -> Tensor:
    """Picks one entry per row: ``a[b, indices[b]]`` for a (B, N) tensor."""
    idx = np.asarray(indices, dtype=np.int64)
    if a.data.ndim != 2 or idx.shape != (a.shape[0],):
        raise ShapeMismatchError("take", a.shape, idx.shape)
    if np.any(idx < 0) or np.any(idx >= a.shape[1]):
        raise IndexError(f"take: index out of range for {a.shape[1]} columns")
    rows = np.arange(a.shape[0])
    shape = a.shape

    def backward(g):
        full = np.zeros(shape)
        full[rows, idx] = g
        return (full,)

    return a.tape._push(a.data[rows, idx].copy(), (a,), backward, op="take")


def clip(a: Tensor, low: float, high: float) -> Tensor:
    """Clamps values into [low, high]; the gradient is zero outside the interval."""
    mask = (a.data >= low) & (a.data <= high)
    return a.tape._push(np.clip(a.data, low, high), (a,), lambda g: (g * mask,), op="clip")


def minimum(a, b) -> Tensor:
    """Element-wise minimum; ties send the gradient to ``a``."""
    a, b = _pair(a, b)
    if a.shape != b.shape:
        raise ShapeMismatchError("minimum", a.shape, b.shape)
    pick_a = a.data <= b.data
    return a.tape._push(
        np.where(pick_a, a.data, b.data),
        (a, b),
        lambda g: (g * pick_a, g * ~pick_a),
        op="minimum",
    )


def entropy_from_logits(logits: Tensor) -> Tensor:
    """Categorical entropy ``-sum p log p`` per row of a (B, A) logits tensor."""
    log_p = log_softmax(logits)
    return neg(sum(mul(exp(log_p), log_p), axis=-1))

"""Reverse-mode automatic differentiation on a flat computation record.

Every differentiable value is a Tensor: a float64 numpy array plus an optional
node id on a Record. Operations append nodes as they execute, so the graph is
rebuilt from scratch on every forward pass; Record.backward walks the node list
in reverse and accumulates gradients per node id. Forward functions never
mutate their inputs.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np


class ShapeError(ValueError):
    """Operand shapes do not satisfy an operation's contract."""


class ContractError(ValueError):
    """A non-shape precondition was violated."""


def _as_f64(values) -> np.ndarray:
    return np.asarray(values, dtype=np.float64)


class Tensor:
    """A float64 array, optionally tracked on a Record."""

    __slots__ = ("values", "record", "node_id")

    def __init__(self, values: np.ndarray, record: "Record | None" = None,
                 node_id: int | None = None):
        self.values = values
        self.record = record
        self.node_id = node_id

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    def item(self) -> float:
        if self.values.size != 1:
            raise ContractError(f"item() on tensor of shape {self.shape}")
        return float(self.values.reshape(()))

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, node_id={self.node_id})"


class _Node:
    __slots__ = ("tag", "input_ids", "backward")

    def __init__(self, tag: str, input_ids: tuple, backward):
        self.tag = tag
        self.input_ids = input_ids
        self.backward = backward


class Record:
    """Append-only record of one forward pass.

    nodes[i] describes how node i was produced: an operation tag, the node ids
    of its inputs (None for untracked constants), and a closure mapping the
    output gradient to per-input gradients. backward() fills `gradients`,
    a map node id -> gradient array.
    """

    def __init__(self, recording: bool = True):
        self.recording = recording
        self.nodes: list[_Node] = []
        self.gradients: dict[int, np.ndarray] = {}

    def leaf(self, values) -> Tensor:
        """Register a gradient-tracked input (parameters, usually)."""
        arr = _as_f64(values)
        if not self.recording:
            return Tensor(arr, self, None)
        nid = len(self.nodes)
        self.nodes.append(_Node("leaf", (), None))
        return Tensor(arr, self, nid)

    def backward(self, loss: Tensor) -> dict[int, np.ndarray]:
        """Accumulate d(loss)/d(node) for every node reachable from loss."""
        if loss.record is not self or loss.node_id is None:
            raise ContractError("loss tensor is not tracked on this record")
        if loss.values.shape != ():
            raise ContractError(f"loss must be scalar, got shape {loss.values.shape}")
        grads: dict[int, np.ndarray] = {loss.node_id: np.ones((), dtype=np.float64)}
        for nid in range(loss.node_id, -1, -1):
            g = grads.get(nid)
            if g is None:
                continue
            node = self.nodes[nid]
            if node.backward is None:
                continue
            for iid, ig in zip(node.input_ids, node.backward(g)):
                if iid is None or ig is None:
                    continue
                prev = grads.get(iid)
                grads[iid] = ig if prev is None else prev + ig
        self.gradients = grads
        return grads

    def grad(self, t: Tensor) -> np.ndarray | None:
        if t.node_id is None:
            return None
        return self.gradients.get(t.node_id)


def constant(values) -> Tensor:
    """An untracked tensor; gradients never flow into it."""
    return Tensor(_as_f64(values))


def _find_record(tensors) -> Record | None:
    rec = None
    for t in tensors:
        if t.record is None:
            continue
        if rec is None:
            rec = t.record
        elif rec is not t.record:
            raise ContractError("operands belong to different records")
    return rec


def _emit(tag: str, inputs: tuple[Tensor, ...], values: np.ndarray,
          backward: Callable | None) -> Tensor:
    rec = _find_record(inputs)
    if rec is None or not rec.recording:
        return Tensor(values, rec, None)
    ids = tuple(t.node_id for t in inputs)
    if all(i is None for i in ids):
        return Tensor(values, rec, None)
    nid = len(rec.nodes)
    rec.nodes.append(_Node(tag, ids, backward))
    return Tensor(values, rec, nid)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcasted gradient back down to `shape`."""
    extra = grad.ndim - len(shape)
    if extra:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


# ---------------------------------------------------------------------------
# linear algebra

def matmul(a: Tensor, b: Tensor) -> Tensor:
    av, bv = a.values, b.values
    if av.ndim < 2 or bv.ndim < 2:
        raise ShapeError(f"matmul needs matrices, got {av.shape} @ {bv.shape}")
    if av.shape[-1] != bv.shape[-2]:
        raise ShapeError(f"matmul inner dimensions differ: {av.shape} @ {bv.shape}")
    out = np.matmul(av, bv)
    need_a, need_b = a.node_id is not None, b.node_id is not None

    def backward(g):
        ga = gb = None
        if need_a:
            ga = _unbroadcast(np.matmul(g, bv.swapaxes(-1, -2)), av.shape)
        if need_b:
            gb = _unbroadcast(np.matmul(av.swapaxes(-1, -2), g), bv.shape)
        return ga, gb

    return _emit("matmul", (a, b), out, backward)


def _elementwise(tag, a, b, fwd, bwd_a, bwd_b):
    if a.values.shape != b.values.shape:
        raise ShapeError(f"{tag} requires identical shapes, got {a.values.shape} "
                         f"and {b.values.shape}")
    out = fwd(a.values, b.values)

    def backward(g):
        return bwd_a(g), bwd_b(g)

    return _emit(tag, (a, b), out, backward)


def add(a: Tensor, b: Tensor) -> Tensor:
    return _elementwise("add", a, b, np.add, lambda g: g, lambda g: g)


def sub(a: Tensor, b: Tensor) -> Tensor:
    return _elementwise("sub", a, b, np.subtract, lambda g: g, lambda g: -g)


def mul(a: Tensor, b: Tensor) -> Tensor:
    av, bv = a.values, b.values
    return _elementwise("mul", a, b, np.multiply,
                        lambda g: g * bv, lambda g: g * av)


def broadcast_add(a: Tensor, b: Tensor) -> Tensor:
    """Addition with numpy broadcasting; used for bias terms."""
    out = a.values + b.values
    ash, bsh = a.values.shape, b.values.shape

    def backward(g):
        return _unbroadcast(g, ash), _unbroadcast(g, bsh)

    return _emit("badd", (a, b), out, backward)


def affine_const(a: Tensor, scale: float, shift: float = 0.0) -> Tensor:
    """y = a * scale + shift with python-scalar coefficients."""
    out = a.values * scale + shift

    def backward(g):
        return (g * scale,)

    return _emit("affine_const", (a,), out, backward)


# ---------------------------------------------------------------------------
# activations and pointwise functions

def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.values)
    return _emit("tanh", (a,), out, lambda g: (g * (1.0 - out * out),))


def sigmoid(a: Tensor) -> Tensor:
    with np.errstate(over="ignore"):
        out = 1.0 / (1.0 + np.exp(-a.values))
    return _emit("sigmoid", (a,), out, lambda g: (g * out * (1.0 - out),))


def elu(a: Tensor) -> Tensor:
    """Exponential linear unit with negative-branch coefficient 1."""
    av = a.values
    pos = av > 0
    out = np.where(pos, av, np.expm1(av))
    return _emit("elu", (a,), out,
                 lambda g: (g * np.where(pos, 1.0, out + 1.0),))


def log(a: Tensor) -> Tensor:
    if np.any(a.values <= 0.0):
        raise ContractError("log requires strictly positive values")
    av = a.values
    out = np.log(av)
    return _emit("log", (a,), out, lambda g: (g / av,))


def clamp(a: Tensor, lo: float, hi: float) -> Tensor:
    if not lo < hi:
        raise ContractError(f"clamp bounds must satisfy lo < hi, got {lo}, {hi}")
    av = a.values
    out = np.clip(av, lo, hi)
    inside = (av >= lo) & (av <= hi)
    return _emit("clamp", (a,), out, lambda g: (g * inside,))


def layer_norm(a: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis to zero mean / unit variance, then scale-shift."""
    av = a.values
    h = av.shape[-1] if av.ndim else 0
    if h < 2:
        raise ShapeError(f"layer_norm needs a last dimension >= 2, got shape {av.shape}")
    if gain.values.shape != (h,) or bias.values.shape != (h,):
        raise ShapeError(f"layer_norm gain/bias must have shape ({h},), got "
                         f"{gain.values.shape} and {bias.values.shape}")
    mu = av.mean(axis=-1, keepdims=True)
    centered = av - mu
    var = np.mean(centered * centered, axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv
    out = xhat * gain.values + bias.values
    gv = gain.values
    lead = tuple(range(av.ndim - 1))

    def backward(g):
        dgain = (g * xhat).sum(axis=lead)
        dbias = g.sum(axis=lead)
        gx = g * gv
        dx = inv * (gx - gx.mean(axis=-1, keepdims=True)
                    - xhat * (gx * xhat).mean(axis=-1, keepdims=True))
        return dx, dgain, dbias

    return _emit("layer_norm", (a, gain, bias), out, backward)


# ---------------------------------------------------------------------------
# structure

def concat(parts: Sequence[Tensor], axis: int = 0) -> Tensor:
    if not parts:
        raise ContractError("concat of zero tensors")
    ndim = parts[0].values.ndim
    for p in parts[1:]:
        if p.values.ndim != ndim:
            raise ShapeError(f"concat rank mismatch: {parts[0].values.shape} "
                             f"vs {p.values.shape}")
    try:
        out = np.concatenate([p.values for p in parts], axis=axis)
    except ValueError as e:
        raise ShapeError(f"concat: {e}") from None
    sizes = [p.values.shape[axis] for p in parts]
    offsets = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.split(g, offsets, axis=axis))

    return _emit("concat", tuple(parts), out, backward)


def take(a: Tensor, indices, axis: int = 0) -> Tensor:
    """Gather slices along an axis; backward scatter-adds (duplicates sum)."""
    idx = np.asarray(indices, dtype=np.intp)
    if idx.ndim != 1:
        raise ShapeError(f"take indices must be 1-d, got shape {idx.shape}")
    av = a.values
    if axis < 0 or axis >= av.ndim:
        raise ShapeError(f"take axis {axis} out of range for shape {av.shape}")
    if idx.size and (int(idx.min()) < 0 or int(idx.max()) >= av.shape[axis]):
        raise ContractError(f"take index out of range for axis {axis} of "
                            f"shape {av.shape}")
    ash = av.shape
    where = (slice(None),) * axis + (idx,)
    out = av[where]

    def backward(g):
        ga = np.zeros(ash, dtype=np.float64)
        np.add.at(ga, where, g)
        return (ga,)

    return _emit("take", (a,), out, backward)


def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    old = a.values.shape
    try:
        out = a.values.reshape(shape)
    except ValueError:
        raise ShapeError(f"cannot reshape {old} to {shape}") from None
    return _emit("reshape", (a,), out, lambda g: (g.reshape(old),))


def sum_all(a: Tensor) -> Tensor:
    """Sum every element into a scalar (shape ())."""
    ash = a.values.shape
    out = np.asarray(a.values.sum(), dtype=np.float64)
    return _emit("sum", (a,), out, lambda g: (g * np.ones(ash),))


# ---------------------------------------------------------------------------
# parameters

class ParamStore:
    """Named float64 parameter arrays with deterministic seeded init.

    Names are unique and shapes immutable once added. Weight matrices draw
    from uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)); the draw order is the
    insertion order, so a given seed reproduces values bit for bit.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._rng = np.random.default_rng(self.seed)
        self._arrays: dict[str, np.ndarray] = {}

    def _register(self, name: str, arr: np.ndarray) -> np.ndarray:
        if name in self._arrays:
            raise ContractError(f"duplicate parameter name: {name}")
        self._arrays[name] = arr
        return arr

    def add_uniform(self, name: str, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
        if fan_in < 1:
            raise ContractError(f"fan_in must be positive, got {fan_in}")
        bound = 1.0 / math.sqrt(fan_in)
        return self._register(name, self._rng.uniform(-bound, bound, size=shape))

    def add_zeros(self, name: str, shape: tuple[int, ...]) -> np.ndarray:
        return self._register(name, np.zeros(shape, dtype=np.float64))

    def add_ones(self, name: str, shape: tuple[int, ...]) -> np.ndarray:
        return self._register(name, np.ones(shape, dtype=np.float64))

    def set_(self, name: str, values) -> None:
        arr = _as_f64(values)
        cur = self._arrays[name]
        if arr.shape != cur.shape:
            raise ShapeError(f"parameter {name} has shape {cur.shape}; "
                             f"cannot assign shape {arr.shape}")
        self._arrays[name] = arr

    def zero_all(self) -> None:
        for name in self._arrays:
            self._arrays[name] = np.zeros_like(self._arrays[name])

    def __getitem__(self, name: str) -> np.ndarray:
        return self._arrays[name]

    def __contains__(self, name: str) -> bool:
        return name in self._arrays

    def names(self) -> list[str]:
        return list(self._arrays)

    def items(self):
        return self._arrays.items()

    def n_components(self) -> int:
        return sum(a.size for a in self._arrays.values())

    def copy(self) -> "ParamStore":
        dup = ParamStore(self.seed)
        dup._arrays = {k: v.copy() for k, v in self._arrays.items()}
        return dup

    def bind(self, record: Record) -> dict[str, Tensor]:
        """Register every parameter as a tracked leaf on `record`."""
        return {name: record.leaf(arr) for name, arr in self._arrays.items()}

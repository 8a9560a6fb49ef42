"""Dense tensors with reverse-mode automatic differentiation.

Row-major numpy storage, explicit shapes, no implicit broadcasting beyond
python scalars. Operations executed inside a `Tape` context record
themselves in execution order; `backward` walks the tape once in reverse.
Enough machinery for GRUs, small conv stacks, and GAN training -- nothing
more (no higher-order derivatives, no views, no GPU).
"""

from __future__ import annotations

import threading
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionError

_LOCAL = threading.local()


def _current_tape() -> "Tape | None":
    return getattr(_LOCAL, "tape", None)


class Tape:
    """Ordered record of executed operations for one forward pass.

    A tape and the tensors written to it are confined to one logical
    thread; entering the context installs it as that thread's recorder.
    """

    def __init__(self):
        self.nodes: list[tuple[Tensor, Callable[[np.ndarray], None]]] = []

    def __enter__(self) -> "Tape":
        self._outer = _current_tape()
        _LOCAL.tape = self
        return self

    def __exit__(self, *exc):
        _LOCAL.tape = self._outer
        return False


class Tensor:
    """Dense n-dimensional real array with an optional gradient."""

    __slots__ = ("data", "requires_grad", "grad", "tape")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        arr = np.asarray(data, dtype=dtype)
        if arr.dtype.kind != "f":
            arr = arr.astype(np.float64)
        if not np.all(np.isfinite(arr)):
            raise ValueError("tensor initialized with non-finite values")
        self.data = arr
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self.tape: Tape | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data.reshape(()))

    def numpy(self) -> np.ndarray:
        return self.data

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    # operator sugar; scalars allowed, tensor operands must match shapes
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


def _result(data: np.ndarray, inputs: Sequence[Tensor],
            backward: Callable[[np.ndarray], None]) -> Tensor:
    """Wrap an op result, recording it on the active tape when tracked."""
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    tape = _current_tape()
    tracked = tape is not None and any(
        t.requires_grad or t.tape is tape for t in inputs)
    out.requires_grad = tracked
    out.tape = tape if tracked else None
    if tracked:
        tape.nodes.append((out, backward))
    return out


def _needs(t: Tensor) -> bool:
    return t.tape is not None or t.requires_grad


def _accum(t: Tensor, g: np.ndarray):
    if _needs(t):
        t.grad = g.copy() if t.grad is None else t.grad + g


def _as_operands(a, b):
    """Resolve an elementwise pair: shapes must match or one side scalar."""
    if isinstance(a, Tensor) and isinstance(b, Tensor):
        if a.shape != b.shape:
            raise DimensionError(f"elementwise shapes differ: {a.shape} vs {b.shape}")
        return a, b, None
    if isinstance(a, Tensor):
        return a, None, float(b)
    if isinstance(b, Tensor):
        return b, None, float(a)
    raise TypeError("at least one operand must be a Tensor")


# ---------------------------------------------------------------------------
# elementwise arithmetic and activations

def add(a, b) -> Tensor:
    x, y, c = _as_operands(a, b)
    if y is None:
        def bwd(g):
            _accum(x, g)
        return _result(x.data + c, (x,), bwd)

    def bwd(g):
        _accum(x, g)
        _accum(y, g)
    return _result(x.data + y.data, (x, y), bwd)


def sub(a, b) -> Tensor:
    if isinstance(a, Tensor) and not isinstance(b, Tensor):
        return add(a, -float(b))
    if not isinstance(a, Tensor):
        return add(mul(b, -1.0), float(a))
    x, y = a, b
    if x.shape != y.shape:
        raise DimensionError(f"elementwise shapes differ: {x.shape} vs {y.shape}")

    def bwd(g):
        _accum(x, g)
        _accum(y, -g)
    return _result(x.data - y.data, (x, y), bwd)


def mul(a, b) -> Tensor:
    x, y, c = _as_operands(a, b)
    if y is None:
        def bwd(g):
            _accum(x, g * c)
        return _result(x.data * c, (x,), bwd)

    def bwd(g):
        _accum(x, g * y.data)
        _accum(y, g * x.data)
    return _result(x.data * y.data, (x, y), bwd)


def elementwise(op: str, a, b) -> Tensor:
    """Dispatch add|mul|sub by name (config-driven call sites)."""
    try:
        return {"add": add, "mul": mul, "sub": sub}[op](a, b)
    except KeyError:
        raise ValueError(f"unknown elementwise op {op!r}") from None


def sigmoid(a: Tensor) -> Tensor:
    s = 1.0 / (1.0 + np.exp(-a.data))

    def bwd(g):
        _accum(a, g * s * (1.0 - s))
    return _result(s, (a,), bwd)


def tanh(a: Tensor) -> Tensor:
    t = np.tanh(a.data)

    def bwd(g):
        _accum(a, g * (1.0 - t * t))
    return _result(t, (a,), bwd)


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0

    def bwd(g):
        _accum(a, g * mask)
    return _result(a.data * mask, (a,), bwd)


def activation(op: str, a: Tensor) -> Tensor:
    try:
        return {"sigmoid": sigmoid, "tanh": tanh, "relu": relu}[op](a)
    except KeyError:
        raise ValueError(f"unknown activation {op!r}") from None


def log(a: Tensor) -> Tensor:
    def bwd(g):
        _accum(a, g / a.data)
    return _result(np.log(a.data), (a,), bwd)


def clip(a: Tensor, lo: float, hi: float) -> Tensor:
    """Clamp values; gradient passes only through the unclamped interior."""
    inside = (a.data > lo) & (a.data < hi)

    def bwd(g):
        _accum(a, g * inside)
    return _result(np.clip(a.data, lo, hi), (a,), bwd)


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    s = e / e.sum(axis=axis, keepdims=True)

    def bwd(g):
        inner = (g * s).sum(axis=axis, keepdims=True)
        _accum(a, s * (g - inner))
    return _result(s, (a,), bwd)


# ---------------------------------------------------------------------------
# linear algebra

def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise DimensionError("matmul expects 2-D operands")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul inner extents differ: {a.shape} x {b.shape}")
    ad, bd = a.data, b.data

    def bwd(g):
        _accum(a, g @ bd.T)
        _accum(b, ad.T @ g)
    return _result(ad @ bd, (a, b), bwd)


def affine(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """x[k] @ w[k,n] + b[n] as a single tape node (hot path in recurrences)."""
    if x.data.ndim != 1 or w.data.ndim != 2 or b.data.ndim != 1:
        raise DimensionError("affine expects vector, matrix, vector")
    if x.shape[0] != w.shape[0] or w.shape[1] != b.shape[0]:
        raise DimensionError(f"affine shapes incompatible: {x.shape}, {w.shape}, {b.shape}")
    xd, wd = x.data, w.data

    def bwd(g):
        if _needs(x):
            _accum(x, wd @ g)
        if _needs(w):
            _accum(w, np.outer(xd, g))
        _accum(b, g)
    return _result(xd @ wd + b.data, (x, w, b), bwd)


def dual_affine(x: Tensor, w: Tensor, h: Tensor, u: Tensor, b: Tensor) -> Tensor:
    """x[k] @ w[k,n] + h[m] @ u[m,n] + b[n]; one node per recurrence gate."""
    if x.shape[0] != w.shape[0] or h.shape[0] != u.shape[0] \
            or w.shape[1] != u.shape[1] or u.shape[1] != b.shape[0]:
        raise DimensionError("dual_affine shapes incompatible")
    xd, wd, hd, ud = x.data, w.data, h.data, u.data

    def bwd(g):
        if _needs(x):
            _accum(x, wd @ g)
        if _needs(w):
            _accum(w, np.outer(xd, g))
        if _needs(h):
            _accum(h, ud @ g)
        if _needs(u):
            _accum(u, np.outer(hd, g))
        _accum(b, g)
    return _result(xd @ wd + hd @ ud + b.data, (x, w, h, u, b), bwd)


def add_channel_bias(x: Tensor, b: Tensor) -> Tensor:
    """Add a [c] bias across the spatial extents of a [c,h,w] map."""
    if x.data.ndim != 3 or b.data.ndim != 1 or b.shape[0] != x.shape[0]:
        raise DimensionError("add_channel_bias expects [c,h,w] and [c]")

    def bwd(g):
        _accum(x, g)
        _accum(b, g.sum(axis=(1, 2)))
    return _result(x.data + b.data[:, None, None], (x, b), bwd)


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(int(s) for s in shape)
    if int(np.prod(shape)) != a.size:
        raise DimensionError(f"cannot reshape {a.shape} to {shape}")
    old = a.shape

    def bwd(g):
        _accum(a, g.reshape(old))
    return _result(a.data.reshape(shape), (a,), bwd)


def concat(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 1 or b.data.ndim != 1:
        raise DimensionError("concat expects 1-D tensors")
    n = a.shape[0]

    def bwd(g):
        _accum(a, g[:n])
        _accum(b, g[n:])
    return _result(np.concatenate([a.data, b.data]), (a, b), bwd)


def row(a: Tensor, i: int) -> Tensor:
    """Select row i of a 2-D tensor; backward scatters into that row."""
    if a.data.ndim != 2:
        raise DimensionError("row expects a 2-D tensor")

    def bwd(g):
        full = np.zeros_like(a.data)
        full[i] = g
        _accum(a, full)
    return _result(a.data[i].copy(), (a,), bwd)


def sum_all(a: Tensor) -> Tensor:
    shape = a.shape

    def bwd(g):
        _accum(a, np.full(shape, float(g), a.data.dtype))
    return _result(np.asarray(a.data.sum(), dtype=a.data.dtype), (a,), bwd)


def mean_all(a: Tensor) -> Tensor:
    return mul(sum_all(a), 1.0 / a.size)


def embedding_lookup(table: Tensor, ids: Sequence[int]) -> Tensor:
    if table.data.ndim != 2:
        raise DimensionError("embedding table must be 2-D")
    idx = np.asarray(list(ids), dtype=np.int64)
    v = table.shape[0]
    if idx.size and (idx.min() < 0 or idx.max() >= v):
        raise IndexError(f"embedding id out of range for table of {v} rows")

    def bwd(g):
        full = np.zeros_like(table.data)
        np.add.at(full, idx, g)
        _accum(table, full)
    out = table.data[idx] if idx.size else np.zeros((0, table.shape[1]), table.data.dtype)
    return _result(out, (table,), bwd)


# ---------------------------------------------------------------------------
# convolution / pooling / image-shaped ops

def _conv_out_extent(extent: int, k: int, stride: int, pad: int) -> int:
    span = extent + 2 * pad - k
    if span < 0 or span % stride != 0:
        raise DimensionError(
            f"conv/pool output extent not integral: extent={extent} k={k} stride={stride} pad={pad}")
    return span // stride + 1


def _im2col(x: np.ndarray, kh: int, kw: int, stride: int, oh: int, ow: int) -> np.ndarray:
    # rows ordered (channel, ki, kj) to match kernel.reshape(c_out, -1)
    win = np.lib.stride_tricks.sliding_window_view(x, (kh, kw), axis=(1, 2))
    win = win[:, ::stride, ::stride]
    return np.ascontiguousarray(win.transpose(0, 3, 4, 1, 2)).reshape(
        x.shape[0] * kh * kw, oh * ow)


def _col2im(cols: np.ndarray, c: int, hp: int, wp: int, kh: int, kw: int,
            stride: int, oh: int, ow: int) -> np.ndarray:
    x = np.zeros((c, hp, wp), cols.dtype)
    n = 0
    for ci in range(c):
        for i in range(kh):
            for j in range(kw):
                x[ci, i:i + stride * oh:stride, j:j + stride * ow:stride] += \
                    cols[n].reshape(oh, ow)
                n += 1
    return x


def conv2d(x: Tensor, kernel: Tensor, stride: int = 1, pad: int = 0) -> Tensor:
    """Cross-correlation of [c_in,h,w] with [c_out,c_in,kh,kw]."""
    if x.data.ndim != 3 or kernel.data.ndim != 4:
        raise DimensionError("conv2d expects input [c,h,w] and kernel [o,c,kh,kw]")
    c_in, h, w = x.shape
    c_out, kc, kh, kw = kernel.shape
    if kc != c_in:
        raise DimensionError(f"kernel expects {kc} input channels, got {c_in}")
    oh = _conv_out_extent(h, kh, stride, pad)
    ow = _conv_out_extent(w, kw, stride, pad)
    xp = np.pad(x.data, ((0, 0), (pad, pad), (pad, pad))) if pad else x.data
    cols = _im2col(xp, kh, kw, stride, oh, ow)
    w2 = kernel.data.reshape(c_out, -1)
    out = (w2 @ cols).reshape(c_out, oh, ow)

    def bwd(g):
        g2 = g.reshape(c_out, -1)
        if _needs(kernel):
            # cols recomputed rather than retained: keeps tape memory flat
            cols_b = _im2col(xp, kh, kw, stride, oh, ow)
            _accum(kernel, (g2 @ cols_b.T).reshape(kernel.shape))
        if _needs(x):
            hp, wp = xp.shape[1], xp.shape[2]
            if stride == 1:
                # input gradient as correlation with the flipped kernel
                gp = np.pad(g, ((0, 0), (kh - 1, kh - 1), (kw - 1, kw - 1)))
                cols_g = _im2col(gp, kh, kw, 1, hp, wp)
                flipped = kernel.data[:, :, ::-1, ::-1].transpose(1, 0, 2, 3)
                dxp = (flipped.reshape(c_in, -1) @ cols_g).reshape(c_in, hp, wp)
            else:
                dxp = _col2im(w2.T @ g2, c_in, hp, wp, kh, kw, stride, oh, ow)
            _accum(x, dxp[:, pad:pad + h, pad:pad + w] if pad else dxp)
    return _result(out, (x, kernel), bwd)


def pool(x: Tensor, mode: str, window: int, stride: int | None = None) -> Tensor:
    """Per-window max or mean over [c,h,w]; max ties route to first in scan order."""
    if mode not in ("max", "avg"):
        raise ValueError(f"unknown pool mode {mode!r}")
    if x.data.ndim != 3:
        raise DimensionError("pool expects input [c,h,w]")
    stride = window if stride is None else stride
    c, h, w = x.shape
    oh = _conv_out_extent(h, window, stride, 0)
    ow = _conv_out_extent(w, window, stride, 0)

    if stride == window and h == oh * window and w == ow * window:
        # non-overlapping fast path: windows as a trailing axis in scan order
        win = (x.data.reshape(c, oh, window, ow, window)
               .transpose(0, 1, 3, 2, 4)
               .reshape(c, oh, ow, window * window))
        if mode == "avg":
            out = win.mean(-1)

            def bwd(g):
                dwin = np.repeat(g[..., None] / (window * window), window * window, axis=-1)
                _accum(x, _windows_to_image(dwin, c, oh, ow, window))
        else:
            amax = win.argmax(-1)
            out = np.take_along_axis(win, amax[..., None], axis=-1)[..., 0]

            def bwd(g):
                dwin = np.zeros_like(win)
                np.put_along_axis(dwin, amax[..., None], g[..., None], axis=-1)
                _accum(x, _windows_to_image(dwin, c, oh, ow, window))
        return _result(out, (x,), bwd)

    # general (possibly overlapping) path
    out = np.empty((c, oh, ow), x.data.dtype)
    for i in range(oh):
        for j in range(ow):
            patch = x.data[:, i * stride:i * stride + window, j * stride:j * stride + window]
            out[:, i, j] = patch.mean((1, 2)) if mode == "avg" else patch.max((1, 2))

    def bwd(g):
        dx = np.zeros_like(x.data)
        for i in range(oh):
            for j in range(ow):
                sl = np.s_[:, i * stride:i * stride + window, j * stride:j * stride + window]
                if mode == "avg":
                    dx[sl] += g[:, i:i + 1, j:j + 1] / (window * window)
                else:
                    patch = x.data[sl].reshape(c, -1)
                    flat = patch.argmax(1)
                    for ci in range(c):
                        di, dj = divmod(int(flat[ci]), window)
                        dx[ci, i * stride + di, j * stride + dj] += g[ci, i, j]
        _accum(x, dx)
    return _result(out, (x,), bwd)


def _windows_to_image(dwin, c, oh, ow, window):
    return (dwin.reshape(c, oh, ow, window, window)
            .transpose(0, 1, 3, 2, 4)
            .reshape(c, oh * window, ow * window))


def channel_affine(x: Tensor, scale: Tensor, shift: Tensor) -> Tensor:
    """Per-channel scale and shift of a [c,h,w] map by [c] vectors."""
    if x.data.ndim != 3 or scale.data.ndim != 1 or shift.data.ndim != 1:
        raise DimensionError("channel_affine expects [c,h,w], [c], [c]")
    if scale.shape[0] != x.shape[0] or shift.shape[0] != x.shape[0]:
        raise DimensionError("channel_affine channel counts differ")
    s = scale.data[:, None, None]

    def bwd(g):
        _accum(x, g * s)
        _accum(scale, (g * x.data).sum(axis=(1, 2)))
        _accum(shift, g.sum(axis=(1, 2)))
    return _result(x.data * s + shift.data[:, None, None], (x, scale, shift), bwd)


def upsample2x(x: Tensor) -> Tensor:
    """Nearest-neighbour x2 upsampling of [c,h,w]."""
    if x.data.ndim != 3:
        raise DimensionError("upsample2x expects input [c,h,w]")
    c, h, w = x.shape

    def bwd(g):
        _accum(x, g.reshape(c, h, 2, w, 2).sum(axis=(2, 4)))
    return _result(np.repeat(np.repeat(x.data, 2, axis=1), 2, axis=2), (x,), bwd)


# ---------------------------------------------------------------------------
# reverse pass and gradient checking

def backward(loss: Tensor):
    """Populate dLoss/dTensor on every tracked tensor reachable from loss."""
    if loss.size != 1:
        raise DimensionError(f"backward needs a scalar loss, got shape {loss.shape}")
    tape = loss.tape
    if tape is None:
        raise ValueError("loss was not recorded on a tape")
    loss.grad = np.ones_like(loss.data)
    for out, node_bwd in reversed(tape.nodes):
        if out.grad is not None:
            node_bwd(out.grad)


def grad_check(f: Callable[..., Tensor], inputs: Sequence[Tensor],
               eps: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    `f(*inputs)` must return a scalar Tensor and be deterministic. Inputs
    are perturbed coordinatewise at 64-bit precision.
    """
    for t in inputs:
        if t.data.dtype != np.float64:
            raise ValueError("grad_check requires float64 inputs")
        t.grad = None
    with Tape():
        out = f(*inputs)
        if out.size != 1:
            raise DimensionError("grad_check function must be scalar-valued")
        backward(out)
    analytic = [np.zeros_like(t.data) if t.grad is None else t.grad.copy()
                for t in inputs]
    worst = 0.0
    for t, ana in zip(inputs, analytic):
        flat = t.data.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            hi = f(*inputs).item()
            flat[i] = orig - eps
            lo = f(*inputs).item()
            flat[i] = orig
            num = (hi - lo) / (2.0 * eps)
            a = ana.reshape(-1)[i]
            err = abs(a - num) / max(1e-8, abs(a) + abs(num))
            worst = max(worst, err)
    return worst

"""Dense float64 tensor engine with reverse-mode automatic differentiation.

Every primitive computes its forward value with numpy, checks the result
for NaN/Inf, and (when a Tape is active) records a backward rule. Calling
``backward`` replays the records in reverse order, accumulating gradients
into the ``grad`` field of every tensor that contributed to the loss.

The operation set is intentionally small: exactly what a conv / LSTM /
attention / dense classifier graph needs. Broadcasting is supported only
to the extent numpy allows it for add/mul (bias vectors, scalar factors,
attention-weight columns); anything fancier is out of scope.
"""

from __future__ import annotations

import numpy as np


class ShapeMismatch(ValueError):
    """Operands cannot be combined under the primitive's shape rules."""


class NonFiniteValue(FloatingPointError):
    """An operation produced NaN or Inf."""


class NotScalarLoss(ValueError):
    """backward() was asked to differentiate a non-scalar tensor."""


class Tensor:
    """Dense n-dimensional float64 array plus an accumulated gradient.

    ``grad`` is lazily allocated the first time a backward rule touches
    the tensor; it always matches ``data`` in shape.
    """

    __slots__ = ("data", "grad", "name")

    def __init__(self, data, name: str | None = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"Tensor{label}(shape={self.data.shape})"

    def dump(self) -> str:
        """Debug text dump: one shape header line, then flat values."""
        head = " ".join(str(d) for d in self.data.shape)
        body = " ".join(repr(v) for v in self.data.ravel())
        return f"shape {head}\n{body}\n"


class Parameter(Tensor):
    """A named, trainable tensor. Its gradient buffer always exists."""

    def __init__(self, data, name: str):
        super().__init__(data, name)
        self.grad = np.zeros_like(self.data)

    def zero_grad(self):
        self.grad[...] = 0.0


class Tape:
    """Ordered record of primitive applications.

    Recording order is a topological order of the computation DAG, so
    backward simply walks the records in reverse.
    """

    def __init__(self):
        self.records: list[tuple[Tensor, object]] = []

    def __enter__(self):
        _TAPE_STACK.append(self)
        return self

    def __exit__(self, *exc):
        _TAPE_STACK.pop()
        return False

    def __len__(self):
        return len(self.records)


_TAPE_STACK: list[Tape] = []


def _check_finite(arr: np.ndarray, op: str) -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValue(f"{op} produced a non-finite value")
    return arr


def _out(arr: np.ndarray, op: str, backward) -> Tensor:
    t = Tensor(_check_finite(arr, op))
    if _TAPE_STACK:
        _TAPE_STACK[-1].records.append((t, backward))
    return t


def _accum(t: Tensor, g: np.ndarray):
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Reduce a broadcast gradient back down to the operand's shape."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def constant(data, name: str | None = None) -> Tensor:
    """A tensor that participates in the graph but is never differentiated
    through (it simply accumulates a gradient nobody reads)."""
    return Tensor(data, name)


# ---------------------------------------------------------------------------
# elementwise and linear-algebra primitives


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    try:
        data = a.data + b.data
    except ValueError as e:
        raise ShapeMismatch(f"add: {a.shape} vs {b.shape}") from e

    def bw(g):
        _accum(a, _unbroadcast(g, a.shape))
        _accum(b, _unbroadcast(g, b.shape))

    return _out(data, "add", bw)


def sub(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    try:
        data = a.data - b.data
    except ValueError as e:
        raise ShapeMismatch(f"sub: {a.shape} vs {b.shape}") from e

    def bw(g):
        _accum(a, _unbroadcast(g, a.shape))
        _accum(b, _unbroadcast(-g, b.shape))

    return _out(data, "sub", bw)


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    try:
        data = a.data * b.data
    except ValueError as e:
        raise ShapeMismatch(f"mul: {a.shape} vs {b.shape}") from e

    def bw(g):
        _accum(a, _unbroadcast(g * b.data, a.shape))
        _accum(b, _unbroadcast(g * a.data, b.shape))

    return _out(data, "mul", bw)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ShapeMismatch("matmul expects rank-2 operands")
    if a.shape[1] != b.shape[0]:
        raise ShapeMismatch(f"matmul: {a.shape} @ {b.shape}")
    with np.errstate(over="ignore", invalid="ignore"):
        data = a.data @ b.data

    def bw(g):
        _accum(a, g @ b.data.T)
        _accum(b, a.data.T @ g)

    return _out(data, "matmul", bw)


def tanh(x: Tensor) -> Tensor:
    data = np.tanh(x.data)

    def bw(g):
        _accum(x, g * (1.0 - data * data))

    return _out(data, "tanh", bw)


def sigmoid(x: Tensor) -> Tensor:
    # numerically symmetric form; exp never overflows for the negative branch
    data = np.where(x.data >= 0,
                    1.0 / (1.0 + np.exp(-np.clip(x.data, 0, None))),
                    np.exp(np.clip(x.data, None, 0)) / (1.0 + np.exp(np.clip(x.data, None, 0))))

    def bw(g):
        _accum(x, g * data * (1.0 - data))

    return _out(data, "sigmoid", bw)


def relu(x: Tensor) -> Tensor:
    data = np.maximum(x.data, 0.0)

    def bw(g):
        _accum(x, g * (x.data > 0))

    return _out(data, "relu", bw)


def exp(x: Tensor) -> Tensor:
    with np.errstate(over="ignore"):
        data = np.exp(x.data)

    def bw(g):
        _accum(x, g * data)

    return _out(data, "exp", bw)


def log(x: Tensor) -> Tensor:
    with np.errstate(divide="ignore", invalid="ignore"):
        data = np.log(x.data)

    def bw(g):
        _accum(x, g / x.data)

    return _out(data, "log", bw)


def clip(x: Tensor, lo: float, hi: float) -> Tensor:
    """Clamp values to [lo, hi]; the gradient is zero where the clamp binds."""
    data = np.clip(x.data, lo, hi)
    inside = (x.data >= lo) & (x.data <= hi)

    def bw(g):
        _accum(x, g * inside)

    return _out(data, "clip", bw)


# ---------------------------------------------------------------------------
# shape plumbing


def reshape(x: Tensor, shape: tuple[int, ...]) -> Tensor:
    try:
        data = x.data.reshape(shape)
    except ValueError as e:
        raise ShapeMismatch(f"reshape {x.shape} -> {shape}") from e

    def bw(g):
        _accum(x, g.reshape(x.shape))

    return _out(data, "reshape", bw)


def concat(tensors: list[Tensor], axis: int) -> Tensor:
    if not tensors:
        raise ShapeMismatch("concat of zero tensors")
    try:
        data = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as e:
        raise ShapeMismatch("concat: incompatible shapes") from e
    sizes = [t.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def bw(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            idx = [slice(None)] * g.ndim
            idx[axis] = slice(lo, hi)
            _accum(t, g[tuple(idx)])

    return _out(data, "concat", bw)


def slice_axis(x: Tensor, axis: int, start: int, stop: int) -> Tensor:
    """Contiguous slice along one axis, rank preserved."""
    if not (0 <= start < stop <= x.shape[axis]):
        raise ShapeMismatch(f"slice [{start}:{stop}] out of range on axis {axis} of {x.shape}")
    idx = [slice(None)] * x.data.ndim
    idx[axis] = slice(start, stop)
    idx = tuple(idx)
    data = x.data[idx]

    def bw(g):
        if x.grad is None:
            x.grad = np.zeros_like(x.data)
        x.grad[idx] += g

    return _out(data, "slice", bw)


# ---------------------------------------------------------------------------
# reductions and softmax


def sum_(x: Tensor, axis: int | None = None) -> Tensor:
    data = x.data.sum(axis=axis)

    def bw(g):
        if axis is None:
            _accum(x, np.broadcast_to(g, x.shape).copy())
        else:
            _accum(x, np.broadcast_to(np.expand_dims(g, axis), x.shape).copy())

    return _out(data, "sum", bw)


def mean(x: Tensor, axis: int | None = None) -> Tensor:
    n = x.data.size if axis is None else x.shape[axis]
    data = x.data.mean(axis=axis)

    def bw(g):
        if axis is None:
            _accum(x, np.broadcast_to(g / n, x.shape).copy())
        else:
            _accum(x, np.broadcast_to(np.expand_dims(g / n, axis), x.shape).copy())

    return _out(data, "mean", bw)


def softmax(x: Tensor, axis: int = -1, mask: np.ndarray | None = None) -> Tensor:
    """Softmax along one axis, optionally restricted by a 0/1 mask.

    Masked positions get weight exactly 0 and pass no gradient. If every
    position along the axis is masked the whole row is 0 (a degenerate
    all-pad row rather than an error).
    """
    if mask is not None:
        mask = np.asarray(mask, dtype=np.float64)
        if mask.shape != x.shape:
            raise ShapeMismatch(f"softmax mask {mask.shape} vs input {x.shape}")
        neg = np.where(mask > 0, x.data, -np.inf)
        shift = np.max(neg, axis=axis, keepdims=True)
        shift = np.where(np.isfinite(shift), shift, 0.0)
        e = np.exp(x.data - shift) * mask
    else:
        shift = np.max(x.data, axis=axis, keepdims=True)
        e = np.exp(x.data - shift)
    denom = e.sum(axis=axis, keepdims=True)
    data = np.divide(e, denom, out=np.zeros_like(e), where=denom > 0)

    def bw(g):
        dot = (g * data).sum(axis=axis, keepdims=True)
        _accum(x, data * (g - dot))

    return _out(data, "softmax", bw)


# ---------------------------------------------------------------------------
# sequence primitives


def conv1d(x: Tensor, kernels: Tensor) -> Tensor:
    """1-D convolution over the time axis with same-zero-padding.

    ``x`` is [T, C] or batched [B, T, C]; ``kernels`` is [F, w, C] with odd
    width ``w``. The output has the same time length as the input.
    """
    if kernels.data.ndim != 3:
        raise ShapeMismatch("conv1d kernels must be [F, w, C]")
    nf, w, c = kernels.shape
    if w % 2 == 0:
        raise ShapeMismatch("conv1d kernel width must be odd")
    batched = x.data.ndim == 3
    if x.data.ndim not in (2, 3) or x.shape[-1] != c:
        raise ShapeMismatch(f"conv1d input {x.shape} vs kernels {kernels.shape}")

    xb = x.data if batched else x.data[None, :, :]
    b, t, _ = xb.shape
    half = w // 2
    pad = np.zeros((b, t + 2 * half, c))
    pad[:, half:half + t, :] = xb
    # im2col: [B*T, w*C] so the convolution is one matmul
    cols = np.empty((b, t, w * c))
    for j in range(w):
        cols[:, :, j * c:(j + 1) * c] = pad[:, j:j + t, :]
    kmat = kernels.data.reshape(nf, w * c).T  # [w*C, F]
    out = cols.reshape(b * t, w * c) @ kmat
    out = out.reshape(b, t, nf)
    if not batched:
        out = out[0]

    def bw(g):
        gb = g if batched else g[None, :, :]
        gflat = gb.reshape(b * t, nf)
        _accum(kernels, (gflat.T @ cols.reshape(b * t, w * c)).reshape(nf, w, c))
        dcols = (gflat @ kmat.T).reshape(b, t, w * c)
        dpad = np.zeros_like(pad)
        for j in range(w):
            dpad[:, j:j + t, :] += dcols[:, :, j * c:(j + 1) * c]
        dx = dpad[:, half:half + t, :]
        _accum(x, dx if batched else dx[0])

    return _out(out, "conv1d", bw)


def max_pool1d(x: Tensor, width: int) -> Tensor:
    """Non-overlapping max pooling over the time axis of [T, C] or [B, T, C].

    A final partial window is pooled as-is, so the output time length is
    ceil(T / width). Ties take the earliest position.
    """
    if width < 1:
        raise ShapeMismatch("max_pool1d width must be >= 1")
    batched = x.data.ndim == 3
    if x.data.ndim not in (2, 3):
        raise ShapeMismatch("max_pool1d expects [T, C] or [B, T, C]")
    xb = x.data if batched else x.data[None, :, :]
    b, t, c = xb.shape
    n_out = -(-t // width)
    out = np.empty((b, n_out, c))
    arg = np.empty((b, n_out, c), dtype=np.intp)
    for i in range(n_out):
        lo, hi = i * width, min((i + 1) * width, t)
        win = xb[:, lo:hi, :]
        k = win.argmax(axis=1)
        arg[:, i, :] = k + lo
        out[:, i, :] = np.take_along_axis(win, k[:, None, :], axis=1)[:, 0, :]
    res = out if batched else out[0]

    def bw(g):
        gb = g if batched else g[None, :, :]
        if x.grad is None:
            x.grad = np.zeros_like(x.data)
        xg = x.grad if batched else x.grad[None, :, :]
        bi = np.arange(b)[:, None, None]
        ci = np.arange(c)[None, None, :]
        np.add.at(xg, (bi, arg, ci), gb)

    return _out(res, "max_pool1d", bw)


# ---------------------------------------------------------------------------
# backward pass and optimizers


def backward(tape: Tape, loss: Tensor):
    """Populate gradients of everything on the tape that feeds ``loss``.

    Tensors the loss never touched keep whatever gradient they already had
    (zeros, for freshly created or zeroed Parameters).
    """
    if loss.data.shape != ():
        raise NotScalarLoss(f"loss has shape {loss.data.shape}, expected scalar")
    loss.grad = np.ones(())
    for out_t, bw in reversed(tape.records):
        if out_t.grad is None:
            continue
        bw(out_t.grad)


class Sgd:
    """Plain stochastic gradient descent."""

    def __init__(self, learning_rate: float):
        if learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        self.learning_rate = learning_rate

    def step(self, params: list[Parameter]):
        for p in params:
            p.data -= self.learning_rate * p.grad


class Adam:
    """Adam with bias correction (beta1=0.9, beta2=0.999, eps=1e-8)."""

    def __init__(self, learning_rate: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        if learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        self.learning_rate = learning_rate
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}

    def step(self, params: list[Parameter]):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for p in params:
            m = self._m.setdefault(p.name, np.zeros_like(p.data))
            v = self._v.setdefault(p.name, np.zeros_like(p.data))
            m[...] = b1 * m + (1 - b1) * p.grad
            v[...] = b2 * v + (1 - b2) * p.grad * p.grad
            mhat = m / (1 - b1 ** self.t)
            vhat = v / (1 - b2 ** self.t)
            p.data -= self.learning_rate * mhat / (np.sqrt(vhat) + self.eps)


def make_optimizer(name: str, learning_rate: float):
    if name == "sgd":
        return Sgd(learning_rate)
    if name == "adam":
        return Adam(learning_rate)
    raise ValueError(f"unknown optimizer {name!r}")

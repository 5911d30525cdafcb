"""Minimal reverse-mode differentiation on numpy arrays.

A `Tape` records every operation applied to its `Var`s.  `Tape.backward`
sweeps the record in reverse and accumulates adjoints.  Only the operations
needed for the soft-skeleton losses and a one-layer convolutional predictor
are provided.  Shapes must match exactly, except that 0-d values broadcast
against fields.

Pooling routes the whole adjoint to a single arg-extreme cell (first index in
footprint order on ties) and relu uses a zero subgradient at 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


class Tape:
    def __init__(self):
        self._values: list[np.ndarray] = []
        self._inputs: list[tuple[int, ...]] = []
        self._vjps: list[Callable | None] = []
        self._ops: list[str] = []
        # relu masks and pooling argmax arrays, in recording order
        self._routes: list[np.ndarray] = []
        self._leaves: list[int] = []
        self._adjoints: list[np.ndarray | None] | None = None

    def __len__(self) -> int:
        return len(self._values)

    def leaf(self, value) -> "Var":
        v = self._record("leaf", (), np.array(value, dtype=np.float64), None)
        self._leaves.append(v.index)
        return v

    def _record(self, op: str, inputs: tuple[int, ...], value: np.ndarray, vjp) -> "Var":
        self._values.append(value)
        self._inputs.append(inputs)
        self._vjps.append(vjp)
        self._ops.append(op)
        return Var(self, len(self._values) - 1)

    def routes(self) -> list[np.ndarray]:
        """Discrete branch decisions taken during the forward pass."""
        return list(self._routes)

    def ops(self) -> list[str]:
        return list(self._ops)

    def backward(self, loss: "Var") -> list[np.ndarray]:
        """Populate adjoints for every node; return those of the leaves."""
        if loss.tape is not self:
            raise ValueError("loss belongs to a different tape")
        if self._values[loss.index].shape != ():
            raise ValueError(
                f"backward needs a scalar loss, got shape {self._values[loss.index].shape}"
            )
        adj: list[np.ndarray | None] = [None] * len(self._values)
        adj[loss.index] = np.ones((), dtype=np.float64)
        for i in range(loss.index, -1, -1):
            g = adj[i]
            if g is None or self._vjps[i] is None:
                continue
            for j, gj in zip(self._inputs[i], self._vjps[i](g)):
                adj[j] = gj if adj[j] is None else adj[j] + gj
        for i, a in enumerate(adj):
            if a is None:
                adj[i] = np.zeros_like(self._values[i])
        self._adjoints = adj
        return [adj[i] for i in self._leaves]

    def adjoint(self, var: "Var") -> np.ndarray:
        if self._adjoints is None:
            raise RuntimeError("call backward() first")
        return self._adjoints[var.index]


def backward(tape: Tape, loss: "Var") -> list[np.ndarray]:
    return tape.backward(loss)


def _value(x):
    return x.value if isinstance(x, Var) else np.asarray(x, dtype=np.float64)


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    if shape == ():
        return np.asarray(g.sum())
    raise ValueError(f"cannot reduce gradient of shape {g.shape} to {shape}")


def _check_shapes(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape and a.shape != () and b.shape != ():
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")


class Var:
    """Handle to a node on a tape. Supports +, -, *, / with Vars and constants."""

    __array_ufunc__ = None  # make numpy defer to the reflected operators

    def __init__(self, tape: Tape, index: int):
        self.tape = tape
        self.index = index

    @property
    def value(self) -> np.ndarray:
        return self.tape._values[self.index]

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    @property
    def ndim(self) -> int:
        return self.value.ndim

    @property
    def grad(self) -> np.ndarray:
        return self.tape.adjoint(self)

    def __repr__(self) -> str:
        return f"Var(#{self.index}, shape={self.shape})"

    def _binary(self, other, op: str, reverse: bool = False) -> "Var":
        a, b = (other, self) if reverse else (self, other)
        av, bv = _value(a), _value(b)
        _check_shapes(av, bv)
        if op == "add":
            out = av + bv
            da = lambda g: g
            db = lambda g: g
        elif op == "sub":
            out = av - bv
            da = lambda g: g
            db = lambda g: -g
        elif op == "mul":
            out = av * bv
            da = lambda g: g * bv
            db = lambda g: g * av
        elif op == "div":
            out = av / bv
            da = lambda g: g / bv
            db = lambda g: -g * av / (bv * bv)
        else:  # pragma: no cover
            raise ValueError(op)
        inputs, fns = [], []
        for x, xv, fn in ((a, av, da), (b, bv, db)):
            if isinstance(x, Var):
                inputs.append(x.index)
                fns.append((fn, xv.shape))

        def vjp(g):
            return [_unbroadcast(np.broadcast_to(fn(g), np.broadcast(av, bv).shape), s)
                    for fn, s in fns]

        return self.tape._record(op, tuple(inputs), np.asarray(out, dtype=np.float64), vjp)

    def __add__(self, o):
        return self._binary(o, "add")

    def __radd__(self, o):
        return self._binary(o, "add", reverse=True)

    def __sub__(self, o):
        return self._binary(o, "sub")

    def __rsub__(self, o):
        return self._binary(o, "sub", reverse=True)

    def __mul__(self, o):
        return self._binary(o, "mul")

    def __rmul__(self, o):
        return self._binary(o, "mul", reverse=True)

    def __truediv__(self, o):
        return self._binary(o, "div")

    def __rtruediv__(self, o):
        return self._binary(o, "div", reverse=True)

    def __neg__(self):
        return self.tape._record("neg", (self.index,), -self.value, lambda g: [-g])

    def sum(self) -> "Var":
        shape = self.shape
        out = np.asarray(np.sum(self.value, dtype=np.float64))
        return self.tape._record("sum", (self.index,), out,
                                 lambda g: [np.broadcast_to(g, shape).copy()])

    def relu(self) -> "Var":
        mask = self.value > 0
        self.tape._routes.append(mask)
        return self.tape._record("relu", (self.index,), np.where(mask, self.value, 0.0),
                                 lambda g: [g * mask])

    def sigmoid(self) -> "Var":
        s = 1.0 / (1.0 + np.exp(-self.value))
        return self.tape._record("sigmoid", (self.index,), s, lambda g: [g * s * (1.0 - s)])


def relu(x):
    if isinstance(x, Var):
        return x.relu()
    return np.maximum(np.asarray(x, dtype=np.float64), 0.0)


def sigmoid(x):
    if isinstance(x, Var):
        return x.sigmoid()
    return 1.0 / (1.0 + np.exp(-np.asarray(x, dtype=np.float64)))


def _window_views(padded: np.ndarray, fp: np.ndarray, shape: tuple[int, ...]):
    """Yield (offset slices, view) for each active footprint cell."""
    for off in zip(*np.nonzero(fp)):
        sl = tuple(slice(o, o + n) for o, n in zip(off, shape))
        yield sl, padded[sl]


def _max_pool_forward(x: np.ndarray, fp: np.ndarray):
    if fp.ndim != x.ndim or any(s % 2 == 0 for s in fp.shape):
        raise ValueError(f"footprint {fp.shape} incompatible with field {x.shape}")
    pad = [(s // 2, s // 2) for s in fp.shape]
    padded = np.pad(x, pad, constant_values=-np.inf)
    stack = np.stack([v for _, v in _window_views(padded, fp, x.shape)])
    arg = np.argmax(stack, axis=0)
    out = np.take_along_axis(stack, arg[None], axis=0)[0]
    return out, arg, pad


def max_pool(x, fp: np.ndarray):
    """Stride-1 max over the footprint `fp`; out-of-bounds cells are ignored."""
    fp = np.asarray(fp, dtype=bool)
    if not isinstance(x, Var):
        return _max_pool_forward(np.asarray(x, dtype=np.float64), fp)[0]
    out, arg, pad = _max_pool_forward(x.value, fp)
    shape = x.shape
    x.tape._routes.append(arg)

    def vjp(g):
        gp = np.zeros(tuple(n + a + b for n, (a, b) in zip(shape, pad)))
        for j, (sl, _) in enumerate(_window_views(gp, fp, shape)):
            gp[sl] += np.where(arg == j, g, 0.0)
        inner = tuple(slice(a, a + n) for n, (a, _) in zip(shape, pad))
        return [gp[inner]]

    return x.tape._record("max_pool", (x.index,), out, vjp)


def min_pool(x, fp: np.ndarray):
    """Stride-1 min over `fp`, as the negated max-pool of the negated field."""
    return -max_pool(-x, fp)


def line_footprint(ndim: int, axis: int) -> np.ndarray:
    shape = [1] * ndim
    shape[axis] = 3
    return np.ones(shape, dtype=bool)


def min_pool_1d(x, axis: int):
    return min_pool(x, line_footprint(np.ndim(_value(x)), axis))


def max_pool_window(x, size: int = 3):
    ndim = np.ndim(_value(x))
    return max_pool(x, np.ones((size,) * ndim, dtype=bool))


def _correlate_same(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    kh, kw = w.shape
    ph, pw = kh // 2, kw // 2
    xp = np.pad(x, ((ph, ph), (pw, pw)))
    h, wd = x.shape
    out = np.zeros_like(x)
    for i in range(kh):
        for j in range(kw):
            out += w[i, j] * xp[i:i + h, j:j + wd]
    return out


def conv2d(x, kernel):
    """Single-channel 2D cross-correlation, zero 'same' padding, odd kernel."""
    xv, wv = _value(x), _value(kernel)
    if xv.ndim != 2 or wv.ndim != 2 or wv.shape[0] % 2 == 0 or wv.shape[1] % 2 == 0:
        raise ValueError(f"conv2d needs a 2D field and odd 2D kernel, got {xv.shape}, {wv.shape}")
    out = _correlate_same(xv, wv)
    tape = x.tape if isinstance(x, Var) else kernel.tape if isinstance(kernel, Var) else None
    if tape is None:
        return out
    kh, kw = wv.shape
    ph, pw = kh // 2, kw // 2
    h, wd = xv.shape
    inputs, which = [], []
    if isinstance(x, Var):
        inputs.append(x.index)
        which.append("x")
    if isinstance(kernel, Var):
        inputs.append(kernel.index)
        which.append("w")

    def vjp(g):
        grads = []
        for name in which:
            if name == "x":
                # adjoint of correlation is correlation with the flipped kernel
                grads.append(_correlate_same(g, wv[::-1, ::-1]))
            else:
                xp = np.pad(xv, ((ph, ph), (pw, pw)))
                gw = np.empty_like(wv)
                for i in range(kh):
                    for j in range(kw):
                        gw[i, j] = np.sum(g * xp[i:i + h, j:j + wd])
                grads.append(gw)
        return grads

    return tape._record("conv2d", tuple(inputs), out, vjp)


@dataclass
class GradCheckReport:
    max_rel_err: float
    n_checked: int
    n_excluded_ties: int
    worst: list[tuple[tuple[int, ...], float, float, float]] = field(default_factory=list)

    def passed(self, tol: float) -> bool:
        return self.max_rel_err < tol


def _evaluate(builder, x: np.ndarray):
    tape = Tape()
    leaf = tape.leaf(x)
    loss = builder(leaf)
    if not isinstance(loss, Var):
        raise TypeError("builder must return a Var")
    return tape, leaf, loss


def _same_routes(a: list[np.ndarray], b: list[np.ndarray]) -> bool:
    return len(a) == len(b) and all(np.array_equal(u, v) for u, v in zip(a, b))


def grad_check(
    builder: Callable[[Var], Var],
    x,
    h: float = 1e-5,
    tol: float = 1e-4,
    coords: Sequence[tuple[int, ...]] | None = None,
    n_worst: int = 5,
) -> GradCheckReport:
    """Compare tape adjoints against central differences.

    `builder` maps a leaf Var to a scalar loss Var.  A coordinate whose +-h
    perturbation changes any relu/pooling route is treated as tie-adjacent
    and excluded from the error (but counted).
    """
    if h <= 0:
        raise ValueError("h must be positive")
    x = np.array(x, dtype=np.float64)
    tape, leaf, loss = _evaluate(builder, x)
    tape.backward(loss)
    analytic = tape.adjoint(leaf)
    base_routes = tape.routes()
    if coords is None:
        coords = list(np.ndindex(x.shape))
    errors = []
    excluded = 0
    for c in coords:
        xp = x.copy()
        xp[c] += h
        xm = x.copy()
        xm[c] -= h
        tp, _, lp = _evaluate(builder, xp)
        tm, _, lm = _evaluate(builder, xm)
        if not (_same_routes(tp.routes(), base_routes) and _same_routes(tm.routes(), base_routes)):
            excluded += 1
            continue
        num = (float(lp.value) - float(lm.value)) / (2 * h)
        ana = float(analytic[c])
        if abs(ana) + abs(num) <= 1e-8:
            continue
        rel = abs(ana - num) / max(abs(ana), abs(num))
        errors.append((tuple(int(i) for i in c), rel, ana, num))
    errors.sort(key=lambda e: e[1], reverse=True)
    return GradCheckReport(
        max_rel_err=errors[0][1] if errors else 0.0,
        n_checked=len(errors),
        n_excluded_ties=excluded,
        worst=errors[:n_worst],
    )

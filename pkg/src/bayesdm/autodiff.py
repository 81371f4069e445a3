"""Scalar reverse-mode automatic differentiation on an append-only tape.

Disease inference, the logic switcher, and the policy log-probabilities are
all differentiated through this substrate, so it favors transparency over
throughput: every node is a scalar, every local partial is recorded
explicitly, and backward is a single reverse sweep over the tape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

PRIMITIVES = ("add", "sub", "mul", "div", "neg", "log", "exp", "sigmoid", "tanh", "max")


class DomainError(ValueError):
    """A primitive was evaluated outside its domain (log of a non-positive
    value, division by zero, exp overflow)."""


@dataclass(frozen=True)
class Node:
    """Read-only view of one tape entry."""

    value: float
    gradient: float
    op: str
    predecessors: tuple[int, ...]
    local_partials: tuple[float, ...]


class Tape:
    """Append-only record of scalar operations.

    Every predecessor of node i has an id < i, so append order is a valid
    topological order and ``backward`` is one reverse sweep. Gradients are
    zero until ``backward`` runs; each call recomputes all gradients from
    scratch, so running backward twice is idempotent (documented choice).

    A tape is single-owner: concurrent work uses independent tapes.
    """

    __slots__ = ("values", "grads", "ops", "p0", "p1", "d0", "d1")

    def __init__(self) -> None:
        self.values: list[float] = []
        self.grads: list[float] = []
        self.ops: list[str] = []
        # predecessor ids (-1 for none) and the matching local partials
        self.p0: list[int] = []
        self.p1: list[int] = []
        self.d0: list[float] = []
        self.d1: list[float] = []

    def __len__(self) -> int:
        return len(self.values)

    def _emit(self, v: float, op: str, a: int, b: int, da: float, db: float) -> int:
        i = len(self.values)
        self.values.append(v)
        self.grads.append(0.0)
        self.ops.append(op)
        self.p0.append(a)
        self.p1.append(b)
        self.d0.append(da)
        self.d1.append(db)
        return i

    # -- primitives ---------------------------------------------------------

    def leaf(self, value: float) -> int:
        """Append an input node (no predecessors)."""
        return self._emit(float(value), "leaf", -1, -1, 0.0, 0.0)

    def add(self, a: int, b: int) -> int:
        return self._emit(self.values[a] + self.values[b], "add", a, b, 1.0, 1.0)

    def cadd(self, a: int, c: float) -> int:
        """add with a constant operand folded in (still an 'add' node)."""
        return self._emit(self.values[a] + c, "add", a, -1, 1.0, 0.0)

    def sub(self, a: int, b: int) -> int:
        return self._emit(self.values[a] - self.values[b], "sub", a, b, 1.0, -1.0)

    def mul(self, a: int, b: int) -> int:
        va, vb = self.values[a], self.values[b]
        return self._emit(va * vb, "mul", a, b, vb, va)

    def cmul(self, a: int, c: float) -> int:
        """mul with a constant operand folded in."""
        return self._emit(self.values[a] * c, "mul", a, -1, c, 0.0)

    def div(self, a: int, b: int) -> int:
        va, vb = self.values[a], self.values[b]
        if vb == 0.0:
            raise DomainError("division by zero")
        return self._emit(va / vb, "div", a, b, 1.0 / vb, -va / (vb * vb))

    def neg(self, a: int) -> int:
        return self._emit(-self.values[a], "neg", a, -1, -1.0, 0.0)

    def log(self, a: int) -> int:
        va = self.values[a]
        if va <= 0.0:
            raise DomainError(f"log of non-positive value {va!r}")
        return self._emit(math.log(va), "log", a, -1, 1.0 / va, 0.0)

    def exp(self, a: int) -> int:
        try:
            v = math.exp(self.values[a])
        except OverflowError as err:
            raise DomainError("exp overflow") from err
        return self._emit(v, "exp", a, -1, v, 0.0)

    def sigmoid(self, a: int) -> int:
        v = _sigmoid(self.values[a])
        return self._emit(v, "sigmoid", a, -1, v * (1.0 - v), 0.0)

    def tanh(self, a: int) -> int:
        v = math.tanh(self.values[a])
        return self._emit(v, "tanh", a, -1, 1.0 - v * v, 0.0)

    def max(self, a: int, b: int) -> int:
        va, vb = self.values[a], self.values[b]
        if va >= vb:  # ties route the gradient to the first operand
            return self._emit(va, "max", a, b, 1.0, 0.0)
        return self._emit(vb, "max", a, b, 0.0, 1.0)

    def cmax(self, a: int, c: float) -> int:
        """max against a constant."""
        va = self.values[a]
        if va >= c:
            return self._emit(va, "max", a, -1, 1.0, 0.0)
        return self._emit(c, "max", a, -1, 0.0, 0.0)

    # -- introspection ------------------------------------------------------

    def value(self, i: int) -> float:
        return self.values[i]

    def node(self, i: int) -> Node:
        preds, parts = [], []
        for p, d in ((self.p0[i], self.d0[i]), (self.p1[i], self.d1[i])):
            if p >= 0:
                preds.append(p)
                parts.append(d)
        return Node(self.values[i], self.grads[i], self.ops[i], tuple(preds), tuple(parts))

    # -- reverse pass -------------------------------------------------------

    def backward(self, root: int) -> list[float]:
        """Gradient of node ``root`` w.r.t. every node on the tape.

        Returns (and stores) the full gradient vector indexed by node id.
        Contributions along multiple paths accumulate additively.
        """
        if not 0 <= root < len(self.values):
            raise IndexError(f"no node {root} on tape of length {len(self.values)}")
        g = [0.0] * len(self.values)
        g[root] = 1.0
        p0, p1, d0, d1 = self.p0, self.p1, self.d0, self.d1
        for i in range(root, -1, -1):
            gi = g[i]
            if gi == 0.0:
                continue
            a = p0[i]
            if a >= 0:
                g[a] += gi * d0[i]
                b = p1[i]
                if b >= 0:
                    g[b] += gi * d1[i]
        self.grads = g
        return g


def forward_primitive(tape: Tape, kind: str, inputs: list[int] | tuple[int, ...]) -> int:
    """Append one primitive by name. ``kind`` must be in PRIMITIVES."""
    unary = {"neg": tape.neg, "log": tape.log, "exp": tape.exp,
             "sigmoid": tape.sigmoid, "tanh": tape.tanh}
    binary = {"add": tape.add, "sub": tape.sub, "mul": tape.mul,
              "div": tape.div, "max": tape.max}
    if kind in unary:
        (a,) = inputs
        return unary[kind](a)
    if kind in binary:
        a, b = inputs
        return binary[kind](a, b)
    raise ValueError(f"unknown primitive {kind!r}")


def _sigmoid(x: float) -> float:
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


class Var:
    """Ergonomic handle for building expressions on a tape.

    Thin sugar over node ids; the hot paths in inference and training call
    the Tape methods directly.
    """

    __slots__ = ("tape", "i")

    def __init__(self, tape: Tape, i: int):
        self.tape = tape
        self.i = i

    @classmethod
    def input(cls, tape: Tape, value: float) -> "Var":
        return cls(tape, tape.leaf(value))

    @property
    def value(self) -> float:
        return self.tape.values[self.i]

    @property
    def grad(self) -> float:
        return self.tape.grads[self.i]

    def _wrap(self, i: int) -> "Var":
        return Var(self.tape, i)

    def __add__(self, other):
        if isinstance(other, Var):
            return self._wrap(self.tape.add(self.i, other.i))
        return self._wrap(self.tape.cadd(self.i, float(other)))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Var):
            return self._wrap(self.tape.sub(self.i, other.i))
        return self._wrap(self.tape.cadd(self.i, -float(other)))

    def __rsub__(self, other):
        return self._wrap(self.tape.cadd(self.tape.neg(self.i), float(other)))

    def __mul__(self, other):
        if isinstance(other, Var):
            return self._wrap(self.tape.mul(self.i, other.i))
        return self._wrap(self.tape.cmul(self.i, float(other)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Var):
            return self._wrap(self.tape.div(self.i, other.i))
        return self._wrap(self.tape.cmul(self.i, 1.0 / float(other)))

    def __rtruediv__(self, other):
        num = self.tape.leaf(float(other))
        return self._wrap(self.tape.div(num, self.i))

    def __neg__(self):
        return self._wrap(self.tape.neg(self.i))

    def log(self):
        return self._wrap(self.tape.log(self.i))

    def exp(self):
        return self._wrap(self.tape.exp(self.i))

    def sigmoid(self):
        return self._wrap(self.tape.sigmoid(self.i))

    def tanh(self):
        return self._wrap(self.tape.tanh(self.i))

    def maximum(self, other):
        if isinstance(other, Var):
            return self._wrap(self.tape.max(self.i, other.i))
        return self._wrap(self.tape.cmax(self.i, float(other)))

    def backward(self) -> list[float]:
        return self.tape.backward(self.i)


def log_sigmoid(tape: Tape, x: int) -> int:
    """Numerically safe log(sigmoid(x)), built from primitives.

    Branches on the traced value so the exp argument is never positive:
    x >= 0 gives -log(1 + exp(-x)), otherwise x - log(1 + exp(x)). Both
    branches have the exact derivative sigmoid(-x), including at x == 0.
    """
    if tape.values[x] >= 0.0:
        e = tape.exp(tape.neg(x))
        return tape.neg(tape.log(tape.cadd(e, 1.0)))
    e = tape.exp(x)
    return tape.sub(x, tape.log(tape.cadd(e, 1.0)))


def logsumexp(tape: Tape, ids: list[int]) -> int:
    """log(sum(exp(ids))) with max subtraction, on the tape."""
    if not ids:
        raise ValueError("logsumexp of nothing")
    m = ids[0]
    for i in ids[1:]:
        m = tape.max(m, i)
    s = None
    for i in ids:
        e = tape.exp(tape.sub(i, m))
        s = e if s is None else tape.add(s, e)
    return tape.add(m, tape.log(s))


class LeafBank:
    """Named parameter leaves on one tape.

    Each parameter key maps to a single leaf, so fan-out gradients accumulate
    on it and can be routed back to the owning parameter after backward.
    """

    def __init__(self, tape: Tape):
        self.tape = tape
        self.ids: dict[tuple, int] = {}

    def leaf(self, key: tuple, value: float) -> int:
        i = self.ids.get(key)
        if i is None:
            i = self.tape.leaf(value)
            self.ids[key] = i
        return i

    def gradients(self, grads: list[float]) -> dict[tuple, float]:
        return {k: grads[i] for k, i in self.ids.items()}

    def items(self):
        return self.ids.items()

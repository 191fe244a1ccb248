"""Minimal reverse-mode differentiation over numpy float64 arrays.

Layers record one backward closure per fused forward step onto a Tape.
Running the tape in reverse visits every consumer of a value before its
producer, so plain gradient accumulation needs no topological sort. All
math is double precision, which keeps finite-difference checks tight.
"""

from __future__ import annotations

import numpy as np


class Parameter:
    """A trainable tensor with a persistent gradient slot."""

    __slots__ = ("name", "value", "grad")

    def __init__(self, name: str, value: np.ndarray):
        self.name = name
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)

    def zero_grad(self) -> None:
        self.grad.fill(0.0)

    @property
    def size(self) -> int:
        return self.value.size

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={self.value.shape})"


class Var:
    """An intermediate activation; the gradient buffer is allocated lazily."""

    __slots__ = ("value", "grad")

    def __init__(self, value):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None

    def accumulate(self, g) -> None:
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64)
        else:
            self.grad += g


class Tape:
    """Ordered record of backward closures for one forward computation."""

    __slots__ = ("_records",)

    def __init__(self):
        self._records: list = []

    def record(self, fn) -> None:
        self._records.append(fn)

    def backward(self, root: Var) -> None:
        """Seed d(root)/d(root) = 1 and run all closures newest-first."""
        root.accumulate(np.ones_like(root.value))
        for fn in reversed(self._records):
            fn()
        self._records.clear()


def add(tape: Tape, a: Var, b: Var) -> Var:
    out = Var(a.value + b.value)

    def backward():
        if out.grad is not None:
            a.accumulate(out.grad)
            b.accumulate(out.grad)

    tape.record(backward)
    return out


def scale(tape: Tape, a: Var, factor: float) -> Var:
    out = Var(a.value * factor)

    def backward():
        if out.grad is not None:
            a.accumulate(out.grad * factor)

    tape.record(backward)
    return out


def add_all(tape: Tape, terms: list[Var]) -> Var:
    """Sum a list of scalar Vars into one scalar Var."""
    out = Var(sum(t.value for t in terms) if terms else 0.0)

    def backward():
        if out.grad is not None:
            for t in terms:
                t.accumulate(out.grad)

    tape.record(backward)
    return out

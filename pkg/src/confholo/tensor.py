"""Component tensors over a chart and small exact matrix helpers.

Components are stored in numpy object arrays so that slicing and
transposition come for free; the entries are :class:`RationalFn`
values (symbolic) or :class:`fractions.Fraction` values (evaluated).
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import SingularMetric
from .symexpr import RationalFn, Ring

__all__ = [
    "TensorField",
    "zeros",
    "matmul",
    "commutator",
    "mat_inverse",
    "mat_det",
    "is_zero_array",
    "evaluate_array",
]


def zeros(ring: Ring, shape) -> np.ndarray:
    z = ring.zero()
    arr = np.empty(shape, dtype=object)
    arr.fill(z)
    return arr


def is_zero_array(arr) -> bool:
    return not any(bool(x) for x in np.asarray(arr, dtype=object).flat)


def evaluate_array(arr, point: Mapping[str, object]) -> np.ndarray:
    arr = np.asarray(arr, dtype=object)
    out = np.empty(arr.shape, dtype=object)
    for idx, val in np.ndenumerate(arr):
        out[idx] = val.eval(point) if isinstance(val, RationalFn) else Fraction(val)
    return out


def matmul(a, b, zero=None) -> np.ndarray:
    """Exact matrix product that skips zero entries."""
    a = np.asarray(a, dtype=object)
    b = np.asarray(b, dtype=object)
    n, k = a.shape
    k2, m = b.shape
    if k != k2:
        raise ValueError(f"shape mismatch {a.shape} x {b.shape}")
    if zero is None:
        sample = next((x for x in itertools.chain(a.flat, b.flat)), Fraction(0))
        zero = sample.ring.zero() if isinstance(sample, RationalFn) else Fraction(0)
    out = np.empty((n, m), dtype=object)
    out.fill(zero)
    nonzero_b = [[(j, b[l, j]) for j in range(m) if b[l, j]] for l in range(k)]
    for i in range(n):
        row = [zero] * m
        for l in range(k):
            x = a[i, l]
            if not x:
                continue
            for j, y in nonzero_b[l]:
                row[j] = row[j] + x * y
        out[i, :] = row
    return out


def commutator(a, b) -> np.ndarray:
    return matmul(a, b) - matmul(b, a)


def mat_inverse(matrix) -> np.ndarray:
    """Gauss-Jordan inverse over the field of rational functions (or Q)."""
    m = np.array(matrix, dtype=object)
    n = m.shape[0]
    sample = m.flat[0]
    if isinstance(sample, RationalFn):
        one, zero = sample.ring.one(), sample.ring.zero()
    else:
        one, zero = Fraction(1), Fraction(0)
    inv = np.empty((n, n), dtype=object)
    inv.fill(zero)
    for i in range(n):
        inv[i, i] = one
    for c in range(n):
        # prefer constant pivots to limit expression growth
        candidates = [r for r in range(c, n) if m[r, c]]
        if not candidates:
            raise SingularMetric("matrix is singular")
        pivot = next((r for r in candidates if _is_const(m[r, c])), candidates[0])
        if pivot != c:
            m[[c, pivot]] = m[[pivot, c]]
            inv[[c, pivot]] = inv[[pivot, c]]
        p = m[c, c]
        if p != 1:
            m[c] = [x / p for x in m[c]]
            inv[c] = [x / p for x in inv[c]]
        for r in range(n):
            f = m[r, c]
            if r != c and f:
                m[r] = [x - f * y if y else x for x, y in zip(m[r], m[c])]
                inv[r] = [x - f * y if y else x for x, y in zip(inv[r], inv[c])]
    return inv


def mat_det(matrix):
    m = np.array(matrix, dtype=object)
    n = m.shape[0]
    sample = m.flat[0]
    result = sample.ring.one() if isinstance(sample, RationalFn) else Fraction(1)
    for c in range(n):
        pivot = next((r for r in range(c, n) if m[r, c]), None)
        if pivot is None:
            return result * 0
        if pivot != c:
            m[[c, pivot]] = m[[pivot, c]]
            result = -result
        p = m[c, c]
        result = result * p
        for r in range(c + 1, n):
            f = m[r, c]
            if f:
                f = f / p
                m[r] = [x - f * y if y else x for x, y in zip(m[r], m[c])]
    return result


def _is_const(x) -> bool:
    return not isinstance(x, RationalFn) or x.is_constant()


class TensorField:
    """Tensor components in a coordinate chart.

    ``indices`` is a string of ``"u"`` (contravariant) and ``"d"``
    (covariant) tags, one per slot, e.g. ``"udd"`` for Christoffel
    symbols or ``"dd"`` for the metric.
    """

    def __init__(self, chart, indices: str, components):
        comps = np.asarray(components, dtype=object)
        n = chart.dim
        if comps.shape != (n,) * len(indices):
            raise ValueError(f"component shape {comps.shape} does not match {indices!r} in dim {n}")
        if set(indices) - {"u", "d"}:
            raise ValueError(f"index tags must be 'u' or 'd', got {indices!r}")
        self.chart = chart
        self.indices = indices
        self.components = comps

    @classmethod
    def zero(cls, chart, indices: str) -> "TensorField":
        return cls(chart, indices, zeros(chart.ring, (chart.dim,) * len(indices)))

    @classmethod
    def from_function(cls, chart, indices: str, fn: Callable) -> "TensorField":
        n = chart.dim
        comps = np.empty((n,) * len(indices), dtype=object)
        for idx in itertools.product(range(n), repeat=len(indices)):
            comps[idx] = fn(*idx)
        return cls(chart, indices, comps)

    @classmethod
    def vector(cls, chart, components: Sequence) -> "TensorField":
        ring = chart.ring
        return cls(chart, "u", [_lift(c, ring) for c in components])

    @classmethod
    def covector(cls, chart, components: Sequence) -> "TensorField":
        ring = chart.ring
        return cls(chart, "d", [_lift(c, ring) for c in components])

    @property
    def valence(self) -> tuple[int, int]:
        return self.indices.count("u"), self.indices.count("d")

    @property
    def rank(self) -> int:
        return len(self.indices)

    def __getitem__(self, idx):
        return self.components[idx]

    def is_zero(self) -> bool:
        return is_zero_array(self.components)

    def evaluate(self, point: Mapping[str, object]) -> np.ndarray:
        return evaluate_array(self.components, point)

    def map(self, fn: Callable) -> "TensorField":
        out = np.empty(self.components.shape, dtype=object)
        for idx, val in np.ndenumerate(self.components):
            out[idx] = fn(val)
        return TensorField(self.chart, self.indices, out)

    def _check(self, other: "TensorField"):
        if other.indices != self.indices:
            raise ValueError(f"index structure mismatch {self.indices!r} vs {other.indices!r}")

    def __add__(self, other: "TensorField") -> "TensorField":
        self._check(other)
        return TensorField(self.chart, self.indices, self.components + other.components)

    def __sub__(self, other: "TensorField") -> "TensorField":
        self._check(other)
        return TensorField(self.chart, self.indices, self.components - other.components)

    def __neg__(self) -> "TensorField":
        return self.map(lambda x: -x)

    def __mul__(self, scalar) -> "TensorField":
        return self.map(lambda x: x * scalar)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, TensorField):
            return NotImplemented
        return (self.indices == other.indices
                and self.components.shape == other.components.shape
                and all(a == b for a, b in zip(self.components.flat, other.components.flat)))

    __hash__ = None

    def is_symmetric(self) -> bool:
        if self.rank != 2:
            raise ValueError("symmetry check needs a rank-2 tensor")
        c = self.components
        n = c.shape[0]
        return all(c[i, j] == c[j, i] for i in range(n) for j in range(i + 1, n))

    def __repr__(self):
        nonzero = sum(1 for x in self.components.flat if x)
        return f"TensorField({self.chart.name!r}, {self.indices!r}, nonzero={nonzero})"


def _lift(value, ring: Ring) -> RationalFn:
    if isinstance(value, RationalFn):
        return value
    if isinstance(value, str):
        return ring.parse(value)
    return ring.const(value)

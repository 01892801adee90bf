"""Exact linear algebra over the rationals.

Everything here works on lists of :class:`fractions.Fraction`; there are
no tolerances.  :func:`solve_linear` handles affine systems in named
unknowns and reports under- and over-determined outcomes instead of
raising.  :class:`Span` is an incrementally maintained reduced echelon
basis used for membership tests and Lie closures.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

__all__ = [
    "LinearUnknownSystem",
    "LinearSolution",
    "solve_linear",
    "rref",
    "rank",
    "nullspace",
    "Span",
    "inertia",
    "det",
]


def rref(rows: Sequence[Sequence]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form and pivot columns."""
    m = [[Fraction(x) for x in row] for row in rows]
    if not m:
        return m, []
    ncols = len(m[0])
    pivots = []
    r = 0
    for c in range(ncols):
        pivot = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def rank(rows: Sequence[Sequence]) -> int:
    return len(rref(rows)[1])


def nullspace(rows: Sequence[Sequence], ncols: int | None = None) -> list[list[Fraction]]:
    """Basis of {x : A x = 0}."""
    if ncols is None:
        ncols = len(rows[0]) if rows else 0
    red, pivots = rref(rows) if rows else ([], [])
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        vec = [Fraction(0)] * ncols
        vec[f] = Fraction(1)
        for row, p in zip(red, pivots):
            vec[p] = -row[f]
        basis.append(vec)
    return basis


def det(matrix: Sequence[Sequence]) -> Fraction:
    m = [[Fraction(x) for x in row] for row in matrix]
    n = len(m)
    sign = 1
    result = Fraction(1)
    for c in range(n):
        pivot = next((i for i in range(c, n) if m[i][c] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != c:
            m[c], m[pivot] = m[pivot], m[c]
            sign = -sign
        result *= m[c][c]
        inv = 1 / m[c][c]
        for i in range(c + 1, n):
            if m[i][c] != 0:
                f = m[i][c] * inv
                m[i] = [a - f * b for a, b in zip(m[i], m[c])]
    return sign * result


def inertia(matrix: Sequence[Sequence]) -> tuple[int, int, int]:
    """(negatives, positives, zeros) of a symmetric rational matrix.

    Uses symmetric Gaussian elimination (congruence), so by Sylvester's law
    the sign counts of the resulting diagonal are the inertia.
    """
    m = [[Fraction(x) for x in row] for row in matrix]
    n = len(m)
    diag = []
    active = list(range(n))
    while active:
        k = next((i for i in active if m[i][i] != 0), None)
        if k is None:
            # all diagonal entries zero; find an off-diagonal entry to mix in
            pair = next(((i, j) for i in active for j in active if i < j and m[i][j] != 0), None)
            if pair is None:
                diag.extend([Fraction(0)] * len(active))
                break
            i, j = pair
            # row/col i += row/col j  makes m[i][i] = 2 m[i][j] != 0
            for c in range(n):
                m[i][c] += m[j][c]
            for r in range(n):
                m[r][i] += m[r][j]
            k = i
        d = m[k][k]
        diag.append(d)
        active.remove(k)
        for i in active:
            if m[i][k] != 0:
                f = m[i][k] / d
                for c in active:
                    m[i][c] -= f * m[k][c]
        for i in active:
            m[i][k] = m[k][i] = Fraction(0)
    neg = sum(1 for d in diag if d < 0)
    pos = sum(1 for d in diag if d > 0)
    return neg, pos, len(diag) - neg - pos


@dataclass
class LinearUnknownSystem:
    """Affine equations ``sum(coeffs[u] * u) + constant == 0`` in named unknowns."""

    unknowns: list[str]
    equations: list[tuple[dict, Fraction]] = field(default_factory=list)

    def add(self, coeffs: Mapping[str, object], constant=0):
        unknown = set(coeffs) - set(self.unknowns)
        if unknown:
            raise KeyError(f"equation references undeclared unknowns {sorted(unknown)}")
        self.equations.append(({k: Fraction(v) for k, v in coeffs.items() if v != 0},
                               Fraction(constant)))

    def add_equal(self, coeffs: Mapping[str, object], rhs=0):
        """Add ``sum(coeffs[u] * u) == rhs``."""
        self.add(coeffs, -Fraction(rhs))

    def matrix(self):
        index = {u: i for i, u in enumerate(self.unknowns)}
        rows = []
        for coeffs, const in self.equations:
            row = [Fraction(0)] * (len(self.unknowns) + 1)
            for u, c in coeffs.items():
                row[index[u]] = c
            row[-1] = -const
            rows.append(row)
        return rows


@dataclass
class LinearSolution:
    """Outcome of :func:`solve_linear`.

    ``status`` is one of ``"unique"``, ``"underdetermined"`` or
    ``"inconsistent"``.  For solvable systems ``particular`` is one
    solution (free unknowns set to zero) and ``nullspace`` spans the
    homogeneous solutions.
    """

    status: str
    unknowns: list[str]
    particular: dict = field(default_factory=dict)
    nullspace: list[dict] = field(default_factory=list)
    free: list[str] = field(default_factory=list)
    rank: int = 0

    @property
    def consistent(self) -> bool:
        return self.status != "inconsistent"

    @property
    def unique(self) -> bool:
        return self.status == "unique"

    @property
    def values(self) -> dict:
        if not self.unique:
            raise ValueError(f"system is {self.status}")
        return self.particular

    def determined(self) -> dict:
        """Unknowns whose value is the same for every solution."""
        return {u: v for u, v in self.particular.items()
                if all(vec[u] == 0 for vec in self.nullspace)}


def solve_linear(system: LinearUnknownSystem) -> LinearSolution:
    n = len(system.unknowns)
    rows = system.matrix()
    if not rows:
        rows = [[Fraction(0)] * (n + 1)]
    red, pivots = rref(rows)
    if n in pivots:
        return LinearSolution("inconsistent", list(system.unknowns), rank=len(pivots) - 1)
    particular = {u: Fraction(0) for u in system.unknowns}
    for row, p in zip(red, pivots):
        particular[system.unknowns[p]] = row[-1]
    kernel = nullspace([row[:-1] for row in red], n) if red else nullspace([], n)
    null = [dict(zip(system.unknowns, vec)) for vec in kernel]
    free = [system.unknowns[c] for c in range(n) if c not in pivots]
    status = "unique" if not free else "underdetermined"
    return LinearSolution(status, list(system.unknowns), particular, null, free, len(pivots))


class Span:
    """Incrementally built subspace of Q^d with exact membership tests.

    Rows are kept in reduced echelon form; ``basis`` keeps the original
    vectors in insertion order.
    """

    def __init__(self, dim: int):
        self.dim = dim
        # (pivot, row, positions where row is nonzero)
        self._rows: list[tuple[int, list[Fraction], list[int]]] = []
        self.basis: list[list[Fraction]] = []

    def __len__(self):
        return len(self.basis)

    def reduce(self, vec) -> list[Fraction]:
        v = [Fraction(x) for x in vec]
        if len(v) != self.dim:
            raise ValueError(f"expected vector of length {self.dim}, got {len(v)}")
        for p, row, nz in self._rows:
            c = v[p]
            if c:
                for j in nz:
                    v[j] -= c * row[j]
        return v

    def contains(self, vec) -> bool:
        return not any(self.reduce(vec))

    def add(self, vec) -> bool:
        """Insert ``vec``; return True if it enlarged the span."""
        v = self.reduce(vec)
        p = next((i for i, x in enumerate(v) if x), None)
        if p is None:
            return False
        inv = 1 / v[p]
        v = [x * inv for x in v]
        vnz = [j for j, x in enumerate(v) if x]
        rows = []
        for q, row, nz in self._rows:
            c = row[p]
            if c:
                row = list(row)
                for j in vnz:
                    row[j] -= c * v[j]
                nz = [j for j, x in enumerate(row) if x]
            rows.append((q, row, nz))
        rows.append((p, v, vnz))
        self._rows = rows
        self.basis.append([Fraction(x) for x in vec])
        return True

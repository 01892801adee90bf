"""Infinitesimal conformal holonomy at a point and the distribution E.

The infinitesimal holonomy at x is the Lie algebra generated by the
values at x of iterated tractor derivatives of the tractor curvature,

    nabla_{l1} ... nabla_{lk} R^nc(d_i, d_j),   k <= max_order.

Only nondecreasing sequences l1 <= ... <= lk are differentiated: two
derivative orders differ by [R^nc(d_a, d_b), lower order term], which
already lies in the Lie algebra generated by lower orders, so the
generated algebra is the same.

All matrices here are exact rational (n+2) x (n+2) matrices in the frame
(s_-, d_1, ..., d_n, s_+).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .chartio import Chart, DistributionData, EvalPoint, make_point
from .errors import SpanMismatch
from .linalg import Span, nullspace
from .symexpr import RationalFn, Ring
from .tensor import TensorField, evaluate_array, mat_inverse, matmul
from .tractor import (
    AdjointTractor,
    adjoint_derivative_matrix,
    curvature_matrix,
    s_minus_wedge,
)

__all__ = [
    "LieSubalgebra",
    "LieClosure",
    "HolonomyDistribution",
    "GenericityReport",
    "WedgeReport",
    "infinitesimal_holonomy",
    "lie_closure",
    "holonomy_distribution",
    "genericity_report",
    "check_wedge_condition",
    "membership",
    "classify_E_region",
    "bracket_generation",
    "annihilator_fields",
    "vector_bracket",
    "spin34H_constructor",
    "spin34H_containment",
    "parabolic_basis",
    "full_algebra_basis",
]


def _flat(M) -> list:
    return [Fraction(x) for x in np.asarray(M, dtype=object).flat]


def _as_matrix(vec, size) -> np.ndarray:
    return np.array(vec, dtype=object).reshape(size, size)


def _bracket(a, b) -> np.ndarray:
    return matmul(a, b, Fraction(0)) - matmul(b, a, Fraction(0))


class LieClosure:
    """Incrementally maintained Lie closure of a set of matrices."""

    def __init__(self, size: int, bound: int | None = None):
        self.size = size
        self.span = Span(size * size)
        self.basis: list[np.ndarray] = []
        # once the span has this dimension nothing can be added
        self.bound = size * size if bound is None else bound

    def __len__(self):
        return len(self.basis)

    def add(self, M) -> bool:
        """Add M and everything it generates; True if the algebra grew."""
        M = np.asarray(M, dtype=object)
        if not self.span.add(_flat(M)):
            return False
        queue = [M]
        self.basis.append(M)
        while queue and len(self.basis) < self.bound:
            x = queue.pop()
            for y in list(self.basis):
                if len(self.basis) >= self.bound:
                    break
                c = _bracket(x, y)
                if self.span.add(_flat(c)):
                    self.basis.append(c)
                    queue.append(c)
        return True

    def contains(self, M) -> bool:
        return self.span.contains(_flat(M))

    def is_closed(self) -> bool:
        if len(self.basis) == self.size * self.size:
            return True
        return all(self.contains(_bracket(a, b))
                   for a, b in itertools.combinations(self.basis, 2))


@dataclass
class LieSubalgebra:
    """A bracket-closed subspace of so(h) at one point.

    ``metric`` is the value of g at the point; the tractor metric h is
    built from it.  ``dims_by_order`` records the dimension of the
    closure of generators up to each derivative order.
    """

    basis: list
    metric: np.ndarray
    point: EvalPoint | None = None
    signature: tuple | None = None
    order: int | None = None
    dims_by_order: list = field(default_factory=list)
    stabilized: bool = False
    closed: bool = True

    @property
    def n(self) -> int:
        return np.asarray(self.metric).shape[0]

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def full_dim(self) -> int:
        return (self.n + 2) * (self.n + 1) // 2

    def span(self) -> Span:
        s = Span((self.n + 2) ** 2)
        for b in self.basis:
            s.add(_flat(b))
        return s


def lie_closure(matrices: Iterable, metric=None) -> LieSubalgebra:
    mats = [np.asarray(m, dtype=object) for m in matrices]
    if not mats and metric is None:
        raise ValueError("need at least one matrix or a metric to fix the size")
    size = mats[0].shape[0] if mats else np.asarray(metric).shape[0] + 2
    closure = LieClosure(size)
    for m in mats:
        closure.add(np.vectorize(Fraction, otypes=[object])(m))
    if metric is None:
        metric = _default_metric(size - 2)
    return LieSubalgebra(closure.basis, np.asarray(metric, dtype=object),
                         closed=closure.is_closed())


def _default_metric(n):
    g = np.empty((n, n), dtype=object)
    g.fill(Fraction(0))
    for i in range(n):
        g[i, i] = Fraction(1)
    return g


def infinitesimal_holonomy(chart: Chart, point, max_order: int = 4) -> LieSubalgebra:
    if max_order < 0:
        raise ValueError("max_order must be non-negative")
    if not isinstance(point, EvalPoint):
        point = make_point(chart, dict(point))
    pt = point.as_dict()
    n = chart.dim
    size = n + 2
    full = size * (size - 1) // 2
    closure = LieClosure(size, bound=full)
    dims = []
    # level maps (sorted derivative sequence, i, j) -> symbolic matrix
    level = {((), i, j): curvature_matrix(chart, i, j) for i in range(n) for j in range(i + 1, n)}
    level = {k: m for k, m in level.items() if any(bool(x) for x in m.flat)}
    for order in range(max_order + 1):
        if order > 0:
            nxt = {}
            for (seq, i, j), M in level.items():
                top = seq[0] if seq else n - 1
                for a in range(top + 1):
                    D = adjoint_derivative_matrix(chart, a, M)
                    if any(bool(x) for x in D.flat):
                        nxt[((a,) + seq, i, j)] = D
            level = nxt
        for M in level.values():
            if len(closure) == full:
                break
            closure.add(evaluate_array(M, pt))
        dims.append(len(closure))
        if len(closure) == full or not level:
            # nothing new can appear at higher orders
            dims.extend([len(closure)] * (max_order - order))
            break
    stabilized = len(dims) >= 2 and dims[-1] == dims[-2]
    if max_order == 0:
        stabilized = False
    return LieSubalgebra(closure.basis, np.asarray(chart.metric_at(pt), dtype=object), point,
                         chart.signature, max_order, dims, stabilized and closure.is_closed(),
                         closure.is_closed())


# ---------------------------------------------------------------------------
# E = hol n g_1


@dataclass
class HolonomyDistribution:
    basis: list
    metric: np.ndarray
    point: EvalPoint | None = None

    @property
    def rank(self) -> int:
        return len(self.basis)

    def totally_lightlike(self) -> bool:
        g = self.metric
        n = g.shape[0]
        return all(sum(g[a, b] * v[a] * w[b] for a in range(n) for b in range(n)) == 0
                   for v in self.basis for w in self.basis)


def holonomy_distribution(alg: LieSubalgebra) -> HolonomyDistribution:
    """Vectors V with s_-^flat ^ V^flat in the algebra.

    Unknowns are the coefficients c_a of the basis and the components of
    V; the equation sum c_a B_a - M(s_-^flat ^ V^flat) = 0 is solved
    exactly and its solutions are projected onto V.
    """
    g = np.asarray(alg.metric, dtype=object)
    n = g.shape[0]
    size = n + 2
    ginv = mat_inverse(g)
    columns = [_flat(b) for b in alg.basis]
    for k in range(n):
        e = [Fraction(0)] * n
        e[k] = Fraction(1)
        columns.append([-x for x in _flat(s_minus_wedge(e, g, ginv).matrix())])
    rows = [[col[r] for col in columns] for r in range(size * size)]
    kernel = nullspace(rows, len(columns))
    span = Span(n)
    for vec in kernel:
        span.add(vec[len(alg.basis):])
    return HolonomyDistribution(span.basis, g, alg.point)


def parabolic_basis(g) -> list:
    """Basis of p = g_0 + g_1 for the splitting given by g."""
    g = np.asarray(g, dtype=object)
    n = g.shape[0]
    ginv = mat_inverse(g)
    zero = AdjointTractor.zero(g, ginv)
    out = []
    A0 = zero.A
    out.append(AdjointTractor(zero.mu, Fraction(1), A0, zero.Z, g, ginv).matrix())
    for k in range(n):
        for l in range(k + 1, n):
            S = np.empty((n, n), dtype=object)
            S.fill(Fraction(0))
            S[k, l], S[l, k] = Fraction(1), Fraction(-1)
            out.append(AdjointTractor(zero.mu, Fraction(0), matmul(ginv, S, Fraction(0)), zero.Z, g, ginv).matrix())
    for k in range(n):
        mu = np.array([Fraction(int(i == k)) for i in range(n)], dtype=object)
        out.append(AdjointTractor(mu, Fraction(0), A0, zero.Z, g, ginv).matrix())
    return out


def full_algebra_basis(g) -> list:
    """Basis of so(h) = g_-1 + p."""
    g = np.asarray(g, dtype=object)
    n = g.shape[0]
    ginv = mat_inverse(g)
    zero = AdjointTractor.zero(g, ginv)
    out = parabolic_basis(g)
    for k in range(n):
        Z = np.array([Fraction(int(i == k)) for i in range(n)], dtype=object)
        out.append(AdjointTractor(zero.mu, Fraction(0), zero.A, Z, g, ginv).matrix())
    return out


@dataclass
class GenericityReport:
    dim: int
    full_dim: int
    generic: bool
    open_orbit: bool
    e_rank: int
    e_lightlike: bool
    order: int | None
    stabilized: bool

    def lines(self) -> list[str]:
        return [
            f"dim {self.dim} of {self.full_dim}",
            f"generic {'yes' if self.generic else 'no'}",
            f"open_orbit {'yes' if self.open_orbit else 'no'}",
            f"E_rank {self.e_rank}",
            f"E_lightlike {'yes' if self.e_lightlike else 'no'}",
        ]


def genericity_report(alg: LieSubalgebra) -> GenericityReport:
    full = alg.full_dim
    span = alg.span()
    for b in parabolic_basis(alg.metric):
        span.add(_flat(b))
    E = holonomy_distribution(alg)
    return GenericityReport(alg.dim, full, alg.dim == full, len(span) == full,
                            E.rank, E.totally_lightlike(), alg.order, alg.stabilized)


def membership(phi, alg: LieSubalgebra) -> bool:
    M = phi.matrix() if isinstance(phi, AdjointTractor) else np.asarray(phi, dtype=object)
    return alg.span().contains(_flat(M))


# ---------------------------------------------------------------------------
# wedge condition


@dataclass
class WedgeReport:
    ok: bool
    failures: list


def _wedge_covector_form(beta, alpha, k) -> dict:
    """Components (increasing index tuples) of beta ^ alpha for a k-form alpha."""
    n = len(beta)
    out = {}
    for idx in itertools.combinations(range(n), k + 1):
        acc = Fraction(0)
        for r, i in enumerate(idx):
            rest = idx[:r] + idx[r + 1:]
            acc += (-1) ** r * Fraction(beta[i]) * Fraction(alpha[rest] if k else alpha)
        if acc:
            out[idx] = acc
    return out


def check_wedge_condition(E: HolonomyDistribution, alpha) -> WedgeReport:
    """V^flat ^ alpha == 0 for every basis vector V of E.

    ``alpha`` is a k-form given by its (antisymmetric) component array at
    the point, or by a covector TensorField evaluated at ``E.point``.
    """
    if isinstance(alpha, TensorField):
        alpha = alpha.evaluate(E.point.as_dict())
    alpha = np.asarray(alpha, dtype=object)
    k = alpha.ndim
    g = E.metric
    n = g.shape[0]
    failures = []
    for V in E.basis:
        v_flat = [sum((g[a, b] * V[b] for b in range(n)), Fraction(0)) for a in range(n)]
        comps = _wedge_covector_form(v_flat, alpha if k else alpha.item(), k)
        if comps:
            failures.append(V)
    return WedgeReport(not failures, failures)


# ---------------------------------------------------------------------------
# brackets of vector fields and the E classification


def vector_bracket(ring: Ring, X: Sequence[RationalFn], Y: Sequence[RationalFn]) -> list:
    names = ring.names
    n = len(names)
    out = []
    for k in range(n):
        acc = ring.zero()
        for i in range(n):
            if X[i]:
                acc = acc + X[i] * Y[k].diff(names[i])
            if Y[i]:
                acc = acc - Y[i] * X[k].diff(names[i])
        out.append(acc)
    return out


@dataclass
class BracketReport:
    rank: int
    span_dims: list
    integrable: bool
    generic: bool | None


def bracket_generation(ring: Ring, fields: Sequence[Sequence[RationalFn]], points: Sequence) -> BracketReport:
    """Integrability / bracket-generation evidence for span(fields).

    ``span_dims`` lists, per point, dim(D + [D, D]) (and in the rank 2,
    dimension 5 case, dim(D + [D, D] + [D, [D, D]])).
    """
    n = len(ring.names)
    r = len(fields)
    brackets = [vector_bracket(ring, fields[a], fields[b]) for a, b in itertools.combinations(range(r), 2)]
    doubles = []
    if (n, r) == (5, 2):
        doubles = [vector_bracket(ring, f, b) for f in fields for b in brackets]
    integrable = True
    dims = []
    rank = None
    for point in points:
        pt = point.as_dict() if isinstance(point, EvalPoint) else dict(point)
        span = Span(n)
        for f in fields:
            span.add([c.eval(pt) for c in f])
        rank = len(span) if rank is None else rank
        for b in brackets:
            if not span.contains([c.eval(pt) for c in b]):
                integrable = False
        for b in brackets + doubles:
            span.add([c.eval(pt) for c in b])
        dims.append(len(span))
    generic = None
    if (n, r) in ((5, 2), (6, 3)):
        generic = all(d == n for d in dims)
    return BracketReport(rank or 0, dims, integrable, generic)


def annihilator_fields(data: DistributionData) -> list:
    """A basis of vector fields annihilated by all 1-forms of ``data``.

    Row-reduces the forms symbolically; free columns become the fields.
    """
    ring = data.ring
    n = data.dim
    rows = [list(f) for f in data.forms]
    pivots = []
    r = 0
    # constant pivot columns first so no division by a coordinate function
    order = sorted(range(n), key=lambda c: not any(row[c] and row[c].is_constant() for row in rows))
    for c in order:
        if r == len(rows):
            break
        piv = next((i for i in range(r, len(rows)) if rows[i][c] and rows[i][c].is_constant()), None)
        if piv is None:
            piv = next((i for i in range(r, len(rows)) if rows[i][c]), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        p = rows[r][c]
        rows[r] = [x / p for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c]:
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
    free = [c for c in range(n) if c not in pivots]
    fields = []
    for fcol in free:
        vec = [ring.zero()] * n
        vec[fcol] = ring.one()
        for row, p in zip(rows, pivots):
            vec[p] = -row[fcol]
        fields.append(vec)
    return fields


@dataclass
class ERegionReport:
    ranks: list
    constant_rank: bool
    brackets: BracketReport
    points: list

    @property
    def integrable(self) -> bool:
        return self.brackets.integrable


def classify_E_region(chart: Chart, points: Sequence[EvalPoint], fields: Sequence[TensorField],
                      max_order: int = 4) -> ERegionReport:
    """Sample r^E on ``points`` and classify span(fields) by brackets.

    The fields must reproduce E at every sampled point (sampling is the
    stand-in for an E-adapted open set).
    """
    ranks = []
    for point in points:
        alg = infinitesimal_holonomy(chart, point, max_order)
        E = holonomy_distribution(alg)
        pt = point.as_dict()
        vals = [list(f.evaluate(pt)) for f in fields]
        span_f = Span(chart.dim)
        for v in vals:
            span_f.add(v)
        span_e = Span(chart.dim)
        for v in E.basis:
            span_e.add(v)
        same = len(span_f) == len(span_e) and all(span_e.contains(v) for v in vals)
        if not same:
            raise SpanMismatch(f"fields span a {len(span_f)}-dim space but E has rank {E.rank} at {point}")
        ranks.append(E.rank)
    comps = [list(f.components) for f in fields]
    report = bracket_generation(chart.ring, comps, points) if comps else BracketReport(0, [0] * len(points), True, None)
    return ERegionReport(ranks, len(set(ranks)) <= 1, report, list(points))


# ---------------------------------------------------------------------------
# spin(3,4) stabilising a totally null 4-plane


def _spin34h_param_matrix(Z, X, w, wbar, v, r) -> np.ndarray:
    """The 8x8 block matrix in the basis (s_+, e_1..e_3, s_-, ebar_1..ebar_3)."""
    M = np.empty((8, 8), dtype=object)
    M.fill(Fraction(0))
    M[0, 0] = r
    for a in range(3):
        M[0, 1 + a] = w[a]
        M[0, 5 + a] = wbar[a]
        M[1 + a, 0] = v[a]
        M[1 + a, 4] = -wbar[a]
        M[4, 5 + a] = -v[a]
        M[5 + a, 4] = -w[a]
        for b in range(3):
            M[1 + a, 1 + b] = Z[a][b]
            M[1 + a, 5 + b] = X[a][b]
            M[5 + a, 5 + b] = -Z[b][a]
    M[4, 4] = -r
    return M


# their basis (s_+, e_a, s_-, ebar_a) -> frame (s_-, e_a, ebar_a, s_+)
_PERM = [4, 1, 2, 3, 5, 6, 7, 0]


def spin34H_constructor() -> LieSubalgebra:
    """16-dimensional algebra, in the frame (s_-, e_1..e_3, ebar_1..ebar_3, s_+).

    Free parameters: Z (9), X in so(3) (3), w^2, wbar^1, wbar^3, v_2;
    the remaining entries follow from
    w^3 = Z^2_1, w^1 = -Z^2_3, v_1 = -Z^3_2, v_3 = Z^1_2,
    r = Z^1_1 - Z^2_2 + Z^3_3, wbar^2 = -X^1_3.
    """
    params = ([("Z", a, b) for a in range(3) for b in range(3)]
              + [("X", 0, 1), ("X", 0, 2), ("X", 1, 2)]
              + [("w", 1), ("wbar", 0), ("wbar", 2), ("v", 1)])
    basis = []
    for p in params:
        Z = [[Fraction(0)] * 3 for _ in range(3)]
        X = [[Fraction(0)] * 3 for _ in range(3)]
        w = [Fraction(0)] * 3
        wbar = [Fraction(0)] * 3
        v = [Fraction(0)] * 3
        if p[0] == "Z":
            Z[p[1]][p[2]] = Fraction(1)      # Z[a][b] = Z^b_a  (row a, column b)
        elif p[0] == "X":
            X[p[1]][p[2]] = Fraction(1)
            X[p[2]][p[1]] = Fraction(-1)
        elif p[0] == "w":
            w[p[1]] = Fraction(1)
        elif p[0] == "wbar":
            wbar[p[1]] = Fraction(1)
        else:
            v[p[1]] = Fraction(1)
        w[2] = Z[0][1]
        w[0] = -Z[2][1]
        v[0] = -Z[1][2]
        v[2] = Z[1][0]
        r = Z[0][0] - Z[1][1] + Z[2][2]
        wbar[1] = -X[0][2]
        M = _spin34h_param_matrix(Z, X, w, wbar, v, r)
        basis.append(M[np.ix_(_PERM, _PERM)])
    g = np.empty((6, 6), dtype=object)
    g.fill(Fraction(0))
    for a in range(3):
        g[a, 3 + a] = g[3 + a, a] = Fraction(1)
    closure = LieClosure(8)
    for b in basis:
        closure.span.add(_flat(b))
        closure.basis.append(b)
    return LieSubalgebra(closure.basis, g, signature=(3, 3), closed=closure.is_closed())


@dataclass
class ContainmentReport:
    contained: bool
    outside: list


def spin34H_containment(alg: LieSubalgebra, reference: LieSubalgebra | None = None) -> ContainmentReport:
    ref = reference or spin34H_constructor()
    span = ref.span()
    outside = [i for i, b in enumerate(alg.basis) if not span.contains(_flat(b))]
    return ContainmentReport(not outside, outside)

"""Ambient metrics in normal form as truncated rho-jets.

The ambient metric attached to a jet g_rho = sum_k g^(k) rho^k is

    2 t dt drho + 2 rho dt^2 + t^2 g_rho(x)

on coordinates (t, x^1..x^n, rho).  Ambient indices are ordered
(0, 1..n, inf) with 0 for d_t and inf for d_rho, which matches the
tractor frame (s_-, d_1..d_n, s_+).

Every tensor built from the metric is homogeneous under t -> s t, so a
component is t^w times a function of (x, rho).  Components are stored at
t = 1 together with their weight w; a d_t derivative multiplies by w.
For a tensor of homogeneity degree d the weight of a component is
d - (lower 0 indices) + (upper 0 indices).

The jet polynomial is treated as an exact metric.  The rho^m coefficient
of Ric~_IJ depends on g^(k) only for k <= m + 1 (k <= m + 2 for the
(inf, inf) component), so a jet truncated at K determines Ric~ to order
K - 1 (K - 2 for (inf, inf)).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .chartio import Chart, EvalPoint, make_point
from .curvature import stack
from .errors import SingularBaseMetric, SingularMetric, UnsolvableOrder, UnsupportedDimension
from .linalg import LinearUnknownSystem, solve_linear
from .symexpr import RationalFn, Ring
from .tensor import TensorField, evaluate_array, mat_inverse, matmul
from .tractor import adjoint_derivative_matrix, curvature_matrix, connection_matrix

__all__ = [
    "RhoSeries",
    "AmbientJet",
    "AmbientSeriesTensor",
    "assemble_ambient",
    "ambient_connection",
    "connection_from_formulas",
    "ricci_series",
    "euler_check",
    "JetOrderReport",
    "solve_jet_order",
    "extend_jet",
    "normal_form_jet",
    "obstruction",
    "obstruction_constant",
    "fg_constant",
    "IdentificationReport",
    "tractor_ambient_identification_check",
]


# ---------------------------------------------------------------------------
# rho series


class RhoSeries:
    """sum_k c_k rho^k known modulo rho^prec; coefficients are RationalFn."""

    __slots__ = ("coeffs", "prec", "ring")

    def __init__(self, coeffs: Sequence[RationalFn], prec: int, ring: Ring):
        coeffs = list(coeffs[:prec])
        while coeffs and not coeffs[-1]:
            coeffs.pop()
        self.coeffs = coeffs
        self.prec = prec
        self.ring = ring

    @classmethod
    def const(cls, value, prec: int, ring: Ring) -> "RhoSeries":
        c = value if isinstance(value, RationalFn) else ring.const(value)
        return cls([c], prec, ring)

    @classmethod
    def zero(cls, prec: int, ring: Ring) -> "RhoSeries":
        return cls([], prec, ring)

    def __getitem__(self, k: int) -> RationalFn:
        if k >= self.prec:
            raise IndexError(f"coefficient rho^{k} is beyond the known precision {self.prec}")
        return self.coeffs[k] if k < len(self.coeffs) else self.ring.zero()

    coefficient = __getitem__

    def valuation(self) -> float:
        return next((k for k, c in enumerate(self.coeffs) if c), math.inf)

    def is_zero(self) -> bool:
        return not self.coeffs

    def __bool__(self):
        return bool(self.coeffs)

    def __add__(self, other: "RhoSeries") -> "RhoSeries":
        prec = min(self.prec, other.prec)
        m = max(len(self.coeffs), len(other.coeffs))
        z = self.ring.zero()
        a = self.coeffs + [z] * (m - len(self.coeffs))
        b = other.coeffs + [z] * (m - len(other.coeffs))
        return RhoSeries([x + y for x, y in zip(a, b)], prec, self.ring)

    def __neg__(self) -> "RhoSeries":
        return RhoSeries([-c for c in self.coeffs], self.prec, self.ring)

    def __sub__(self, other: "RhoSeries") -> "RhoSeries":
        return self + (-other)

    def __mul__(self, other) -> "RhoSeries":
        if not isinstance(other, RhoSeries):
            if not other:
                return RhoSeries([], self.prec, self.ring)
            return RhoSeries([c * other for c in self.coeffs], self.prec, self.ring)
        va, vb = self.valuation(), other.valuation()
        prec = min(self.prec + vb, other.prec + va, max(self.prec, other.prec))
        if va == math.inf or vb == math.inf:
            return RhoSeries([], prec, self.ring)
        prec = int(prec)
        out = [self.ring.zero()] * min(prec, len(self.coeffs) + len(other.coeffs) - 1)
        for i, x in enumerate(self.coeffs):
            if not x:
                continue
            for j, y in enumerate(other.coeffs):
                if i + j >= len(out):
                    break
                if y:
                    out[i + j] = out[i + j] + x * y
        return RhoSeries(out, prec, self.ring)

    __rmul__ = __mul__

    def d_rho(self) -> "RhoSeries":
        return RhoSeries([c * k for k, c in enumerate(self.coeffs)][1:], max(self.prec - 1, 0), self.ring)

    def d_x(self, name: str) -> "RhoSeries":
        return RhoSeries([c.diff(name) for c in self.coeffs], self.prec, self.ring)

    def map(self, fn) -> "RhoSeries":
        return RhoSeries([fn(c) for c in self.coeffs], self.prec, self.ring)

    def truncate(self, prec: int) -> "RhoSeries":
        return RhoSeries(self.coeffs, min(prec, self.prec), self.ring)

    def __repr__(self):
        terms = [f"({c})*rho^{k}" for k, c in enumerate(self.coeffs) if c]
        return " + ".join(terms or ["0"]) + f" + O(rho^{self.prec})"


def _series_matrix_inverse(mats: Sequence[np.ndarray], prec: int, ring: Ring) -> np.ndarray:
    """Inverse of sum_k A_k rho^k as a matrix of RhoSeries modulo rho^prec."""
    n = mats[0].shape[0]
    try:
        b0 = mat_inverse(mats[0])
    except SingularMetric as exc:
        raise SingularBaseMetric("g^(0) is not invertible") from exc
    zero = ring.zero()
    blocks = [b0]
    for k in range(1, prec):
        acc = np.empty((n, n), dtype=object)
        acc.fill(zero)
        for j in range(1, k + 1):
            if j < len(mats) and any(bool(x) for x in mats[j].flat):
                acc = acc + matmul(mats[j], blocks[k - j], zero)
        blocks.append(-matmul(b0, acc, zero) if any(bool(x) for x in acc.flat) else acc)
    out = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            out[i, j] = RhoSeries([blocks[k][i, j] for k in range(prec)], prec, ring)
    return out


# ---------------------------------------------------------------------------
# jets


class AmbientJet:
    """Coefficients g^(0..K) of g_rho over a base chart.

    ``coeffs[k]`` is a symmetric n x n object array of RationalFn.  Without
    ``coeffs`` the jet is (g, 2P, 0, ...); missing higher coefficients
    are zero.  Coefficients may live in an extension of the
    chart ring (marker unknowns).
    """

    def __init__(self, chart: Chart, coeffs: Sequence | None = None, K: int | None = None,
                 ring: Ring | None = None):
        n = chart.dim
        self.chart = chart
        self.ring = ring or chart.ring
        if K is None:
            K = n // 2 + 1 if coeffs is None else max(len(coeffs) - 1, 0)
        if K < 0:
            raise ValueError("truncation order must be non-negative")
        self.K = K
        if coeffs is None:
            coeffs = [chart.metric] + ([2 * stack(chart).schouten] if K >= 1 else [])
        coeffs = list(coeffs)
        if not coeffs:
            coeffs.append(chart.metric)
        z = self.ring.zero()
        while len(coeffs) < K + 1:
            zero = np.empty((n, n), dtype=object)
            zero.fill(z)
            coeffs.append(zero)
        self.coeffs = [self._lift(np.asarray(c, dtype=object)) for c in coeffs[:K + 1]]
        for k, c in enumerate(self.coeffs):
            if any(c[i, j] != c[j, i] for i in range(n) for j in range(i + 1, n)):
                raise ValueError(f"g^({k}) is not symmetric")
        g0 = self._lift(np.asarray(chart.metric, dtype=object))
        if any(a != b for a, b in zip(self.coeffs[0].flat, g0.flat)):
            raise ValueError("g^(0) must equal the chart metric")

    def _lift(self, arr):
        out = np.empty(arr.shape, dtype=object)
        for idx, v in np.ndenumerate(arr):
            if isinstance(v, RationalFn):
                out[idx] = v.to_ring(self.ring)
            else:
                out[idx] = self.ring.const(v)
        return out

    @property
    def n(self) -> int:
        return self.chart.dim

    def with_coefficient(self, k: int, value, K: int | None = None, ring: Ring | None = None) -> "AmbientJet":
        K = max(self.K, k) if K is None else K
        coeffs = list(self.coeffs)
        ring = ring or self.ring
        z = ring.zero()
        while len(coeffs) <= k:
            zero = np.empty((self.n, self.n), dtype=object)
            zero.fill(z)
            coeffs.append(zero)
        coeffs[k] = value
        return AmbientJet(self.chart, coeffs[:K + 1], K, ring)

    def truncated(self, K: int) -> "AmbientJet":
        return AmbientJet(self.chart, self.coeffs[:K + 1], K, self.ring)

    @classmethod
    def einstein(cls, chart: Chart, lam, K: int = 2) -> "AmbientJet":
        """(1 + lam rho)^2 g, the exact ambient jet of an Einstein metric with P = lam g."""
        lam = Fraction(lam)
        g = np.asarray(chart.metric, dtype=object)
        coeffs = [g, g * (2 * lam), g * (lam * lam)]
        return cls(chart, coeffs[:K + 1] if K < 2 else coeffs, K)

    # cached geometric data -------------------------------------------------

    @cached_property
    def _prec(self) -> int:
        return self.K + 2

    @cached_property
    def g_rho(self) -> np.ndarray:
        n = self.n
        out = np.empty((n, n), dtype=object)
        for i in range(n):
            for j in range(n):
                out[i, j] = RhoSeries([c[i, j] for c in self.coeffs], self._prec, self.ring)
        return out

    @cached_property
    def g_rho_inverse(self) -> np.ndarray:
        return _series_matrix_inverse(self.coeffs, self._prec, self.ring)


@dataclass
class AmbientSeriesTensor:
    """Ambient tensor components at t = 1 with homogeneity degree.

    ``components`` is an object array of RhoSeries indexed by ambient
    indices 0..n+1; ``indices`` tags slots as 'u' or 'd'.
    """

    components: np.ndarray
    indices: str
    degree: int
    n: int
    valid_order: int | None = None

    def weight(self, idx) -> int:
        w = self.degree
        for tag, i in zip(self.indices, idx):
            if i == 0:
                w += 1 if tag == "u" else -1
        return w

    def __getitem__(self, idx) -> RhoSeries:
        return self.components[idx]

    def index_label(self, i: int) -> str:
        return "0" if i == 0 else ("inf" if i == self.n + 1 else str(i))


def _d(series: RhoSeries, weight: int, I: int, chart: Chart) -> RhoSeries:
    """Partial derivative along ambient coordinate I at t = 1."""
    n = chart.dim
    if I == 0:
        return series * weight if weight else RhoSeries.zero(series.prec, series.ring)
    if I == n + 1:
        return series.d_rho()
    return series.d_x(chart.coords[I - 1])


def assemble_ambient(jet: AmbientJet) -> AmbientSeriesTensor:
    """The metric 2 t dt drho + 2 rho dt^2 + t^2 g_rho."""
    n = jet.n
    N = n + 2
    prec, ring = jet._prec, jet.ring
    comps = np.empty((N, N), dtype=object)
    for I in range(N):
        for J in range(N):
            comps[I, J] = RhoSeries.zero(prec, ring)
    comps[0, 0] = RhoSeries([ring.zero(), ring.const(2)], prec, ring)
    comps[0, N - 1] = comps[N - 1, 0] = RhoSeries.const(1, prec, ring)
    comps[1:n + 1, 1:n + 1] = jet.g_rho
    return AmbientSeriesTensor(comps, "dd", 2, n)


def _inverse_ambient(jet: AmbientJet) -> AmbientSeriesTensor:
    n = jet.n
    N = n + 2
    prec, ring = jet._prec, jet.ring
    comps = np.empty((N, N), dtype=object)
    for I in range(N):
        for J in range(N):
            comps[I, J] = RhoSeries.zero(prec, ring)
    comps[0, N - 1] = comps[N - 1, 0] = RhoSeries.const(1, prec, ring)
    comps[N - 1, N - 1] = RhoSeries([ring.zero(), ring.const(-2)], prec, ring)
    comps[1:n + 1, 1:n + 1] = jet.g_rho_inverse
    return AmbientSeriesTensor(comps, "uu", -2, n)


_CONNECTION_CACHE: dict = {}


def ambient_connection(jet: AmbientJet) -> AmbientSeriesTensor:
    """Christoffel symbols Gamma^K_IJ of the ambient metric (brute force)."""
    cached = getattr(jet, "_connection", None)
    if cached is not None:
        return cached
    n = jet.n
    N = n + 2
    chart = jet.chart
    g = assemble_ambient(jet)
    ginv = _inverse_ambient(jet)
    # dg[L][I][J] = d_L g_IJ
    dg = [[[_d(g[I, J], g.weight((I, J)), L, chart) for J in range(N)] for I in range(N)] for L in range(N)]
    comps = np.empty((N, N, N), dtype=object)
    for I in range(N):
        for J in range(I, N):
            lowered = [dg[I][J][L] + dg[J][I][L] - dg[L][I][J] for L in range(N)]
            for K in range(N):
                acc = RhoSeries.zero(jet._prec, jet.ring)
                for L in range(N):
                    if ginv[K, L] and lowered[L]:
                        acc = acc + ginv[K, L] * lowered[L]
                comps[K, I, J] = comps[K, J, I] = acc * Fraction(1, 2)
    out = AmbientSeriesTensor(comps, "udd", 0, n)
    jet._connection = out
    return out


def connection_from_formulas(jet: AmbientJet) -> AmbientSeriesTensor:
    """Christoffel symbols assembled from the closed-form normal-form expressions.

    nabla_i d_j = -1/2 t g'_ij d_t + Gamma^k_ij(g_rho) d_k + (rho g'_ij - g_ij) d_rho,
    nabla_i d_t = d_i / t, nabla_i d_rho = 1/2 g^kl g'_il d_k,
    nabla_rho d_t = d_rho / t, nabla_t d_t = nabla_rho d_rho = 0,
    where ' is d/drho and g_ij are the components of g_rho.
    """
    n = jet.n
    N = n + 2
    chart = jet.chart
    prec, ring = jet._prec, jet.ring
    zero = RhoSeries.zero(prec, ring)
    g, ginv = jet.g_rho, jet.g_rho_inverse
    gdot = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            gdot[i, j] = g[i, j].d_rho()
    rho = RhoSeries([ring.zero(), ring.one()], prec, ring)
    comps = np.empty((N, N, N), dtype=object)
    comps.fill(zero)

    def put(K, I, J, value):
        comps[K, I, J] = comps[K, J, I] = value

    for i in range(n):
        for j in range(i, n):
            put(0, i + 1, j + 1, gdot[i, j] * Fraction(-1, 2))
            put(N - 1, i + 1, j + 1, rho * gdot[i, j] - g[i, j])
            for k in range(n):
                acc = zero
                for l in range(n):
                    if not ginv[k, l]:
                        continue
                    low = (g[j, l].d_x(chart.coords[i]) + g[i, l].d_x(chart.coords[j])
                           - g[i, j].d_x(chart.coords[l]))
                    if low:
                        acc = acc + ginv[k, l] * low
                put(k + 1, i + 1, j + 1, acc * Fraction(1, 2))
        put(i + 1, i + 1, 0, RhoSeries.const(1, prec, ring))
        for k in range(n):
            acc = zero
            for l in range(n):
                if ginv[k, l] and gdot[i, l]:
                    acc = acc + ginv[k, l] * gdot[i, l]
            put(k + 1, i + 1, N - 1, acc * Fraction(1, 2))
    put(N - 1, N - 1, 0, RhoSeries.const(1, prec, ring))
    return AmbientSeriesTensor(comps, "udd", 0, n)


def euler_check(jet: AmbientJet) -> bool:
    """nabla~ (t d_t) = Id, exactly to the known precision."""
    G = ambient_connection(jet)
    n = jet.n
    N = n + 2
    for I in range(N):
        for K in range(N):
            # (nabla_I T)^K = d_I T^K + Gamma^K_{I0} T^0, with T^0 = t of weight 1
            val = G[K, I, 0]
            if I == 0 and K == 0:
                val = val + RhoSeries.const(1, jet._prec, jet.ring)
            target = 1 if I == K else 0
            diff = val - RhoSeries.const(target, jet._prec, jet.ring)
            if diff:
                return False
    return True


def _riemann_component(G: AmbientSeriesTensor, chart: Chart, L, K, I, J) -> RhoSeries:
    """R^L_{KIJ} = d_I G^L_JK - d_J G^L_IK + G^L_IM G^M_JK - G^L_JM G^M_IK."""
    N = G.n + 2
    acc = _d(G[L, J, K], G.weight((L, J, K)), I, chart) - _d(G[L, I, K], G.weight((L, I, K)), J, chart)
    for M in range(N):
        if G[L, I, M] and G[M, J, K]:
            acc = acc + G[L, I, M] * G[M, J, K]
        if G[L, J, M] and G[M, I, K]:
            acc = acc - G[L, J, M] * G[M, I, K]
    return acc


def ricci_series(jet: AmbientJet, components: Sequence[tuple] | None = None) -> AmbientSeriesTensor:
    """Ric~_KJ = R^I_{KIJ} for the requested (K, J) pairs (all by default).

    Coefficients up to rho^(K-1) are determined by the jet
    (rho^(K-2) for the (inf, inf) component); ``valid_order`` records K - 1.
    """
    if jet.K < 1:
        raise ValueError("ricci_series needs truncation order K >= 1")
    G = ambient_connection(jet)
    n = jet.n
    N = n + 2
    comps = np.empty((N, N), dtype=object)
    comps.fill(None)
    wanted = components if components is not None else [(a, b) for a in range(N) for b in range(a, N)]
    for a, b in wanted:
        acc = RhoSeries.zero(jet._prec, jet.ring)
        for I in range(N):
            acc = acc + _riemann_component(G, jet.chart, I, a, I, b)
        comps[a, b] = comps[b, a] = acc
    for idx in np.ndindex(N, N):
        if comps[idx] is None:
            comps[idx] = RhoSeries.zero(0, jet.ring)
    return AmbientSeriesTensor(comps, "dd", 0, n, valid_order=jet.K - 1)


def _tangential_coefficient(jet: AmbientJet, m: int) -> np.ndarray:
    """rho^m coefficient of Ric~_ij (i, j tangential) as an n x n array."""
    n = jet.n
    pairs = [(i + 1, j + 1) for i in range(n) for j in range(i, n)]
    ric = ricci_series(jet, pairs)
    out = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            out[i, j] = ric[i + 1, j + 1][m]
    return out


# ---------------------------------------------------------------------------
# order-by-order determination


@dataclass
class JetOrderReport:
    k: int
    point: EvalPoint
    values: np.ndarray | None
    critical: bool
    trace: Fraction | None
    free: list = field(default_factory=list)
    rank: int = 0
    residual: np.ndarray | None = None

    @property
    def determined(self) -> bool:
        return not self.free


def _marker_names(n: int) -> list[str]:
    return [f"m_{i}_{j}" for i in range(n) for j in range(i, n)]


def _marker_matrix(ring: Ring, n: int) -> np.ndarray:
    out = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(i, n):
            out[i, j] = out[j, i] = ring.var(f"m_{i}_{j}")
    return out


def _perturbation(chart: Chart, ring: Ring, point: Mapping, rng: random.Random) -> np.ndarray:
    """Random symmetric polynomial matrix vanishing at ``point`` with generic 1st/2nd derivatives."""
    n = chart.dim
    shifted = [ring.var(c) - ring.const(point[c]) for c in chart.coords]
    out = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(i, n):
            acc = ring.zero()
            for a in range(n):
                acc = acc + shifted[a] * rng.randint(1, 9)
                for b in range(a, n):
                    acc = acc + shifted[a] * shifted[b] * rng.randint(1, 9)
            out[i, j] = out[j, i] = acc
    return out


def solve_jet_order(jet: AmbientJet, k: int, point, assert_pointwise: bool = True) -> JetOrderReport:
    """Solve for g^(k) at one point from the rho^(k-1) tangential Ricci coefficient.

    The components of g^(k)(x) are scalar unknowns.  Away from the
    critical order 2k = n all tangential equations are imposed; at
    2k = n only their g-trace is imposed, the trace-free part is reported
    free and the trace-free residual (independent of g^(k)) is returned.
    With ``assert_pointwise`` a second solve with a perturbation of g^(k)
    vanishing at the point must give the same equations, i.e. no
    x-derivative of g^(k) may enter.
    """
    chart = jet.chart
    n = chart.dim
    if k < 1:
        raise ValueError("k must be >= 1")
    if not isinstance(point, EvalPoint):
        point = make_point(chart, dict(point))
    pt = point.as_dict()
    names = _marker_names(n)
    at_point = evaluate_partial(_marker_coefficient(jet, k), pt)
    if assert_pointwise:
        # g^(k) = Q with Q(x) = 0 must give the same equations as g^(k) = 0
        base = AmbientJet(chart, jet.coeffs[:k], k, jet.ring)
        pert = _perturbation(chart, jet.ring, pt, random.Random(k * 7919 + n))
        with_q = evaluate_partial(_tangential_coefficient(base.with_coefficient(k, pert), k - 1), pt)
        without = evaluate_partial(_zero_coefficient(jet, k), pt)
        if any(a != b for a, b in zip(with_q.flat, without.flat)):
            raise UnsolvableOrder(f"x-derivatives of g^({k}) enter the rho^{k - 1} equations; pointwise solving is not valid")
    g0 = np.asarray(chart.metric_at(pt), dtype=object)
    ginv = mat_inverse(g0)
    critical = 2 * k == n
    system = LinearUnknownSystem(names)
    eqs = []
    for i in range(n):
        for j in range(i, n):
            coeffs, const = at_point[i, j].linear_coefficients(names)
            eqs.append(({u: c.constant_value() for u, c in coeffs.items()}, const.constant_value(), i, j))
    if critical:
        tr_coeffs: dict = {}
        tr_const = Fraction(0)
        for coeffs, const, i, j in eqs:
            w = ginv[i, j] * (1 if i == j else 2)
            for u, c in coeffs.items():
                tr_coeffs[u] = tr_coeffs.get(u, Fraction(0)) + w * c
            tr_const += w * const
        system.add(tr_coeffs, tr_const)
    else:
        for coeffs, const, _, _ in eqs:
            system.add(coeffs, const)
    sol = solve_linear(system)
    if not sol.consistent:
        raise UnsolvableOrder(f"order {k} equations are inconsistent at {point}")
    values = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(i, n):
            values[i, j] = values[j, i] = sol.particular[f"m_{i}_{j}"]
    trace = sum((ginv[i, j] * values[i, j] for i in range(n) for j in range(n)), Fraction(0))
    residual = None
    if critical:
        # with g^(k) = 0 the tangential coefficient is the forced residual; its trace-free part
        # does not depend on g^(k)
        N0 = np.empty((n, n), dtype=object)
        for i in range(n):
            for j in range(n):
                N0[i, j] = eqs_value(eqs, i, j)
        residual = _trace_free_values(N0, g0, ginv)
    return JetOrderReport(k, point, values, critical, trace, sol.free, sol.rank, residual)


def _marker_coefficient(jet: AmbientJet, k: int) -> np.ndarray:
    """rho^(k-1) tangential Ricci coefficient with g^(k) replaced by marker unknowns (cached per jet)."""
    cache = jet.__dict__.setdefault("_marker_cache", {})
    if k not in cache:
        n = jet.n
        ring = jet.ring.extend(_marker_names(n))
        base = AmbientJet(jet.chart, jet.coeffs[:k], k - 1, jet.ring)
        trial = base.with_coefficient(k, _marker_matrix(ring, n), K=k, ring=ring)
        cache[k] = _tangential_coefficient(trial, k - 1)
    return cache[k]


def _zero_coefficient(jet: AmbientJet, k: int) -> np.ndarray:
    cache = jet.__dict__.setdefault("_zero_cache", {})
    if k not in cache:
        cache[k] = _tangential_coefficient(AmbientJet(jet.chart, jet.coeffs[:k], k, jet.ring), k - 1)
    return cache[k]


def eqs_value(eqs, i, j) -> Fraction:
    a, b = (i, j) if i <= j else (j, i)
    for _, const, p, q in eqs:
        if (p, q) == (a, b):
            return const
    raise KeyError((i, j))


def _trace_free_values(M, g, ginv):
    n = g.shape[0]
    tr = sum((ginv[i, j] * M[i, j] for i in range(n) for j in range(n)), Fraction(0))
    out = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            out[i, j] = M[i, j] - tr * g[i, j] / n
    return out


def evaluate_partial(arr, point: Mapping) -> np.ndarray:
    """Substitute coordinate values, keeping marker unknowns symbolic."""
    arr = np.asarray(arr, dtype=object)
    out = np.empty(arr.shape, dtype=object)
    for idx, v in np.ndenumerate(arr):
        out[idx] = v.subs(point)
    return out


def _operator_check(jet: AmbientJet, k: int, point: Mapping) -> None:
    """Confirm at a point that g^(k) enters the rho^(k-1) tangential Ricci
    coefficient as k (k - n/2) X - (k/2) tr_g(X) g."""
    chart = jet.chart
    n = chart.dim
    names = _marker_names(n)
    ring = jet.ring.extend(names)
    markers = _marker_matrix(ring, n)
    base = AmbientJet(chart, jet.coeffs[:k], k - 1, jet.ring)
    with_m = evaluate_partial(_tangential_coefficient(base.with_coefficient(k, markers, K=k, ring=ring), k - 1), point)
    g0 = np.asarray(chart.metric_at(point), dtype=object)
    ginv = mat_inverse(g0)
    tr = sum((ring.const(ginv[a, b]) * markers[a, b] for a in range(n) for b in range(n)), ring.zero())
    for i in range(n):
        for j in range(n):
            coeffs, _ = with_m[i, j].linear_coefficients(names)
            lin = sum((coeffs[u] * ring.var(u) for u in names), ring.zero())
            expect = markers[i, j] * Fraction(k * (2 * k - n), 2) - tr * g0[i, j] * Fraction(k, 2)
            if lin != expect:
                raise UnsolvableOrder(f"unexpected linear structure of the order-{k} equations at {dict(point)}")


def extend_jet(jet: AmbientJet, k: int, check_point: Mapping | None = None) -> tuple[AmbientJet, np.ndarray | None]:
    """Determine g^(k) symbolically from the rho^(k-1) tangential equations.

    Returns the jet with g^(k) filled in (truncation max(K, k)) and, at
    the critical order 2k = n, the trace-free residual array (the
    obstruction up to normalization); otherwise None.  At the critical
    order the trace-free part of g^(k) is set to zero.
    """
    chart = jet.chart
    n = chart.dim
    if check_point is not None:
        _operator_check(jet, k, check_point)
    base = AmbientJet(chart, jet.coeffs[:k], k, jet.ring)   # g^(k) = 0
    N = _tangential_coefficient(base, k - 1)
    st = stack(chart)
    g = base.coeffs[0]
    ginv = st.ginv if jet.ring is chart.ring else mat_inverse(g)
    trN = sum((ginv[a, b] * N[a, b] for a in range(n) for b in range(n) if ginv[a, b] and N[a, b]),
              jet.ring.zero())
    X = np.empty((n, n), dtype=object)
    residual = None
    if 2 * k == n:
        T = trN * Fraction(2, k * n)
        for i in range(n):
            for j in range(n):
                X[i, j] = T * g[i, j] / n
        residual = np.empty((n, n), dtype=object)
        for i in range(n):
            for j in range(n):
                residual[i, j] = N[i, j] - trN * g[i, j] / n
    else:
        T = -trN / (k * (k - n))
        for i in range(n):
            for j in range(n):
                X[i, j] = (-N[i, j] + T * g[i, j] * Fraction(k, 2)) / Fraction(k * (2 * k - n), 2)
    return jet.with_coefficient(k, X, K=max(jet.K, k)), residual


def normal_form_jet(chart: Chart, K: int | None = None, check_point: Mapping | None = None) -> AmbientJet:
    """Jet solved order by order; at the critical even order the trace-free part is zero."""
    n = chart.dim
    if K is None:
        K = n // 2 + 1
    jet = AmbientJet(chart, [chart.metric], 0)
    for k in range(1, K + 1):
        if 2 * k > n and n % 2 == 0:
            jet = jet.with_coefficient(k, np.asarray(jet.coeffs[0]) * 0, K=k)
            continue
        jet, _ = extend_jet(jet, k, check_point)
    return jet


# ---------------------------------------------------------------------------
# obstruction


def fg_constant(n: int) -> Fraction:
    """(-1)^(n/2-1) 2^(n-2) ((n/2-1)!)^2 / (n-2)."""
    h = n // 2
    return Fraction((-1) ** (h - 1) * 2 ** (n - 2) * math.factorial(h - 1) ** 2, n - 2)


# measured once on ppwave_quartic in dimension 4 so that the ambient
# extraction equals the curvature-module Bach tensor; see obstruction_constant
_DIM4_RESIDUAL = Fraction(-1, 2)


def obstruction_constant(n: int) -> Fraction:
    """c_n = residual * fg_constant(n); the residual is fixed by the dim-4 Bach convention."""
    if n % 2:
        raise UnsupportedDimension(f"obstruction needs even dimension, got {n}")
    return _DIM4_RESIDUAL * fg_constant(n)


def obstruction_raw(chart: Chart, check_point: Mapping | None = None) -> np.ndarray:
    """Trace-free part of the rho^(n/2-1) tangential Ricci coefficient, unnormalized."""
    n = chart.dim
    if n % 2 or n < 4:
        raise UnsupportedDimension(f"obstruction needs even dimension >= 4, got {n}")
    h = n // 2
    jet = AmbientJet(chart, [chart.metric], 0)
    for k in range(1, h):
        jet, _ = extend_jet(jet, k, check_point)
    _, residual = extend_jet(jet, h, check_point)
    return residual


def obstruction(chart: Chart, point=None, constant: Fraction | None = None):
    """Obstruction tensor from the ambient Ricci coefficient.

    Symbolic TensorField when ``point`` is None, otherwise the evaluated
    component array at the point.
    """
    c = obstruction_constant(chart.dim) if constant is None else Fraction(constant)
    raw = obstruction_raw(chart)
    comps = np.empty(raw.shape, dtype=object)
    for idx, v in np.ndenumerate(raw):
        comps[idx] = v * c
    field_ = TensorField(chart, "dd", comps)
    if point is None:
        return field_
    if isinstance(point, EvalPoint):
        point = point.as_dict()
    return field_.evaluate(point)


# ---------------------------------------------------------------------------
# tractor / ambient identification


@dataclass
class IdentificationReport:
    point: EvalPoint
    connection_ok: bool
    curvature_ok: bool
    t_row_ok: bool
    rho_row_ok: bool
    rho_ratio: Fraction | None
    mismatches: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.connection_ok and self.curvature_ok and self.t_row_ok and self.rho_row_ok


def _ambient_endomorphism(G, chart, I, J, pt):
    N = G.n + 2
    M = np.empty((N, N), dtype=object)
    for L in range(N):
        for K in range(N):
            M[L, K] = _riemann_component(G, chart, L, K, I, J)[0].eval(pt)
    return M


def _nabla_curvature_trace(chart: Chart, i: int, pt) -> np.ndarray:
    """sum_kl g^kl (nabla_k R^nc)(d_l, d_i) at the point."""
    st = stack(chart)
    n = chart.dim
    gamma = st.gamma
    total = None
    for k in range(n):
        for l in range(n):
            if not st.ginv[k, l]:
                continue
            term = adjoint_derivative_matrix(chart, k, _curv(chart, l, i))
            for m in range(n):
                if gamma[m, k, l]:
                    term = term - _curv(chart, m, i) * gamma[m, k, l]
                if gamma[m, k, i]:
                    term = term - _curv(chart, l, m) * gamma[m, k, i]
            val = evaluate_array(term, pt) * st.ginv[k, l].eval(pt)
            total = val if total is None else total + val
    return total


def _curv(chart, a, b):
    if a == b:
        return _zero_curv(chart)
    if a < b:
        return curvature_matrix(chart, a, b)
    return -curvature_matrix(chart, b, a)


def _zero_curv(chart):
    n = chart.dim
    out = np.empty((n + 2, n + 2), dtype=object)
    out.fill(chart.ring.zero())
    return out


def tractor_ambient_identification_check(jet: AmbientJet, point, factor: Fraction = Fraction(3)) -> IdentificationReport:
    """Compare ambient curvature at rho = 0, t = 1 with tractor data.

    Checks: the ambient connection along M equals the tractor connection;
    R~(d_i, d_j) = R^nc(d_i, d_j); R~(d_t, d_I) = 0; and
    R~(d_rho, d_i) = factor * g^kl (nabla_k R^nc)(d_l, d_i).  For the last
    relation the ratio between both sides is measured when they are
    proportional (``rho_ratio``).
    """
    if jet.K < 2:
        raise ValueError("identification check needs K >= 2")
    chart = jet.chart
    n = chart.dim
    N = n + 2
    if not isinstance(point, EvalPoint):
        point = make_point(chart, dict(point))
    pt = point.as_dict()
    G = ambient_connection(jet)
    mismatches = []
    conn_ok = True
    for i in range(n):
        amb = np.empty((N, N), dtype=object)
        for L in range(N):
            for K in range(N):
                amb[L, K] = G[L, i + 1, K][0].eval(pt)
        if any(a != b for a, b in zip(amb.flat, evaluate_array(connection_matrix(chart, i), pt).flat)):
            conn_ok = False
            mismatches.append(("connection", i))
    curv_ok = True
    for i in range(n):
        for j in range(i + 1, n):
            lhs = _ambient_endomorphism(G, chart, i + 1, j + 1, pt)
            rhs = evaluate_array(curvature_matrix(chart, i, j), pt)
            if any(a != b for a, b in zip(lhs.flat, rhs.flat)):
                curv_ok = False
                mismatches.append(("curvature", i, j))
    t_ok = True
    for I in range(N):
        if I == 0:
            continue
        lhs = _ambient_endomorphism(G, chart, 0, I, pt)
        if any(bool(x) for x in lhs.flat):
            t_ok = False
            mismatches.append(("t-row", I))
    ratios = set()
    rho_ok = True
    for i in range(n):
        lhs = _ambient_endomorphism(G, chart, N - 1, i + 1, pt)
        rhs = _nabla_curvature_trace(chart, i, pt)
        if any(a != factor * b for a, b in zip(lhs.flat, rhs.flat)):
            rho_ok = False
            mismatches.append(("rho-row", i))
        for a, b in zip(lhs.flat, rhs.flat):
            if b:
                ratios.add(Fraction(a) / Fraction(b))
            elif a:
                ratios.add(None)
    ratio = ratios.pop() if len(ratios) == 1 else None
    return IdentificationReport(point, conn_ok, curv_ok, t_ok, rho_ok, ratio, mismatches)

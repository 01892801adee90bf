"""Levi-Civita curvature of a chart, computed exactly.

Conventions (coordinate fields ``d_i``)::

    Gamma^k_ij  = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij)
    R^l_kij     = (R(d_i, d_j) d_k)^l
                = d_i Gamma^l_jk - d_j Gamma^l_ik + Gamma^l_im Gamma^m_jk - Gamma^l_jm Gamma^m_ik
    Ric_jk      = R^i_kij             (trace of Z -> R(Z, d_j) d_k)
    P           = (Ric - scal g / (2(n-1))) / (n-2)
    C_kij       = (nabla_i P)_jk - (nabla_j P)_ik
    W(X,Y)Z     = R(X,Y)Z + g(X,Z) P(Y) + P(X,Z) Y - P(Y,Z) X - g(Y,Z) P(X)
    B_ij        = nabla^k C_ijk - P^kl W_kijl,   W_kijl = g(W(d_j, d_l) d_k, d_i)

Everything is cached per chart in a :class:`CurvatureStack`.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from .chartio import Chart, EvalPoint
from .errors import ZeroFactor
from .linalg import Span
from .symexpr import RationalFn
from .tensor import TensorField, evaluate_array, mat_inverse, zeros

__all__ = [
    "CurvatureStack",
    "stack",
    "christoffel",
    "riemann",
    "ricci",
    "scalar",
    "schouten",
    "cotton",
    "weyl",
    "bach",
    "inverse_metric",
    "metric_tensor",
    "conformal_rescale",
    "raise_index",
    "lower_index",
    "trace",
    "divergence",
    "covariant_derivative",
    "lower_riemann_type",
    "check_parallel_null_distribution",
    "NullDistributionReport",
]


class CurvatureStack:
    """Lazily computed curvature tensors of one chart, as component arrays."""

    def __init__(self, chart: Chart):
        self.chart = chart
        self.n = chart.dim
        self.ring = chart.ring
        self.g = chart.metric
        self._zero = chart.ring.zero()

    def _zeros(self, rank):
        return zeros(self.ring, (self.n,) * rank)

    def d(self, f: RationalFn, i: int) -> RationalFn:
        return f.diff(self.chart.coords[i])

    @cached_property
    def ginv(self) -> np.ndarray:
        return mat_inverse(self.g)

    @cached_property
    def dg(self) -> np.ndarray:
        """dg[l, i, j] = d_l g_ij."""
        n = self.n
        out = self._zeros(3)
        for l in range(n):
            for i in range(n):
                for j in range(i, n):
                    out[l, i, j] = out[l, j, i] = self.d(self.g[i, j], l)
        return out

    @cached_property
    def gamma(self) -> np.ndarray:
        """gamma[k, i, j] = Gamma^k_ij."""
        n, dg, ginv = self.n, self.dg, self.ginv
        lowered = self._zeros(3)
        for l in range(n):
            for i in range(n):
                for j in range(i, n):
                    val = (dg[i, j, l] + dg[j, i, l] - dg[l, i, j]) * Fraction(1, 2)
                    lowered[l, i, j] = lowered[l, j, i] = val
        out = self._zeros(3)
        for k in range(n):
            for i in range(n):
                for j in range(i, n):
                    acc = self._zero
                    for l in range(n):
                        if ginv[k, l] and lowered[l, i, j]:
                            acc = acc + ginv[k, l] * lowered[l, i, j]
                    out[k, i, j] = out[k, j, i] = acc
        return out

    @cached_property
    def riemann(self) -> np.ndarray:
        """riemann[l, k, i, j] = R^l_kij."""
        n, gam = self.n, self.gamma
        out = self._zeros(4)
        for i in range(n):
            for j in range(i + 1, n):
                for l in range(n):
                    for k in range(n):
                        val = self.d(gam[l, j, k], i) - self.d(gam[l, i, k], j)
                        for m in range(n):
                            if gam[l, i, m] and gam[m, j, k]:
                                val = val + gam[l, i, m] * gam[m, j, k]
                            if gam[l, j, m] and gam[m, i, k]:
                                val = val - gam[l, j, m] * gam[m, i, k]
                        out[l, k, i, j] = val
                        out[l, k, j, i] = -val
        return out

    @cached_property
    def ricci(self) -> np.ndarray:
        n, r = self.n, self.riemann
        out = self._zeros(2)
        for j in range(n):
            for k in range(j, n):
                acc = self._zero
                for i in range(n):
                    acc = acc + r[i, k, i, j]
                out[j, k] = out[k, j] = acc
        return out

    @cached_property
    def scalar(self) -> RationalFn:
        return _contract2(self.ginv, self.ricci, self._zero)

    @cached_property
    def schouten(self) -> np.ndarray:
        n = self.n
        if n < 3:
            raise ValueError("Schouten tensor needs dim >= 3")
        shift = self.scalar / (2 * (n - 1))
        out = self._zeros(2)
        for i in range(n):
            for j in range(i, n):
                out[i, j] = out[j, i] = (self.ricci[i, j] - shift * self.g[i, j]) / (n - 2)
        return out

    @cached_property
    def schouten_up(self) -> np.ndarray:
        """P^l_j = g^lm P_mj."""
        return _contract_first(self.ginv, self.schouten, self._zero)

    @cached_property
    def nabla_schouten(self) -> np.ndarray:
        """[i, j, k] = (nabla_i P)_jk."""
        return covariant_derivative_array(self, self.schouten, "dd")

    @cached_property
    def cotton(self) -> np.ndarray:
        """[k, i, j] = C_kij = (nabla_i P)_jk - (nabla_j P)_ik."""
        n, dp = self.n, self.nabla_schouten
        out = self._zeros(3)
        for k in range(n):
            for i in range(n):
                for j in range(i + 1, n):
                    val = dp[i, j, k] - dp[j, i, k]
                    out[k, i, j] = val
                    out[k, j, i] = -val
        return out

    @cached_property
    def weyl(self) -> np.ndarray:
        """[l, k, i, j] = W^l_kij = (W(d_i, d_j) d_k)^l."""
        n, g, pu, p = self.n, self.g, self.schouten_up, self.schouten
        out = self.riemann.copy()
        for i in range(n):
            for j in range(i + 1, n):
                for k in range(n):
                    for l in range(n):
                        val = out[l, k, i, j]
                        val = val + g[i, k] * pu[l, j] - g[j, k] * pu[l, i]
                        if l == j:
                            val = val + p[i, k]
                        if l == i:
                            val = val - p[j, k]
                        out[l, k, i, j] = val
                        out[l, k, j, i] = -val
        return out

    @cached_property
    def weyl_lowered(self) -> np.ndarray:
        """[a, k, i, j] = g(W(d_i, d_j) d_k, d_a)."""
        return _contract_first(self.g, self.weyl, self._zero)

    @cached_property
    def bach(self) -> np.ndarray:
        n = self.n
        ginv, p = self.ginv, self.schouten
        dc = covariant_derivative_array(self, self.cotton, "ddd")  # [m, i, j, k]
        p_up = _raise_both(ginv, p, self._zero)
        wl = self.weyl_lowered
        out = self._zeros(2)
        # both triangles are computed so that a sign error shows up as asymmetry
        for i in range(n):
            for j in range(n):
                acc = self._zero
                for k in range(n):
                    for m in range(n):
                        if ginv[k, m] and dc[m, i, j, k]:
                            acc = acc + ginv[k, m] * dc[m, i, j, k]
                for k in range(n):
                    for l in range(n):
                        # W_kijl = wl[i, k, j, l] = -wl[k, i, j, l]
                        if p_up[k, l] and wl[k, i, j, l]:
                            acc = acc + p_up[k, l] * wl[k, i, j, l]
                out[i, j] = acc
        return out


def _contract2(ginv, t, zero):
    n = ginv.shape[0]
    acc = zero
    for i in range(n):
        for j in range(n):
            if ginv[i, j] and t[i, j]:
                acc = acc + ginv[i, j] * t[i, j]
    return acc


def _contract_first(ginv, t, zero):
    """out[l, ...] = sum_m ginv[l, m] t[m, ...]; raises or lowers slot 0."""
    n = ginv.shape[0]
    out = np.empty(t.shape, dtype=object)
    out.fill(zero)
    for idx in np.ndindex(t.shape[1:]):
        for l in range(n):
            acc = zero
            for m in range(n):
                if ginv[l, m] and t[(m,) + idx]:
                    acc = acc + ginv[l, m] * t[(m,) + idx]
            out[(l,) + idx] = acc
    return out



def _raise_both(ginv, t, zero):
    first = _contract_first(ginv, t, zero)
    return _contract_first(ginv, first.T.copy(), zero).T.copy()


def covariant_derivative_array(st: CurvatureStack, t: np.ndarray, indices: str) -> np.ndarray:
    """Levi-Civita derivative; result index 0 is the derivative direction."""
    n, gam = st.n, st.gamma
    rank = len(indices)
    out = zeros(st.ring, (n,) * (rank + 1))
    for m in range(n):
        for idx in itertools.product(range(n), repeat=rank):
            val = st.d(t[idx], m)
            for slot, tag in enumerate(indices):
                for p in range(n):
                    if tag == "d":
                        # - Gamma^p_{m idx[slot]} t[..p..]
                        c = gam[p, m, idx[slot]]
                        if c:
                            other = t[idx[:slot] + (p,) + idx[slot + 1:]]
                            if other:
                                val = val - c * other
                    else:
                        c = gam[idx[slot], m, p]
                        if c:
                            other = t[idx[:slot] + (p,) + idx[slot + 1:]]
                            if other:
                                val = val + c * other
            out[(m,) + idx] = val
    return out


_STACKS: dict = {}
_LOCK = threading.Lock()


def stack(chart: Chart) -> CurvatureStack:
    with _LOCK:
        st = _STACKS.get(chart)
        if st is None:
            if len(_STACKS) > 64:
                _STACKS.clear()
            st = _STACKS[chart] = CurvatureStack(chart)
    return st


def metric_tensor(chart: Chart) -> TensorField:
    return TensorField(chart, "dd", chart.metric.copy())


def inverse_metric(chart: Chart) -> TensorField:
    return TensorField(chart, "uu", stack(chart).ginv)


def christoffel(chart: Chart) -> TensorField:
    return TensorField(chart, "udd", stack(chart).gamma)


def riemann(chart: Chart) -> TensorField:
    return TensorField(chart, "uddd", stack(chart).riemann)


def ricci(chart: Chart) -> TensorField:
    return TensorField(chart, "dd", stack(chart).ricci)


def scalar(chart: Chart) -> RationalFn:
    return stack(chart).scalar


def schouten(chart: Chart) -> TensorField:
    return TensorField(chart, "dd", stack(chart).schouten)


def cotton(chart: Chart) -> TensorField:
    return TensorField(chart, "ddd", stack(chart).cotton)


def weyl(chart: Chart) -> TensorField:
    return TensorField(chart, "uddd", stack(chart).weyl)


def bach(chart: Chart) -> TensorField:
    return TensorField(chart, "dd", stack(chart).bach)


def covariant_derivative(field_: TensorField) -> TensorField:
    st = stack(field_.chart)
    return TensorField(field_.chart, "d" + field_.indices,
                       covariant_derivative_array(st, field_.components, field_.indices))


def raise_index(t: TensorField, slot: int = 0) -> TensorField:
    if t.indices[slot] != "d":
        raise ValueError(f"slot {slot} is not covariant")
    st = stack(t.chart)
    moved = np.moveaxis(t.components, slot, 0)
    out = np.moveaxis(_contract_first(st.ginv, moved, st._zero), 0, slot)
    return TensorField(t.chart, t.indices[:slot] + "u" + t.indices[slot + 1:], out)


def lower_index(t: TensorField, slot: int = 0) -> TensorField:
    if t.indices[slot] != "u":
        raise ValueError(f"slot {slot} is not contravariant")
    st = stack(t.chart)
    moved = np.moveaxis(t.components, slot, 0)
    out = np.moveaxis(_contract_first(st.g, moved, st._zero), 0, slot)
    return TensorField(t.chart, t.indices[:slot] + "d" + t.indices[slot + 1:], out)


def lower_riemann_type(t: TensorField) -> TensorField:
    """g_am T^m_kij for a (1,3) tensor."""
    return lower_index(t, 0)


def trace(t: TensorField, a: int = 0, b: int = 1) -> TensorField | RationalFn:
    """Contract slots a and b, using the metric when both have the same position."""
    st = stack(t.chart)
    ta, tb = t.indices[a], t.indices[b]
    if ta == tb:
        metric = st.ginv if ta == "d" else st.g
    else:
        metric = None
    comps = np.moveaxis(t.components, (a, b), (0, 1))
    n = st.n
    rest = comps.shape[2:]
    out = zeros(st.ring, rest) if rest else None
    for idx in np.ndindex(rest) if rest else [()]:
        acc = st._zero
        for i in range(n):
            if metric is None:
                acc = acc + comps[(i, i) + idx]
            else:
                for j in range(n):
                    if metric[i, j] and comps[(i, j) + idx]:
                        acc = acc + metric[i, j] * comps[(i, j) + idx]
        if rest:
            out[idx] = acc
        else:
            return acc
    keep = "".join(tag for s, tag in enumerate(t.indices) if s not in (a, b))
    return TensorField(t.chart, keep, out)


def divergence(t: TensorField) -> TensorField:
    """g^ik nabla_i T_k... for a tensor whose first slot is covariant."""
    return trace(covariant_derivative(t), 0, 1)


def conformal_rescale(chart: Chart, factor: RationalFn, name: str | None = None) -> Chart:
    """The chart with metric factor^2 g."""
    if not isinstance(factor, RationalFn):
        factor = chart.ring.const(factor)
    if factor.is_zero():
        raise ZeroFactor("conformal factor is identically zero")
    factor = factor.to_ring(chart.ring)
    sq = factor * factor
    n = chart.dim
    metric = [[chart.metric[i, j] * sq for j in range(n)] for i in range(n)]
    if factor == 1:
        return chart
    return Chart(name or f"{chart.name}_rescaled", chart.coords, metric, chart.signature)


# ---------------------------------------------------------------------------
# parallel null distributions


@dataclass
class NullPointCheck:
    point: EvalPoint
    lightlike: bool
    parallel: bool
    ricci_image_inside: bool

    @property
    def ok(self) -> bool:
        return self.lightlike and self.parallel and self.ricci_image_inside


@dataclass
class NullDistributionReport:
    chart: str
    rank: int
    points: list = field(default_factory=list)

    @property
    def lightlike(self) -> bool:
        return all(p.lightlike for p in self.points)

    @property
    def parallel(self) -> bool:
        return all(p.parallel for p in self.points)

    @property
    def ricci_image_inside(self) -> bool:
        return all(p.ricci_image_inside for p in self.points)

    @property
    def ok(self) -> bool:
        return all(p.ok for p in self.points)


def check_parallel_null_distribution(chart: Chart, fields: Sequence[TensorField],
                                     points: Sequence[EvalPoint]) -> NullDistributionReport:
    """Check that span(fields) is totally lightlike, parallel and contains Im(Ric)."""
    st = stack(chart)
    n = chart.dim
    report = NullDistributionReport(chart.name, len(fields))
    for point in points:
        pt = point.as_dict() if isinstance(point, EvalPoint) else dict(point)
        g = evaluate_array(st.g, pt)
        vecs = [evaluate_array(f.components, pt) for f in fields]
        span = Span(n)
        for v in vecs:
            span.add(list(v))
        lightlike = all(sum(g[a, b] * v[a] * w[b] for a in range(n) for b in range(n)) == 0
                        for v in vecs for w in vecs)
        parallel = True
        for f in fields:
            dv = covariant_derivative(f).evaluate(pt)  # [i, k]
            for i in range(n):
                if not span.contains(list(dv[i])):
                    parallel = False
        ric_up = evaluate_array(_contract_first(st.ginv, st.ricci, st._zero), pt)  # Ric^k_j
        inside = all(span.contains([ric_up[k, j] for k in range(n)]) for j in range(n))
        report.points.append(NullPointCheck(point, lightlike, parallel, inside))
    return report

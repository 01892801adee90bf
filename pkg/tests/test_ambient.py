from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from confholo import ambient, curvature
from confholo.ambient import AmbientJet, RhoSeries, _riemann_component
from confholo.chartio import Chart, get_builtin, sample_points
from confholo.errors import UnsupportedDimension
from confholo.symexpr import Ring

RING = Ring(["x", "y", "z"])
RHO = sympy.Symbol("rho")

coeff_lists = st.lists(st.integers(-4, 4), min_size=0, max_size=5)


def _series(cs, prec):
    return RhoSeries([RING.const(c) for c in cs], prec, RING)


def _sympy_truncated(expr, prec):
    poly = sympy.Poly(sympy.expand(expr), RHO)
    return [poly.coeff_monomial(RHO ** k) for k in range(prec)]


@settings(max_examples=60, deadline=None)
@given(coeff_lists, coeff_lists, st.integers(1, 5), st.integers(1, 5))
def test_series_product_matches_sympy(a, b, pa, pb):
    sa, sb = _series(a, pa), _series(b, pb)
    prod = sa * sb
    # the product is known modulo rho^prec
    va = next((k for k, c in enumerate(a[:pa]) if c), None)
    vb = next((k for k, c in enumerate(b[:pb]) if c), None)
    if va is not None and vb is not None:
        assert prod.prec == min(pa + vb, pb + va, max(pa, pb))
    ea = sum(c * RHO ** k for k, c in enumerate(a[:pa]))
    eb = sum(c * RHO ** k for k, c in enumerate(b[:pb]))
    expected = _sympy_truncated(ea * eb, prod.prec) if prod.prec else []
    assert [prod[k] for k in range(prod.prec)] == [RING.const(int(c)) for c in expected]


@settings(max_examples=40, deadline=None)
@given(coeff_lists, coeff_lists, st.integers(1, 5))
def test_series_sum_and_derivative(a, b, p):
    s = _series(a, p) + _series(b, p - 1 if p > 1 else p)
    assert s.prec == (p - 1 if p > 1 else p)
    d = _series(a, p).d_rho()
    assert d.prec == p - 1
    for k in range(d.prec):
        assert d[k] == (k + 1) * (a[k + 1] if k + 1 < len(a) else 0)


def test_coefficients_beyond_precision_are_unknown():
    s = _series([1, 2], 2)
    with pytest.raises(IndexError):
        s[2]


def test_metric_inverse_series():
    jet = ambient.normal_form_jet(get_builtin("ppwave_quartic"))
    g, gi = jet.g_rho, jet.g_rho_inverse
    n = jet.n
    for i in range(n):
        for j in range(n):
            acc = RhoSeries.zero(jet._prec, jet.ring)
            for k in range(n):
                acc = acc + g[i, k] * gi[k, j]
            expect = 1 if i == j else 0
            assert acc[0] == expect and all(acc[m] == 0 for m in range(1, acc.prec))


@pytest.mark.parametrize("name", ["s4", "ppwave_quartic", "ppwave5"])
def test_connection_formulas_and_euler(name):
    jet = ambient.normal_form_jet(get_builtin(name))
    G = ambient.ambient_connection(jet)
    F = ambient.connection_from_formulas(jet)
    N = jet.n + 2
    for idx in np.ndindex(N, N, N):
        a, b = G[idx], F[idx]
        prec = min(a.prec, b.prec)
        assert all(a[m] == b[m] for m in range(prec))
    assert ambient.euler_check(jet)


def test_ambient_riemann_against_curvature_module():
    """The ambient metric as an (n+2)-dimensional chart, evaluated at t = 1, rho = 0."""
    base = get_builtin("ppwave_poly")
    jet = ambient.normal_form_jet(base, 2)
    coords = ("T",) + tuple(base.coords) + ("R",)
    ring = Ring(coords)
    T, R = ring.var("T"), ring.var("R")
    n, N = base.dim, base.dim + 2
    g = np.empty((N, N), dtype=object)
    g.fill(ring.zero())
    g[0, 0] = 2 * R
    g[0, N - 1] = g[N - 1, 0] = T
    for i in range(n):
        for j in range(n):
            g[i + 1, j + 1] = T * T * sum((jet.coeffs[k][i, j].to_ring(ring) * R ** k
                                           for k in range(len(jet.coeffs))), ring.zero())
    st_amb = curvature.stack(Chart("ambient", coords, g, (2, 4)))
    pt = {c: Fraction(1, 2) for c in base.coords}
    full = dict(pt, T=1, R=0)
    G = ambient.ambient_connection(jet)
    for idx in np.ndindex(N, N, N, N):
        assert st_amb.riemann[idx].eval(full) == _riemann_component(G, base, *idx)[0].eval(pt)


def test_flat_and_einstein_jets_are_ricci_flat():
    for jet in (AmbientJet(get_builtin("flat_2_2"), K=3),
                AmbientJet.einstein(get_builtin("s4"), Fraction(1, 2), K=3),
                AmbientJet.einstein(get_builtin("s2xs2"), Fraction(1, 6), K=3)):
        ric = ambient.ricci_series(jet)
        for idx in np.ndindex(jet.n + 2, jet.n + 2):
            s = ric[idx]
            assert all(s[m] == 0 for m in range(min(jet.K, s.prec)))


def test_wrong_einstein_constant_is_detected():
    jet = AmbientJet.einstein(get_builtin("s4"), Fraction(1, 3), K=3)
    ric = ambient.ricci_series(jet)
    assert any(ric[idx][m] for idx in np.ndindex(6, 6) for m in range(min(jet.K, ric[idx].prec)))


def test_solve_first_order_gives_twice_schouten():
    chart = get_builtin("ppwave5")
    P = curvature.schouten(chart)
    base = AmbientJet(chart, [chart.metric], K=0)
    for p in sample_points(chart, 2, seed=4):
        rep = ambient.solve_jet_order(base, 1, p)
        assert not rep.critical and rep.determined
        assert np.array_equal(rep.values, 2 * P.evaluate(p.as_dict()))


def test_critical_order_in_dim4():
    chart = get_builtin("s4")
    rep = ambient.solve_jet_order(AmbientJet(chart, K=1), 2, sample_points(chart, 1, seed=5)[0])
    assert rep.critical and len(rep.free) == 9 and rep.trace == 1
    assert not any(rep.residual.flat)


def test_normal_form_on_einstein_sphere_matches_exact_jet():
    chart = get_builtin("s4")
    jet = ambient.normal_form_jet(chart, 2)
    exact = AmbientJet.einstein(chart, Fraction(1, 2), K=2)
    for k in range(3):
        assert np.array_equal(jet.coeffs[k], exact.coeffs[k])


def test_odd_dimension_jet_vanishes_to_truncation():
    chart = get_builtin("ppwave5")
    jet = ambient.normal_form_jet(chart, 3)
    ric = ambient.ricci_series(jet)
    for idx in np.ndindex(7, 7):
        s = ric[idx]
        assert all(s[m] == 0 for m in range(min(jet.K, s.prec)))


def test_constants():
    assert ambient.fg_constant(4) == -2 and ambient.fg_constant(6) == 16
    assert ambient.obstruction_constant(4) == 1
    assert ambient.obstruction_constant(6) == -8
    with pytest.raises(UnsupportedDimension):
        ambient.obstruction_constant(5)
    with pytest.raises(UnsupportedDimension):
        ambient.obstruction(get_builtin("ppwave5"))


def test_dim6_raw_obstruction_on_ppwave():
    chart = get_builtin("ppwave6")
    raw = ambient.obstruction_raw(chart)
    u = chart.var("u")
    assert raw[0, 0] == Fraction(-45, 2) * u
    assert all(raw[idx] == 0 for idx in np.ndindex(6, 6) if idx != (0, 0))
    O = ambient.obstruction(chart)
    assert curvature.trace(O) == 0 and curvature.divergence(O).is_zero()


def test_obstruction_vanishes_for_einstein_dim6():
    assert ambient.obstruction(get_builtin("s6")).is_zero()


def test_obstruction_at_point_matches_symbolic():
    chart = get_builtin("ppwave_quartic")
    p = sample_points(chart, 1, seed=8)[0].as_dict()
    assert np.array_equal(ambient.obstruction(chart, p), ambient.obstruction(chart).evaluate(p))


def test_identification_rho_row_measured_constant():
    """R~(d_rho, d_i) = -1/(n-4) g^kl (nabla_k R^nc)(d_l, d_i): the constant -1 in dimension 5."""
    chart = get_builtin("ppwave5")
    jet = ambient.normal_form_jet(chart, 2)
    p = sample_points(chart, 1, seed=9)[0]
    rep = ambient.tractor_ambient_identification_check(jet, p, Fraction(-1))
    assert rep.ok
    rep3 = ambient.tractor_ambient_identification_check(jet, p, Fraction(3))
    assert rep3.connection_ok and rep3.curvature_ok and rep3.t_row_ok
    assert not rep3.rho_row_ok and rep3.rho_ratio == -1

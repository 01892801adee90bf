import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from support import brute_force_closure_dim, flat, flint_rank, nonzero_point

from confholo import holonomy, tractor
from confholo.chartio import bryant_theta, get_builtin, make_point, sample_points
from confholo.errors import SpanMismatch
from confholo.tensor import TensorField


def _mat(rows):
    return np.array([[Fraction(x) for x in r] for r in rows], dtype=object)


@st.composite
def generator_sets(draw):
    size = draw(st.integers(2, 4))
    count = draw(st.integers(1, 3))
    entries = st.integers(-2, 2)
    return [np.array([[Fraction(draw(entries)) for _ in range(size)] for _ in range(size)], dtype=object)
            for _ in range(count)]


@settings(max_examples=30, deadline=None)
@given(generator_sets())
def test_lie_closure_matches_brute_force(gens):
    alg = holonomy.lie_closure(gens)
    dim, basis = brute_force_closure_dim(gens)
    assert alg.dim == dim
    assert flint_rank([flat(b) for b in basis] + [flat(b) for b in alg.basis]) == dim
    assert alg.closed


def test_rotation_generators_close_to_so3():
    Lx = _mat([[0, 0, 0], [0, 0, -1], [0, 1, 0]])
    Ly = _mat([[0, 0, 1], [0, 0, 0], [-1, 0, 0]])
    alg = holonomy.lie_closure([Lx, Ly])
    assert alg.dim == 3 and alg.closed
    Lz = _mat([[0, -1, 0], [1, 0, 0], [0, 0, 0]])
    assert holonomy.membership(Lz, alg)
    assert not holonomy.membership(_mat([[1, 0, 0], [0, 0, 0], [0, 0, 0]]), alg)


@pytest.mark.parametrize("name", ["flat_1_3", "s4", "flat_1_4"])
def test_conformally_flat_has_trivial_holonomy(name):
    chart = get_builtin(name)
    for p in sample_points(chart, 2, seed=1):
        alg = holonomy.infinitesimal_holonomy(chart, p, 4)
        assert alg.dim == 0 and alg.stabilized
        assert holonomy.holonomy_distribution(alg).rank == 0


def _ppwave_point(chart):
    return make_point(chart, {c: Fraction(1) for c in chart.coords})


@pytest.mark.parametrize("name, dims", [
    ("ppwave_poly", [2, 5, 8, 8, 8]),
    ("ppwave_quartic", [2, 6, 8, 8, 8]),
    ("ppwave_vacuum", [2, 5, 5, 5, 5]),
])
def test_ppwave_holonomy(name, dims):
    chart = get_builtin(name)
    alg = holonomy.infinitesimal_holonomy(chart, _ppwave_point(chart), 4)
    assert alg.dims_by_order == dims
    assert alg.dim < alg.full_dim and alg.closed
    E = holonomy.holonomy_distribution(alg)
    assert E.totally_lightlike()
    dv = [Fraction(0), Fraction(1), Fraction(0), Fraction(0)]
    if name == "ppwave_vacuum":
        assert E.rank == 0
    else:
        assert E.rank == 1 and flint_rank([dv] + [list(v) for v in E.basis]) == 1


@pytest.mark.parametrize("name", ["ppwave_poly", "ppwave_quartic", "ppwave_vacuum"])
def test_ppwave_invariant_null_plane(name):
    """Every holonomy element preserves span{d_v, s_+} (frame s_-, d_u, d_v, d_x, d_y, s_+)."""
    chart = get_builtin(name)
    alg = holonomy.infinitesimal_holonomy(chart, _ppwave_point(chart), 4)
    for M in alg.basis:
        for col in (2, 5):
            image = M[:, col]
            assert all(image[k] == 0 for k in (0, 1, 3, 4))


def test_vacuum_ppwave_fixes_s_plus():
    chart = get_builtin("ppwave_vacuum")
    alg = holonomy.infinitesimal_holonomy(chart, _ppwave_point(chart), 4)
    assert all(not any(M[:, 5]) for M in alg.basis)


def test_generic_chart_reaches_full_dimension():
    chart = get_builtin("kasner_poly")
    alg = holonomy.infinitesimal_holonomy(chart, sample_points(chart, 1, seed=2)[0], 4)
    rep = holonomy.genericity_report(alg)
    assert rep.generic and rep.dim == 15 and rep.open_orbit and rep.e_rank == 4
    assert alg.dims_by_order[-1] == 15


def test_genericity_report_lines():
    chart = get_builtin("ppwave_poly")
    rep = holonomy.genericity_report(holonomy.infinitesimal_holonomy(chart, _ppwave_point(chart), 4))
    assert rep.lines() == ["dim 8 of 15", "generic no", "open_orbit yes", "E_rank 1", "E_lightlike yes"]


def test_membership_of_g1_elements_on_ppwave():
    chart = get_builtin("ppwave_quartic")
    p = _ppwave_point(chart)
    alg = holonomy.infinitesimal_holonomy(chart, p, 4)
    g = np.asarray(chart.metric_at(p.as_dict()), dtype=object)
    dv = [0, 1, 0, 0]
    dx = [0, 0, 1, 0]
    assert holonomy.membership(tractor.s_minus_wedge(dv, g), alg)
    assert not holonomy.membership(tractor.s_minus_wedge(dx, g), alg)


def test_wedge_condition():
    chart = get_builtin("ppwave_quartic")
    alg = holonomy.infinitesimal_holonomy(chart, _ppwave_point(chart), 4)
    E = holonomy.holonomy_distribution(alg)
    # d_v^flat = du, so du passes and dx does not
    du = [Fraction(1), 0, 0, 0]
    dx = [0, 0, Fraction(1), 0]
    assert holonomy.check_wedge_condition(E, du).ok
    rep = holonomy.check_wedge_condition(E, dx)
    assert not rep.ok and rep.failures


def test_spin34h():
    alg = holonomy.spin34H_constructor()
    assert alg.dim == 16 and alg.closed and alg.signature == (3, 3)
    E = holonomy.holonomy_distribution(alg)
    assert E.rank == 1 and E.totally_lightlike()
    assert [list(v) for v in E.basis] == [[0, 1, 0, 0, 0, 0]]
    assert holonomy.spin34H_containment(alg).contained
    outside = [M for M in holonomy.full_algebra_basis(alg.metric) if not holonomy.membership(M, alg)]
    assert len(outside) >= 28 - 16
    bigger = holonomy.lie_closure(alg.basis + outside[:1], alg.metric)
    assert bigger.dim > 16
    assert not holonomy.spin34H_containment(bigger).contained


def test_full_and_parabolic_bases():
    g = get_builtin("flat_1_3").metric_at({"t": 0, "x": 0, "y": 0, "z": 0})
    full = holonomy.full_algebra_basis(g)
    par = holonomy.parabolic_basis(g)
    assert len(full) == 15 and len(par) == 11
    assert all(tractor.is_h_skew(M, g) for M in full)
    assert holonomy.lie_closure(par, g).dim == 11


def test_classify_region_on_ppwave():
    chart = get_builtin("ppwave_poly")
    R = chart.ring
    dv = TensorField.vector(chart, [R.zero(), R.one(), R.zero(), R.zero()])
    pts = [make_point(chart, {"u": 1, "v": 1, "x": 1, "y": 1}),
           make_point(chart, {"u": 2, "v": -1, "x": Fraction(1, 2), "y": 3})]
    rep = holonomy.classify_E_region(chart, pts, [dv])
    assert rep.ranks == [1, 1] and rep.constant_rank and rep.integrable
    dx = TensorField.vector(chart, [R.zero(), R.zero(), R.one(), R.zero()])
    with pytest.raises(SpanMismatch):
        holonomy.classify_E_region(chart, pts, [dx])


def test_annihilator_fields_kill_forms():
    data = bryant_theta("x3 + x1*x2 + x2^2 + x3^2")
    fields = holonomy.annihilator_fields(data)
    assert len(fields) == 3
    zero = data.ring.zero()
    for f in fields:
        for form in data.forms:
            assert sum((a * b for a, b in zip(form, f)), zero) == 0


@pytest.mark.parametrize("f", ["x3 + x1*x2 + x2^2 + x3^2", "x1*x3^2"])
def test_bryant_bracket_generating(f):
    rng = random.Random(31)
    data = bryant_theta(f)
    pts = [nonzero_point(rng, data.coords) for _ in range(4)]
    rep = holonomy.bracket_generation(data.ring, holonomy.annihilator_fields(data), pts)
    assert rep.rank == 3 and not rep.integrable and rep.generic
    assert rep.span_dims == [6] * 4


def test_bryant_degenerates_on_x1_zero():
    data = bryant_theta("x1*x3^2")
    pt = {"x1": 0, "x2": 1, "x3": 2, "y1": 0, "y2": 0, "y3": 0}
    rep = holonomy.bracket_generation(data.ring, holonomy.annihilator_fields(data), [pt])
    assert rep.span_dims == [5] and rep.generic is False


def test_integrable_distribution_detected():
    data = bryant_theta("x1")
    ring = data.ring
    one, zero = ring.one(), ring.zero()
    coord_fields = [[one, zero, zero, zero, zero, zero], [zero, one, zero, zero, zero, zero]]
    rep = holonomy.bracket_generation(ring, coord_fields, [{c: 1 for c in data.coords}])
    assert rep.integrable and rep.span_dims == [2] and rep.generic is None


def test_vector_bracket_by_hand():
    ring = bryant_theta("x1").ring
    X = [ring.parse(s) for s in ["x2", "x1*x3", "0", "1", "y1", "0"]]
    Y = [ring.parse(s) for s in ["x3^2", "0", "x1", "y2", "0", "x2"]]
    expected = [ring.parse(s) for s in ["0", "-x3^3 - x1^2", "x2", "y1", "-y2", "x1*x3"]]
    assert holonomy.vector_bracket(ring, X, Y) == expected
    assert holonomy.vector_bracket(ring, Y, X) == [-e for e in expected]

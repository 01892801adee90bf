"""Acceptance criteria 1-12.  Each test prints one PASS/FAIL line."""

from __future__ import annotations

import random
from fractions import Fraction

import numpy as np
import pytest

from support import (
    Timer,
    bilinear,
    brute_force_closure_dim,
    flat,
    flint_rank,
    nonzero_point,
    random_matrix,
    record,
)

from confholo import ambient, cli, curvature, holonomy, tractor
from confholo.chartio import (
    BUILTIN_NAMES,
    bryant_theta,
    format_chart,
    get_builtin,
    make_point,
    parse_chart,
    sample_points,
)
from confholo.symexpr import Ring
from confholo.tensor import is_zero_array, mat_inverse, matmul


def _all_zero(*arrays) -> bool:
    return all(is_zero_array(a) for a in arrays)


def _obstruction_vectors(O, point, chart):
    """Columns V_i with V_i^flat = O(d_i, .) at the point."""
    g = np.asarray(chart.metric_at(point), dtype=object)
    ginv = mat_inverse(g)
    Ov = O.evaluate(point)
    n = chart.dim
    vecs = [[sum((ginv[a, b] * Ov[i, b] for b in range(n)), Fraction(0)) for a in range(n)] for i in range(n)]
    return vecs, g, ginv


def test_criterion_01_curvature_oracle():
    with Timer() as t:
        flat_ok = True
        for name in ("flat_1_3", "flat_2_2", "flat_0_4", "flat_0_3", "flat_1_4", "flat_3_3"):
            st = curvature.stack(get_builtin(name))
            arrays = [st.riemann, st.ricci, st.weyl, st.cotton]
            if st.n == 4:
                arrays.append(st.bach)
            flat_ok &= _all_zero(*arrays)
        s4 = get_builtin("s4")
        st = curvature.stack(s4)
        g = s4.metric
        ric_ok = all(st.ricci[i, j] == 3 * g[i, j] for i in range(4) for j in range(4))
        scal_ok = st.scalar == 12
        p_ok = all(st.schouten[i, j] == g[i, j] / 2 for i in range(4) for j in range(4))
    ok = flat_ok and ric_ok and scal_ok and p_ok and t.elapsed < 10
    record(1, ok, f"flat zero {flat_ok}; S4 Ric=3g {ric_ok}, scal=12 {scal_ok}, P=g/2 {p_ok}; {t.elapsed:.1f}s")
    assert ok


def test_criterion_02_conformal_covariance():
    rng = random.Random(2)
    checks = []
    with Timer() as t:
        for name in ("ppwave_poly", "kasner_poly", "ppwave5", "ppwave6", "s6"):
            chart = get_builtin(name)
            W = curvature.weyl(chart)
            B = curvature.bach(chart) if chart.dim == 4 else None
            for _ in range(3):
                a = Fraction(rng.randint(1, 5), rng.randint(1, 4))
                b = Fraction(rng.randint(1, 5), rng.randint(1, 4))
                v, w = rng.sample(chart.coords, 2)
                omega = 1 + a * chart.var(v) ** 2 + b * chart.var(w) ** 2
                rescaled = curvature.conformal_rescale(chart, omega)
                checks.append(curvature.weyl(rescaled) == W)
                if B is not None:
                    checks.append(curvature.bach(rescaled) == B * (1 / (omega * omega)))
    nontrivial = not curvature.bach(get_builtin("kasner_poly")).is_zero()
    ok = all(checks) and nontrivial and t.elapsed < 120
    record(2, ok, f"{sum(checks)}/{len(checks)} covariance identities in dims 4, 5, 6; {t.elapsed:.1f}s")
    assert ok


def test_criterion_03_dim3_weyl():
    with Timer() as t:
        chart = get_builtin("dim3_random")
        st = curvature.stack(chart)
        weyl_zero = is_zero_array(st.weyl)
        # the metric must be genuinely curved for the check to mean anything
        curved = not is_zero_array(st.riemann)
    ok = weyl_zero and curved and t.elapsed < 30
    record(3, ok, f"Weyl zero {weyl_zero}, Riemann nonzero {curved}; {t.elapsed:.1f}s")
    assert ok


def test_criterion_04_tractor_suite():
    rng = random.Random(4)
    with Timer() as t:
        s4 = get_builtin("s4")
        R = s4.ring
        I = tractor.StandardTractor(R.const(Fraction(-1, 2)), np.array([R.zero()] * 4, dtype=object), R.one())
        parallel = all(tractor.tractor_derivative(s4, i, I).is_zero() for i in range(4))

        chart = get_builtin("ppwave_poly")
        n = chart.dim
        curv = []
        for _ in range(3):
            T = tractor.random_standard_tractor(chart, rng)
            v = T.as_vector()
            for i in range(n):
                for j in range(i + 1, n):
                    lhs = (tractor.tractor_derivative(chart, i, tractor.tractor_derivative(chart, j, T))
                           - tractor.tractor_derivative(chart, j, tractor.tractor_derivative(chart, i, T)))
                    Rv = matmul(tractor.curvature_matrix(chart, i, j), v.reshape(-1, 1)).ravel()
                    curv.append(lhs == tractor.StandardTractor.from_vector(Rv))

        brackets = []
        for _ in range(10):
            p = tractor.random_adjoint_tractor(chart, rng)
            q = tractor.random_adjoint_tractor(chart, rng)
            P, Q = p.matrix(), q.matrix()
            brackets.append(np.array_equal(tractor.adjoint_bracket(p, q).matrix(), matmul(P, Q) - matmul(Q, P)))

        leibniz = []
        for _ in range(5):
            phi = tractor.random_adjoint_tractor(chart, rng)
            T = tractor.random_standard_tractor(chart, rng)
            i = rng.randrange(n)
            lhs = tractor.tractor_derivative(chart, i, phi.act(T))
            rhs = tractor.adjoint_derivative(chart, i, phi).act(T) + phi.act(tractor.tractor_derivative(chart, i, T))
            leibniz.append(lhs == rhs)
    ok = parallel and all(curv) and all(brackets) and all(leibniz) and t.elapsed < 120
    record(4, ok, f"parallel {parallel}; curvature {sum(curv)}/{len(curv)}; brackets {sum(brackets)}/10; "
                  f"Leibniz {sum(leibniz)}/5; {t.elapsed:.1f}s")
    assert ok


def test_criterion_05_holonomy_suite():
    rng = random.Random(5)
    with Timer() as t:
        flat_dims = []
        for name in ("flat_1_3", "s4", "flat_2_2"):
            chart = get_builtin(name)
            for p in sample_points(chart, 2, seed=5):
                flat_dims.append(holonomy.infinitesimal_holonomy(chart, p, 4).dim)

        closures = []
        for k in range(10):
            size = 2 + k % 7
            gens = [random_matrix(rng, size, density=0.25) for _ in range(rng.randint(1, 3))]
            alg = holonomy.lie_closure(gens)
            dim, basis = brute_force_closure_dim(gens)
            rows = [flat(b) for b in basis]
            same = alg.dim == dim and flint_rank(rows + [flat(b) for b in alg.basis]) == dim
            closures.append(same)

        annihilate = []
        for name in ("s4", "s2xs2"):
            chart = get_builtin(name)
            J = curvature.trace(curvature.schouten(chart))
            assert J.is_constant()
            # Einstein scale with constant J: (-J/n, 0, 1) is parallel
            I = np.array([-J.constant_value() / chart.dim] + [Fraction(0)] * chart.dim + [Fraction(1)], dtype=object)
            for p in sample_points(chart, 2, seed=6):
                alg = holonomy.infinitesimal_holonomy(chart, p, 4)
                annihilate.append(all(not any(np.asarray(M, dtype=object).dot(I)) for M in alg.basis))
                annihilate.append(name != "s2xs2" or alg.dim > 0)
    ok = all(d == 0 for d in flat_dims) and all(closures) and all(annihilate) and t.elapsed < 180
    record(5, ok, f"conformally flat dims {sorted(set(flat_dims))}; closure vs brute force {sum(closures)}/10; "
                  f"Einstein annihilation {sum(annihilate)}/{len(annihilate)}; {t.elapsed:.1f}s")
    assert ok


def test_criterion_06_obstruction_in_holonomy():
    results = {}
    with Timer() as t:
        for name in ("ppwave_quartic", "kasner_poly"):
            chart = get_builtin(name)
            B = curvature.bach(chart)
            assert not B.is_zero()
            oks = []
            for p in sample_points(chart, 3, seed=6):
                alg = holonomy.infinitesimal_holonomy(chart, p, 4)
                vecs, g, ginv = _obstruction_vectors(B, p.as_dict(), chart)
                oks.append(all(holonomy.membership(tractor.s_minus_wedge(v, g, ginv), alg) for v in vecs))
            results[name] = oks
    ok = all(all(v) for v in results.values()) and t.elapsed < 300
    record(6, ok, "; ".join(f"{k} {sum(v)}/{len(v)} points" for k, v in results.items()) + f"; {t.elapsed:.1f}s")
    assert ok


def test_criterion_07_lightlike_image():
    rng = random.Random(7)
    lines = []
    all_ok = True
    for name in ("ppwave_poly", "ppwave_quartic", "ppwave_vacuum", "ppwave6"):
        chart = get_builtin(name)
        O = cli.obstruction_field(chart)
        for _ in range(2):
            p = make_point(chart, nonzero_point(rng, chart.coords))
            pt = p.as_dict()
            alg = holonomy.infinitesimal_holonomy(chart, p, 4)
            E = holonomy.holonomy_distribution(alg)
            vecs, g, _ = _obstruction_vectors(O, pt, chart)
            basis = [list(v) for v in E.basis]
            non_generic = alg.dim < alg.full_dim
            null = all(bilinear(u, g, v) == 0 for u in basis for v in basis)
            inside = all(flint_rank(basis + [v]) == len(basis) for v in vecs) if basis else all(
                not any(v) for v in vecs)
            all_ok &= non_generic and null and inside
        lines.append(f"{name} r_E {E.rank}")
    record(7, all_ok, ", ".join(lines) + "; basis pairwise null, Im(O) inside E")
    assert all_ok


def test_criterion_08_obstruction_normalization():
    names = ("ppwave_quartic", "kasner_poly", "ppwave_poly", "s2xs2")
    results = []
    with Timer() as t:
        for name in names:
            chart = get_builtin(name)
            B = curvature.bach(chart)
            O = ambient.obstruction(chart)
            results.append(O == B and curvature.trace(O) == 0 and curvature.divergence(O).is_zero())
        nontrivial = sum(not curvature.bach(get_builtin(nm)).is_zero() for nm in names)
    ok = all(results) and nontrivial >= 2
    record(8, ok, f"ambient O == Bach, trace-free, divergence-free on {sum(results)}/{len(names)} dim-4 charts "
                  f"({nontrivial} with nonzero Bach); constant {ambient.obstruction_constant(4)}; {t.elapsed:.1f}s")
    assert ok


def test_criterion_09_ambient_suite():
    parts = {}
    with Timer() as t:
        parts["euler"] = all(ambient.euler_check(ambient.normal_form_jet(get_builtin(nm)))
                             for nm in ("flat_1_3", "s4", "ppwave_quartic"))

        flat_jet = ambient.AmbientJet(get_builtin("flat_1_3"), K=3)
        ric = ambient.ricci_series(flat_jet)
        parts["flat_ricci"] = all(not any(ric[idx][m] for m in range(ric[idx].prec)) for idx in np.ndindex(6, 6))

        s4 = get_builtin("s4")
        K = 3
        ric = ambient.ricci_series(ambient.AmbientJet.einstein(s4, Fraction(1, 2), K=K))
        parts["einstein_ricci"] = all(not any(ric[idx][m] for m in range(min(K, ric[idx].prec)))
                                      for idx in np.ndindex(6, 6))

        two_p = []
        for name in ("kasner_poly", "ppwave5"):
            chart = get_builtin(name)
            P = curvature.schouten(chart)
            base = ambient.AmbientJet(chart, [chart.metric], K=0)
            for p in sample_points(chart, 5 if name == "kasner_poly" else 2, seed=9):
                rep = ambient.solve_jet_order(base, 1, p)
                two_p.append(np.array_equal(rep.values, 2 * P.evaluate(p.as_dict())))
        parts["solve_k1"] = all(two_p)

        ident = {}
        for name in ("flat_1_3", "s4", "ppwave_poly"):
            chart = get_builtin(name)
            jet = ambient.normal_form_jet(chart, 2)
            reps = [ambient.tractor_ambient_identification_check(jet, p, Fraction(3))
                    for p in sample_points(chart, 2, seed=10)]
            ident[name] = all(r.ok for r in reps)
        parts["identification"] = all(ident.values())
    ok = all(parts.values()) and t.elapsed < 300
    detail = ", ".join(f"{k} {v}" for k, v in parts.items())
    detail += "; identification by chart " + ", ".join(f"{k} {v}" for k, v in ident.items())
    record(9, ok, f"{detail}; {t.elapsed:.1f}s")
    assert ok


def test_criterion_10_spin34h():
    with Timer() as t:
        alg = holonomy.spin34H_constructor()
        E = holonomy.holonomy_distribution(alg)
        skew = all(tractor.is_h_skew(M, alg.metric) for M in alg.basis)
    ok = alg.dim == 16 and alg.closed and E.rank == 1 and skew and t.elapsed < 30
    record(10, ok, f"dim {alg.dim}, closed {alg.closed}, g1 part rank {E.rank}, h-skew {skew}; {t.elapsed:.1f}s")
    assert ok


def test_criterion_11_bryant_genericity():
    rng = random.Random(11)
    out = []
    with Timer() as t:
        for f in ("x3 + x1*x2 + x2^2 + x3^2", "x1*x3^2"):
            data = bryant_theta(f)
            fields = holonomy.annihilator_fields(data)
            points = [nonzero_point(rng, data.coords) for _ in range(3)]
            rep = holonomy.bracket_generation(data.ring, fields, points)
            out.append((f, rep.rank == 3 and rep.span_dims == [6, 6, 6] and rep.generic))
    ok = all(v for _, v in out) and t.elapsed < 30
    record(11, ok, "; ".join(f"f={f} generic {v}" for f, v in out) + f"; {t.elapsed:.1f}s")
    assert ok


def test_criterion_12_roundtrip_and_negative_control(monkeypatch):
    with Timer() as t:
        trips = []
        for name in BUILTIN_NAMES:
            chart = get_builtin(name)
            back = parse_chart(format_chart(chart))
            trips.append(back == chart and format_chart(back) == format_chart(chart))
        ring = Ring(["x", "y"])
        exprs = ["(x^2 - y)/(1 + x*y)", "-3/4*x^3*y + 2", "1/(x - y)^2 - x", "0"]
        trips += [ring.parse(str(ring.parse(e))) == ring.parse(e) for e in exprs]

        original = curvature.bach
        monkeypatch.setattr(curvature, "bach", lambda chart: original(chart) + curvature.metric_tensor(chart))
        caught = []
        for name in ("s4", "ppwave_quartic"):
            chart = get_builtin(name)
            p = sample_points(chart, 1, seed=12)
            res = cli.verify_chart(chart, p)
            caught.append(any(r.name == "obstruction_in_holonomy" and r.failed for r in res))
        exit_code = cli.main(["verify", "--chart", "s4", "--point", "x1=1 x2=1 x3=1 x4=1"])
    ok = all(trips) and all(caught) and exit_code == 1 and t.elapsed < 10
    record(12, ok, f"round trips {sum(trips)}/{len(trips)}; corrupted Bach caught {sum(caught)}/2, "
                   f"verify exit {exit_code}; {t.elapsed:.1f}s")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))

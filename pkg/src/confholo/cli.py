"""Command-line front end.

Exit codes: 0 success, 1 a verification check failed, 2 malformed input,
3 a mathematical precondition failed.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import ambient, curvature, holonomy, tractor
from .chartio import (
    BUILTIN_NAMES,
    Chart,
    EvalPoint,
    bryant_theta,
    format_chart,
    load_chart,
    parse_point,
    sample_points,
)
from .linalg import Span
from .errors import InputError, MathError, UnsupportedDimension
from .tensor import TensorField, mat_inverse

TENSORS = ("riemann", "ricci", "scalar", "schouten", "cotton", "weyl", "bach")


# ---------------------------------------------------------------------------
# output


class Emitter:
    """Collects records and prints them as text lines or json lines."""

    def __init__(self, fmt: str = "text", stream=None):
        self.fmt = fmt
        self.stream = stream or sys.stdout

    def emit(self, kind: str, text: str, **data):
        if self.fmt == "jsonl":
            record = {"kind": kind}
            record.update({k: _jsonable(v) for k, v in data.items()})
            print(json.dumps(record, sort_keys=True), file=self.stream)
        else:
            print(text, file=self.stream)


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (bool, int, float, str)) or v is None:
        return v
    return str(v)


def _vec(v) -> str:
    return "(" + ", ".join(str(x) for x in v) + ")"


# ---------------------------------------------------------------------------
# inputs


def _points(chart: Chart, specs: Sequence[str] | None, default_count: int = 0) -> list[EvalPoint]:
    points = []
    for spec in specs or []:
        path = Path(spec)
        if "=" not in spec and path.exists():
            for line in path.read_text(encoding="utf-8").splitlines():
                if line.strip() and not line.lstrip().startswith("#"):
                    points.append(parse_point(line, chart))
        else:
            points.append(parse_point(spec, chart))
    if not points and default_count:
        points = sample_points(chart, default_count, seed=1)
    return points


def _tensor_components(chart: Chart, which: str):
    st = curvature.stack(chart)
    if which == "scalar":
        return st.scalar
    fn = getattr(curvature, which)
    return fn(chart).components


# ---------------------------------------------------------------------------
# commands


def cmd_tensor(args, out: Emitter) -> int:
    chart = load_chart(args.chart)
    comps = _tensor_components(chart, args.which)
    points = _points(chart, args.point)
    targets = [(p, p.as_dict()) for p in points] if points else [(None, None)]
    for point, pt in targets:
        where = "" if point is None else f" at {point}"
        if args.which == "scalar":
            value = comps if pt is None else comps.eval(pt)
            out.emit("tensor", f"scalar{where} = {value}", which="scalar", point=str(point) if point else None,
                     value=str(value))
            continue
        arr = np.asarray(comps, dtype=object)
        nonzero = 0
        for idx in np.ndindex(arr.shape):
            v = arr[idx]
            value = v if pt is None else v.eval(pt)
            if value:
                nonzero += 1
                label = ",".join(str(i + 1) for i in idx)
                out.emit("component", f"{args.which}[{label}]{where} = {value}", which=args.which,
                         index=[i + 1 for i in idx], point=str(point) if point else None, value=str(value))
        if not nonzero:
            out.emit("tensor", f"{args.which}{where}: all components zero", which=args.which,
                     point=str(point) if point else None, zero=True)
    return 0


def holonomy_records(chart: Chart, points: Sequence[EvalPoint], max_order: int) -> list[dict]:
    records = []
    for point in points:
        alg = holonomy.infinitesimal_holonomy(chart, point, max_order)
        rep = holonomy.genericity_report(alg)
        E = holonomy.holonomy_distribution(alg)
        records.append({
            "point": str(point),
            "dim": alg.dim,
            "full_dim": alg.full_dim,
            "order": max_order,
            "dims_by_order": alg.dims_by_order,
            "stabilized": alg.stabilized,
            "r_E": E.rank,
            "E_basis": [list(v) for v in E.basis],
            "generic": rep.generic,
            "open_orbit": rep.open_orbit,
            "E_lightlike": rep.e_lightlike,
        })
    return records


def cmd_holonomy(args, out: Emitter) -> int:
    chart = load_chart(args.chart)
    points = _points(chart, args.point, default_count=1)
    for rec in holonomy_records(chart, points, args.max_order):
        status = "generic" if rec["generic"] else f"not observed generic up to order {rec['order']}"
        text = (f"point {rec['point']}: dim {rec['dim']}/{rec['full_dim']} (order {rec['order']}, "
                f"by order {rec['dims_by_order']}, stabilized {'yes' if rec['stabilized'] else 'no'}); "
                f"{status}; open_orbit {'yes' if rec['open_orbit'] else 'no'}; r_E {rec['r_E']}; "
                f"E lightlike {'yes' if rec['E_lightlike'] else 'no'}; E basis "
                + (" ".join(_vec(v) for v in rec["E_basis"]) or "{}"))
        out.emit("holonomy", text, **rec)
    return 0


def cmd_ambient(args, out: Emitter) -> int:
    chart = load_chart(args.chart)
    n = chart.dim
    K = args.truncation if args.truncation is not None else n // 2 + 1
    jet = ambient.normal_form_jet(chart, K)
    for k, c in enumerate(jet.coeffs):
        nz = [(i, j) for i in range(n) for j in range(i, n) if c[i, j]]
        if not nz:
            out.emit("jet", f"g^({k}) = 0", order=k, zero=True)
        for i, j in nz:
            out.emit("jet", f"g^({k})[{i + 1},{j + 1}] = {c[i, j]}", order=k, index=[i + 1, j + 1], value=str(c[i, j]))
    out.emit("euler", f"euler identity {'holds' if ambient.euler_check(jet) else 'FAILS'} to truncation {K}",
             ok=ambient.euler_check(jet), truncation=K)
    ric = ambient.ricci_series(jet)
    N = n + 2
    valid = ric.valid_order
    first = None
    for m in range(valid + 1):
        if any(m < ric[a, b].prec and ric[a, b][m] for a in range(N) for b in range(a, N)):
            first = m
            break
    if first is None:
        out.emit("ricci", f"ambient Ricci vanishes to order rho^{valid} (truncation {K})", vanishes_to=valid)
    else:
        out.emit("ricci", f"ambient Ricci first nonzero at rho^{first} (truncation {K})", first_nonzero=first)
    if n % 2 == 0:
        O = ambient.obstruction(chart)
        nz = [(i, j) for i in range(n) for j in range(i, n) if O.components[i, j]]
        if not nz:
            out.emit("obstruction", "obstruction: all components zero", zero=True)
        for i, j in nz:
            out.emit("obstruction", f"obstruction[{i + 1},{j + 1}] = {O.components[i, j]}",
                     index=[i + 1, j + 1], value=str(O.components[i, j]))
    return 0


def cmd_rescale(args, out: Emitter) -> int:
    chart = load_chart(args.chart)
    if not args.factor:
        raise InputError("rescale needs --factor")
    factor = chart.ring.parse(args.factor)
    new = curvature.conformal_rescale(chart, factor, name=f"{chart.name}_rescaled")
    out.emit("chart", format_chart(new).rstrip("\n"), chart=format_chart(new))
    return 0


# ---------------------------------------------------------------------------
# verification suite


@dataclass
class CheckResult:
    name: str
    status: str          # PASS, FAIL or SKIP
    detail: str = ""
    point: str | None = None

    @property
    def failed(self) -> bool:
        return self.status == "FAIL"


def obstruction_field(chart: Chart) -> TensorField:
    """Bach in dimension 4, the ambient extraction in higher even dimension."""
    n = chart.dim
    if n % 2:
        raise UnsupportedDimension(f"obstruction needs even dimension, got {n}")
    if n == 4:
        return curvature.bach(chart)
    return ambient.obstruction(chart)


def _is_einstein(chart: Chart) -> bool:
    st = curvature.stack(chart)
    n = chart.dim
    ric, g = st.ricci, st.g
    return all(ric[i, j] * n == st.scalar * g[i, j] for i in range(n) for j in range(n))


def verify_chart(chart: Chart, points: Sequence[EvalPoint], max_order: int = 4,
                 rho_factor: Fraction = Fraction(3), obstruction: Callable | None = None) -> list[CheckResult]:
    results: list[CheckResult] = []
    O = (obstruction or obstruction_field)(chart)
    n = chart.dim

    tr = curvature.trace(O, 0, 1)
    results.append(CheckResult("obstruction_trace_free", "PASS" if tr == 0 else "FAIL", f"trace {tr}"))
    div = curvature.divergence(O)
    results.append(CheckResult("obstruction_divergence_free", "PASS" if div.is_zero() else "FAIL"))
    if n == 4:
        amb = ambient.obstruction(chart)
        results.append(CheckResult("obstruction_matches_ambient", "PASS" if amb == O else "FAIL",
                                   "ambient extraction vs Bach"))
    if _is_einstein(chart):
        results.append(CheckResult("einstein_implies_zero", "PASS" if O.is_zero() else "FAIL"))
    else:
        results.append(CheckResult("einstein_implies_zero", "SKIP", "chart is not Einstein"))

    for point in points:
        pt = point.as_dict()
        alg = holonomy.infinitesimal_holonomy(chart, point, max_order)
        E = holonomy.holonomy_distribution(alg)
        g = np.asarray(chart.metric_at(pt), dtype=object)
        ginv = mat_inverse(g)
        Ov = O.evaluate(pt)
        ok = True
        image = []
        for i in range(n):
            v = [sum((ginv[a, b] * Ov[i, b] for b in range(n)), Fraction(0)) for a in range(n)]
            image.append(v)
            if not holonomy.membership(tractor.s_minus_wedge(v, g, ginv), alg):
                ok = False
        results.append(CheckResult("obstruction_in_holonomy", "PASS" if ok else "FAIL",
                                   f"dim hol' {alg.dim} (order {max_order})", str(point)))
        span = Span(n)
        for v in E.basis:
            span.add(v)
        inside = all(span.contains(v) for v in image)
        light = E.totally_lightlike() or alg.dim == alg.full_dim
        results.append(CheckResult("obstruction_image_in_E", "PASS" if inside else "FAIL",
                                   f"r_E {E.rank}", str(point)))
        if alg.dim == alg.full_dim:
            results.append(CheckResult("E_lightlike", "SKIP", "holonomy generic", str(point)))
        else:
            results.append(CheckResult("E_lightlike", "PASS" if light else "FAIL", f"r_E {E.rank}", str(point)))

        jet = ambient.normal_form_jet(chart, 2)
        rep = ambient.tractor_ambient_identification_check(jet, point, rho_factor)
        parts = {"connection": rep.connection_ok, "curvature": rep.curvature_ok,
                 "t_row": rep.t_row_ok, "rho_row": rep.rho_row_ok}
        for key, val in parts.items():
            detail = ""
            if key == "rho_row":
                detail = f"factor {rho_factor}; measured ratio {rep.rho_ratio if rep.rho_ratio is not None else 'n/a'}"
            results.append(CheckResult(f"ambient_identification_{key}", "PASS" if val else "FAIL", detail, str(point)))
    return results


def cmd_verify(args, out: Emitter) -> int:
    chart = load_chart(args.chart)
    if chart.dim % 2:
        raise UnsupportedDimension(f"verification suite needs even dimension, got {chart.dim}")
    points = _points(chart, args.point, default_count=2)
    results = verify_chart(chart, points, args.max_order, Fraction(args.rho_factor))
    counts = {"PASS": 0, "FAIL": 0, "SKIP": 0}
    for r in results:
        where = f" at {r.point}" if r.point else ""
        out.emit("check", f"{r.status} {r.name}{where}" + (f" [{r.detail}]" if r.detail else ""),
                 name=r.name, status=r.status, point=r.point, detail=r.detail)
        counts[r.status] += 1
    out.emit("summary", f"{counts['PASS']} passed, {counts['SKIP']} skipped, {counts['FAIL']} failed",
             passed=counts["PASS"], skipped=counts["SKIP"], failed=counts["FAIL"])
    return 1 if counts["FAIL"] else 0


def cmd_classify_e(args, out: Emitter) -> int:
    if args.bryant is not None:
        data = bryant_theta(args.bryant)
        fields = holonomy.annihilator_fields(data)
        ring = data.ring
        points = []
        for spec in args.point or []:
            vals = dict(item.split("=", 1) for item in spec.split())
            if set(vals) != set(data.coords):
                raise InputError(f"point must assign {', '.join(data.coords)}")
            points.append({k: Fraction(v) for k, v in vals.items()})
        if not points:
            raise InputError("classify-e with --bryant needs at least one --point")
        rep = holonomy.bracket_generation(ring, fields, points)
        out.emit("distribution", f"rank {rep.rank}; span dims {rep.span_dims}; integrable "
                 f"{'yes' if rep.integrable else 'no'}; generic {'yes' if rep.generic else 'no'}",
                 rank=rep.rank, span_dims=rep.span_dims, integrable=rep.integrable, generic=rep.generic)
        return 0
    chart = load_chart(args.chart)
    points = _points(chart, args.point, default_count=2)
    fields = []
    for spec in args.field or []:
        comps = [c.strip() for c in spec.split(",")]
        if len(comps) != chart.dim:
            raise InputError(f"field needs {chart.dim} comma-separated components, got {len(comps)}")
        fields.append(TensorField.vector(chart, comps))
    rep = holonomy.classify_E_region(chart, points, fields, args.max_order)
    b = rep.brackets
    generic = "n/a" if b.generic is None else ("yes" if b.generic else "no")
    out.emit("classify", f"r_E by point {rep.ranks}; constant {'yes' if rep.constant_rank else 'no'} "
             f"(sampled); integrable {'yes' if b.integrable else 'no'}; generic {generic}",
             ranks=rep.ranks, constant=rep.constant_rank, integrable=b.integrable, generic=b.generic)
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="confholo", description="Exact conformal curvature, tractor and holonomy computations.")
    parser.add_argument("--format", choices=("text", "jsonl"), default="text")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, chart_required=True):
        p.add_argument("--chart", required=chart_required,
                       help=f"built-in chart ({', '.join(BUILTIN_NAMES)}) or chart file")
        p.add_argument("--point", action="append", help="point text like 'x=1 y=1/2' or a file of points")
        p.add_argument("--format", choices=("text", "jsonl"), default=argparse.SUPPRESS)

    p = sub.add_parser("tensor", help="print a curvature tensor")
    common(p)
    p.add_argument("--which", choices=TENSORS, required=True)
    p.set_defaults(func=cmd_tensor)

    p = sub.add_parser("holonomy", help="infinitesimal holonomy report per point")
    common(p)
    p.add_argument("--max-order", type=int, default=4)
    p.set_defaults(func=cmd_holonomy)

    p = sub.add_parser("ambient", help="ambient jet, Ricci vanishing order and obstruction")
    common(p)
    p.add_argument("--truncation", type=int, default=None)
    p.set_defaults(func=cmd_ambient)

    p = sub.add_parser("rescale", help="print the chart with metric factor^2 g")
    common(p)
    p.add_argument("--factor", required=True)
    p.set_defaults(func=cmd_rescale)

    p = sub.add_parser("verify", help="run the theorem checks on a chart")
    common(p)
    p.add_argument("--max-order", type=int, default=4)
    p.add_argument("--rho-factor", default="3", help="constant in the d_rho identification relation")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("classify-e", help="rank of E on sample points and bracket classification")
    common(p, chart_required=False)
    p.add_argument("--field", action="append", help="vector field components, comma separated")
    p.add_argument("--bryant", default=None, help="use the theta distribution with this f instead of a chart")
    p.add_argument("--max-order", type=int, default=4)
    p.set_defaults(func=cmd_classify_e)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out = Emitter(args.format)
    try:
        if args.command == "classify-e" and args.bryant is None and not args.chart:
            raise InputError("classify-e needs --chart or --bryant")
        return args.func(args, out)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except MathError as exc:
        print(f"math error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

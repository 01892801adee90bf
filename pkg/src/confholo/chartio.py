"""Metric charts: the text format, evaluation points and built-in examples.

A chart file looks like::

    chart flat_1_3
    dim 4
    signature (1,3)
    coords t x y z
    metric
    g[1,1] = -1
    g[2,2] = 1
    ...

Indices in ``g[i,j]`` are 1-based in coordinate order.  Entries that are
not given default to zero and ``g[i,j]`` implies ``g[j,i]``.  ``#``
starts a comment.  Point files hold lines ``coord = rational``; on the
command line the same assignments may be separated by spaces.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import (
    ChartSyntaxError,
    DegenerateMetricAtPoint,
    DimensionMismatch,
    ExprSyntaxError,
    MissingCoordinate,
    SymmetryConflict,
    UnknownVariable,
)
from .linalg import det as rational_det
from .linalg import inertia
from .symexpr import RationalFn, Ring, parse_expr

__all__ = [
    "Chart",
    "EvalPoint",
    "DistributionData",
    "parse_chart",
    "format_chart",
    "parse_point",
    "make_point",
    "load_chart",
    "sample_points",
    "builtin_charts",
    "get_builtin",
    "bryant_theta",
    "BUILTIN_NAMES",
]

_NAME = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")


class Chart:
    """A coordinate chart with a symmetric metric of rational functions."""

    def __init__(self, name: str, coords: Sequence[str], metric, signature: tuple[int, int]):
        coords = tuple(coords)
        n = len(coords)
        if n < 3:
            raise DimensionMismatch(f"charts need dimension at least 3, got {n}")
        p, q = signature
        if p + q != n:
            raise DimensionMismatch(f"signature {signature} does not add up to dim {n}")
        ring = Ring(coords)
        g = np.empty((n, n), dtype=object)
        for i in range(n):
            for j in range(n):
                val = metric[i][j]
                if not isinstance(val, RationalFn):
                    val = ring.const(val)
                elif val.ring is not ring:
                    val = val.to_ring(ring)
                g[i, j] = val
        for i in range(n):
            for j in range(i + 1, n):
                if g[i, j] != g[j, i]:
                    raise SymmetryConflict(f"metric not symmetric at ({i + 1},{j + 1})")
        g.setflags(write=False)
        self.name = name
        self.coords = coords
        self.signature = (int(p), int(q))
        self.metric = g
        self.ring = ring

    @property
    def dim(self) -> int:
        return len(self.coords)

    def __eq__(self, other):
        if not isinstance(other, Chart):
            return NotImplemented
        return (self.name == other.name and self.coords == other.coords
                and self.signature == other.signature
                and all(a == b for a, b in zip(self.metric.flat, other.metric.flat)))

    @cached_property
    def _key(self):
        return (self.name, self.coords, self.signature, tuple(self.metric.flat))

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        return f"Chart({self.name!r}, dim={self.dim}, signature={self.signature})"

    def var(self, name: str) -> RationalFn:
        return self.ring.var(name)

    def with_metric(self, metric, name: str | None = None) -> "Chart":
        return Chart(name or self.name, self.coords, metric, self.signature)

    def metric_at(self, point: Mapping[str, object]) -> list[list[Fraction]]:
        return [[self.metric[i, j].eval(point) for j in range(self.dim)] for i in range(self.dim)]


@dataclass(frozen=True)
class EvalPoint:
    """Rational values for every chart coordinate."""

    coords: tuple
    values: tuple

    def as_dict(self) -> dict:
        return dict(zip(self.coords, self.values))

    def __getitem__(self, name):
        return self.as_dict()[name]

    def keys(self):
        return list(self.coords)

    def __iter__(self):
        return iter(self.coords)

    def __len__(self):
        return len(self.coords)

    def __str__(self):
        return " ".join(f"{c}={v}" for c, v in zip(self.coords, self.values))


def make_point(chart: Chart, values: Mapping[str, object], check_signature: bool = True) -> EvalPoint:
    missing = [c for c in chart.coords if c not in values]
    if missing:
        raise MissingCoordinate(f"point does not assign {', '.join(missing)}")
    extra = sorted(set(values) - set(chart.coords))
    if extra:
        raise UnknownVariable(f"point assigns unknown coordinates {extra}")
    vals = tuple(Fraction(values[c]) for c in chart.coords)
    point = EvalPoint(chart.coords, vals)
    g = chart.metric_at(point.as_dict())
    if rational_det(g) == 0:
        raise DegenerateMetricAtPoint(f"metric is degenerate at {point}")
    if check_signature:
        neg, pos, _ = inertia(g)
        if (neg, pos) != chart.signature:
            raise DegenerateMetricAtPoint(
                f"metric at {point} has signature {(neg, pos)}, chart declares {chart.signature}")
    return point


_ASSIGN = re.compile(r"\s*([A-Za-z][A-Za-z0-9_]*)\s*=\s*([-+]?\d+(?:/\d+)?)")


def parse_point(text: str, chart: Chart) -> EvalPoint:
    """Parse ``coord = rational`` assignments separated by whitespace or newlines."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0]
        pos = 0
        while pos < len(line):
            if not line[pos:].strip():
                break
            m = _ASSIGN.match(line, pos)
            if m is None:
                col = pos + len(line[pos:]) - len(line[pos:].lstrip()) + 1
                raise ChartSyntaxError("expected 'coord = rational'", col, lineno)
            name, value = m.group(1), m.group(2)
            if name in values:
                raise ChartSyntaxError(f"coordinate {name!r} assigned twice", m.start(1) + 1, lineno)
            values[name] = Fraction(value)
            pos = m.end()
            if pos < len(line) and not line[pos].isspace():
                raise ChartSyntaxError(f"unexpected {line[pos]!r}", pos + 1, lineno)
    return make_point(chart, values)


_METRIC_LINE = re.compile(r"\s*g\s*\[\s*(\d+)\s*,\s*(\d+)\s*\]\s*=")


def parse_chart(text: str) -> Chart:
    name = dim = signature = coords = None
    entries: dict = {}
    in_metric = False
    pending = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        indent = len(line) - len(line.lstrip())
        body = line.strip()
        keyword, _, rest = body.partition(" ")
        rest = rest.strip()
        col = indent + len(keyword) + 2
        if in_metric:
            pending.append((lineno, line))
            continue
        if keyword == "chart":
            if not _NAME.match(rest):
                raise ChartSyntaxError(f"bad chart name {rest!r}", col, lineno)
            name = rest
        elif keyword == "dim":
            if not rest.isdigit():
                raise ChartSyntaxError("dim must be a positive integer", col, lineno)
            dim = int(rest)
        elif keyword == "signature":
            m = re.fullmatch(r"\(\s*(\d+)\s*,\s*(\d+)\s*\)", rest)
            if m is None:
                raise ChartSyntaxError("signature must look like (p,q)", col, lineno)
            signature = (int(m.group(1)), int(m.group(2)))
        elif keyword == "coords":
            coords = rest.split()
            for c in coords:
                if not _NAME.match(c):
                    raise ChartSyntaxError(f"bad coordinate name {c!r}", col, lineno)
            if len(set(coords)) != len(coords):
                raise ChartSyntaxError("duplicate coordinate names", col, lineno)
        elif body == "metric":
            in_metric = True
        else:
            raise ChartSyntaxError(f"unknown directive {keyword!r}", indent + 1, lineno)
    for field_name, value in (("chart", name), ("dim", dim), ("signature", signature), ("coords", coords)):
        if value is None:
            raise ChartSyntaxError(f"missing '{field_name}' line", 1, 1)
    if not in_metric:
        raise ChartSyntaxError("missing 'metric' section", 1, 1)
    if len(coords) != dim:
        raise DimensionMismatch(f"dim {dim} but {len(coords)} coordinates declared")
    if sum(signature) != dim:
        raise DimensionMismatch(f"signature {signature} does not add up to dim {dim}")
    ring = Ring(coords)
    for lineno, line in pending:
        m = _METRIC_LINE.match(line)
        if m is None:
            raise ChartSyntaxError("expected 'g[i,j] = expression'",
                                   len(line) - len(line.lstrip()) + 1, lineno)
        i, j = int(m.group(1)), int(m.group(2))
        if not (1 <= i <= dim and 1 <= j <= dim):
            raise DimensionMismatch(f"index g[{i},{j}] out of range on line {lineno}")
        expr_text = line[m.end():]
        try:
            value = parse_expr(expr_text, ring)
        except ExprSyntaxError as exc:
            raise ChartSyntaxError(exc.message, m.end() + exc.column, lineno) from None
        except UnknownVariable as exc:
            raise UnknownVariable(f"line {lineno}: {exc}") from None
        key = (min(i, j), max(i, j))
        if key in entries and entries[key] != value:
            raise SymmetryConflict(f"g[{i},{j}] conflicts with an earlier entry (line {lineno})")
        entries[key] = value
    metric = [[ring.zero()] * dim for _ in range(dim)]
    for (i, j), value in entries.items():
        metric[i - 1][j - 1] = metric[j - 1][i - 1] = value
    return Chart(name, coords, metric, signature)


def format_chart(chart: Chart) -> str:
    lines = [
        f"chart {chart.name}",
        f"dim {chart.dim}",
        f"signature ({chart.signature[0]},{chart.signature[1]})",
        "coords " + " ".join(chart.coords),
        "metric",
    ]
    for i in range(chart.dim):
        for j in range(i, chart.dim):
            val = chart.metric[i, j]
            if val:
                lines.append(f"g[{i + 1},{j + 1}] = {_expr_text(val)}")
    return "\n".join(lines) + "\n"


def _expr_text(f: RationalFn) -> str:
    # flint prints x^2 and 1/2*x, both of which the expression grammar accepts
    if f.is_polynomial():
        return str(f.num)
    return f"({f.num})/({f.den})"


def sample_points(chart: Chart, count: int, seed: int = 0, height: int = 3) -> list[EvalPoint]:
    """Pseudo-random rational points where the metric is nondegenerate."""
    rng = random.Random(seed)
    points = []
    attempts = 0
    while len(points) < count:
        attempts += 1
        if attempts > 1000 * count:
            raise DegenerateMetricAtPoint(f"could not find {count} regular points on {chart.name}")
        values = {c: Fraction(rng.randint(-height, height), rng.randint(1, height)) for c in chart.coords}
        try:
            pt = make_point(chart, values)
        except (DegenerateMetricAtPoint, ZeroDivisionError):
            continue
        if pt not in points:
            points.append(pt)
    return points


def load_chart(spec: str) -> Chart:
    """A built-in chart name or a path to a chart file."""
    if spec in BUILTIN_NAMES:
        return get_builtin(spec)
    path = Path(spec)
    if not path.exists():
        raise FileNotFoundError(f"no built-in chart or file named {spec!r}")
    return parse_chart(path.read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# distribution data


@dataclass
class DistributionData:
    """A distribution given as the common kernel of 1-forms.

    ``forms`` holds covector components over ``ring``; the distribution
    is ``{X : theta(X) = 0 for all theta}``.
    """

    name: str
    coords: tuple
    forms: list
    parameters: dict = field(default_factory=dict)

    @property
    def ring(self) -> Ring:
        return Ring(self.coords)

    @property
    def dim(self) -> int:
        return len(self.coords)


def bryant_theta(f: str = "x1*x3^2") -> DistributionData:
    """Rank 3 distribution on R^6 cut out by dy1 + x2 dx3, dy2 + f dx1, dy3 + x1 dx2."""
    coords = ("x1", "x2", "x3", "y1", "y2", "y3")
    ring = Ring(coords)
    fn = ring.parse(f)
    zero, one = ring.zero(), ring.one()
    x1, x2 = ring.var("x1"), ring.var("x2")
    theta1 = [zero, zero, x2, one, zero, zero]
    theta2 = [fn, zero, zero, zero, one, zero]
    theta3 = [zero, x1, zero, zero, zero, one]
    return DistributionData("bryant_theta", coords, [theta1, theta2, theta3], {"f": str(fn)})


# ---------------------------------------------------------------------------
# built-in charts


def _diag_chart(name, coords, diag, signature):
    n = len(coords)
    metric = [[0] * n for _ in range(n)]
    for i, d in enumerate(diag):
        metric[i][i] = d
    return Chart(name, coords, metric, signature)


def _flat(p: int, q: int) -> Chart:
    n = p + q
    if (p, q) == (1, 3):
        coords = ("t", "x", "y", "z")
    else:
        coords = tuple(f"x{i}" for i in range(1, n + 1))
    return _diag_chart(f"flat_{p}_{q}", coords, [-1] * p + [1] * q, (p, q))


def _sphere(n: int) -> Chart:
    coords = tuple(f"x{i}" for i in range(1, n + 1))
    ring = Ring(coords)
    r2 = sum((ring.var(c) ** 2 for c in coords), ring.zero())
    conf = 4 / (1 + r2) ** 2
    return _diag_chart(f"s{n}", coords, [conf] * n, (0, n))


def _ppwave(name: str, transverse: Sequence[str], h: str) -> Chart:
    coords = ("u", "v") + tuple(transverse)
    ring = Ring(coords)
    n = len(coords)
    metric = [[0] * n for _ in range(n)]
    metric[0][0] = ring.parse(h)
    metric[0][1] = metric[1][0] = 1
    for i in range(2, n):
        metric[i][i] = 1
    return Chart(name, coords, metric, (1, n - 1))


def ppwave_poly(h: str = "x^2*u + y^3") -> Chart:
    """2 du dv + H du^2 + dx^2 + dy^2 with polynomial H(u, x, y)."""
    return _ppwave("ppwave_poly", ("x", "y"), h)


def _s2xs2() -> Chart:
    # product of two round unit spheres in stereographic coordinates
    coords = ("x1", "x2", "y1", "y2")
    ring = Ring(coords)
    x1, x2, y1, y2 = ring.gens()
    cx = 4 / (1 + x1 ** 2 + x2 ** 2) ** 2
    cy = 4 / (1 + y1 ** 2 + y2 ** 2) ** 2
    return _diag_chart("s2xs2", coords, [cx, cx, cy, cy], (0, 4))


def _random_metric(name: str, coords: Sequence[str], seed: int, signature) -> Chart:
    """Metric with small random rational entries, nondegenerate near the origin.

    Diagonal entries are ``sign / (1 + a v^2) + b w`` for randomly chosen
    coordinates ``v, w``; one off-diagonal entry is a random multiple of a
    coordinate.
    """
    rng = random.Random(seed)
    ring = Ring(tuple(coords))
    gens = ring.gens()
    n = len(coords)
    signs = [-1] * signature[0] + [1] * signature[1]

    def coeff():
        return Fraction(rng.choice([-3, -2, -1, 1, 2, 3]), rng.randint(2, 6))

    metric = [[ring.zero()] * n for _ in range(n)]
    for i in range(n):
        v, w = rng.choice(gens), rng.choice(gens)
        metric[i][i] = signs[i] / (1 + abs(coeff()) * v ** 2) + coeff() * w
    i, j = rng.sample(range(n), 2)
    metric[i][j] = metric[j][i] = coeff() * rng.choice(gens)
    return Chart(name, coords, metric, signature)


def _kasner_like() -> Chart:
    # cohomogeneity-one metric; neither Einstein nor conformally flat
    coords = ("t", "x", "y", "z")
    ring = Ring(coords)
    t = ring.var("t")
    return _diag_chart("kasner_poly", coords, [-1, 1 + t ** 2, 1 + t, 1], (1, 3))


def _generic4() -> Chart:
    # sparse polynomial Riemannian metric with no special structure
    coords = ("x1", "x2", "x3", "x4")
    ring = Ring(coords)
    x1, x2, x3, x4 = ring.gens()
    metric = [[ring.zero()] * 4 for _ in range(4)]
    metric[0][0] = 1 + x2 ** 2
    metric[1][1] = 1 + x1 ** 2
    metric[2][2] = 1 + x4 ** 2
    metric[3][3] = 1 + x1 * x3
    metric[0][1] = metric[1][0] = x3 / 2
    return Chart("generic4", coords, metric, (0, 4))


_REGISTRY: dict[str, Callable[[], Chart]] = {
    "flat_1_3": lambda: _flat(1, 3),
    "flat_2_2": lambda: _flat(2, 2),
    "flat_0_4": lambda: _flat(0, 4),
    "flat_3_3": lambda: _flat(3, 3),
    "flat_0_3": lambda: _flat(0, 3),
    "flat_1_4": lambda: _flat(1, 4),
    "s4": lambda: _sphere(4),
    "s6": lambda: _sphere(6),
    "s2xs2": _s2xs2,
    "ppwave_poly": ppwave_poly,
    "ppwave_quartic": lambda: _ppwave("ppwave_quartic", ("x", "y"), "u*x^4 + x^2*y^2"),
    "ppwave_vacuum": lambda: _ppwave("ppwave_vacuum", ("x", "y"), "u^2*(x^2 - y^2)"),
    "ppwave5": lambda: _ppwave("ppwave5", ("x", "y", "z"), "x^2*u + y*z^2 + x^4"),
    "ppwave6": lambda: _ppwave("ppwave6", ("x1", "x2", "x3", "x4"), "u*x1^6 + x2^3*x3"),
    "ppwave6_vacuum": lambda: _ppwave("ppwave6_vacuum", ("x1", "x2", "x3", "x4"),
                                      "u^2*(x1^2 - x2^2) + x3*x4*u"),
    "kasner_poly": _kasner_like,
    "dim3_random": lambda: _random_metric("dim3_random", ("x", "y", "z"), seed=3, signature=(0, 3)),
    "generic4": _generic4,
}

BUILTIN_NAMES = tuple(_REGISTRY)


def get_builtin(name: str, **params) -> Chart | DistributionData:
    if name == "bryant_theta":
        return bryant_theta(**params)
    if name == "ppwave_poly" and params:
        return ppwave_poly(**params)
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise KeyError(f"no built-in chart {name!r}; known: {', '.join(BUILTIN_NAMES)}") from None
    if params:
        raise TypeError(f"built-in chart {name!r} takes no parameters")
    return _cached(name, factory)


_CACHE: dict = {}


def _cached(name, factory):
    chart = _CACHE.get(name)
    if chart is None:
        chart = _CACHE[name] = factory()
    return chart


def builtin_charts() -> list[Chart]:
    return [get_builtin(name) for name in BUILTIN_NAMES]

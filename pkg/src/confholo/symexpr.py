"""Exact multivariate rational functions over the rationals.

Polynomials are python-flint ``fmpq_mpoly`` objects in a graded
lexicographic ring whose variables are declared up front.  A
:class:`RationalFn` is always stored in canonical form: numerator and
denominator are coprime and the denominator has leading coefficient 1,
so equality of two values is a plain structural comparison.

Expressions are read with :func:`parse_expr`, which understands
integers, variable names, ``+ - * /``, parentheses and ``^`` with a
non-negative integer exponent.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import flint

__all__ = [
    "Ring",
    "RationalFn",
    "ExprError",
    "ExprSyntaxError",
    "DivisionByZeroFn",
    "UnknownVariable",
    "PoleAtPoint",
    "parse_expr",
    "to_fraction",
]


from .errors import (
    DivisionByZeroFn,
    ExprSyntaxError,
    PoleAtPoint,
    UnknownVariable,
)

ExprError = (ExprSyntaxError, UnknownVariable, DivisionByZeroFn, PoleAtPoint)


def to_fraction(q) -> Fraction:
    if isinstance(q, Fraction):
        return q
    if isinstance(q, int):
        return Fraction(q)
    if isinstance(q, flint.fmpq):
        return Fraction(int(q.p), int(q.q))
    if isinstance(q, flint.fmpz):
        return Fraction(int(q))
    return Fraction(q)


def _fmpq(q) -> flint.fmpq:
    q = to_fraction(q)
    return flint.fmpq(q.numerator, q.denominator)


class Ring:
    """Polynomial ring Q[v1, ..., vk] with a fixed variable order.

    Rings are interned, so ``Ring(("x", "y")) is Ring(("x", "y"))``.
    """

    _interned: dict = {}

    def __new__(cls, names: Sequence[str]):
        names = tuple(names)
        ring = cls._interned.get(names)
        if ring is None:
            if len(set(names)) != len(names):
                raise ValueError(f"duplicate variable names in {names}")
            ring = super().__new__(cls)
            ring.names = names
            ring.ctx = flint.fmpq_mpoly_ctx.get(names, "deglex")
            ring.index = {name: i for i, name in enumerate(names)}
            ring._one = ring.ctx.from_dict({(0,) * len(names): 1})
            ring._zero = ring.ctx.from_dict({})
            cls._interned[names] = ring
        return ring

    def __reduce__(self):
        return (Ring, (self.names,))

    def __repr__(self):
        return f"Ring({self.names!r})"

    def __len__(self):
        return len(self.names)

    # constructors -------------------------------------------------------
    def const(self, value) -> "RationalFn":
        q = to_fraction(value)
        num = self.ctx.from_dict({(0,) * len(self.names): _fmpq(q)}) if q else self._zero
        return RationalFn._raw(num, self._one, self)

    def zero(self) -> "RationalFn":
        return RationalFn._raw(self._zero, self._one, self)

    def one(self) -> "RationalFn":
        return RationalFn._raw(self._one, self._one, self)

    def var(self, name: str) -> "RationalFn":
        try:
            i = self.index[name]
        except KeyError:
            raise UnknownVariable(f"unknown variable {name!r}; ring has {self.names}") from None
        exps = [0] * len(self.names)
        exps[i] = 1
        return RationalFn._raw(self.ctx.from_dict({tuple(exps): 1}), self._one, self)

    def gens(self) -> list:
        return [self.var(name) for name in self.names]

    def parse(self, text: str) -> "RationalFn":
        return parse_expr(text, self)

    def extend(self, extra: Sequence[str]) -> "Ring":
        return Ring(self.names + tuple(extra))


class RationalFn:
    """Immutable quotient of two polynomials in canonical form."""

    __slots__ = ("num", "den", "ring", "_hash")

    def __init__(self, num, den=None, ring: Ring | None = None):
        if ring is None:
            raise TypeError("RationalFn needs a ring")
        if den is None:
            den = ring._one
        if den.is_zero():
            raise DivisionByZeroFn("denominator is identically zero")
        self.num, self.den = _canonical(num, den, ring)
        self.ring = ring
        self._hash = None

    @classmethod
    def _raw(cls, num, den, ring):
        obj = cls.__new__(cls)
        obj.num = num
        obj.den = den
        obj.ring = ring
        obj._hash = None
        return obj

    # predicates -----------------------------------------------------------
    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_polynomial(self) -> bool:
        return self.den.is_one()

    def is_constant(self) -> bool:
        return self.den.is_one() and self.num.is_constant()

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError(f"{self} is not constant")
        if self.num.is_zero():
            return Fraction(0)
        return to_fraction(self.num.leading_coefficient())

    def variables(self) -> set:
        """Names of the variables that actually occur."""
        used = set()
        for poly in (self.num, self.den):
            for exps in poly.monoms():
                for i, e in enumerate(exps):
                    if e:
                        used.add(self.ring.names[i])
        return used

    # arithmetic -----------------------------------------------------------
    def _coerce(self, other) -> "RationalFn":
        if isinstance(other, RationalFn):
            if other.ring is not self.ring:
                raise ValueError(f"ring mismatch: {self.ring} vs {other.ring}")
            return other
        if isinstance(other, (int, Fraction, flint.fmpq)):
            return self.ring.const(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if other.num.is_zero():
            return self
        if self.num.is_zero():
            return other
        a, b, c, d = self.num, self.den, other.num, other.den
        if b.is_one() and d.is_one():
            return RationalFn._raw(a + c, b, self.ring)
        if b == d:
            return _from_unreduced(a + c, b, self.ring)
        g = b.gcd(d)
        if g.is_one():
            return _from_coprime(a * d + b * c, b * d, self.ring)
        bg, dg = b / g, d / g
        num = a * dg + c * bg
        return _from_unreduced(num, b * dg, self.ring)

    __radd__ = __add__

    def __neg__(self):
        return RationalFn._raw(-self.num, self.den, self.ring)

    def __pos__(self):
        return self

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0:
                return self.ring.zero()
            if other == 1:
                return self
            q = _fmpq(other)
            return RationalFn._raw(self.num * q, self.den, self.ring)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self.num.is_zero() or other.num.is_zero():
            return self.ring.zero()
        a, b, c, d = self.num, self.den, other.num, other.den
        if b.is_one() and d.is_one():
            return RationalFn._raw(a * c, b, self.ring)
        if not d.is_one():
            g1 = a.gcd(d)
            if not g1.is_one():
                a, d = a / g1, d / g1
        if not b.is_one():
            g2 = c.gcd(b)
            if not g2.is_one():
                c, b = c / g2, b / g2
        return _from_coprime(a * c, b * d, self.ring)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0:
                raise DivisionByZeroFn("division by zero constant")
            return self * (1 / Fraction(other))
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if other.num.is_zero():
            raise DivisionByZeroFn("division by identically zero function")
        return self * RationalFn._raw(other.den, other.num, self.ring)._renormalize()

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other / self

    def __pow__(self, k: int):
        if not isinstance(k, int):
            raise TypeError("only integer powers are supported")
        if k < 0:
            if self.num.is_zero():
                raise DivisionByZeroFn("negative power of zero")
            inv = RationalFn._raw(self.den, self.num, self.ring)._renormalize()
            return inv ** (-k)
        return RationalFn._raw(self.num ** k, self.den ** k, self.ring)

    def _renormalize(self):
        lc = self.den.leading_coefficient()
        if lc != 1:
            return RationalFn._raw(self.num / lc, self.den / lc, self.ring)
        return self

    # calculus -------------------------------------------------------------
    def diff(self, var: str) -> "RationalFn":
        try:
            i = self.ring.index[var]
        except KeyError:
            raise UnknownVariable(f"cannot differentiate by {var!r}; ring has {self.ring.names}") from None
        if self.den.is_one():
            return RationalFn._raw(self.num.derivative(i), self.den, self.ring)
        da = self.num.derivative(i)
        db = self.den.derivative(i)
        if db.is_zero():
            return _from_unreduced(da, self.den, self.ring)
        # (a/b)' = (a' b - a b') / b^2; divide through by gcd(b, b') first
        g = self.den.gcd(db)
        b_g = self.den / g
        num = da * b_g - self.num * (db / g)
        return _from_unreduced(num, self.den * b_g, self.ring)

    # evaluation -------------------------------------------------------------
    def __call__(self, point: Mapping[str, object]) -> Fraction:
        return self.eval(point)

    def eval(self, point: Mapping[str, object]) -> Fraction:
        args = []
        for name in self.ring.names:
            if name not in point:
                raise UnknownVariable(f"no value given for variable {name!r}")
            args.append(_fmpq(point[name]))
        if not args:
            num, den = self.num.leading_coefficient() if not self.num.is_zero() else 0, 1
            return to_fraction(num)
        den = self.den(*args)
        if den == 0:
            raise PoleAtPoint(f"denominator {self.den} vanishes at {dict(point)}")
        return to_fraction(self.num(*args)) / to_fraction(den)

    def subs(self, values: Mapping[str, object]) -> "RationalFn":
        """Partially evaluate; the result stays in the same ring."""
        vals = {}
        for name, v in values.items():
            if name not in self.ring.index:
                raise UnknownVariable(f"unknown variable {name!r}")
            vals[name] = _fmpq(v)
        den = self.den.subs(vals)
        if den.is_zero():
            raise PoleAtPoint(f"denominator {self.den} vanishes at {dict(values)}")
        return RationalFn(self.num.subs(vals), den, self.ring)

    def to_ring(self, ring: Ring) -> "RationalFn":
        """Re-express in another ring that contains all used variables."""
        if ring is self.ring:
            return self
        images = []
        for name in self.ring.names:
            if name in ring.index:
                images.append(ring.var(name).num)
            else:
                images.append(None)
        if any(img is None for img in images):
            missing = [n for n, img in zip(self.ring.names, images) if img is None]
            if self.variables() & set(missing):
                raise UnknownVariable(f"variables {missing} not in target ring")
            images = [img if img is not None else ring._zero for img in images]
        if not self.ring.names:
            return ring.const(self.constant_value() if not self.num.is_zero() else 0)
        num = self.num.compose(*images, ctx=ring.ctx)
        den = self.den.compose(*images, ctx=ring.ctx)
        return RationalFn(num, den, ring)

    def linear_coefficients(self, names: Iterable[str]):
        """Split a polynomial affine in ``names`` into (coeffs, constant).

        Raises ValueError if the function is not a polynomial of degree at
        most one in the given variables.
        """
        names = list(names)
        if not self.den.is_one():
            idx = [self.ring.index[n] for n in names]
            for exps in self.den.monoms():
                if any(exps[i] for i in idx):
                    raise ValueError("denominator depends on the unknowns")
        idx = {self.ring.index[n]: n for n in names}
        coeffs = {n: {} for n in names}
        const = {}
        for exps, c in zip(self.num.monoms(), self.num.coeffs()):
            hit = [(i, e) for i, e in enumerate(exps) if i in idx and e]
            if not hit:
                const[exps] = c
                continue
            if len(hit) > 1 or hit[0][1] != 1:
                raise ValueError(f"not affine in {names}: {self}")
            i = hit[0][0]
            rest = list(exps)
            rest[i] = 0
            coeffs[idx[i]][tuple(rest)] = c
        ctx = self.ring.ctx
        out = {n: RationalFn(ctx.from_dict(d), self.den, self.ring) for n, d in coeffs.items()}
        return out, RationalFn(ctx.from_dict(const), self.den, self.ring)

    # comparison / display -------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, RationalFn):
            if other.ring is not self.ring:
                return False
            return self.num == other.num and self.den == other.den
        if isinstance(other, (int, Fraction)):
            if other == 0:
                return self.num.is_zero()
            return self.is_constant() and self.constant_value() == other
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.ring.names, str(self.num), str(self.den)))
        return self._hash

    def __bool__(self):
        return not self.num.is_zero()

    def __str__(self):
        num = str(self.num)
        if self.den.is_one():
            return num
        return f"({num})/({self.den})"

    def __repr__(self):
        return f"RationalFn({str(self)!r})"


def _canonical(num, den, ring):
    if num.is_zero():
        return ring._zero, ring._one
    g = num.gcd(den)
    if not g.is_one():
        num, den = num / g, den / g
    lc = den.leading_coefficient()
    if lc != 1:
        num, den = num / lc, den / lc
    return num, den


def _from_unreduced(num, den, ring):
    num, den = _canonical(num, den, ring)
    return RationalFn._raw(num, den, ring)


def _from_coprime(num, den, ring):
    if num.is_zero():
        return ring.zero()
    lc = den.leading_coefficient()
    if lc != 1:
        num, den = num / lc, den / lc
    return RationalFn._raw(num, den, ring)


# ---------------------------------------------------------------------------
# expression parser

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z][A-Za-z0-9_]*)|(\S))")


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:  # only trailing whitespace is left
            break
        if m.group(0).strip() == "":
            break
        col = m.start() + len(m.group(0)) - len(m.group(0).lstrip()) + 1
        if m.group(1):
            tokens.append(("int", int(m.group(1)), col))
        elif m.group(2):
            tokens.append(("name", m.group(2), col))
        else:
            ch = m.group(3)
            if ch not in "+-*/^()":
                raise ExprSyntaxError(f"unexpected character {ch!r}", col)
            tokens.append((ch, ch, col))
        pos = m.end()
    tokens.append(("end", None, len(text) + 1))
    return tokens


class _Parser:
    def __init__(self, text, ring):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.ring = ring

    def peek(self):
        return self.tokens[self.pos]

    def take(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind):
        tok = self.take()
        if tok[0] != kind:
            found = "end of input" if tok[0] == "end" else repr(tok[1])
            raise ExprSyntaxError(f"expected {kind!r}, found {found}", tok[2])
        return tok

    def parse(self):
        value = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ExprSyntaxError(f"unexpected {tok[1]!r}", tok[2])
        return value

    def expr(self):
        value = self.term()
        while self.peek()[0] in "+-":
            op = self.take()[0]
            rhs = self.term()
            value = value + rhs if op == "+" else value - rhs
        return value

    def term(self):
        value = self.unary()
        while self.peek()[0] in ("*", "/"):
            op, _, col = self.take()
            rhs = self.unary()
            if op == "*":
                value = value * rhs
            else:
                if rhs.is_zero():
                    raise DivisionByZeroFn(f"division by zero at column {col}")
                value = value / rhs
        return value

    def unary(self):
        if self.peek()[0] in ("+", "-"):
            op = self.take()[0]
            value = self.unary()
            return -value if op == "-" else value
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "^":
            self.take()
            tok = self.take()
            if tok[0] != "int":
                raise ExprSyntaxError("exponent must be a non-negative integer", tok[2])
            base = base ** tok[1]
        return base

    def atom(self):
        kind, value, col = self.take()
        if kind == "int":
            return self.ring.const(value)
        if kind == "name":
            if value not in self.ring.index:
                raise UnknownVariable(f"unknown variable {value!r} at column {col}")
            return self.ring.var(value)
        if kind == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        found = "end of input" if kind == "end" else repr(value)
        raise ExprSyntaxError(f"unexpected {found}", col)


def parse_expr(text: str, ring: Ring) -> RationalFn:
    """Parse ``text`` into a rational function over ``ring``."""
    return _Parser(text, ring).parse()

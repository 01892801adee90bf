"""Standard and adjoint tractors in the splitting determined by a chart metric.

Frame order is (s_-, d_1, ..., d_n, s_+).  A standard tractor is the
column (alpha, Y, beta); the tractor metric is

    h = [[0, 0, 1], [0, g, 0], [1, 0, 0]].

An adjoint tractor Phi(mu, (a, A), Z) is the h-skew matrix

    [[-a,  mu,    0      ],
     [ Z,  A,    -mu^sharp],
     [ 0, -Z^flat, a     ]]

2-forms act as endomorphisms through X -> (X _| omega)^sharp, so that
(alpha ^ beta)(X) = alpha(X) beta^sharp - beta(X) alpha^sharp.  With this
choice [Z, mu] = (mu(Z), mu ^ Z^flat) holds for matrix commutators.
"""

from __future__ import annotations

import random
import threading
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from .chartio import Chart, EvalPoint
from .curvature import CurvatureStack, stack
from .errors import PreconditionFailed, UnsupportedDimension, ZeroFactor
from .symexpr import RationalFn
from .tensor import TensorField, commutator, evaluate_array, mat_inverse, matmul, zeros

__all__ = [
    "StandardTractor",
    "AdjointTractor",
    "tractor_metric",
    "tractor_metric_matrix",
    "connection_matrix",
    "tractor_derivative",
    "tractor_derivative_matrix",
    "tractor_transform",
    "tractor_curvature",
    "curvature_from_connection",
    "adjoint_bracket",
    "adjoint_derivative",
    "adjoint_derivative_matrix",
    "wedge_endomorphism",
    "s_minus_wedge",
    "obstruction6_null",
    "random_standard_tractor",
    "random_adjoint_tractor",
    "is_h_skew",
]


def _zero_like(x):
    return x.ring.zero() if isinstance(x, RationalFn) else Fraction(0)


def _point_dict(point) -> dict:
    return point.as_dict() if isinstance(point, EvalPoint) else dict(point)


def _direction(chart: Chart, X) -> np.ndarray:
    """Vector components of a coordinate index or an explicit vector."""
    n = chart.dim
    if isinstance(X, (int, np.integer)):
        out = zeros(chart.ring, n)
        out[int(X)] = chart.ring.one()
        return out
    if isinstance(X, TensorField):
        return X.components
    return np.array([c if isinstance(c, RationalFn) else chart.ring.const(c) for c in X], dtype=object)


def _apply(matrix, vec, zero):
    n, m = matrix.shape
    out = np.empty(n, dtype=object)
    for i in range(n):
        acc = zero
        for j in range(m):
            if matrix[i, j] and vec[j]:
                acc = acc + matrix[i, j] * vec[j]
        out[i] = acc
    return out


def _dot(u, v, zero):
    acc = zero
    for a, b in zip(u, v):
        if a and b:
            acc = acc + a * b
    return acc


# ---------------------------------------------------------------------------
# standard tractors


@dataclass
class StandardTractor:
    """(alpha, Y, beta) = alpha s_- + Y + beta s_+ ."""

    alpha: object
    Y: np.ndarray
    beta: object

    @classmethod
    def from_vector(cls, vec) -> "StandardTractor":
        vec = list(vec)
        return cls(vec[0], np.array(vec[1:-1], dtype=object), vec[-1])

    def as_vector(self) -> np.ndarray:
        return np.array([self.alpha, *self.Y, self.beta], dtype=object)

    def evaluate(self, point) -> "StandardTractor":
        pt = _point_dict(point)
        ev = evaluate_array(self.as_vector(), pt)
        return StandardTractor.from_vector(ev)

    def __eq__(self, other):
        if not isinstance(other, StandardTractor):
            return NotImplemented
        return all(a == b for a, b in zip(self.as_vector(), other.as_vector()))

    def is_zero(self) -> bool:
        return not any(bool(x) for x in self.as_vector())

    def __sub__(self, other):
        return StandardTractor.from_vector(self.as_vector() - other.as_vector())

    def __add__(self, other):
        return StandardTractor.from_vector(self.as_vector() + other.as_vector())


def tractor_metric_matrix(g) -> np.ndarray:
    g = np.asarray(g, dtype=object)
    n = g.shape[0]
    sample = g.flat[0]
    zero, one = (sample.ring.zero(), sample.ring.one()) if isinstance(sample, RationalFn) else (Fraction(0), Fraction(1))
    h = np.empty((n + 2, n + 2), dtype=object)
    h.fill(zero)
    h[0, n + 1] = h[n + 1, 0] = one
    h[1:n + 1, 1:n + 1] = g
    return h


def tractor_metric(g, t1: StandardTractor, t2: StandardTractor):
    g = np.asarray(g, dtype=object)
    n = g.shape[0]
    acc = t1.alpha * t2.beta + t2.alpha * t1.beta
    for i in range(n):
        for j in range(n):
            if g[i, j] and t1.Y[i] and t2.Y[j]:
                acc = acc + g[i, j] * t1.Y[i] * t2.Y[j]
    return acc


class _TractorCache:
    def __init__(self, st: CurvatureStack):
        self.st = st
        self._omega: dict = {}

    def omega(self, i: int) -> np.ndarray:
        m = self._omega.get(i)
        if m is None:
            m = self._omega[i] = _build_connection_matrix(self.st, i)
        return m

    @cached_property
    def curvature(self) -> dict:
        return {(i, j): _curvature_matrix(self.st, i, j)
                for i in range(self.st.n) for j in range(self.st.n) if i != j}


_CACHES: dict = {}
_LOCK = threading.Lock()


def _cache(chart: Chart) -> _TractorCache:
    with _LOCK:
        c = _CACHES.get(chart)
        if c is None:
            if len(_CACHES) > 64:
                _CACHES.clear()
            c = _CACHES[chart] = _TractorCache(stack(chart))
    return c


def _build_connection_matrix(st: CurvatureStack, i: int) -> np.ndarray:
    n = st.n
    m = zeros(st.ring, (n + 2, n + 2))
    p, pu, g, gam = st.schouten, st.schouten_up, st.g, st.gamma
    one = st.ring.one()
    for k in range(n):
        m[0, 1 + k] = -p[i, k]
        m[n + 1, 1 + k] = -g[i, k]
        for j in range(n):
            m[1 + j, 1 + k] = gam[j, i, k]
    m[1 + i, 0] = one
    for j in range(n):
        m[1 + j, n + 1] = pu[j, i]
    return m


def connection_matrix(chart: Chart, i: int) -> np.ndarray:
    """Omega_i with nabla_i T = d_i T + Omega_i T in the frame (s_-, d_k, s_+)."""
    return _cache(chart).omega(i)


def tractor_derivative(chart: Chart, X, T: StandardTractor) -> StandardTractor:
    """nabla^nc_X (alpha, Y, beta) from the component formula.

    (X(alpha) - P(X, Y),  nabla_X Y + alpha X + beta P(X),  X(beta) - g(X, Y))
    """
    st = stack(chart)
    n = st.n
    zero = st._zero
    x = _direction(chart, X)
    Y = np.array([_lift(c, chart) for c in T.Y], dtype=object)
    alpha, beta = _lift(T.alpha, chart), _lift(T.beta, chart)

    def along(f):
        acc = zero
        for i in range(n):
            if x[i]:
                acc = acc + x[i] * st.d(f, i)
        return acc

    px = _apply(st.schouten, x, zero)          # P(X, .) as covector
    px_vec = _apply(st.schouten_up, x, zero)   # P(X) as vector
    gx = _apply(st.g, x, zero)
    new_alpha = along(alpha) - _dot(px, Y, zero)
    new_beta = along(beta) - _dot(gx, Y, zero)
    new_y = np.empty(n, dtype=object)
    for k in range(n):
        val = along(Y[k]) + alpha * x[k] + beta * px_vec[k]
        for i in range(n):
            if not x[i]:
                continue
            for m in range(n):
                c = st.gamma[k, i, m]
                if c and Y[m]:
                    val = val + x[i] * c * Y[m]
        new_y[k] = val
    return StandardTractor(new_alpha, new_y, new_beta)


def tractor_derivative_matrix(chart: Chart, i: int, T: StandardTractor) -> StandardTractor:
    """d_i T + Omega_i T, the matrix form of the same connection."""
    st = stack(chart)
    vec = np.array([_lift(c, chart) for c in T.as_vector()], dtype=object)
    out = np.array([st.d(c, i) for c in vec], dtype=object) + _apply(connection_matrix(chart, i), vec, st._zero)
    return StandardTractor.from_vector(out)


def tractor_transform(T: StandardTractor, factor, chart: Chart) -> StandardTractor:
    """Components of T in the splitting of factor^2 g, with factor = e^sigma."""
    if not isinstance(factor, RationalFn):
        factor = chart.ring.const(factor)
    if factor.is_zero():
        raise ZeroFactor("conformal factor is identically zero")
    st = stack(chart)
    n = st.n
    zero = st._zero
    dsigma = np.array([st.d(factor, i) / factor for i in range(n)], dtype=object)
    grad = _apply(st.ginv, dsigma, zero)
    norm2 = _dot(dsigma, grad, zero)
    Y = np.array([_lift(c, chart) for c in T.Y], dtype=object)
    alpha, beta = _lift(T.alpha, chart), _lift(T.beta, chart)
    y_sigma = _dot(dsigma, Y, zero)
    inv = 1 / factor
    new_alpha = inv * (alpha - y_sigma - beta * norm2 / 2)
    new_y = np.array([inv * (Y[k] + beta * grad[k]) for k in range(n)], dtype=object)
    return StandardTractor(new_alpha, new_y, factor * beta)


def _lift(c, chart):
    if isinstance(c, RationalFn):
        return c
    if isinstance(c, str):
        return chart.ring.parse(c)
    return chart.ring.const(c)


# ---------------------------------------------------------------------------
# adjoint tractors


class AdjointTractor:
    """Phi(mu, (a, A), Z) relative to a metric ``g`` (symbolic or evaluated).

    ``A[j, k]`` is the endomorphism component A^j_k; ``mu`` holds covector
    components and ``Z`` vector components.
    """

    __slots__ = ("mu", "a", "A", "Z", "g", "ginv")

    def __init__(self, mu, a, A, Z, g, ginv=None):
        self.g = np.asarray(g, dtype=object)
        self.ginv = mat_inverse(self.g) if ginv is None else np.asarray(ginv, dtype=object)
        self.mu = np.asarray(mu, dtype=object)
        self.a = a
        self.A = np.asarray(A, dtype=object)
        self.Z = np.asarray(Z, dtype=object)

    @property
    def n(self) -> int:
        return self.g.shape[0]

    @property
    def _zero(self):
        return _zero_like(self.g.flat[0])

    @classmethod
    def zero(cls, g, ginv=None) -> "AdjointTractor":
        g = np.asarray(g, dtype=object)
        n = g.shape[0]
        z = _zero_like(g.flat[0])
        vec = np.empty(n, dtype=object)
        vec.fill(z)
        mat = np.empty((n, n), dtype=object)
        mat.fill(z)
        return cls(vec, z, mat, vec.copy(), g, ginv)

    @classmethod
    def from_matrix(cls, M, g, ginv=None, check: bool = True) -> "AdjointTractor":
        M = np.asarray(M, dtype=object)
        n = M.shape[0] - 2
        phi = cls(M[0, 1:n + 1].copy(), M[n + 1, n + 1], M[1:n + 1, 1:n + 1].copy(),
                  M[1:n + 1, 0].copy(), g, ginv)
        if check and not _matrices_equal(phi.matrix(), M):
            raise ValueError("matrix is not of the adjoint tractor form (not h-skew)")
        return phi

    def flat_z(self) -> np.ndarray:
        return _apply(self.g.T, self.Z, self._zero)

    def sharp_mu(self) -> np.ndarray:
        return _apply(self.ginv, self.mu, self._zero)

    def matrix(self) -> np.ndarray:
        n = self.n
        z = self._zero
        M = np.empty((n + 2, n + 2), dtype=object)
        M.fill(z)
        M[0, 0] = -self.a
        M[n + 1, n + 1] = self.a
        M[0, 1:n + 1] = self.mu
        M[1:n + 1, 0] = self.Z
        M[1:n + 1, 1:n + 1] = self.A
        M[1:n + 1, n + 1] = -self.sharp_mu()
        M[n + 1, 1:n + 1] = -self.flat_z()
        return M

    def act(self, T: StandardTractor) -> StandardTractor:
        return StandardTractor.from_vector(_apply(self.matrix(), T.as_vector(), self._zero))

    def evaluate(self, point) -> "AdjointTractor":
        pt = _point_dict(point)
        return AdjointTractor(evaluate_array(self.mu, pt), _eval(self.a, pt),
                              evaluate_array(self.A, pt), evaluate_array(self.Z, pt),
                              evaluate_array(self.g, pt), evaluate_array(self.ginv, pt))

    def grade_parts(self):
        """(g_-1 part, g_0 part, g_1 part) as adjoint tractors."""
        zero = AdjointTractor.zero(self.g, self.ginv)
        minus = AdjointTractor(zero.mu, zero.a, zero.A, self.Z, self.g, self.ginv)
        null = AdjointTractor(zero.mu, self.a, self.A, zero.Z, self.g, self.ginv)
        plus = AdjointTractor(self.mu, zero.a, zero.A, zero.Z, self.g, self.ginv)
        return minus, null, plus

    def is_zero(self) -> bool:
        return not (self.a or any(bool(x) for x in self.mu.flat) or any(bool(x) for x in self.Z.flat)
                    or any(bool(x) for x in self.A.flat))

    def __eq__(self, other):
        if not isinstance(other, AdjointTractor):
            return NotImplemented
        return _matrices_equal(self.matrix(), other.matrix())

    __hash__ = None

    def __add__(self, other):
        return AdjointTractor(self.mu + other.mu, self.a + other.a, self.A + other.A,
                              self.Z + other.Z, self.g, self.ginv)

    def __sub__(self, other):
        return AdjointTractor(self.mu - other.mu, self.a - other.a, self.A - other.A,
                              self.Z - other.Z, self.g, self.ginv)

    def __neg__(self):
        return AdjointTractor(-self.mu, -self.a, -self.A, -self.Z, self.g, self.ginv)

    def scale(self, c) -> "AdjointTractor":
        return AdjointTractor(self.mu * c, self.a * c, self.A * c, self.Z * c, self.g, self.ginv)

    def __repr__(self):
        return f"AdjointTractor(mu={list(self.mu)}, a={self.a}, A={self.A.tolist()}, Z={list(self.Z)})"


def _eval(x, pt):
    return x.eval(pt) if isinstance(x, RationalFn) else Fraction(x)


def _matrices_equal(a, b) -> bool:
    return all(x == y for x, y in zip(np.asarray(a).flat, np.asarray(b).flat))


def is_h_skew(M, g) -> bool:
    """M^T h + h M == 0 for the tractor metric built from g."""
    h = tractor_metric_matrix(g)
    M = np.asarray(M, dtype=object)
    lhs = matmul(M.T.copy(), h) + matmul(h, M)
    return not any(bool(x) for x in lhs.flat)


def wedge_endomorphism(alpha, beta, ginv) -> np.ndarray:
    """(alpha ^ beta)(X) = alpha(X) beta^sharp - beta(X) alpha^sharp, as E[j, k]."""
    ginv = np.asarray(ginv, dtype=object)
    z = _zero_like(ginv.flat[0])
    a_sharp = _apply(ginv, np.asarray(alpha, dtype=object), z)
    b_sharp = _apply(ginv, np.asarray(beta, dtype=object), z)
    n = len(a_sharp)
    out = np.empty((n, n), dtype=object)
    for j in range(n):
        for k in range(n):
            out[j, k] = alpha[k] * b_sharp[j] - beta[k] * a_sharp[j]
    return out


def s_minus_wedge(V, g, ginv=None) -> AdjointTractor:
    """s_-^flat ^ V^flat as an adjoint tractor.

    Since s_-^flat = h(s_-, .) pairs with the s_+ slot, this is the pure
    g_1 element Phi(-V^flat, 0, 0).
    """
    g = np.asarray(g, dtype=object)
    z = _zero_like(g.flat[0])
    v_flat = _apply(g, np.asarray(V, dtype=object), z)
    zero = AdjointTractor.zero(g, ginv)
    return AdjointTractor(-v_flat, z, zero.A, zero.Z, g, zero.ginv)


def adjoint_bracket(p1: AdjointTractor, p2: AdjointTractor) -> AdjointTractor:
    """Graded bracket assembled from [(a,A),Z], [(a,A),mu] and [Z,mu]."""
    n = p1.n
    z = p1._zero
    g, ginv = p1.g, p1.ginv
    eye = _identity(n, z)
    AA1 = p1.A + eye * p1.a   # A1 + a1 Id
    AA2 = p2.A + eye * p2.a
    # g_-1 component: [(a1,A1), Z2] - [(a2,A2), Z1]
    Z = _apply(AA1, p2.Z, z) - _apply(AA2, p1.Z, z)
    # g_1 component: [(a1,A1), mu2] - [(a2,A2), mu1], with [(a,A),mu] = -mu o (A + a)
    mu = -_apply(AA1.T.copy(), p2.mu, z) + _apply(AA2.T.copy(), p1.mu, z)
    # g_0 component: [A1, A2] + [Z1, mu2] - [Z2, mu1]
    a = _dot(p2.mu, p1.Z, z) - _dot(p1.mu, p2.Z, z)
    zf1 = _apply(g, p1.Z, z)
    zf2 = _apply(g, p2.Z, z)
    A = (matmul(p1.A, p2.A, z) - matmul(p2.A, p1.A, z)
         + wedge_endomorphism(p2.mu, zf1, ginv) - wedge_endomorphism(p1.mu, zf2, ginv))
    return AdjointTractor(mu, a, A, Z, g, ginv)


def _identity(n, z):
    eye = np.empty((n, n), dtype=object)
    eye.fill(z)
    one = z + 1
    for i in range(n):
        eye[i, i] = one
    return eye


def tractor_curvature(chart: Chart, i: int, j: int) -> AdjointTractor:
    """R^nc(d_i, d_j) = [nabla_i, nabla_j] as an adjoint tractor.

    mu_k = -C_kij, A = W(d_i, d_j), a = 0, Z = 0.  The sign of the mu slot
    is the one forced by the connection matrix (see
    :func:`curvature_from_connection`).
    """
    st = stack(chart)
    n = st.n
    mu = np.array([-st.cotton[k, i, j] for k in range(n)], dtype=object)
    A = st.weyl[:, :, i, j].copy()
    return AdjointTractor(mu, st._zero, A, zeros(st.ring, n), st.g, st.ginv)


def _curvature_matrix(st: CurvatureStack, i: int, j: int) -> np.ndarray:
    return tractor_curvature(st.chart, i, j).matrix()


def curvature_matrix(chart: Chart, i: int, j: int) -> np.ndarray:
    if i == j:
        return zeros(chart.ring, (chart.dim + 2,) * 2)
    return _cache(chart).curvature[(i, j)]


def curvature_from_connection(chart: Chart, i: int, j: int) -> np.ndarray:
    """d_i Omega_j - d_j Omega_i + [Omega_i, Omega_j]."""
    st = stack(chart)
    oi, oj = connection_matrix(chart, i), connection_matrix(chart, j)
    d_oj = np.vectorize(lambda f: st.d(f, i), otypes=[object])(oj)
    d_oi = np.vectorize(lambda f: st.d(f, j), otypes=[object])(oi)
    return d_oj - d_oi + commutator(oi, oj)


def adjoint_derivative(chart: Chart, X, phi: AdjointTractor) -> AdjointTractor:
    """nabla^nc_X Phi from the component formula.

    a'  = X(a) + P(X, Z) + mu(X)
    Z'  = nabla_X Z - (A + a) X
    mu' = nabla_X mu - P(X, (A + a) .)
    A'  = nabla_X A + mu ^ X^flat - Z^flat ^ P(X, .)
    """
    st = stack(chart)
    n = st.n
    z = st._zero
    x = _direction(chart, X)
    gam = st.gamma

    def along(f):
        acc = z
        for i in range(n):
            if x[i]:
                acc = acc + x[i] * st.d(f, i)
        return acc

    # Gamma_X[k, m] = X^i Gamma^k_im
    gam_x = zeros(st.ring, (n, n))
    for k in range(n):
        for m in range(n):
            acc = z
            for i in range(n):
                if x[i] and gam[k, i, m]:
                    acc = acc + x[i] * gam[k, i, m]
            gam_x[k, m] = acc

    mu, a, A, Z = phi.mu, phi.a, phi.A, phi.Z
    px = _apply(st.schouten, x, z)
    eye = _identity(n, z)
    AA = A + eye * a

    nabla_z = np.array([along(Z[k]) for k in range(n)], dtype=object) + _apply(gam_x, Z, z)
    nabla_mu = np.array([along(mu[k]) for k in range(n)], dtype=object) - _apply(gam_x.T.copy(), mu, z)
    nabla_A = (np.vectorize(along, otypes=[object])(A) + matmul(gam_x, A, z) - matmul(A, gam_x, z))

    new_a = along(a) + _dot(px, Z, z) + _dot(mu, x, z)
    new_z = nabla_z - _apply(AA, x, z)
    new_mu = nabla_mu - _apply(AA.T.copy(), px, z)
    x_flat = _apply(st.g, x, z)
    z_flat = _apply(st.g, Z, z)
    new_A = nabla_A + wedge_endomorphism(mu, x_flat, st.ginv) - wedge_endomorphism(z_flat, px, st.ginv)
    return AdjointTractor(new_mu, new_a, new_A, new_z, st.g, st.ginv)


def adjoint_derivative_matrix(chart: Chart, i: int, M) -> np.ndarray:
    """d_i M + [Omega_i, M] for a symbolic adjoint matrix M."""
    st = stack(chart)
    M = np.asarray(M, dtype=object)
    dm = np.vectorize(lambda f: st.d(f, i), otypes=[object])(M)
    return dm + commutator(connection_matrix(chart, i), M)


# ---------------------------------------------------------------------------
# random sections for property tests


def random_standard_tractor(chart: Chart, rng: random.Random, degree: int = 1) -> StandardTractor:
    comps = [_random_poly(chart, rng, degree) for _ in range(chart.dim + 2)]
    return StandardTractor.from_vector(comps)


def random_adjoint_tractor(chart: Chart, rng: random.Random, degree: int = 1) -> AdjointTractor:
    st = stack(chart)
    n = st.n
    mu = np.array([_random_poly(chart, rng, degree) for _ in range(n)], dtype=object)
    Z = np.array([_random_poly(chart, rng, degree) for _ in range(n)], dtype=object)
    a = _random_poly(chart, rng, degree)
    # A = B g^{-1}-style skew endomorphism: A^j_k = g^{jl} S_lk with S skew
    S = zeros(st.ring, (n, n))
    for l in range(n):
        for k in range(l + 1, n):
            v = _random_poly(chart, rng, degree)
            S[l, k], S[k, l] = v, -v
    A = matmul(st.ginv, S, st._zero)
    return AdjointTractor(mu, a, A, Z, st.g, st.ginv)


def _random_poly(chart: Chart, rng: random.Random, degree: int) -> RationalFn:
    ring = chart.ring
    out = ring.const(Fraction(rng.randint(-4, 4), rng.randint(1, 3)))
    for _ in range(degree + 1):
        term = ring.const(Fraction(rng.randint(-3, 3), rng.randint(1, 3)))
        for _ in range(rng.randint(1, degree)):
            term = term * ring.var(rng.choice(chart.coords))
        out = out + term
    return out


# ---------------------------------------------------------------------------
# explicit dimension six formula


def _coupled_derivative(chart: Chart, F: dict, rank: int) -> dict:
    """nabla^nc coupled to Levi-Civita on the form indices.

    ``F`` maps index tuples of length ``rank`` to adjoint matrices; the
    result maps (k,) + idx to (nabla_k F)_idx.
    """
    st = stack(chart)
    n = st.n
    gam = st.gamma
    out = {}
    for k in range(n):
        for idx, M in F.items():
            val = adjoint_derivative_matrix(chart, k, M)
            for slot in range(rank):
                for p in range(n):
                    c = gam[p, k, idx[slot]]
                    if c:
                        other = F[idx[:slot] + (p,) + idx[slot + 1:]]
                        val = val - other * c
            out[(k,) + idx] = val
    return out


def _sum(mats, zero_matrix):
    acc = zero_matrix
    for m in mats:
        acc = acc + m
    return acc


def obstruction6_null(chart: Chart, null_fields: Sequence[TensorField],
                      points: Sequence[EvalPoint] | None = None) -> TensorField:
    """Obstruction tensor of a six-manifold with a parallel null distribution.

    Evaluates, for each m, the adjoint tractor

        g^ij g^kl nabla_i nabla_j nabla_k R_ml + 4 P^ij nabla_i R_mj
        + 2 [R_mi, nabla_j R^ij] + 2 C_m^kl R_kl

    with R_ml = R^nc(d_m, d_l) and nabla coupled to Levi-Civita, and reads
    O_mi off its g_1 slot, which equals g^ij s_-^flat ^ O_mi d_j^flat.
    The hypothesis (span of ``null_fields`` totally lightlike, parallel and
    containing Im Ric) is checked at ``points`` first.
    """
    from .curvature import check_parallel_null_distribution  # local: avoids a cycle at import
    from .chartio import sample_points

    if chart.dim != 6:
        raise UnsupportedDimension(f"the explicit formula needs dimension 6, got {chart.dim}")
    if points is None:
        points = sample_points(chart, 3, seed=6)
    report = check_parallel_null_distribution(chart, null_fields, points)
    if not report.ok:
        raise PreconditionFailed(
            f"span of the given fields is not a parallel totally lightlike distribution "
            f"containing Im(Ric) on {chart.name} (lightlike={report.lightlike}, "
            f"parallel={report.parallel}, ricci={report.ricci_image_inside})")

    st = stack(chart)
    n = st.n
    ginv = st.ginv
    zero_m = zeros(st.ring, (n + 2, n + 2))
    R = {(m, l): curvature_matrix(chart, m, l) for m in range(n) for l in range(n)}
    dR = _coupled_derivative(chart, R, 2)                       # (k, m, l)
    D = {(m,): _sum((dR[(k, m, l)] * ginv[k, l] for k in range(n) for l in range(n) if ginv[k, l]), zero_m)
         for m in range(n)}
    dD = _coupled_derivative(chart, D, 1)                       # (j, m)
    ddD = _coupled_derivative(chart, dD, 2)                     # (i, j, m)
    p_up = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            p_up[i, j] = _dot(ginv[i, :], [_dot(st.schouten[a, :], ginv[:, j], st._zero) for a in range(n)], st._zero)
    # C_m^kl = g^ka g^lb C_mab
    c_up = np.empty((n, n, n), dtype=object)
    for m in range(n):
        for k in range(n):
            for l in range(n):
                acc = st._zero
                for a in range(n):
                    if not ginv[k, a]:
                        continue
                    for b in range(n):
                        if ginv[l, b] and st.cotton[m, a, b]:
                            acc = acc + ginv[k, a] * ginv[l, b] * st.cotton[m, a, b]
                c_up[m, k, l] = acc
    D_up = [_sum((D[(a,)] * ginv[i, a] for a in range(n) if ginv[i, a]), zero_m) for i in range(n)]

    comps = zeros(st.ring, (n, n))
    for m in range(n):
        total = _sum((ddD[(i, j, m)] * ginv[i, j] for i in range(n) for j in range(n) if ginv[i, j]), zero_m)
        total = total + _sum((dR[(i, m, j)] * (4 * p_up[i, j]) for i in range(n) for j in range(n)
                              if p_up[i, j]), zero_m)
        total = total + _sum((commutator(R[(m, i)], D_up[i]) * 2 for i in range(n)), zero_m)
        total = total + _sum((R[(k, l)] * (2 * c_up[m, k, l]) for k in range(n) for l in range(n)
                              if c_up[m, k, l]), zero_m)
        phi = AdjointTractor.from_matrix(total, st.g, st.ginv, check=False)
        if phi.a or any(bool(x) for x in phi.Z) or any(bool(x) for x in phi.A.flat):
            raise PreconditionFailed(f"right-hand side for m={m} is not a pure g_1 element")
        for i in range(n):
            comps[m, i] = -phi.mu[i]
    return TensorField(chart, "dd", comps)

"""Shared helpers and independent oracles for the test suite."""

from __future__ import annotations

import random
import time
from fractions import Fraction

import flint
import numpy as np

# criterion number -> (ok, detail); filled by test_acceptance, printed by conftest
RESULTS: dict[int, tuple[bool, str]] = {}


def record(number: int, ok: bool, detail: str = "") -> bool:
    RESULTS[number] = (ok, detail)
    print(f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
    return ok


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


def flint_rank(rows) -> int:
    """Rank over Q computed by flint, independent of the package's own elimination."""
    rows = [list(r) for r in rows]
    if not rows:
        return 0
    m = flint.fmpq_mat(len(rows), len(rows[0]), [flint.fmpq(Fraction(x).numerator, Fraction(x).denominator)
                                                    for r in rows for x in r])
    return m.rank()


def flat(M) -> list:
    return [Fraction(x) for x in np.asarray(M, dtype=object).ravel()]


def mat_commutator(A, B):
    A = np.asarray(A, dtype=object)
    B = np.asarray(B, dtype=object)
    return A.dot(B) - B.dot(A)


def _fmpq_rows(rows) -> "flint.fmpq_mat":
    vals = [flint.fmpq(Fraction(x).numerator, Fraction(x).denominator) for r in rows for x in r]
    return flint.fmpq_mat(len(rows), len(rows[0]), vals)


def brute_force_closure_dim(generators) -> tuple[int, list]:
    """Iterate L -> L + [L, L] until the dimension is stable, one flint rref per round."""
    size = np.asarray(generators[0]).shape[0]
    rows = [flat(G) for G in generators]
    dim = -1
    while True:
        R, rank = _fmpq_rows(rows).rref()
        basis = [np.array([Fraction(int(R[i, j].p), int(R[i, j].q)) for j in range(size * size)],
                          dtype=object).reshape(size, size) for i in range(rank)]
        if rank == dim:
            return rank, basis
        dim = rank
        rows = [flat(b) for b in basis] + [flat(mat_commutator(A, B)) for A in basis for B in basis] \
            if basis else [[0] * size * size]


def random_matrix(rng: random.Random, size: int, density: float = 0.3):
    M = np.empty((size, size), dtype=object)
    for idx in np.ndindex(size, size):
        M[idx] = Fraction(rng.randint(-2, 2)) if rng.random() < density else Fraction(0)
    return M


def nonzero_point(rng: random.Random, names, height: int = 4) -> dict:
    out = {}
    for name in names:
        v = 0
        while v == 0:
            v = rng.randint(-height, height)
        out[name] = Fraction(v, rng.randint(1, 3))
    return out


def bilinear(u, g, v):
    n = len(u)
    return sum((Fraction(u[a]) * g[a][b] * Fraction(v[b]) for a in range(n) for b in range(n)), Fraction(0))

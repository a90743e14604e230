"""Closed forms for (co)densities, irreducible counts and concept-count bounds.

Everything returns exact integers or ``Fraction``; floats only appear in
callers that compare against a tolerance.
"""

from __future__ import annotations

import decimal
from decimal import Decimal
from fractions import Fraction
from functools import lru_cache
from math import comb, floor, isqrt, prod

import numpy as np

__all__ = [
    "gaussian_binomial",
    "a_total_subspaces",
    "rho_chain",
    "rho_chain_binomial",
    "rho_grid",
    "rho_cyclic",
    "rho_cyclic_literal",
    "rho_boolean",
    "rho_elem_abelian",
    "elem_abelian_zero_count",
    "elem_abelian_relation_count",
    "j_count",
    "schuett_bound",
    "trivial_bound",
    "ncfree_bound",
    "contranomial_max_k",
    "ContranomialResult",
    "conjectured_limit",
    "limit_table_check",
    "is_probable_prime",
]


@lru_cache(maxsize=None)
def gaussian_binomial(n: int, k: int, p: int) -> int:
    """Number of ``k``-dimensional subspaces of ``F_p^n`` (ordinary binomial at p = 1)."""
    if k < 0 or k > n:
        return 0
    if p == 1:
        return comb(n, k)
    num = prod(p ** (n - i) - 1 for i in range(k))
    den = prod(p ** (i + 1) - 1 for i in range(k))
    return num // den


def a_total_subspaces(d: int, p: int) -> int:
    """Total number of subspaces of ``F_p^d``."""
    return sum(gaussian_binomial(d, i, p) for i in range(d + 1))


def rho_chain(n: int) -> Fraction:
    if n < 1:
        raise ValueError("rho_chain needs n >= 1")
    return Fraction((n + 2) * (n + 3), 6 * n * (n + 1))


def rho_chain_binomial(n: int) -> Fraction:
    """Same value written as ``binom(n+3, 4) / binom(n+1, 2)^2``."""
    if n < 1:
        raise ValueError("rho_chain needs n >= 1")
    return Fraction(comb(n + 3, 4), comb(n + 1, 2) ** 2)


def rho_grid(n: int, m: int) -> Fraction:
    """Codensity for ``[n] x [m]``; ``m = 0`` falls back to the chain."""
    if n < 1 or m < 0:
        raise ValueError("rho_grid needs n >= 1, m >= 0")
    num = (m + 2) * (m + 3) * (n + 2) * (n + 3) * (3 * m * n + 4 * m + 4 * n)
    den = 36 * (m + 1) * (n + 1) * (2 * m + 2 * n + m * n) ** 2
    return Fraction(num, den)


def _chain_sums(n: int) -> tuple[int, int]:
    """Sums of ``z-x+1`` and ``z-y+1`` over ``0 <= x <= y <= z <= n``."""
    # group by the gap d: z - x = d leaves d + 1 choices of y and n - d + 1 of x;
    # z - y = d leaves y + 1 choices of x, summed over y = 0..n-d
    a = sum((n - d + 1) * (d + 1) ** 2 for d in range(n + 1))
    b = sum((d + 1) * (n - d + 1) * (n - d + 2) // 2 for d in range(n + 1))
    return a, b


def _check_ns(ns) -> list[int]:
    ns = [int(v) for v in ns]
    if not ns or any(v < 0 for v in ns):
        raise ValueError("exponents must be non-negative and non-empty")
    if all(v == 0 for v in ns):
        raise ValueError("all exponents zero: no nontrivial relations")
    return ns


def rho_cyclic(ns) -> Fraction:
    """Codensity for a product of chains ``[n_1] x ... x [n_k]``, by factorized sums."""
    ns = _check_ns(ns)
    sums = [_chain_sums(n) for n in ns]
    num = prod(a for a, _ in sums) - prod(b for _, b in sums)
    base = prod(comb(n + 2, 2) for n in ns) - prod(n + 1 for n in ns)
    return Fraction(num, base * base)


def rho_cyclic_literal(ns) -> Fraction:
    """The unfactorized nested sum over all coordinate triples; small inputs only."""
    ns = _check_ns(ns)
    triples = [[(x, y, z) for z in range(n + 1) for y in range(z + 1) for x in range(y + 1)] for n in ns]
    num = 0

    def walk(i, pa, pb):
        nonlocal num
        if i == len(ns):
            num += pa - pb
            return
        for x, y, z in triples[i]:
            walk(i + 1, pa * (z - x + 1), pb * (z - y + 1))

    walk(0, 1, 1)
    den = 0

    def walk_den(i, pa):
        nonlocal den
        if i == len(ns):
            den += pa - 1
            return
        for x in range(ns[i] + 1):
            walk_den(i + 1, pa * (ns[i] - x + 1))

    walk_den(0, 1)
    return Fraction(num, den * den)


def rho_boolean(k: int) -> Fraction:
    if k < 1:
        raise ValueError("rho_boolean needs k >= 1")
    return Fraction(6**k - 5**k, (3**k - 2**k) ** 2)


def elem_abelian_zero_count(p: int, n: int) -> int:
    """Number of zeros in the reduced context of Sub(C_p^n)."""
    g = gaussian_binomial
    a = a_total_subspaces
    return sum(
        g(n, i, p) * g(n - i, j, p) * g(n - i - j, k, p) * (a(j + k, p) - a(k, p))
        for i in range(n)
        for j in range(1, n - i + 1)
        for k in range(n - i - j + 1)
    )


def elem_abelian_relation_count(p: int, n: int) -> int:
    """Number of pairs ``H < K`` of subspaces of ``F_p^n``."""
    return sum(gaussian_binomial(n, i, p) * (a_total_subspaces(n - i, p) - 1) for i in range(n))


def rho_elem_abelian(p: int, n: int) -> Fraction:
    if p < 1 or n < 1:
        raise ValueError("rho_elem_abelian needs p >= 1, n >= 1")
    base = elem_abelian_relation_count(p, n)
    return Fraction(elem_abelian_zero_count(p, n), base * base)


def j_count(family: str, *params: int) -> int:
    """Number of join-irreducibles (= relation orbits) for a named family."""
    if family == "chain":
        (n,) = params
        return comb(n + 1, 2)
    if family == "grid":
        n, m = params
        return (m + 1) * (n + 1) * (m * n + 2 * m + 2 * n) // 4
    if family == "cyclic":
        return prod(comb(n + 2, 2) for n in params) - prod(n + 1 for n in params)
    if family == "boolean":
        (k,) = params
        return 3**k - 2**k
    if family == "elem-abelian":
        p, n = params
        return elem_abelian_relation_count(p, n)
    raise ValueError(f"unknown family {family!r}")


def schuett_bound(ones: int) -> int:
    """``floor(3/2 * 2**sqrt(ones + 1) - 1)``, computed without binary floats.

    For a perfect square the value is an exact integer expression.  Otherwise
    ``2**sqrt(s)`` is irrational, so it is bracketed between two decimal
    values at growing precision until both ends have the same floor.
    """
    if ones < 0:
        raise ValueError("ones must be non-negative")
    s = ones + 1
    r = isqrt(s)
    if r * r == s:
        return (3 << r) // 2 - 1
    digits = 40 + r // 3
    while True:
        with decimal.localcontext() as ctx:
            ctx.prec = digits
            t = Decimal(s).sqrt()
            # widen by two ulps on each side to absorb rounding in sqrt and power
            lo = Decimal(2) ** t.next_minus().next_minus()
            hi = Decimal(2) ** t.next_plus().next_plus()
            lo = lo.next_minus().next_minus()
            hi = hi.next_plus().next_plus()
        # the rest is exact rational arithmetic on the bracket ends
        lo_val = floor(Fraction(3) * Fraction(lo) / 2 - 1)
        hi_val = floor(Fraction(3) * Fraction(hi) / 2 - 1)
        if lo_val == hi_val:
            return lo_val
        digits *= 2


def trivial_bound(rows: int, cols: int) -> int:
    return 2 ** min(rows, cols)


def ncfree_bound(k: int, rows: int) -> int:
    """Concept-count bound for contexts without a contranomial scale of size ``k``."""
    return sum(comb(rows, i) for i in range(k))


class ContranomialResult(int):
    """An int carrying whether the search finished within its budget."""

    exact: bool

    def __new__(cls, value: int, exact: bool):
        obj = super().__new__(cls, value)
        obj.exact = exact
        return obj

    def __repr__(self):
        return f"ContranomialResult({int(self)}, exact={self.exact})"


def contranomial_max_k(incidence, budget: int | None = 5_000_000) -> ContranomialResult:
    """Largest ``k`` with a ``k x k`` subcontext that is 0 on a matching and 1 elsewhere.

    The chosen (row, column) pairs are zero cells; two cells are compatible
    when they share no row or column and both cross entries are 1.  The answer
    is the maximum clique of that compatibility graph, found by branch and
    bound.  If ``budget`` search nodes are used up the best size so far is
    returned with ``exact`` False.
    """
    inc = np.asarray(incidence, dtype=bool)
    rows, cols = np.nonzero(~inc)
    n = len(rows)
    if n == 0:
        return ContranomialResult(0, True)
    compat = (
        (rows[:, None] != rows[None, :])
        & (cols[:, None] != cols[None, :])
        & inc[rows[:, None], cols[None, :]]
        & inc[rows[None, :], cols[:, None]]
    )
    adj = [int.from_bytes(np.packbits(r, bitorder="little").tobytes(), "little") for r in compat]
    best = 1
    nodes = 0
    exhausted = False

    def expand(size, cand):
        nonlocal best, nodes, exhausted
        while cand:
            if size + cand.bit_count() <= best:
                return
            nodes += 1
            if budget is not None and nodes > budget:
                exhausted = True
                return
            low = cand & -cand
            v = low.bit_length() - 1
            cand ^= low
            new = cand & adj[v]
            if size + 1 > best:
                best = size + 1
            if new:
                expand(size + 1, new)
            if exhausted:
                return

    expand(0, (1 << n) - 1)
    return ContranomialResult(best, not exhausted)


def conjectured_limit(k: int) -> Fraction:
    if k < 1:
        raise ValueError("k must be positive")
    return Fraction(2**k - 1, 6**k)


def limit_table_check(k: int, n: int, tol: float) -> bool:
    """Whether ``rho_cyclic([n] * k)`` is within ``tol`` of the conjectured limit."""
    return abs(rho_cyclic([n] * k) - conjectured_limit(k)) <= Fraction(tol)


def is_probable_prime(p: int) -> bool:
    if p < 2:
        return False
    return all(p % d for d in range(2, isqrt(p) + 1))

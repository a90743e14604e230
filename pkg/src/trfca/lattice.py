"""Finite lattices carrying a group action by lattice automorphisms.

Elements are dense integer indices ``0..size-1``.  The order is kept twice:
as a numpy boolean matrix (vectorised context construction) and as packed
Python-int bit rows (``up[x]`` is the set of ``y`` with ``x <= y``, ``down[x]``
the set of ``y`` with ``y <= x``) so that containment tests are single
integer operations.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

__all__ = [
    "GLattice",
    "LatticeError",
    "LatticeCapExceeded",
    "build_chain",
    "build_product",
    "build_boolean",
    "build_subspace_lattice",
    "dual",
    "validate",
    "parse_lattice_spec",
    "is_isomorphic",
]

DEFAULT_SUBSPACE_CAP = 5000


class LatticeError(ValueError):
    """Raised for malformed lattice specs or constructor preconditions."""


class LatticeCapExceeded(LatticeError):
    pass


def _bits_to_int(row) -> int:
    value = 0
    for i in np.flatnonzero(row):
        value |= 1 << int(i)
    return value


def _bound_table(leq: np.ndarray, upper: bool) -> np.ndarray:
    """Least upper (``upper=True``) or greatest lower bounds for all pairs.

    The bound of ``x`` and ``y`` is the common bound with the smallest
    (resp. largest) principal ideal, found per row with one argmax.
    """
    m = leq.shape[0]
    rel = leq if upper else leq.T
    # height[z] = size of the principal ideal (upper) or filter (lower) of z
    height = leq.sum(axis=0) if upper else leq.sum(axis=1)
    order = np.argsort(height, kind="stable")
    ranked = rel[:, order]
    table = np.empty((m, m), dtype=np.int64)
    for x in range(m):
        common = ranked[x][None, :] & ranked
        first = common.argmax(axis=1)
        if not common[np.arange(m), first].all():
            raise LatticeError("order has no bound for some pair; not a lattice")
        table[x] = order[first]
    return table


@dataclass(eq=False)
class GLattice:
    """A finite lattice with a finite group acting by automorphisms.

    ``action`` is an ``(k, size)`` integer array; row 0 is the identity and the
    rows are the distinct permutations induced by the group.  ``meet`` and
    ``join`` are computed from ``leq`` on first access unless supplied.
    """

    leq: np.ndarray
    action: np.ndarray | None = None
    labels: list[str] | None = None
    name: str = ""
    _meet: np.ndarray | None = field(default=None, repr=False)
    _join: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.leq = np.ascontiguousarray(self.leq, dtype=bool)
        m = self.leq.shape[0]
        if self.leq.shape != (m, m) or m == 0:
            raise LatticeError("leq must be a non-empty square matrix")
        if self.action is None:
            self.action = np.arange(m, dtype=np.int64)[None, :]
        self.action = np.ascontiguousarray(self.action, dtype=np.int64)
        if self.labels is None:
            self.labels = [str(i) for i in range(m)]
        below = self.leq.sum(axis=0)
        self.bottom = int(np.argmin(below))
        self.top = int(np.argmax(below))

    @property
    def size(self) -> int:
        return self.leq.shape[0]

    def __len__(self) -> int:
        return self.size

    @cached_property
    def up(self) -> list[int]:
        return [_bits_to_int(row) for row in self.leq]

    @cached_property
    def down(self) -> list[int]:
        return [_bits_to_int(col) for col in self.leq.T]

    @property
    def meet(self) -> np.ndarray:
        if self._meet is None:
            self._meet = _bound_table(self.leq, upper=False)
        return self._meet

    @property
    def join(self) -> np.ndarray:
        if self._join is None:
            self._join = _bound_table(self.leq, upper=True)
        return self._join

    @property
    def has_trivial_action(self) -> bool:
        return bool((self.action == np.arange(self.size)).all())

    def lt_pairs(self) -> list[tuple[int, int]]:
        """All nontrivial relations ``x < y``, lexicographically sorted."""
        xs, ys = np.nonzero(self.leq & ~np.eye(self.size, dtype=bool))
        return list(zip(xs.tolist(), ys.tolist()))

    def orbits(self) -> list[list[int]]:
        """Orbits of elements under the action, each sorted, ordered by minimum."""
        seen = np.zeros(self.size, dtype=bool)
        out = []
        for x in range(self.size):
            if not seen[x]:
                orb = sorted(set(self.action[:, x].tolist()))
                seen[orb] = True
                out.append(orb)
        return out

    def covers(self) -> list[tuple[int, int]]:
        """Pairs ``(x, y)`` with ``y`` covering ``x``."""
        out = []
        for x, y in self.lt_pairs():
            between = self.up[x] & self.down[y] & ~(1 << x) & ~(1 << y)
            if not between:
                out.append((x, y))
        return out


def build_chain(n: int) -> GLattice:
    """The total order ``0 < 1 < ... < n`` with trivial action."""
    if n < 0:
        raise LatticeError("chain length must be nonnegative")
    idx = np.arange(n + 1)
    return GLattice(idx[:, None] <= idx[None, :], name=f"chain:{n}")


def build_product(factors: Sequence[GLattice]) -> GLattice:
    """Componentwise product of lattices with trivial action.

    Elements are ordered lexicographically by their coordinate tuples.
    """
    if not factors:
        raise LatticeError("product needs at least one factor")
    for f in factors:
        if not f.has_trivial_action:
            raise LatticeError("product of lattices with nontrivial action is not supported")
    coords = list(itertools.product(*(range(f.size) for f in factors)))
    m = len(coords)
    leq = np.ones((m, m), dtype=bool)
    arr = np.array(coords, dtype=np.int64).reshape(m, len(factors))
    for i, f in enumerate(factors):
        c = arr[:, i]
        leq &= f.leq[c[:, None], c[None, :]]
    labels = [",".join(f.labels[c] for f, c in zip(factors, tup)) for tup in coords]
    # mixed-radix index of coordinate tuples gives the componentwise tables
    radix = np.cumprod([1] + [f.size for f in factors[::-1]][:-1])[::-1]
    meet = np.zeros((m, m), dtype=np.int64)
    join = np.zeros((m, m), dtype=np.int64)
    for i, f in enumerate(factors):
        c = arr[:, i]
        meet += f.meet[c[:, None], c[None, :]] * radix[i]
        join += f.join[c[:, None], c[None, :]] * radix[i]
    name = "product(" + ";".join(f.name for f in factors) + ")"
    return GLattice(leq, labels=labels, name=name, _meet=meet, _join=join)


def build_boolean(k: int) -> GLattice:
    """The Boolean lattice ``[1]^k``."""
    if k < 1:
        raise LatticeError("boolean lattice needs k >= 1")
    lat = build_product([build_chain(1)] * k)
    lat.name = f"boolean:{k}"
    return lat


def _rref_subspaces(p: int, n: int, cap: int):
    """Yield reduced row-echelon bases (tuples of row tuples) of all subspaces."""
    count = 0
    for k in range(n + 1):
        for pivots in itertools.combinations(range(n), k):
            free = [(r, c) for r, pc in enumerate(pivots) for c in range(pc + 1, n) if c not in pivots]
            for values in itertools.product(range(p), repeat=len(free)):
                count += 1
                if count > cap:
                    raise LatticeCapExceeded(f"subspace count exceeds cap {cap}")
                rows = [[0] * n for _ in range(k)]
                for r, pc in enumerate(pivots):
                    rows[r][pc] = 1
                for (r, c), v in zip(free, values):
                    rows[r][c] = v
                yield tuple(tuple(r) for r in rows)


def build_subspace_lattice(p: int, n: int, cap: int = DEFAULT_SUBSPACE_CAP) -> GLattice:
    """All subspaces of ``F_p^n`` ordered by inclusion (trivial action).

    Subspaces are canonicalised by their reduced row-echelon basis, which is
    used as the element label.  ``p`` must be prime, since row reduction
    mod ``p`` needs a field.
    """
    if p < 2 or n < 1:
        raise LatticeError("need p >= 2 and n >= 1")
    if any(p % d == 0 for d in range(2, int(p**0.5) + 1)):
        raise LatticeError(f"{p} is not prime")
    vec_index = {v: i for i, v in enumerate(itertools.product(range(p), repeat=n))}
    bases = list(_rref_subspaces(p, n, cap))
    members = []
    for basis in bases:
        mask = 0
        for coeffs in itertools.product(range(p), repeat=len(basis)):
            v = tuple(sum(c * row[j] for c, row in zip(coeffs, basis)) % p for j in range(n))
            mask |= 1 << vec_index[v]
        members.append(mask)
    m = len(bases)
    leq = np.array([[(members[a] & ~members[b]) == 0 for b in range(m)] for a in range(m)], dtype=bool)
    labels = ["<" + ";".join("".join(map(str, r)) for r in b) + ">" for b in bases]
    return GLattice(leq, labels=labels, name=f"subspaces:{p},{n}")


def dual(lat: GLattice) -> GLattice:
    """The opposite lattice: order reversed, meet and join exchanged."""
    return GLattice(
        lat.leq.T.copy(),
        action=lat.action.copy(),
        labels=list(lat.labels),
        name=f"dual({lat.name})",
        _meet=None if lat._join is None else lat._join.copy(),
        _join=None if lat._meet is None else lat._meet.copy(),
    )


def validate(lat: GLattice, full_check_limit: int = 200) -> list[str]:
    """Return the violated lattice/action invariants; empty means valid."""
    problems: list[str] = []
    leq = lat.leq
    m = lat.size
    if not leq.diagonal().all():
        problems.append("leq is not reflexive")
    if (leq & leq.T & ~np.eye(m, dtype=bool)).any():
        problems.append("leq is not antisymmetric")
    comp = (leq.astype(np.int64) @ leq.astype(np.int64)) > 0
    if (comp & ~leq).any():
        problems.append("leq is not transitive")
    if not leq[lat.bottom].all():
        problems.append("no bottom element")
    if not leq[:, lat.top].all():
        problems.append("no top element")
    if problems:
        return problems
    try:
        meet, join = lat.meet, lat.join
    except LatticeError as exc:
        return [str(exc)]
    if m <= full_check_limit:
        xs, ys = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
        mt, jn = meet[xs, ys], join[xs, ys]
        if not (leq[mt, xs] & leq[mt, ys]).all():
            problems.append("meet is not a lower bound")
        # [z, x, y]: z is a common lower (upper) bound of x and y
        lower = leq[:, :, None] & leq[:, None, :]
        if not (~lower | leq[:, mt]).all():
            problems.append("meet is not the greatest lower bound")
        if not (leq[xs, jn] & leq[ys, jn]).all():
            problems.append("join is not an upper bound")
        upper = leq.T[:, :, None] & leq.T[:, None, :]
        if not (~upper | leq.T[:, jn]).all():
            problems.append("join is not the least upper bound")
    act = lat.action
    if act.ndim != 2 or act.shape[1] != m:
        problems.append("action has wrong shape")
        return problems
    if not (act[0] == np.arange(m)).all():
        problems.append("first action permutation is not the identity")
    for pi in act:
        if sorted(pi.tolist()) != list(range(m)):
            problems.append("action row is not a permutation")
            return problems
        if not (leq[pi[:, None], pi[None, :]] == leq).all():
            problems.append("action permutation is not a lattice automorphism")
            break
    keys = {row.tobytes() for row in act}
    closed = all(a[b].tobytes() in keys for a in act for b in act)
    if not closed:
        problems.append("action set is not closed under composition")
    elif any(np.argsort(a).tobytes() not in keys for a in act):
        problems.append("action set is not closed under inverses")
    return problems


def is_isomorphic(a: GLattice, b: GLattice) -> bool:
    """Order-isomorphism test by backtracking (small lattices only)."""
    m = a.size
    if m != b.size:
        return False
    ha, hb = a.leq.sum(axis=0), b.leq.sum(axis=0)
    da, db = a.leq.sum(axis=1), b.leq.sum(axis=1)
    if sorted(zip(ha, da)) != sorted(zip(hb, db)):
        return False
    sig_b = {}
    for y in range(m):
        sig_b.setdefault((hb[y], db[y]), []).append(y)
    order = sorted(range(m), key=lambda x: ha[x])
    image = [-1] * m
    used = [False] * m

    def extend(i):
        if i == m:
            return True
        x = order[i]
        for y in sig_b[(ha[x], da[x])]:
            if used[y]:
                continue
            ok = all(
                a.leq[x, order[j]] == b.leq[y, image[order[j]]] and a.leq[order[j], x] == b.leq[image[order[j]], y]
                for j in range(i)
            )
            if ok:
                image[x], used[y] = y, True
                if extend(i + 1):
                    return True
                image[x], used[y] = -1, False
        return False

    return extend(0)


def parse_lattice_spec(spec: str) -> GLattice:
    """Parse ``chain:<n>``, ``grid:<n1>,<n2>,...``, ``boolean:<k>``, ``subspaces:<p>,<n>``."""
    kind, sep, rest = spec.partition(":")
    if not sep:
        raise LatticeError(f"bad lattice spec {spec!r}")
    try:
        nums = [int(t) for t in rest.split(",")] if rest else []
    except ValueError:
        raise LatticeError(f"bad lattice spec {spec!r}") from None
    if kind == "chain" and len(nums) == 1:
        return build_chain(nums[0])
    if kind == "grid" and nums:
        lat = build_product([build_chain(n) for n in nums])
        lat.name = spec
        return lat
    if kind == "boolean" and len(nums) == 1:
        return build_boolean(nums[0])
    if kind == "subspaces" and len(nums) == 2:
        return build_subspace_lattice(nums[0], nums[1])
    raise LatticeError(f"bad lattice spec {spec!r}")

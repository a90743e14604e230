"""Permutation groups, subgroup enumeration and subgroup lattices.

Group elements are indexed in breadth-first discovery order from the
generators (identity first); every group keeps a full multiplication table,
so the supported orders are small (a cap of 1024 by default).  Subgroups are
bitsets over element indices.
"""

from __future__ import annotations

import re
from math import gcd
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .lattice import GLattice

__all__ = [
    "GroupError",
    "PermGroup",
    "Subgroup",
    "close_generators",
    "enumerate_subgroups",
    "subgroup_lattice",
    "orbit_count_subgroups",
    "parse_group_spec",
    "parse_cycles",
]

DEFAULT_ORDER_CAP = 1024

Perm = tuple[int, ...]


class GroupError(ValueError):
    """Bad group spec or a group beyond the configured order cap."""


class CapExceeded(GroupError):
    pass


def _compose(a: Perm, b: Perm) -> Perm:
    # apply b first, then a
    return tuple(map(a.__getitem__, b))


@dataclass(eq=False)
class PermGroup:
    """A finite permutation group with its full element list.

    ``elements[0]`` is the identity.  ``mul[i][j]`` is the index of
    ``elements[i] o elements[j]`` (apply ``j`` first).
    """

    degree: int
    generators: list[Perm]
    elements: list[Perm]
    name: str = ""
    _index: dict[Perm, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._index = {p: i for i, p in enumerate(self.elements)}

    @property
    def order(self) -> int:
        return len(self.elements)

    def index(self, perm: Sequence[int]) -> int:
        return self._index[tuple(perm)]

    @cached_property
    def mul(self) -> np.ndarray:
        elems = np.array(self.elements, dtype=np.int64).reshape(self.order, self.degree)
        base = _base(elems)
        images = elems[:, base]  # (order, |base|)
        keys = _encode(images, self.degree)
        table = np.empty((self.order, self.order), dtype=np.int64)
        if keys.dtype == object:
            lookup = dict(zip(keys.tolist(), range(self.order)))
            for i in range(self.order):
                prod = elems[i][images]  # (elements[i] o elements[j]) on the base
                table[i] = [lookup[k] for k in _encode(prod, self.degree).tolist()]
            return table
        order = np.argsort(keys)
        sorted_keys = keys[order]
        step = max(1, 2**22 // (self.order * images.shape[1]))
        for i in range(0, self.order, step):
            prod = elems[i : i + step][:, images]  # (rows, order, |base|)
            table[i : i + step] = order[np.searchsorted(sorted_keys, _encode(prod, self.degree))]
        return table

    @cached_property
    def mul_list(self) -> list[list[int]]:
        return self.mul.tolist()

    @cached_property
    def inv(self) -> np.ndarray:
        return np.argmax(self.mul == 0, axis=1)

    @cached_property
    def conj(self) -> np.ndarray:
        """``conj[g, h]`` is the index of ``g h g^-1``."""
        m = self.mul
        return m[m, self.inv[:, None]]

    @cached_property
    def is_abelian(self) -> bool:
        return bool((self.mul == self.mul.T).all())


def _base(elems: np.ndarray) -> list[int]:
    """Greedy set of points whose images distinguish all elements."""
    order, degree = elems.shape
    if order == 1:
        return [0]
    base: list[int] = []
    key = np.zeros(order, dtype=np.int64)
    while True:
        # distinct (key, image) combinations per candidate point
        combined = np.sort(key[:, None] * degree + elems, axis=0)
        counts = (np.diff(combined, axis=0) != 0).sum(axis=0) + 1
        counts[base] = -1
        best = int(np.argmax(counts))
        base.append(best)
        _, key = np.unique(key * degree + elems[:, best], return_inverse=True)
        key = key.astype(np.int64)
        if counts[best] == order:
            return base


def _encode(images: np.ndarray, degree: int) -> np.ndarray:
    if degree ** images.shape[-1] < 2**62:
        weights = degree ** np.arange(images.shape[-1], dtype=np.int64)
        return images @ weights
    return np.array([row.tobytes() for row in images.reshape(-1, images.shape[-1])], dtype=object).reshape(
        images.shape[:-1]
    )


def close_generators(gens: Sequence[Sequence[int]], cap: int = DEFAULT_ORDER_CAP, name: str = "") -> PermGroup:
    """Breadth-first closure of a generating set of permutations."""
    gens = [tuple(int(i) for i in g) for g in gens]
    if not gens:
        raise GroupError("need at least one generator")
    degree = len(gens[0])
    for g in gens:
        if len(g) != degree or sorted(g) != list(range(degree)):
            raise GroupError(f"not a permutation of degree {degree}: {g}")
    identity = tuple(range(degree))
    elements = [identity]
    seen = {identity}
    i = 0
    while i < len(elements):
        e = elements[i]
        for g in gens:
            p = _compose(e, g)
            if p not in seen:
                seen.add(p)
                elements.append(p)
                if len(elements) > cap:
                    raise CapExceeded(f"group order exceeds cap {cap}")
        i += 1
    return PermGroup(degree, gens, elements, name=name)


@dataclass(frozen=True)
class Subgroup:
    """A subgroup as a bitset over the ambient element indices."""

    members: int
    gens: tuple[int, ...] = ()

    @property
    def order(self) -> int:
        return self.members.bit_count()

    def __contains__(self, idx: int) -> bool:
        return bool(self.members >> idx & 1)

    def indices(self) -> list[int]:
        return _mask_indices(self.members)


def _mask_indices(mask: int) -> list[int]:
    n = max(1, (mask.bit_length() + 7) // 8)
    bits = np.unpackbits(np.frombuffer(mask.to_bytes(n, "little"), dtype=np.uint8), bitorder="little")
    return np.flatnonzero(bits).tolist()


def _indices_mask(idx) -> int:
    bits = np.zeros(max(idx) + 1 if len(idx) else 1, dtype=bool)
    bits[idx] = True
    return int.from_bytes(np.packbits(bits, bitorder="little").tobytes(), "little")


def _closure(group: PermGroup, gens: Sequence[int]) -> int:
    mul = group.mul_list
    members = 1
    queue = [0]
    for h in queue:
        row = mul[h]
        for s in gens:
            k = row[s]
            if not members >> k & 1:
                members |= 1 << k
                queue.append(k)
    return members


def _conjugate_mask(group: PermGroup, g: int, sub: Subgroup) -> Subgroup:
    c = group.conj[g]
    return Subgroup(_indices_mask(c[sub.indices()]), tuple(int(c[s]) for s in sub.gens))


def _conjugacy_class(group: PermGroup, sub: Subgroup) -> list[Subgroup]:
    """Distinct conjugates of ``sub``, each with conjugated generators."""
    idx = np.array(sub.indices(), dtype=np.int64)
    if group.is_abelian:
        return [sub]
    images = np.sort(group.conj[:, idx], axis=1)
    _, first = np.unique(images, axis=0, return_index=True)
    out = []
    for g in sorted(first.tolist()):
        c = group.conj[g]
        out.append(Subgroup(_indices_mask(images[g]), tuple(int(c[s]) for s in sub.gens)))
    return out


def enumerate_subgroups(group: PermGroup, cap: int = DEFAULT_ORDER_CAP) -> list[Subgroup]:
    """All subgroups, sorted by (order, member bitset).

    Seeds with the cyclic subgroups and closes under adjoining a cyclic
    subgroup to a known one until nothing new appears.  Only one
    representative per conjugacy class is extended; its conjugates are added
    directly.
    """
    if group.order > cap:
        raise CapExceeded(f"group order {group.order} exceeds cap {cap}")
    mul = group.mul_list
    cyclic: dict[int, int] = {}
    done = bytearray(group.order)
    for g in range(group.order):
        if done[g]:
            continue
        powers = [0]
        k = g
        while k:
            powers.append(k)
            k = mul[k][g]
        n = len(powers)
        # g^j generates the same cyclic subgroup exactly when gcd(j, n) = 1
        for j in range(1, n):
            if gcd(j, n) == 1:
                done[powers[j]] = 1
        cyclic[_indices_mask(powers)] = g
    found: dict[int, Subgroup] = {}
    reps: list[Subgroup] = []

    def add_class(sub: Subgroup):
        if sub.members in found:
            return
        reps.append(sub)
        for conj in _conjugacy_class(group, sub):
            found.setdefault(conj.members, conj)

    for mask, g in cyclic.items():
        add_class(Subgroup(mask, (g,) if g else ()))
    i = 0
    while i < len(reps):
        rep = reps[i]
        for mask, g in cyclic.items():
            if mask & ~rep.members:
                gens = rep.gens + (g,)
                add_class(Subgroup(_closure(group, gens), gens))
        i += 1
    return sorted(found.values(), key=lambda s: (s.order, s.members))


def subgroup_lattice(group: PermGroup, subgroups: list[Subgroup] | None = None, cap: int = DEFAULT_ORDER_CAP) -> GLattice:
    """``Sub(G)`` ordered by inclusion with the conjugation action.

    The action keeps only the distinct permutations of subgroup indices that
    conjugation induces.
    """
    subs = subgroups if subgroups is not None else enumerate_subgroups(group, cap)
    n, m = group.order, len(subs)
    member = np.zeros((m, n), dtype=bool)
    for i, s in enumerate(subs):
        member[i, s.indices()] = True
    outside = (member.astype(np.float64) @ (~member).astype(np.float64).T) > 0.5
    leq = ~outside
    lookup = {np.packbits(row).tobytes(): i for i, row in enumerate(member)}
    perms = []
    seen = set()
    # conjugation fixes every subgroup of an abelian group
    for g in range(1 if group.is_abelian else n):
        image = member[:, group.conj[group.inv[g]]]
        perm = np.array([lookup[np.packbits(row).tobytes()] for row in image], dtype=np.int64)
        key = perm.tobytes()
        if key not in seen:
            seen.add(key)
            perms.append(perm)
    labels = [f"H{i}(|{s.order}|)" for i, s in enumerate(subs)]
    lat = GLattice(leq, action=np.array(perms), labels=labels, name=f"Sub({group.name or 'G'})")
    lat.subgroups = subs
    lat.group = group
    return lat


def orbit_count_subgroups(group: PermGroup | GLattice) -> int:
    """Number of conjugacy classes of subgroups."""
    lat = group if isinstance(group, GLattice) else subgroup_lattice(group)
    return len(lat.orbits())


def parse_cycles(text: str, degree: int | None = None) -> Perm:
    """Parse a product of cycles such as ``(01)(23)`` or ``(0,1,10)``.

    Without commas every character inside a cycle is one point.
    """
    cycles = re.findall(r"\(([^()]*)\)", text)
    if not cycles or "".join(f"({c})" for c in cycles) != text:
        raise GroupError(f"bad cycle notation {text!r}")
    parsed = []
    for c in cycles:
        try:
            pts = [int(t) for t in c.split(",")] if "," in c else [int(ch) for ch in c]
        except ValueError:
            raise GroupError(f"bad cycle notation {text!r}") from None
        if len(set(pts)) != len(pts):
            raise GroupError(f"repeated point in cycle {c!r}")
        parsed.append(pts)
    top = max((max(p) for p in parsed if p), default=0) + 1
    degree = max(top, degree or 0)
    perm = list(range(degree))
    for pts in parsed:
        # cycles are applied right to left
        step = list(range(degree))
        for a, b in zip(pts, pts[1:] + pts[:1]):
            step[a] = b
        perm = [step[i] for i in perm]
    return tuple(perm)


def _cycle(n: int, pts: Sequence[int]) -> Perm:
    perm = list(range(n))
    for a, b in zip(pts, list(pts[1:]) + [pts[0]]):
        perm[a] = b
    return tuple(perm)


_Q8 = [(1, 4, 3, 6, 5, 0, 7, 2), (2, 7, 4, 1, 6, 3, 0, 5)]


def parse_group_spec(spec: str, cap: int = DEFAULT_ORDER_CAP) -> PermGroup:
    """Build a named group.

    Grammar: ``cyclic:N`` (or ``cyclic:p^n``), ``elem-abelian:p^n``, ``S:n`` (n <= 6), ``A:n``
    (n <= 7), ``D:n`` (order 2n), ``Q:8`` and ``perm:<cycles;cycles;...>``.
    """
    kind, sep, arg = spec.partition(":")
    if not sep or not arg:
        raise GroupError(f"bad group spec {spec!r}")
    try:
        if kind == "perm":
            raw = arg.split(";")
            perms = [parse_cycles(t) for t in raw]
            deg = max(len(p) for p in perms)
            gens = [parse_cycles(t, deg) for t in raw]
        elif kind == "cyclic":
            base, _, exp = arg.partition("^")
            n = int(base) ** int(exp or 1)
            if n < 1:
                raise GroupError("cyclic order must be positive")
            gens = [tuple((i + 1) % n for i in range(n))]
        elif kind == "elem-abelian":
            p_str, _, n_str = arg.partition("^")
            p, n = int(p_str), int(n_str or 1)
            if p < 2 or n < 1:
                raise GroupError("need p >= 2 and n >= 1")
            gens = [_cycle(p * n, range(k * p, (k + 1) * p)) for k in range(n)]
        elif kind == "S":
            n = int(arg)
            if not 1 <= n <= 6:
                raise GroupError("S:n supports 1 <= n <= 6")
            gens = [tuple(range(n))] if n == 1 else [_cycle(n, [0, 1]), _cycle(n, range(n))]
        elif kind == "A":
            n = int(arg)
            if not 1 <= n <= 7:
                raise GroupError("A:n supports 1 <= n <= 7")
            gens = [_cycle(n, [0, 1, k]) for k in range(2, n)] or [tuple(range(n))]
        elif kind == "D":
            n = int(arg)
            if n < 1:
                raise GroupError("D:n needs n >= 1")
            if n == 1:
                gens = [(1, 0)]
            elif n == 2:
                gens = [(1, 0, 3, 2), (2, 3, 0, 1)]
            else:
                gens = [_cycle(n, range(n)), tuple((-i) % n for i in range(n))]
        elif kind == "Q" and arg == "8":
            gens = list(_Q8)
        else:
            raise GroupError(f"unknown group {spec!r}")
    except ValueError as exc:
        if isinstance(exc, GroupError):
            raise
        raise GroupError(f"bad group spec {spec!r}") from None
    return close_generators(gens, cap=cap, name=spec)

"""Brute-force transfer systems on small G-lattices.

Relations are stored as one Python-int bitset per source element:
bit ``y`` of ``rows[x]`` means ``x -> y``.  Identities are always present.
Everything here is meant for desk-scale lattices and serves as ground truth
for the formal-context pipeline.
"""

from __future__ import annotations

from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .context import RelationPair, nontrivial_relation_orbits
from .lattice import GLattice

__all__ = [
    "GRelation",
    "GRelationError",
    "OracleCapExceeded",
    "relation_from_pairs",
    "identity_relation",
    "complete_relation",
    "is_transfer_system",
    "is_cotransfer_system",
    "transfer_closure",
    "enumerate_transfer_systems",
    "floor_closure",
    "ceil_closure",
    "rlp_transfer",
    "join_transfer",
    "meet_transfer",
    "irreducibles_of_family",
    "is_saturated",
    "saturated_closure",
    "cover_relations",
    "cosat_join_irreducibles",
    "sat_meet_irreducibles",
    "enumerate_saturated",
    "enumerate_cosaturated",
    "saturated_cover_summary",
    "concept_of",
]

DEFAULT_ORBIT_CAP = 20


class GRelationError(ValueError):
    """A relation violates refinement, G-stability or transitivity."""


class OracleCapExceeded(RuntimeError):
    pass


class GRelation:
    """A reflexive sub-relation of the lattice order."""

    __slots__ = ("lattice", "rows")

    def __init__(self, lattice: GLattice, rows: Sequence[int]):
        self.lattice = lattice
        self.rows = tuple(r | (1 << x) for x, r in enumerate(rows))

    @property
    def pairs(self) -> np.ndarray:
        m = self.lattice.size
        out = np.zeros((m, m), dtype=bool)
        for x, r in enumerate(self.rows):
            for y in _bits(r):
                out[x, y] = True
        return out

    def nontrivial(self) -> set[tuple[int, int]]:
        return {(x, y) for x, r in enumerate(self.rows) for y in _bits(r) if x != y}

    def __contains__(self, pair) -> bool:
        x, y = pair
        return bool(self.rows[x] >> y & 1)

    def __len__(self) -> int:
        return sum(r.bit_count() for r in self.rows) - len(self.rows)

    def __le__(self, other: "GRelation") -> bool:
        return all(a & ~b == 0 for a, b in zip(self.rows, other.rows))

    def __lt__(self, other: "GRelation") -> bool:
        return self <= other and self.rows != other.rows

    def __eq__(self, other) -> bool:
        return isinstance(other, GRelation) and self.rows == other.rows

    def __hash__(self) -> int:
        return hash(self.rows)

    def __and__(self, other: "GRelation") -> "GRelation":
        return GRelation(self.lattice, [a & b for a, b in zip(self.rows, other.rows)])

    def __or__(self, other: "GRelation") -> "GRelation":
        return GRelation(self.lattice, [a | b for a, b in zip(self.rows, other.rows)])

    def __repr__(self) -> str:
        arrows = ", ".join(f"{x}->{y}" for x, y in sorted(self.nontrivial()))
        return f"GRelation({{{arrows}}})"


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def relation_from_pairs(lat: GLattice, pairs: Iterable[tuple[int, int]]) -> GRelation:
    rows = [0] * lat.size
    for x, y in pairs:
        rows[x] |= 1 << y
    return GRelation(lat, rows)


def identity_relation(lat: GLattice) -> GRelation:
    return GRelation(lat, [0] * lat.size)


def complete_relation(lat: GLattice) -> GRelation:
    return GRelation(lat, lat.up)


def _transitive_closure(rows: list[int]) -> list[int]:
    rows = list(rows)
    changed = True
    while changed:
        changed = False
        for x, r in enumerate(rows):
            new = r
            for y in _bits(r):
                new |= rows[y]
            if new != r:
                rows[x] = new
                changed = True
    return rows


def _g_saturate(lat: GLattice, rows: list[int]) -> list[int]:
    out = list(rows)
    act = lat.action.tolist()
    for x, r in enumerate(rows):
        ys = list(_bits(r))
        for pi in act[1:]:
            gx = pi[x]
            for y in ys:
                out[gx] |= 1 << pi[y]
    return out


def _restrict(lat: GLattice, rows: list[int]) -> list[int]:
    """Add ``x ^ z -> z`` for every ``x -> y`` and ``z <= y``."""
    meet = lat.meet.tolist()
    out = list(rows)
    for x, r in enumerate(rows):
        mx = meet[x]
        for y in _bits(r & ~(1 << x)):
            for z in _bits(lat.down[y]):
                out[mx[z]] |= 1 << z
    return out


def _check(rel: GRelation) -> None:
    lat = rel.lattice
    for x, r in enumerate(rel.rows):
        if r & ~lat.up[x]:
            raise GRelationError(f"relation does not refine the order at {x}")
    if _g_saturate(lat, list(rel.rows)) != list(rel.rows):
        raise GRelationError("relation is not G-stable")
    if _transitive_closure(list(rel.rows)) != list(rel.rows):
        raise GRelationError("relation is not transitive")


def is_transfer_system(rel: GRelation) -> bool:
    """Restriction axiom: ``x -> y`` and ``x' <= y`` give ``x ^ x' -> x'``.

    Raises GRelationError if ``rel`` is not a G-relation at all.
    """
    _check(rel)
    return _restrict(rel.lattice, list(rel.rows)) == list(rel.rows)


def is_cotransfer_system(rel: GRelation) -> bool:
    """Dual axiom: ``x -> y`` and ``x <= y'`` give ``y' -> y v y'``."""
    _check(rel)
    lat = rel.lattice
    join = lat.join
    for x, r in enumerate(rel.rows):
        for y in _bits(r & ~(1 << x)):
            for yp in _bits(lat.up[x]):
                if not rel.rows[yp] >> int(join[y, yp]) & 1:
                    return False
    return True


def transfer_closure(lat: GLattice, pairs: Iterable[tuple[int, int]]) -> GRelation:
    """Smallest transfer system containing ``pairs`` (fixpoint of all three closures)."""
    rows = relation_from_pairs(lat, pairs).rows
    rows = list(rows)
    while True:
        new = _transitive_closure(_restrict(lat, _g_saturate(lat, rows)))
        if new == rows:
            return GRelation(lat, rows)
        rows = new


def floor_closure(lat: GLattice, x: int, y: int) -> GRelation:
    """Transfer system generated by ``x -> y``: close ``{g.x ^ z -> z : z <= g.y}``."""
    if not (lat.leq[x, y] and x != y):
        raise ValueError("floor_closure needs x < y")
    meet = lat.meet
    rows = [0] * lat.size
    for pi in lat.action:
        gx, gy = int(pi[x]), int(pi[y])
        for z in _bits(lat.down[gy]):
            rows[int(meet[gx, z])] |= 1 << z
    return GRelation(lat, _transitive_closure(GRelation(lat, rows).rows))


def ceil_closure(lat: GLattice, x: int, y: int) -> GRelation:
    """Cotransfer system generated by ``x -> y``: close ``{z -> g.y v z : z >= g.x}``."""
    if not (lat.leq[x, y] and x != y):
        raise ValueError("ceil_closure needs x < y")
    join = lat.join
    rows = [0] * lat.size
    for pi in lat.action:
        gx, gy = int(pi[x]), int(pi[y])
        for z in _bits(lat.up[gx]):
            rows[z] |= 1 << int(join[gy, z])
    return GRelation(lat, _transitive_closure(GRelation(lat, rows).rows))


def rlp_transfer(lat: GLattice, x: int, y: int) -> GRelation:
    """Meet-irreducible transfer system of all ``a -> b`` lifting against ``ceil(x -> y)``.

    ``a -> b`` belongs iff for every g: ``x !<= g.a`` or ``y !<= g.b`` or ``y <= g.a``.
    """
    if not (lat.leq[x, y] and x != y):
        raise ValueError("rlp_transfer needs x < y")
    leq = lat.leq
    act = lat.action
    m = lat.size
    # ok[g, a] over all a, b at once
    ga = act  # (k, m): g.a
    x_le = leq[x][ga]  # x <= g.a
    y_le = leq[y][ga]  # y <= g.a
    member = np.ones((m, m), dtype=bool)
    for gi in range(act.shape[0]):
        bad = x_le[gi][:, None] & leq[y][act[gi]][None, :] & ~y_le[gi][:, None]
        member &= ~bad
    member &= leq
    rows = [int.from_bytes(np.packbits(r, bitorder="little").tobytes(), "little") for r in member]
    return GRelation(lat, rows)


def join_transfer(lat: GLattice, systems: Sequence[GRelation]) -> GRelation:
    """Join in Tr(L): close ``{a ^ z -> z : a -> b in some T, z <= b}``."""
    for t in systems:
        if not is_transfer_system(t):
            raise GRelationError("join_transfer needs transfer systems")
    rows = [0] * lat.size
    for t in systems:
        for x, r in enumerate(t.rows):
            rows[x] |= r
    return GRelation(lat, _transitive_closure(_restrict(lat, rows)))


def meet_transfer(systems: Sequence[GRelation]) -> GRelation:
    out = systems[0]
    for t in systems[1:]:
        out = out & t
    return out


def enumerate_transfer_systems(lat: GLattice, cap: int = DEFAULT_ORBIT_CAP) -> list[GRelation]:
    """All transfer systems, by include/exclude search over relation orbits.

    Including an orbit immediately adds everything it forces (the join with
    its generated system); a branch dies as soon as it forces an excluded
    orbit.
    """
    reps = nontrivial_relation_orbits(lat)
    if len(reps) > cap:
        raise OracleCapExceeded(f"{len(reps)} relation orbits exceed cap {cap}")
    gens = [floor_closure(lat, x, y).rows for x, y in reps]
    out: list[GRelation] = []
    m = lat.size
    start = tuple(1 << x for x in range(m))

    def search(i: int, rows: tuple, excluded: list[int]):
        if i == len(reps):
            out.append(GRelation(lat, rows))
            return
        x, y = reps[i]
        if rows[x] >> y & 1:
            search(i + 1, rows, excluded)
            return
        # union of two transfer systems is restriction-closed; only transitivity is missing
        joined = tuple(_transitive_closure([a | b for a, b in zip(rows, gens[i])]))
        if not any(joined[ex] >> ey & 1 for ex, ey in (reps[e] for e in excluded)):
            search(i + 1, joined, excluded)
        excluded.append(i)
        search(i + 1, rows, excluded)
        excluded.pop()

    search(0, start, [])
    return out


def irreducibles_of_family(systems: Sequence[GRelation], check: bool = True) -> tuple[list[GRelation], list[GRelation]]:
    """Join- and meet-irreducible members of a finite lattice of relations under inclusion.

    In a finite lattice an element is join-irreducible iff it has exactly one
    lower cover, and meet-irreducible iff it has exactly one upper cover.
    """
    family = list(dict.fromkeys(systems))
    if check and len(family) <= 2000:
        keys = set(family)
        for a, b in combinations(family, 2):
            if (a & b) not in keys:
                raise ValueError("family is not closed under intersection")
    n = len(family)
    below = [[j for j in range(n) if family[j] < family[i]] for i in range(n)]
    above = [[j for j in range(n) if family[i] < family[j]] for i in range(n)]
    joins = []
    meets = []
    for i in range(n):
        low = [j for j in below[i] if not any(family[j] < family[k] for k in below[i])]
        high = [j for j in above[i] if not any(family[k] < family[j] for k in above[i])]
        if len(low) == 1:
            joins.append(family[i])
        if len(high) == 1:
            meets.append(family[i])
    return joins, meets


def is_saturated(rel: GRelation) -> bool:
    """Two-out-of-three for every chain ``x <= y <= z``."""
    lat = rel.lattice
    rows = rel.rows
    for x in range(lat.size):
        for y in _bits(lat.up[x]):
            xy = rows[x] >> y & 1
            for z in _bits(lat.up[y]):
                s = xy + (rows[y] >> z & 1) + (rows[x] >> z & 1)
                if s == 2:
                    return False
    return True


def _two_of_three(lat: GLattice, rows: list[int]) -> list[int]:
    out = list(rows)
    for x in range(lat.size):
        for y in _bits(lat.up[x]):
            for z in _bits(lat.up[y]):
                xy, yz, xz = out[x] >> y & 1, out[y] >> z & 1, out[x] >> z & 1
                if xy + yz + xz == 2:
                    if not xy:
                        out[x] |= 1 << y
                    elif not yz:
                        out[y] |= 1 << z
                    else:
                        out[x] |= 1 << z
    return out


def saturated_closure(rel: GRelation) -> GRelation:
    """Smallest saturated transfer system containing ``rel``."""
    lat = rel.lattice
    rows = list(rel.rows)
    while True:
        t = transfer_closure(lat, ((x, y) for x, r in enumerate(rows) for y in _bits(r)))
        new = _two_of_three(lat, list(t.rows))
        if new == list(t.rows):
            return t
        rows = new


def cover_relations(lat: GLattice, orbit_reps: bool = False) -> list[RelationPair]:
    """Covering pairs ``x < y``; optionally one lexicographically least pair per orbit."""
    covers = [RelationPair(x, y) for x, y in lat.covers()]
    if not orbit_reps:
        return covers
    reps = set()
    for x, y in covers:
        reps.add(min((int(pi[x]), int(pi[y])) for pi in lat.action))
    return [RelationPair(*p) for p in sorted(reps)]


def cosat_join_irreducibles(lat: GLattice) -> list[GRelation]:
    """``floor(x -> top)`` for one ``x`` per orbit of non-top elements."""
    return [floor_closure(lat, orb[0], lat.top) for orb in lat.orbits() if lat.top not in orb]


def sat_meet_irreducibles(lat: GLattice) -> list[GRelation]:
    """``{a -> b : for all g, g.h !<= b or g.h <= a}`` for one ``h`` per non-bottom orbit."""
    out = []
    leq = lat.leq
    for orb in lat.orbits():
        if lat.bottom in orb:
            continue
        h = orb[0]
        conj = sorted(set(lat.action[:, h].tolist()))
        rows = []
        for a in range(lat.size):
            r = 0
            for b in _bits(lat.up[a]):
                if all(not leq[gh, b] or leq[gh, a] for gh in conj):
                    r |= 1 << b
            rows.append(r)
        out.append(GRelation(lat, rows))
    return out


def _sat_join(a: GRelation, b: GRelation) -> GRelation:
    return saturated_closure(a | b)


def enumerate_saturated(lat: GLattice, cap: int = 100_000) -> list[GRelation]:
    """All saturated transfer systems.

    Every saturated system is a saturated join of closures of cover
    relations, so the family is the saturated-join closure of those
    closures together with the minimum.
    """
    gens = list(dict.fromkeys(saturated_closure(floor_closure(lat, x, y)) for x, y in cover_relations(lat, True)))
    bottom = identity_relation(lat)
    found = {bottom: None}
    frontier = [bottom]
    while frontier:
        nxt = []
        for t in frontier:
            for g in gens:
                if g <= t:
                    continue
                j = _sat_join(t, g)
                if j not in found:
                    found[j] = None
                    nxt.append(j)
                    if len(found) > cap:
                        raise OracleCapExceeded(f"more than {cap} saturated systems")
        frontier = nxt
    return list(found)


def enumerate_cosaturated(lat: GLattice) -> list[GRelation]:
    """All cosaturated transfer systems: joins of systems ``floor(x -> top)``, with the minimum."""
    gens = cosat_join_irreducibles(lat)
    bottom = identity_relation(lat)
    found = {bottom: None}
    frontier = [bottom]
    while frontier:
        nxt = []
        for t in frontier:
            for g in gens:
                if g <= t:
                    continue
                j = join_transfer(lat, [t, g])
                if j not in found:
                    found[j] = None
                    nxt.append(j)
        frontier = nxt
    return list(found)


def saturated_cover_summary(lat: GLattice) -> dict:
    """Cover orbits, their distinct saturated closures, and which are join-irreducible in Sat(L)."""
    covers = cover_relations(lat, True)
    closures = {}
    for x, y in covers:
        closures.setdefault(saturated_closure(floor_closure(lat, x, y)), []).append(RelationPair(x, y))
    sat = enumerate_saturated(lat)
    joins, _ = irreducibles_of_family(sat, check=False)
    ji = [c for c in closures if c in set(joins)]
    return {
        "cover_orbits": covers,
        "closures": closures,
        "join_irreducible": ji,
        "saturated_count": len(sat),
    }


def concept_of(system: GRelation, reps: Sequence[RelationPair], rlps: Sequence[GRelation] | None = None):
    """Image of a transfer system in the concept lattice of the reduced context.

    Extent: representatives whose generated system lies in ``system``;
    intent: representatives whose meet-irreducible contains ``system``.
    """
    lat = system.lattice
    if rlps is None:
        rlps = [rlp_transfer(lat, x, y) for x, y in reps]
    extent = frozenset(i for i, (x, y) in enumerate(reps) if (x, y) in system)
    intent = frozenset(i for i, r in enumerate(rlps) if system <= r)
    return extent, intent

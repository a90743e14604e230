from functools import reduce
from itertools import combinations

import numpy as np
import pytest

from trfca.cbo import count_concepts, derive_down, derive_up
from trfca.context import build_reduced_context, nontrivial_relation_orbits
from trfca.lattice import build_boolean, build_chain, build_subspace_lattice, dual
from trfca.oracle import (
    GRelationError,
    OracleCapExceeded,
    ceil_closure,
    complete_relation,
    concept_of,
    cosat_join_irreducibles,
    cover_relations,
    enumerate_cosaturated,
    enumerate_saturated,
    enumerate_transfer_systems,
    floor_closure,
    identity_relation,
    irreducibles_of_family,
    is_cotransfer_system,
    is_saturated,
    is_transfer_system,
    join_transfer,
    relation_from_pairs,
    rlp_transfer,
    sat_meet_irreducibles,
    saturated_closure,
    saturated_cover_summary,
    transfer_closure,
)

from conftest import SMALL_LATTICES, group_lattice, small_lattice

ORACLE_LATTICES = SMALL_LATTICES + ["subspaces:3,2", "S:3", "D:4"]

# e, C_p, C_q, C_pq as the elements of the Boolean square
E, CP, CQ, CPQ = 0, 1, 2, 3


def test_transfer_axioms_on_chain2():
    lat = build_chain(2)
    assert is_transfer_system(identity_relation(lat))
    assert is_transfer_system(complete_relation(lat))
    # restricting 0 -> 2 along 1 needs 0 -> 1
    assert not is_transfer_system(relation_from_pairs(lat, [(0, 2)]))
    assert is_cotransfer_system(identity_relation(lat))
    assert is_cotransfer_system(complete_relation(lat))
    # extending 0 -> 2 along 1 needs 1 -> 2
    assert not is_cotransfer_system(relation_from_pairs(lat, [(0, 2)]))


def test_small_enumeration_counts():
    assert len(enumerate_transfer_systems(build_chain(1))) == 2
    assert len(enumerate_transfer_systems(build_boolean(2))) == 10
    assert len(enumerate_transfer_systems(build_subspace_lattice(2, 2))) == 19
    with pytest.raises(OracleCapExceeded):
        enumerate_transfer_systems(build_chain(6), cap=10)


def test_closures_on_chain():
    lat = build_chain(2)
    assert floor_closure(lat, 1, 2).nontrivial() == {(1, 2)}
    # restriction along 1 adds 0 -> 1; nothing produces a relation out of 1
    assert floor_closure(lat, 0, 2).nontrivial() == {(0, 1), (0, 2)}
    assert floor_closure(lat, 0, 2) == transfer_closure(lat, [(0, 2)])
    assert ceil_closure(lat, 0, 1).nontrivial() == {(0, 1)}
    assert rlp_transfer(build_chain(1), 0, 1) == identity_relation(build_chain(1))
    with pytest.raises(ValueError):
        floor_closure(lat, 2, 1)
    with pytest.raises(ValueError):
        rlp_transfer(lat, 1, 1)


def test_join_on_boolean_square():
    lat = build_boolean(2)
    x = relation_from_pairs(lat, [(E, CQ), (CP, CPQ)])
    y = relation_from_pairs(lat, [(E, CP)])
    assert is_transfer_system(x) and is_transfer_system(y)
    xy = join_transfer(lat, [x, y])
    assert xy.nontrivial() == {(E, CQ), (CP, CPQ), (E, CP), (E, CPQ)}
    assert join_transfer(lat, [x]) == x
    assert is_saturated(x)
    assert not is_saturated(xy)
    assert is_saturated(complete_relation(lat))
    with pytest.raises(GRelationError):
        join_transfer(lat, [relation_from_pairs(lat, [(E, CPQ)])])


@pytest.mark.parametrize("name", ORACLE_LATTICES)
def test_oracle_matches_concept_count(name):
    lat = small_lattice(name)
    systems = enumerate_transfer_systems(lat)
    assert all(is_transfer_system(t) for t in systems)
    assert len(set(systems)) == len(systems)
    assert len(systems) == count_concepts(build_reduced_context(lat), workers=1)


@pytest.mark.parametrize("name", ORACLE_LATTICES)
def test_canonical_bijection_is_order_preserving(name):
    lat = small_lattice(name)
    ctx = build_reduced_context(lat)
    reps = nontrivial_relation_orbits(lat)
    rlps = [rlp_transfer(lat, x, y) for x, y in reps]
    systems = enumerate_transfer_systems(lat)
    images = [concept_of(t, reps, rlps) for t in systems]
    for ext, intent in images:
        assert derive_up(ctx, ext) == set(intent)
        assert derive_down(ctx, intent) == set(ext)
    assert len(set(images)) == len(systems)
    for (s, (es, _)), (t, (et, _)) in combinations(zip(systems, images), 2):
        assert (s <= t) == (es <= et)
        assert (t <= s) == (et <= es)


@pytest.mark.parametrize("name", ORACLE_LATTICES)
def test_irreducibles(name):
    lat = small_lattice(name)
    reps = nontrivial_relation_orbits(lat)
    joins, meets = irreducibles_of_family(enumerate_transfer_systems(lat))
    floors = {floor_closure(lat, x, y) for x, y in reps}
    rlps = {rlp_transfer(lat, x, y) for x, y in reps}
    assert set(joins) == floors
    assert set(meets) == rlps
    assert len(joins) == len(meets) == len(reps)
    assert all(is_transfer_system(t) for t in rlps)


def test_pentagon_irreducibles():
    joins, meets = irreducibles_of_family(enumerate_transfer_systems(build_chain(2)))
    assert len(joins) == 3 and len(meets) == 3


def test_irreducibles_rejects_non_lattice():
    lat = build_boolean(2)
    a = relation_from_pairs(lat, [(E, CP)])
    b = relation_from_pairs(lat, [(E, CQ)])
    with pytest.raises(ValueError):
        irreducibles_of_family([a | b, a, b])


@pytest.mark.parametrize("name", ORACLE_LATTICES)
def test_incidence_is_floor_inside_rlp(name):
    lat = small_lattice(name)
    ctx = build_reduced_context(lat)
    reps = nontrivial_relation_orbits(lat)
    for j, (x, y) in enumerate(reps):
        rlp = rlp_transfer(lat, x, y)
        for i, (a, b) in enumerate(reps):
            assert ctx.incidence[i, j] == ((a, b) in rlp)
            assert ctx.incidence[i, j] == (floor_closure(lat, a, b) <= rlp)


def test_join_of_all_generators_is_complete():
    for name in ("chain:3", "boolean:3", "S:3"):
        lat = small_lattice(name)
        gens = [floor_closure(lat, x, y) for x, y in nontrivial_relation_orbits(lat)]
        assert join_transfer(lat, gens) == complete_relation(lat)


def test_generated_systems_determine_orbits_s4():
    lat = group_lattice("S:4")
    pairs = lat.lt_pairs()
    orbit = {}
    for x, y in pairs:
        orbit[(x, y)] = min((int(pi[x]), int(pi[y])) for pi in lat.action)
    floors = {p: floor_closure(lat, *p) for p in pairs}
    for p, q in combinations(pairs, 2):
        assert (floors[p] == floors[q]) == (orbit[p] == orbit[q])


def test_cover_relations():
    assert len(cover_relations(build_chain(5))) == 5
    for k in range(1, 5):
        assert len(cover_relations(build_boolean(k))) == k * 2 ** (k - 1)


def test_cosaturated_generators():
    lat = group_lattice("S:4")
    assert len(cosat_join_irreducibles(lat)) == 10
    assert len(cosat_join_irreducibles(build_chain(4))) == 4
    # sources into the top are exactly meets of conjugates
    meet = lat.meet
    for orb in lat.orbits():
        x = orb[0]
        if x == lat.top:
            continue
        conj = sorted(set(lat.action[:, x].tolist()))
        meets = {reduce(lambda a, b: int(meet[a, b]), s) for r in range(1, len(conj) + 1) for s in combinations(conj, r)}
        t = floor_closure(lat, x, lat.top)
        sources = {y for y in range(lat.size) if (y, lat.top) in t and y != lat.top}
        assert sources == meets


@pytest.mark.parametrize("name", ["chain:3", "boolean:2", "boolean:3", "subspaces:2,2", "S:3", "D:4"])
def test_saturated_family(name):
    lat = small_lattice(name)
    sat = enumerate_saturated(lat)
    assert all(is_saturated(t) and is_transfer_system(t) for t in sat)
    assert set(sat) == {t for t in enumerate_transfer_systems(lat) if is_saturated(t)}
    # Sat(L) and coSat of the dual are anti-isomorphic, so they have the same size
    assert len(sat) == len(enumerate_cosaturated(dual(lat)))
    _, meets = irreducibles_of_family(sat)
    assert set(meets) == set(sat_meet_irreducibles(lat))
    cosat = enumerate_cosaturated(lat)
    # closed under joins in Tr(L) rather than intersections, still a finite lattice
    joins, _ = irreducibles_of_family(cosat, check=False)
    assert set(joins) == set(cosat_join_irreducibles(lat))


def test_saturated_closure_is_idempotent():
    lat = build_boolean(2)
    t = saturated_closure(relation_from_pairs(lat, [(E, CP), (E, CQ)]))
    assert is_saturated(t) and saturated_closure(t) == t


def test_a5_saturated_covers():
    lat = group_lattice("A:5")
    summary = saturated_cover_summary(lat)
    assert len(summary["cover_orbits"]) == 13
    assert len(summary["closures"]) == 11
    assert len(summary["join_irreducible"]) == 8
    top = lat.top
    complete = complete_relation(lat)
    maximal = {lat.subgroups[x].order for x, y in summary["cover_orbits"] if y == top}
    assert maximal == {5 * 2, 6, 12}
    for x, y in summary["cover_orbits"]:
        if y == top:
            assert saturated_closure(floor_closure(lat, x, y)) == complete

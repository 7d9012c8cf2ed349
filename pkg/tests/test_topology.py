import random

import pytest

from conftest import random_subbase
from oracles import axiom_violations, fixpoint_closure, subset_pairs
from sheaffuse import (
    EntityUniverse,
    comparable_pairs,
    generate_topology,
    verify_topology,
)
from sheaffuse.errors import TopologyTooLarge, UnknownEntity


def masks(t):
    return {o.mask for o in t.opens}


def test_empty_subbase_gives_indiscrete_topology():
    u = EntityUniverse(["a", "b"])
    t = generate_topology(u, [])
    assert masks(t) == {0, 0b11}


def test_duplicate_or_unknown_entities_rejected():
    with pytest.raises(UnknownEntity):
        EntityUniverse(["a", "a"])
    u = EntityUniverse(["a", "b"])
    with pytest.raises(UnknownEntity):
        generate_topology(u, [("a", "zz")])


def test_cap_raises_instead_of_truncating():
    u = EntityUniverse([f"e{i}" for i in range(12)])
    singletons = [(f"e{i}",) for i in range(12)]
    with pytest.raises(TopologyTooLarge):
        generate_topology(u, singletons, open_cap=100)


def test_sensor_style_generation_produces_intersections_and_unions():
    u = EntityUniverse(["x", "y", "z", "vx", "vy", "t", "th1", "th2", "s"])
    t = generate_topology(u, [
        ("x", "y", "z"), ("x", "y", "z", "vx", "vy"), ("th1", "t"),
        ("th2", "t"), ("th1", "th2", "s"), tuple(u.names),
    ])
    for expect in [("t",), ("th1",), ("th2",), ("th1", "th2"),
                   ("th1", "th2", "s", "t")]:
        assert u.mask_of(expect) in masks(t)


def test_generation_matches_fixpoint_closure_oracle():
    rng = random.Random(7)
    for _ in range(100):
        universe, subbase = random_subbase(rng, rng.randint(1, 5),
                                           rng.randint(0, 4))
        t = generate_topology(universe, subbase)
        full = (1 << len(universe)) - 1
        expected = fixpoint_closure(
            {universe.mask_of(s) for s in subbase}, full
        )
        assert masks(t) == expected


def test_generation_is_idempotent():
    rng = random.Random(11)
    for _ in range(25):
        universe, subbase = random_subbase(rng, 4, 3)
        t = generate_topology(universe, subbase)
        again = generate_topology(universe,
                                  [o.members for o in t.opens if o.mask])
        assert masks(again) == masks(t)


def test_enlarging_subbase_never_removes_opens():
    rng = random.Random(13)
    for _ in range(25):
        universe, subbase = random_subbase(rng, 5, 2)
        small = generate_topology(universe, subbase)
        extra = subbase + [tuple(rng.sample(universe.names,
                                            rng.randint(1, 5)))]
        large = generate_topology(universe, extra)
        assert masks(small) <= masks(large)


def test_comparable_pairs_simple():
    u = EntityUniverse(["a", "b"])
    t = generate_topology(u, [("a",)])
    pairs = [(v.members, w.members) for v, w in comparable_pairs(t)]
    assert pairs == [(("a",), ("a", "b"))]


def test_comparable_pairs_includes_composites():
    u = EntityUniverse(["x", "y", "z", "vx", "vy", "t", "th1", "th2", "s"])
    t = generate_topology(u, [
        ("x", "y", "z"), ("x", "y", "z", "vx", "vy"), ("th1", "t"),
        ("th2", "t"), ("th1", "th2", "s"), tuple(u.names),
    ])
    got = {(v.mask, w.mask) for v, w in comparable_pairs(t)}
    t_mask = u.mask_of(["t"])
    u3 = u.mask_of(["th1", "t"])
    u34 = u.mask_of(["th1", "th2", "t"])
    assert (t_mask, u3) in got
    assert (t_mask, u34) in got


def test_comparable_pairs_matches_subset_scan():
    rng = random.Random(17)
    for _ in range(50):
        universe, subbase = random_subbase(rng, 5, 3)
        t = generate_topology(universe, subbase)
        got = {(v.mask, w.mask) for v, w in comparable_pairs(t)}
        assert got == set(subset_pairs([o.mask for o in t.opens]))


def test_hasse_transitive_closure_equals_subset_relation():
    rng = random.Random(19)
    for _ in range(30):
        universe, subbase = random_subbase(rng, 5, 3)
        t = generate_topology(universe, subbase)
        reach = {o.id: set() for o in t.opens}

        def walk(start, node):
            for child in t.hasse_children[node]:
                if child not in reach[start]:
                    reach[start].add(child)
                    walk(start, child)

        for o in t.opens:
            walk(o.id, o.id)
        for o in t.opens:
            assert reach[o.id] == set(t.descendants[o.id])
        # covering edges admit nothing strictly between
        for o in t.opens:
            for child in t.hasse_children[o.id]:
                between = [
                    w for w in t.opens
                    if w.id not in (o.id, child)
                    and t.opens[child].mask & w.mask == t.opens[child].mask
                    and w.mask & o.mask == w.mask
                    and w.mask not in (t.opens[child].mask, o.mask)
                ]
                assert not between


def test_verify_topology_passes_discrete():
    u = EntityUniverse(["a", "b"])
    report = verify_topology(u, [(), ("a",), ("b",), ("a", "b")])
    assert report.ok


def test_verify_topology_finds_missing_intersection():
    u = EntityUniverse(["x", "y", "z", "vx", "vy", "t", "th1", "th2", "s"])
    report = verify_topology(u, [
        ("x", "y", "z"), ("x", "y", "z", "vx", "vy"), ("th1", "t"),
        ("th2", "t"), ("th1", "th2", "s"), tuple(u.names), (),
    ])
    assert not report.ok
    assert any("intersection {t}" in v for v in report.violations)


def test_verify_topology_agrees_with_direct_axiom_check():
    rng = random.Random(23)
    for _ in range(100):
        universe, subbase = random_subbase(rng, 4, rng.randint(1, 4))
        fam = [universe.mask_of(s) for s in subbase]
        if rng.random() < 0.5:
            fam += [0, (1 << len(universe)) - 1]
        report = verify_topology(
            universe, [universe.names_of(m) for m in fam]
        )
        expected = axiom_violations(set(fam), (1 << len(universe)) - 1)
        assert report.ok == (expected == 0)

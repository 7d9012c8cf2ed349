import random

import numpy as np
import pytest

from conftest import random_linear_sheaf
from oracles import agreement_dim
from sheaffuse import (
    EntityUniverse,
    Identity,
    Linear,
    Projection,
    RestrictionMap,
    Sheaf,
    complete_unions,
    euclidean,
    generate_topology,
    make_point,
    verify_functoriality,
    verify_gluing,
)
from sheaffuse.errors import (
    MissingIntersectionStalk,
    NonlinearSheaf,
    NotComparable,
    SpaceMismatch,
)
from sheaffuse.scenarios import SAR_CASES, build_sar_sheaf


def test_restrict_identity():
    sh = build_sar_sheaf()
    t = sh.topology
    space = sh.stalk(t.full.id)
    v = make_point(space, (70.0, 43.0, 11000.0, -495.0, 164.0, 0.9))
    assert sh.restrict(t.full, t.full, v) is not None
    assert sh.restrict(t.full, t.full, v).coords == v.coords


def test_restrict_requires_inclusion_and_matching_space():
    sh = build_sar_sheaf()
    t = sh.topology
    u3 = t.open_for(["theta1", "t"])
    u4 = t.open_for(["theta2", "t"])
    p = make_point(sh.stalk(u3.id), (90.0, 1.0))
    with pytest.raises(NotComparable):
        sh.restrict(u3, u4, p)
    with pytest.raises(SpaceMismatch):
        sh.restrict(t.full, u3, p)


def test_dead_reckoning_restriction_reproduces_reference_estimates():
    """The kinematic map applied to the recorded field values lands on the
    recorded crash estimates for all three cases, within 0.02 deg."""
    sh = build_sar_sheaf()
    t = sh.topology
    u5 = t.open_for(["theta1", "theta2", "s"])
    expected = {1: (65.0013, 44.1277), 2: (64.2396, 44.3721),
                3: (65.3745, 45.6703)}
    for case, (lon, lat) in expected.items():
        f = SAR_CASES[case]["field"]
        state = make_point(sh.stalk(t.full.id),
                           (f["x"], f["y"], f["z"], f["vx"], f["vy"], f["t"]))
        got = sh.restrict(t.full, u5, state)
        assert got.coords[0] == pytest.approx(lon, abs=0.02)
        assert got.coords[1] == pytest.approx(lat, abs=0.02)


def test_two_paths_agree_on_shared_time():
    sh = build_sar_sheaf()
    t = sh.topology
    u34 = t.open_for(["theta1", "theta2", "t"])
    time_open = t.open_for(["t"])
    rng = random.Random(3)
    for _ in range(20):
        p = sh.sample_stalk(u34.id, rng)
        via_u3 = sh.restrict_coords(
            u34.id, t.open_for(["theta1", "t"]).id, p.coords)
        via_u4 = sh.restrict_coords(
            u34.id, t.open_for(["theta2", "t"]).id, p.coords)
        t_a = sh.restrict_coords(t.open_for(["theta1", "t"]).id,
                                 time_open.id, via_u3)
        t_b = sh.restrict_coords(t.open_for(["theta2", "t"]).id,
                                 time_open.id, via_u4)
        assert t_a[0] == pytest.approx(t_b[0], abs=1e-9)


def test_functoriality_passes_on_reference_sheaf():
    report = verify_functoriality(build_sar_sheaf(), samples=32)
    assert report.ok
    assert report.max_discrepancy <= 1e-9


def test_functoriality_catches_corrupted_projection():
    sh = build_sar_sheaf()
    t = sh.topology
    u3 = t.open_for(["theta1", "t"])
    time_open = t.open_for(["t"])
    # swap the time projection for the bearing coordinate
    sh.edges[(u3.id, time_open.id)] = RestrictionMap(
        u3, time_open, Projection([0])
    )
    sh._basis_chain_cache.clear()
    sh._restrict_cache.clear()
    report = verify_functoriality(sh, samples=32)
    assert not report.ok
    assert report.witnesses


def test_functoriality_vacuous_on_single_chain():
    u = EntityUniverse(["a", "b"])
    t = generate_topology(u, [("a",)])
    mid, top = t.open_for(["a"]), t.full
    sh = complete_unions(Sheaf(
        t, {top: euclidean(2), mid: euclidean(1)},
        [RestrictionMap(top, mid, Projection([0]))],
    ))
    report = verify_functoriality(sh, samples=8)
    assert report.ok
    assert report.checked_pairs == 0


def build_pair_sheaf(stalk_u1, stalk_u2, stalk_inter, body1, body2,
                     entities=("p", "q", "r")):
    """Two overlapping opens plus their union and intersection."""
    u = EntityUniverse(entities)
    t = generate_topology(u, [entities[:2], entities[1:]])
    u1, u2 = t.open_for(entities[:2]), t.open_for(entities[1:])
    inter = t.open_for(entities[1:2])
    stalks = {u1: stalk_u1, u2: stalk_u2, inter: stalk_inter}
    restrictions = [RestrictionMap(u1, inter, body1),
                    RestrictionMap(u2, inter, body2)]
    return complete_unions(Sheaf(t, stalks, restrictions)), t


def test_union_with_nested_parts_reuses_larger_stalk():
    """U1 inside U2 makes S(U1 v U2) literally S(U2)."""
    u = EntityUniverse(["x", "y"])
    t = generate_topology(u, [("x",), ("x", "y")])
    u1, u2 = t.open_for(["x"]), t.full
    sh = complete_unions(Sheaf(
        t, {u1: euclidean(1), u2: euclidean(3)},
        [RestrictionMap(u2, u1, Projection([0]))],
    ))
    assert sh.stalk(u2.id).dim == 3


def test_union_of_disjoint_parts_is_plain_product():
    u = EntityUniverse(["a", "b", "c"])
    t = generate_topology(u, [("a",), ("b",)])
    sh = complete_unions(Sheaf(
        t, {t.open_for(["a"]): euclidean(3),
            t.open_for(["b"]): euclidean(2)}, [],
    ))
    ab = t.open_for(["a", "b"])
    assert sh.stalk(ab.id).dim == 5
    assert not sh.pullbacks[ab.id].constraints


def test_union_with_overlap_gets_agreement_constraint():
    sh, t = build_pair_sheaf(
        euclidean(2), euclidean(2), euclidean(1),
        Projection([1]), Projection([0]),
    )
    top = t.full
    assert sh.stalk(top.id).dim == 4
    assert sh.pullbacks[top.id].constraints
    assert sh.dim(top.id) == 3  # 2 + 2 - 1 agreement
    good = make_point(sh.stalk(top.id), (5.0, 1.0, 1.0, 6.0))
    assert sh.check_point(top.id, good) <= 1e-9
    bad = make_point(sh.stalk(top.id), (5.0, 1.0, 2.0, 6.0))
    with pytest.raises(SpaceMismatch):
        sh.check_point(top.id, bad)


def test_missing_intersection_stalk_raises():
    u = EntityUniverse(["p", "q", "r"])
    t = generate_topology(u, [("p", "q"), ("q", "r")])
    with pytest.raises(MissingIntersectionStalk):
        complete_unions(Sheaf(
            t, {t.open_for(["p", "q"]): euclidean(2),
                t.open_for(["q", "r"]): euclidean(2)}, [],
        ))


def test_complete_unions_idempotent():
    rng = random.Random(31)
    sh = random_linear_sheaf(rng)
    again = complete_unions(sh)
    assert set(again.stalks) == set(sh.stalks)
    for oid in sh.stalks:
        assert again.stalk(oid).dim == sh.stalk(oid).dim


def test_gluing_counterexample_existence_failure():
    """A union stalk too small to cover the agreement space: the value c
    on one side has no preimage upstairs."""
    u = EntityUniverse(["e1", "e2", "e3"])
    t = generate_topology(u, [("e1", "e2"), ("e2", "e3"),
                              ("e1", "e2", "e3")])
    u1, u2 = t.open_for(["e1", "e2"]), t.open_for(["e2", "e3"])
    mid, top = t.open_for(["e2"]), t.full
    sh = complete_unions(Sheaf(
        t,
        {top: euclidean(1), u1: euclidean(2), u2: euclidean(1),
         mid: euclidean(1)},
        [RestrictionMap(top, u1, Linear([[1.0], [0.0]])),
         RestrictionMap(top, u2, Identity()),
         RestrictionMap(u1, mid, Linear([[1.0, 1.0]])),
         RestrictionMap(u2, mid, Identity())],
    ))
    report = verify_gluing(sh)
    assert not report.ok
    assert any("existence" in f for f in report.failures)


def test_gluing_passes_on_completed_unions():
    rng = random.Random(37)
    for _ in range(10):
        sh = random_linear_sheaf(rng)
        assert verify_gluing(sh).ok


def test_gluing_requires_linearity():
    with pytest.raises(NonlinearSheaf):
        verify_gluing(build_sar_sheaf())


def test_sections_match_stacked_constraint_oracle():
    rng = random.Random(41)
    for _ in range(20):
        sh = random_linear_sheaf(rng)
        t = sh.topology
        opens = [o.mask for o in t.opens if o.mask]
        expected = agreement_dim(
            opens,
            lambda m: sh.dim(t.find(m).id),
            lambda big, small: sh.restriction_matrix(t.find(big).id,
                                                     t.find(small).id),
        )
        assert sh.dim(t.full.id) == expected


def test_restriction_chain_consistency_on_samples():
    sh = build_sar_sheaf()
    t = sh.topology
    rng = random.Random(43)
    u34 = t.open_for(["theta1", "theta2", "t"])
    mid = t.open_for(["theta1", "t"])
    small = t.open_for(["t"])
    for _ in range(25):
        p = sh.sample_stalk(u34.id, rng)
        direct = sh.restrict_coords(u34.id, small.id, p.coords)
        stepped = sh.restrict_coords(
            mid.id, small.id, sh.restrict_coords(u34.id, mid.id, p.coords)
        )
        assert np.allclose(direct, stepped, atol=1e-9)

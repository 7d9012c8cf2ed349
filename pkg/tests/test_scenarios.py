import pytest

from oracles import great_circle_km
from sheaffuse import consistency_radius, make_point, verify_functoriality
from sheaffuse._kernels import equirect_bearing_deg
from sheaffuse.scenarios import (
    SAR_CASES,
    SAR_REFERENCE,
    SarParameters,
    SarWeights,
    build_coin_sheaf,
    build_obstacle_sheaves,
    build_sar_sheaf,
    crash_error_km,
    dead_reckon_estimate,
    sar_case_assignment,
)

PARAMS = SarParameters()


@pytest.mark.parametrize("case", [1, 2, 3])
def test_dead_reckoning_matches_reference_estimates(case):
    est = dead_reckon_estimate(PARAMS, case)
    ref = SAR_REFERENCE[case]["crash_est"]
    assert abs(est[0] - ref[0]) <= 0.02
    assert abs(est[1] - ref[1]) <= 0.02


def test_crash_error_uses_great_circle():
    est = dead_reckon_estimate(PARAMS, 1)
    expected = great_circle_km(est[0], est[1], PARAMS.true_crash[0],
                               PARAMS.true_crash[1])
    assert crash_error_km(PARAMS, est) == pytest.approx(expected, rel=1e-6)


def test_sheaf_restriction_agrees_with_direct_dead_reckoning():
    sh = build_sar_sheaf(PARAMS)
    t = sh.topology
    u5 = t.open_for(["theta1", "theta2", "s"])
    for case in (1, 2, 3):
        f = SAR_CASES[case]["field"]
        state = make_point(sh.stalk(t.full.id),
                           (f["x"], f["y"], f["z"], f["vx"], f["vy"], f["t"]))
        via_sheaf = sh.restrict(t.full, u5, state).coords
        direct = dead_reckon_estimate(PARAMS, case)
        assert via_sheaf == pytest.approx(direct, abs=1e-12)


def test_bearings_at_true_crash_close_to_low_noise_observations():
    """A state that dead-reckons exactly onto the true crash site yields
    bearings within half a degree of the case-1 observations."""
    sh = build_sar_sheaf(PARAMS)
    t = sh.topology
    f = SAR_CASES[1]["field"]
    # back out the start point that lands on the true crash
    lon, lat = PARAMS.true_crash
    km_per_deg = 6371.0 * 3.141592653589793 / 180.0
    import math

    x = lon - f["vx"] * f["t"] / (km_per_deg *
                                  math.cos(math.radians(PARAMS.lon_ref_lat_deg)))
    y = lat - f["vy"] * f["t"] / km_per_deg
    state = make_point(sh.stalk(t.full.id),
                       (x, y, f["z"], f["vx"], f["vy"], f["t"]))
    th1 = sh.restrict(t.full, t.open_for(["theta1", "t"]), state).coords[0]
    th2 = sh.restrict(t.full, t.open_for(["theta2", "t"]), state).coords[0]
    assert abs(th1 - SAR_CASES[1]["rdf1"]["theta1"]) <= 0.5
    assert abs(th2 - SAR_CASES[1]["rdf2"]["theta2"]) <= 0.5


def test_detection_bearing_consistent_with_state_bearing():
    """Bearing of a detection equals the bearing of a zero-velocity state
    parked at the same point."""
    sh = build_sar_sheaf(PARAMS)
    t = sh.topology
    point = (64.2, 44.8)
    u5 = t.open_for(["theta1", "theta2", "s"])
    via_detection = sh.restrict(
        u5, t.open_for(["theta1"]),
        make_point(sh.stalk(u5.id), point),
    ).coords[0]
    state = make_point(sh.stalk(t.full.id),
                       (point[0], point[1], 0.0, 0.0, 0.0, 1.0))
    via_state = sh.restrict(t.full, t.open_for(["theta1", "t"]),
                            state).coords[0]
    assert via_detection == pytest.approx(via_state, abs=1e-9)
    assert via_detection == pytest.approx(
        equirect_bearing_deg(PARAMS.rdf1[0], PARAMS.rdf1[1], *point),
        abs=1e-12,
    )


@pytest.mark.parametrize("case", [1, 2, 3])
def test_case_assignments_populate_sensors_and_office(case):
    sh = build_sar_sheaf(PARAMS)
    a = sar_case_assignment(sh, case)
    assert len(a) == 6
    t = sh.topology
    for names in (("x", "y", "z"), ("x", "y", "z", "vx", "vy"),
                  ("theta1", "t"), ("theta2", "t"),
                  ("theta1", "theta2", "s")):
        assert a.get(t.open_for(names)) is not None
    assert a.get(t.full) is not None


def test_radius_ordering_and_dominant_edges():
    sh = build_sar_sheaf(PARAMS)
    t = sh.topology
    radii = {}
    for case in (1, 2, 3):
        result = consistency_radius(sar_case_assignment(sh, case))
        radii[case] = result
    assert radii[3].radius > radii[1].radius > radii[2].radius
    top1 = {(e.smaller.key(), e.larger.key())
            for e in radii[1].edges[:2]}
    assert top1 == {("x+y+z", "vx+vy+x+y+z"),
                    ("s+theta1+theta2", t.full.key())}
    loudest2 = radii[2].edges[0]
    assert (loudest2.smaller.key(), loudest2.larger.key()) == \
        ("t+theta2", t.full.key())


def test_functoriality_of_scenario_sheaf():
    assert verify_functoriality(build_sar_sheaf(PARAMS), samples=64).ok


def test_weights_are_explicit_and_overridable():
    custom = SarParameters(weights=SarWeights(geo_km=1.0,
                                              bearing_km_per_deg=1.0,
                                              time_km_per_hour=1.0,
                                              velocity_km_per_kmh=1.0))
    sh = build_sar_sheaf(custom)
    u5 = sh.topology.open_for(["theta1", "theta2", "s"])
    assert sh.stalk(u5.id).weight == 1.0
    default = build_sar_sheaf(PARAMS)
    assert default.stalk(u5.id).weight == PARAMS.weights.geo_km


def test_obstacle_structure_parameters():
    mosaic, prob = build_obstacle_sheaves(m=5, n=3, p=1, q=2)
    t = mosaic.topology
    assert mosaic.stalk(t.open_for(["L", "V1", "V2"]).id).dim == 15
    assert mosaic.stalk(t.open_for(["R", "V1", "V2"]).id).dim == 9
    assert mosaic.stalk(t.open_for(["V1"]).id).dim == 3
    assert mosaic.stalk(t.open_for(["V2"]).id).dim == 6
    assert mosaic.dim(t.full.id) == 15 + 9 - 9
    assert prob.dim(t.full.id) == 3


def test_coin_variants():
    from sheaffuse import Assignment

    counts = build_coin_sheaf("counts")
    t = counts.topology
    u1, u2 = t.open_for(["left", "overlap"]), t.open_for(["overlap", "right"])
    ov = t.open_for(["overlap"])
    # identical overlapping counts admit a global section
    left = make_point(counts.stalk(u1.id), (3, 1, 0, 2, 4, 4))
    right = make_point(counts.stalk(u2.id), (3, 0, 1, 0, 0, 0, 1, 1))
    a = Assignment(counts, {
        u1: left, u2: right, ov: counts.restrict(u1, ov, left),
    })
    assert consistency_radius(a).radius == pytest.approx(0.0, abs=1e-12)

    value = build_coin_sheaf("value")
    tv = value.topology
    u2v = tv.open_for(["overlap", "right"])
    detections = make_point(value.stalk(u2v.id), (3, 0, 1, 0, 0, 0, 2, 0))
    cents = value.restrict(u2v, tv.open_for(["overlap"]), detections)
    assert cents.coords[0] == pytest.approx(58.0)

    mosaic = build_coin_sheaf("mosaic")
    tm = mosaic.topology
    assert mosaic.dim(tm.full.id) == 6 + 6 - 2


def test_unknown_coin_variant_rejected():
    with pytest.raises(ValueError):
        build_coin_sheaf("holograms")

import math

import numpy as np
import pytest

import srd


def test_closest_point_matches_dense_sampling():
    rng = np.random.default_rng(5)
    for _ in range(50):
        a, b, q = rng.uniform(-5, 5, size=(3, 3))
        u = np.linspace(0.0, 1.0, 200001)
        pts = a[None, :] + u[:, None] * (b - a)[None, :]
        best = pts[np.argmin(((pts - q) ** 2).sum(axis=1))]
        got = np.array(srd.closest_point_on_segment(q, a, b))
        assert np.linalg.norm(got - best) < 1e-4


def test_tangent_is_orthogonal_and_scaled_by_heading():
    p = (3.0, 0.0, 1.0)
    v = (5.0, 0.0, 0.0)
    t = np.array(srd.tangent_for_detection(p, v))
    p_hat = np.array(p) / np.linalg.norm(p)
    assert abs(t @ p_hat) < 1e-12
    assert np.linalg.norm(t) == pytest.approx(p_hat @ (np.array(v) / 5.0))
    assert t @ np.array(v) >= 0.0
    # Behind the UAV: nothing to steer around.
    assert srd.tangent_for_detection((-3.0, 0.0, 1.0), v) is None


def test_combine_output_never_exceeds_user_speed():
    rng = np.random.default_rng(9)
    for _ in range(200):
        v_u = rng.uniform(-8, 8, 3)
        tangents = [tuple(rng.uniform(-1, 1, 3)) for _ in range(rng.integers(0, 5))]
        out = np.array(srd.combine_output(tangents, tuple(v_u)))
        assert np.linalg.norm(out) <= np.linalg.norm(v_u) + 1e-9
    assert srd.combine_output([], (1.0, 2.0, 3.0)) == (1.0, 2.0, 3.0)


def test_rejection_and_ebrake():
    params = srd.AvoidanceParams()
    params.r_s = 2.0
    params.k_s = 1.0
    assert srd.proximity_rejection([(1.0, 0.0, 0.0)], params) == pytest.approx((-1.0, 0.0, 0.0))
    assert srd.proximity_rejection([(3.0, 0.0, 0.0)], params) is None
    defaults = srd.AvoidanceParams()
    assert srd.ebrake_horizon_length((10.0, 0.0, 0.0), defaults) == pytest.approx(100.0 / 10.0 + 2.0)
    assert srd.ebrake_check([(8.0, 0.0, 0.0)], (10.0, 0.0, 0.0), defaults)
    assert not srd.ebrake_check([(8.0, 5.0, 0.0)], (10.0, 0.0, 0.0), defaults)


def test_line_direction_from_points_on_a_wire():
    xs = np.linspace(-1, 1, 20)
    pts = [(0.2 * x, x, 3.0) for x in xs]
    d = np.array(srd.estimate_line_direction(pts))
    expected = np.array([0.2, 1.0, 0.0]) / math.hypot(0.2, 1.0)
    assert abs(abs(d @ expected) - 1.0) < 1e-12
    assert srd.estimate_line_direction(pts[:3]) is None


def test_builtins_and_scenario_errors():
    names = srd.builtin_names()
    for n in ("triangle_3phase", "thin_wire", "single_wire_head_on", "empty"):
        assert n in names
    sc = srd.resolve_scenario("builtin:triangle_3phase")
    assert sc.conductor_count == 4
    again = srd.load_scenario(sc.dump())
    assert again.dump() == sc.dump()
    with pytest.raises(ValueError):
        srd.load_scenario("name: x\nduration_s: 1\ncolour: red\n")
    with pytest.raises(ValueError):
        sc.set("avoidance.r_s", "100")


def test_run_is_deterministic_and_avoids():
    sc = srd.resolve_scenario("builtin:single_wire_head_on")
    a = srd.run(sc, 4)
    b = srd.run(sc, 4)
    assert a.jsonl() == b.jsonl()
    assert not a.collided
    modes = a.modes
    assert "ebraking" in modes
    first_eb = modes.index("ebraking")
    assert any(m in ("tangential", "rejecting") for m in modes[first_eb:])
    assert len(a.times) == len(a.positions) == len(a.v_out)
    assert a.metrics_csv().splitlines()[0].startswith("scenario,seed,min_clearance_m")


def test_empty_run_is_a_straight_line():
    log = srd.run(srd.resolve_scenario("builtin:empty"), 1)
    pos = np.array(log.positions)
    assert np.allclose(pos[:, 1:], pos[0, 1:])
    assert math.isinf(log.min_clearance)
    assert log.modes_visited == ["cruise"]


def test_turntable_sees_four_sensors_per_plane():
    for plane in ("XY", "XZ", "YZ"):
        stats = srd.turntable(plane, steps=3600, noise=False)
        assert len(stats) == 4
        for s in stats.values():
            assert abs(s["mean"]) < 1e-12
    with pytest.raises(ValueError):
        srd.turntable("QQ")


def test_yaw_sweep_plateau_and_symmetry():
    rows = srd.yaw_sweep(step_deg=1.0)
    curve = {}
    for off, det, sensor in rows:
        curve[(sensor, round(off))] = det
        if abs(off) <= 30.0:
            assert abs(det) < 1e-9
        else:
            assert det == pytest.approx(math.copysign(min(abs(off) - 30.0, abs(off)), off), abs=1e-6)
    for (sensor, off), det in curve.items():
        if (sensor, -off) in curve:
            assert curve[(sensor, -off)] == pytest.approx(-det, abs=1e-9)

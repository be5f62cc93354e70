import io
import math
from datetime import datetime, timedelta

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uavbs.errors import DomainError, ParseError
from uavbs.mobility import (EARTH_RADIUS, Trajectory, format_trajectories, geolife_days,
                            parse_geolife_plt, parse_trajectory_file, persistence_forecast, rmse,
                            random_waypoint_trajectory, synthetic_trajectories)


def test_rmse_hand_cases():
    assert rmse([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]).value == 0.0
    r = rmse([3.0, 4.0], [0.0, 0.0])
    assert r.value == pytest.approx(math.sqrt(12.5), abs=1e-12) and r.n == 2
    assert rmse([3.0, 4.0], [0.0, 0.0]).value == pytest.approx(3.5355, abs=1e-4)


def test_rmse_points_are_euclidean():
    assert rmse([[3.0, 4.0]], [[0.0, 0.0]]).value == pytest.approx(5.0)


def test_rmse_errors():
    with pytest.raises(DomainError):
        rmse([], [])
    with pytest.raises(DomainError):
        rmse([1.0], [1.0, 2.0])
    with pytest.raises(DomainError):
        rmse(np.zeros((2, 2, 2)), np.zeros((2, 2, 2)))


@pytest.mark.parametrize("seed", range(10))
def test_rmse_matches_two_pass(seed):
    rng = np.random.default_rng(seed)
    a, b = rng.normal(0, 5, 100), rng.normal(0, 5, 100)
    total = 0.0
    for x, y in zip(a, b):
        total += (x - y) * (x - y)
    assert abs(rmse(a, b).value - math.sqrt(total / 100)) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3)), min_size=1, max_size=50),
       st.floats(-10, 10), st.randoms())
def test_rmse_properties(pairs, c, rnd):
    t = np.array([p[0] for p in pairs])
    p = np.array([p[1] for p in pairs])
    base = rmse(t, p).value
    assert base >= 0
    assert rmse(c * t, c * p).value == pytest.approx(abs(c) * base, rel=1e-9, abs=1e-9)
    idx = list(range(len(t)))
    rnd.shuffle(idx)
    assert rmse(t[idx], p[idx]).value == pytest.approx(base, rel=1e-12, abs=1e-12)


def test_parse_single_point():
    trs = parse_trajectory_file("t_s,x_m,y_m\n0,1,2\n")
    assert len(trs) == 1 and trs[0].points.tolist() == [[0.0, 1.0, 2.0]]


def test_parse_two_blocks():
    text = "t_s,x_m,y_m\n0,0,0\n1,1,1\n2,2,2\n\n0,5,5\n1,6,6\n"
    trs = parse_trajectory_file(io.StringIO(text))
    assert [len(t) for t in trs] == [3, 2]


def test_parse_bad_number_names_line():
    with pytest.raises(ParseError, match="line 2"):
        parse_trajectory_file("t_s,x_m,y_m\n0,1,notanumber\n")


def test_parse_non_increasing_time():
    with pytest.raises(ParseError, match="line 3"):
        parse_trajectory_file("t_s,x_m,y_m\n0,1,1\n0,2,2\n")


def test_parse_missing_header_and_field_count():
    with pytest.raises(ParseError, match="line 1"):
        parse_trajectory_file("0,1,2\n")
    with pytest.raises(ParseError, match="line 2"):
        parse_trajectory_file("t_s,x_m,y_m\n0,1\n")


@settings(max_examples=40, deadline=None)
@given(st.lists(st.lists(st.tuples(st.floats(0.1, 10), st.floats(-1e4, 1e4), st.floats(-1e4, 1e4)),
                         min_size=1, max_size=12), min_size=1, max_size=4))
def test_format_round_trip(blocks):
    trs = []
    for b in blocks:
        t = np.cumsum([x[0] for x in b])
        trs.append(Trajectory(np.column_stack([t, [x[1] for x in b], [x[2] for x in b]])))
    back = parse_trajectory_file(format_trajectories(trs))
    assert len(back) == len(trs)
    for a, b in zip(trs, back):
        assert np.array_equal(a.points, b.points)


def test_trajectory_rejects_non_increasing():
    with pytest.raises(DomainError):
        Trajectory(np.array([[0, 0, 0], [0, 1, 1]]))


def geolife_text(fixes):
    head = "Geolife trajectory\nWGS 84\nAltitude is in Feet\nReserved 3\n0,2,255,My Track,0,0,2,8421376\n0\n"
    lines = []
    for lat, lon, when in fixes:
        lines.append(f"{lat},{lon},0,492,{geolife_days(when)!r},{when:%Y-%m-%d},{when:%H:%M:%S}")
    return head + "\n".join(lines) + "\n"


def test_geolife_adapter_hand_records():
    t0 = datetime(2008, 10, 23, 2, 53, 4)
    fixes = [(39.9, 116.3, t0), (39.9, 116.301, t0 + timedelta(seconds=5)),
             (39.901, 116.301, t0 + timedelta(seconds=10)),
             (39.901, 116.301, t0 + timedelta(seconds=10))]
    tr = parse_geolife_plt(geolife_text(fixes))
    assert len(tr) == 3  # repeated timestamp dropped
    assert tr.t == pytest.approx([0.0, 5.0, 10.0], abs=1e-3)
    dx = EARTH_RADIUS * math.radians(0.001) * math.cos(math.radians(39.9))
    dy = EARTH_RADIUS * math.radians(0.001)
    assert tr.xy[1] == pytest.approx([dx, 0.0], abs=1e-6)
    assert tr.xy[2] == pytest.approx([dx, dy], abs=1e-6)


def test_geolife_bad_record():
    with pytest.raises(ParseError, match="line 7"):
        parse_geolife_plt(geolife_text([]).rstrip("\n") + "\n1,2,3\n")


def test_geolife_days_epoch():
    assert geolife_days(datetime(1899, 12, 31)) == 1.0


def test_synthetic_deterministic_and_smooth():
    a = synthetic_trajectories(4, 200, seed=3)
    b = synthetic_trajectories(4, 200, seed=3)
    assert all(np.array_equal(x.points, y.points) for x, y in zip(a, b))
    for tr in a:
        step = np.linalg.norm(np.diff(tr.xy, axis=0), axis=1)
        assert step.max() < 5.0


def test_waypoint_turn_rate_bounded():
    tr = random_waypoint_trajectory(400, np.random.default_rng(0), turn_rate=0.1)
    d = np.diff(tr.xy, axis=0)
    heading = np.unwrap(np.arctan2(d[:, 1], d[:, 0]))
    assert np.max(np.abs(np.diff(heading))) <= 0.1 + 1e-9


def test_persistence():
    tr = Trajectory.from_xy([[0, 0], [1, 1], [2, 5]])
    assert persistence_forecast(tr, 3).tolist() == [[2, 5]] * 3

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uavbs.errors import ConfigError
from uavbs.scenario import (UE, DemandLevel, HotSpot, Region, assign_demands, density_map,
                            evolve_hotspots, generate_crowd, sample_crowd, ues_to_records)

REGION = Region(0.0, 1000.0, 0.0, 1000.0)
TWO = [HotSpot((300.0, 300.0), 50.0, 0.5), HotSpot((700.0, 700.0), 50.0, 0.5)]


def test_empty_crowd():
    assert generate_crowd(REGION, TWO, 0, seed=1) == []


def test_empty_hotspots_rejected():
    with pytest.raises(ConfigError):
        generate_crowd(REGION, [], 3, seed=1)
    assert generate_crowd(REGION, [], 0, seed=1) == []


def test_tiny_sigma_collapses_to_center():
    hs = [HotSpot((123.0, 456.0), 1e-12, 1.0)]
    ues = generate_crowd(REGION, hs, 5, seed=3)
    assert len(ues) == 5
    for u in ues:
        assert math.dist(u.position, (123.0, 456.0)) < 1e-3


def test_equal_weights_split_binomially():
    _, comp = sample_crowd(REGION, TWO, 10000, seed=11)
    counts = np.bincount(comp, minlength=2)
    # 3 sigma of Binomial(10000, 0.5)
    assert abs(counts[0] - 5000) <= 3 * math.sqrt(10000 * 0.25)


def test_positions_inside_region_and_deterministic():
    hs = [HotSpot((5.0, 995.0), 300.0, 1.0)]
    a = generate_crowd(REGION, hs, 500, seed=4)
    b = generate_crowd(REGION, hs, 500, seed=4)
    assert a == b
    assert all(REGION.contains(*u.position) for u in a)
    assert json.dumps(ues_to_records(a)) == json.dumps(ues_to_records(b))


def test_same_seed_crowds_are_nested():
    small = generate_crowd(REGION, TWO, 50, seed=9)
    big = generate_crowd(REGION, TWO, 200, seed=9)
    assert big[:50] == small


def test_drift_zero_is_identity():
    assert evolve_hotspots(TWO, 60.0, 0.0, seed=1) == TWO


def test_drift_std_matches():
    hs = [HotSpot((500.0, 500.0), 10.0, 1.0)]
    dx = []
    for s in range(4000):
        moved = evolve_hotspots(hs, 1.0, 2.0, seed=s)[0]
        dx.append(moved.center[0] - 500.0)
        assert moved.sigma == 10.0 and moved.weight == 1.0
    assert abs(np.std(dx) - 2.0) < 0.2


def test_drift_clamped_to_region():
    hs = [HotSpot((0.0, 1000.0), 10.0, 1.0)]
    for s in range(50):
        c = evolve_hotspots(hs, 100.0, 500.0, seed=s, region=REGION)[0].center
        assert REGION.contains(*c)


def test_drift_needs_positive_dt():
    with pytest.raises(ConfigError):
        evolve_hotspots(TWO, 0.0, 1.0, seed=0)


def test_density_single_cell():
    ues = [UE(i, (12.0 + i, 15.0)) for i in range(3)]
    f = density_map(ues, REGION, 50.0)
    assert f.counts[0, 0] == 3
    assert f.counts.sum() == 3


def test_density_boundary_goes_up():
    f = density_map([UE(0, (100.0, 50.0))], REGION, 100.0)
    assert f.counts[1, 0] == 1


def test_density_needs_positive_cell():
    with pytest.raises(ConfigError):
        density_map([], REGION, 0.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 1000), st.floats(0, 1000)), max_size=60),
       st.floats(1.0, 400.0))
def test_density_conserves_count(points, cell):
    ues = [UE(i, p) for i, p in enumerate(points)]
    f = density_map(ues, REGION, cell)
    assert f.counts.sum() == len(ues) == f.total
    assert (f.counts >= 0).all()


def test_single_level_everyone():
    ues = generate_crowd(REGION, TWO, 30, seed=0)
    out = assign_demands(ues, [DemandLevel(7, 1e6, 1.0)], seed=0)
    assert {u.demand for u in out} == {7}


def test_half_half_levels():
    ues = [UE(i, (0.0, 0.0)) for i in range(10000)]
    out = assign_demands(ues, [DemandLevel(1, 1e6, 0.5), DemandLevel(2, 2e6, 0.5)], seed=5)
    n1 = sum(u.demand == 1 for u in out)
    assert 4700 <= n1 <= 5300


def test_zero_fraction_never_assigned():
    ues = [UE(i, (0.0, 0.0)) for i in range(2000)]
    levels = [DemandLevel(1, 1e6, 0.0), DemandLevel(2, 1e6, 1.0), DemandLevel(3, 1e6, 0.0)]
    assert {u.demand for u in assign_demands(ues, levels, seed=2)} == {2}


def test_levels_validated():
    with pytest.raises(ConfigError):
        assign_demands([], [], seed=0)
    with pytest.raises(ConfigError):
        assign_demands([], [DemandLevel(1, 1e6, 0.4)], seed=0)
    with pytest.raises(ConfigError):
        HotSpot((0.0, 0.0), -1.0, 1.0)
    with pytest.raises(ConfigError):
        Region(0.0, 0.0, 0.0, 1.0)

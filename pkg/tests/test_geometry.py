import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uavbs.errors import DomainError
from uavbs.geometry import best_disk, min_enclosing_circle

from oracles import grid_max_cover

coords = st.floats(-100, 100, allow_nan=False)
point_lists = st.lists(st.tuples(coords, coords), min_size=1, max_size=40)


def test_mec_small_cases():
    assert min_enclosing_circle([(0, 0)]) == ((0, 0), 0)
    c, r = min_enclosing_circle([(0, 0), (2, 0)])
    assert c == pytest.approx((1, 0)) and r == pytest.approx(1)
    c, r = min_enclosing_circle([(0, 0), (2, 0), (1, 1)])
    assert c == pytest.approx((1, 0)) and r == pytest.approx(1)
    with pytest.raises(DomainError):
        min_enclosing_circle([])


def mec_brute(pts):
    """O(n^4) reference: smallest of all 2- and 3-point circles that contain everything."""
    best = None
    n = len(pts)
    cands = []
    for i in range(n):
        for j in range(i, n):
            a, b = pts[i], pts[j]
            cands.append(((a[0] + b[0]) / 2, (a[1] + b[1]) / 2, math.dist(a, b) / 2))
            for k in range(j + 1, n):
                c = pts[k]
                d = 2 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]))
                if abs(d) < 1e-12:
                    continue
                ux = ((a[0] ** 2 + a[1] ** 2) * (b[1] - c[1]) + (b[0] ** 2 + b[1] ** 2) * (c[1] - a[1])
                      + (c[0] ** 2 + c[1] ** 2) * (a[1] - b[1])) / d
                uy = ((a[0] ** 2 + a[1] ** 2) * (c[0] - b[0]) + (b[0] ** 2 + b[1] ** 2) * (a[0] - c[0])
                      + (c[0] ** 2 + c[1] ** 2) * (b[0] - a[0])) / d
                cands.append((ux, uy, math.dist((ux, uy), a)))
    for cx, cy, r in cands:
        if all(math.dist((cx, cy), p) <= r * (1 + 1e-9) + 1e-9 for p in pts):
            if best is None or r < best:
                best = r
    return best


@settings(max_examples=150, deadline=None)
@given(point_lists)
def test_mec_contains_all_and_touches(pts):
    (cx, cy), r = min_enclosing_circle(pts)
    d = [math.dist((cx, cy), p) for p in pts]
    assert max(d) <= r + 1e-9 * max(1.0, r)
    if r > 0:
        assert min(abs(x - r) for x in d) <= 1e-9 * max(1.0, r)


@pytest.mark.parametrize("seed", range(30))
def test_mec_matches_brute_force(seed):
    rng = random.Random(seed)
    pts = [(rng.uniform(-10, 10), rng.uniform(-10, 10)) for _ in range(rng.randint(1, 9))]
    _, r = min_enclosing_circle(pts)
    assert r == pytest.approx(mec_brute(pts), rel=1e-9, abs=1e-12)


def test_best_disk_basic():
    assert best_disk([], 1.0) == ((0.0, 0.0), set())
    c, cov = best_disk([(3.0, 4.0)], 2.0)
    assert cov == {0} and c == pytest.approx((3.0, 4.0))
    _, cov = best_disk([(0, 0), (1, 0), (10, 0)], 1.0)
    assert cov == {0, 1}
    _, cov = best_disk([(0, 0), (1, 0), (10, 0)], 1.0, ids=[7, 8, 9])
    assert cov == {7, 8}


@pytest.mark.parametrize("seed", range(25))
def test_best_disk_matches_grid_oracle(seed):
    rng = np.random.default_rng(1000 + seed)
    n = int(rng.integers(1, 16))
    pts = rng.uniform(0, 6, (n, 2))
    r = float(rng.uniform(0.5, 2.5))
    (cx, cy), cov = best_disk(pts, r)
    assert len(cov) == grid_max_cover(pts, r)
    # the reported set really fits in a disk of radius r about the center
    for i in cov:
        assert math.dist((cx, cy), pts[i]) <= r + 1e-6


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 20), st.floats(0, 20)), min_size=1, max_size=25),
       st.floats(0.5, 8))
def test_best_disk_permutation_invariant_count(pts, r):
    _, cov = best_disk(pts, r)
    perm = list(reversed(pts))
    _, cov2 = best_disk(perm, r)
    assert len(cov) == len(cov2)
    assert min_enclosing_circle([pts[i] for i in cov])[1] <= r * (1 + 1e-9) + 1e-9


def test_best_disk_duplicates():
    pts = [(1.0, 1.0)] * 5 + [(50.0, 50.0)] * 3
    _, cov = best_disk(pts, 1.0)
    assert cov == {0, 1, 2, 3, 4}


def test_best_disk_prefers_tighter_cluster_on_ties():
    # two groups of 3; the first is spread, the second tight
    pts = [(0, 0), (1.8, 0), (0.9, 1.0), (20, 20), (20.1, 20), (20, 20.1)]
    _, cov = best_disk(pts, 1.0)
    assert cov == {3, 4, 5}

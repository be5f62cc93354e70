"""Planar geometry for horizontal placement.

``min_enclosing_circle`` is the incremental (Welzl-style) construction over a
deterministically shuffled point order.  ``best_disk`` finds a disk of fixed
radius covering as many points as possible.
"""

from __future__ import annotations

import math
import random
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import DomainError

REL_EPS = 1e-12
COVER_EPS = 1e-9  # m; slack when testing "inside a disk"
ANGLE_EPS = 1e-9  # rad; widens sweep intervals so they never undercount

Point = tuple[float, float]
Circle = tuple[float, float, float]  # cx, cy, r


def _in_circle(c: Circle | None, p: Point) -> bool:
    if c is None:
        return False
    return math.hypot(p[0] - c[0], p[1] - c[1]) <= c[2] * (1 + REL_EPS) + REL_EPS


def _diameter(a: Point, b: Point) -> Circle:
    cx, cy = (a[0] + b[0]) / 2, (a[1] + b[1]) / 2
    return cx, cy, max(math.hypot(cx - a[0], cy - a[1]), math.hypot(cx - b[0], cy - b[1]))


def _circumcircle(a: Point, b: Point, c: Point) -> Circle | None:
    # translate to the bounding-box center for precision
    ox = (min(a[0], b[0], c[0]) + max(a[0], b[0], c[0])) / 2
    oy = (min(a[1], b[1], c[1]) + max(a[1], b[1], c[1])) / 2
    ax, ay = a[0] - ox, a[1] - oy
    bx, by = b[0] - ox, b[1] - oy
    cx, cy = c[0] - ox, c[1] - oy
    d = (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by)) * 2.0
    if d == 0.0:
        return None
    x = ox + ((ax * ax + ay * ay) * (by - cy) + (bx * bx + by * by) * (cy - ay)
              + (cx * cx + cy * cy) * (ay - by)) / d
    y = oy + ((ax * ax + ay * ay) * (cx - bx) + (bx * bx + by * by) * (ax - cx)
              + (cx * cx + cy * cy) * (bx - ax)) / d
    r = max(math.hypot(x - p[0], y - p[1]) for p in (a, b, c))
    return x, y, r


def _cross(x0, y0, x1, y1, x2, y2) -> float:
    return (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)


def _circle_two_fixed(points: Sequence[Point], p: Point, q: Point) -> Circle:
    circ = _diameter(p, q)
    left = right = None
    px, py = p
    qx, qy = q
    for r in points:
        if _in_circle(circ, r):
            continue
        cross = _cross(px, py, qx, qy, r[0], r[1])
        c = _circumcircle(p, q, r)
        if c is None:
            continue
        if cross > 0 and (left is None or _cross(px, py, qx, qy, c[0], c[1])
                          > _cross(px, py, qx, qy, left[0], left[1])):
            left = c
        elif cross < 0 and (right is None or _cross(px, py, qx, qy, c[0], c[1])
                            < _cross(px, py, qx, qy, right[0], right[1])):
            right = c
    if left is None and right is None:
        return circ
    if left is None:
        return right
    if right is None:
        return left
    return left if left[2] <= right[2] else right


def _circle_one_fixed(points: Sequence[Point], p: Point) -> Circle:
    c = (p[0], p[1], 0.0)
    for i, q in enumerate(points):
        if not _in_circle(c, q):
            if c[2] == 0.0:
                c = _diameter(p, q)
            else:
                c = _circle_two_fixed(points[: i + 1], p, q)
    return c


def min_enclosing_circle(points: Iterable[Sequence[float]]) -> tuple[Point, float]:
    """Smallest circle containing every point, as ``((cx, cy), radius)``."""
    pts = [(float(x), float(y)) for x, y in points]
    if not pts:
        raise DomainError("min_enclosing_circle of an empty point set")
    # fixed seed: same input, same output
    random.Random(0).shuffle(pts)
    c = None
    for i, p in enumerate(pts):
        if c is None or not _in_circle(c, p):
            c = _circle_one_fixed(pts[: i + 1], p)
    return (c[0], c[1]), c[2]


def _sweep_depths(pts: np.ndarray, i: int, nbrs: np.ndarray, r: float):
    """Angular sweep around anchor ``i``.

    A center on the circle of radius ``r`` around ``pts[i]`` at angle t covers
    neighbour j iff t is within ``alpha_j = acos(d_j / 2r)`` of the direction
    to j.  Returns, for every interval start (a candidate pair center), the
    neighbour index and the number of points covered there, anchor included.
    """
    v = pts[nbrs] - pts[i]
    d = np.hypot(v[:, 0], v[:, 1])
    phi = np.arctan2(v[:, 1], v[:, 0])
    alpha = np.arccos(np.clip(d / (2 * r), -1.0, 1.0)) + ANGLE_EPS
    start = np.mod(phi - alpha, 2 * np.pi)
    end = start + 2 * alpha
    m = len(nbrs)
    # copies shifted one lap back so intervals wrapping past 2*pi are open
    # at the start of the first lap
    angles = np.concatenate([start, end, start - 2 * np.pi, end - 2 * np.pi])
    kinds = np.concatenate([np.zeros(m), np.ones(m), np.zeros(m), np.ones(m)])
    which = np.concatenate([np.arange(m)] * 4)
    order = np.lexsort((kinds, angles))
    depth = np.cumsum(np.where(kinds[order] == 0, 1, -1))
    sel = np.nonzero((kinds[order] == 0) & (angles[order] >= 0))[0]
    counts = depth[sel] + 1
    return which[order][sel], counts


def _covered(tree: cKDTree, centers: np.ndarray, r: float) -> list[list[int]]:
    return tree.query_ball_point(centers, r + COVER_EPS)


def best_disk(positions: Sequence[Sequence[float]], r_max: float,
              ids: Sequence[int] | None = None):
    """Center of a radius-``r_max`` disk covering the most points.

    Candidate centers are every point and, for each pair closer than
    ``2 * r_max``, the two circle centers through the pair.  Among the
    maximum-count candidates the one whose covered set has the smallest
    enclosing circle wins, then the lexicographically smallest center.

    Returns ``(center, covered_ids)``; an empty input gives ``((0, 0), set())``.
    """
    if not r_max > 0:
        raise DomainError(f"r_max must be > 0, got {r_max}")
    pts = np.asarray(positions, dtype=float).reshape(-1, 2)
    n = len(pts)
    ids = list(range(n)) if ids is None else list(ids)
    if n == 0:
        return (0.0, 0.0), set()

    tree = cKDTree(pts)
    own = np.asarray(tree.query_ball_point(pts, r_max + COVER_EPS, return_length=True))

    # (anchor, neighbour) pairs with their sweep counts
    pair_anchor, pair_nbr, pair_count = [], [], []
    near = tree.query_ball_point(pts, 2 * r_max)
    for i in range(n):
        nb = np.array([j for j in near[i] if j != i
                       and (pts[j, 0] != pts[i, 0] or pts[j, 1] != pts[i, 1])], dtype=int)
        if nb.size == 0:
            continue
        which, counts = _sweep_depths(pts, i, nb, r_max)
        # coincident copies of the anchor are always covered
        dup = len(near[i]) - 1 - nb.size
        pair_anchor.append(np.full(which.size, i))
        pair_nbr.append(nb[which])
        pair_count.append(counts + dup)

    if pair_anchor:
        pa = np.concatenate(pair_anchor)
        pn = np.concatenate(pair_nbr)
        pc = np.concatenate(pair_count)
    else:
        pa = pn = pc = np.zeros(0, dtype=int)

    threshold = int(max(own.max(), pc.max() if pc.size else 0))
    while True:
        cand = [pts[own >= threshold]]
        sel = pc >= threshold
        if np.any(sel):
            a, b = pts[pa[sel]], pts[pn[sel]]
            cand.append(_pair_centers(a, b, r_max))
        centers = np.unique(np.vstack(cand), axis=0)
        covered = _covered(tree, centers, r_max)
        sizes = np.array([len(c) for c in covered])
        best = int(sizes.max())
        if best >= threshold:
            break
        # sweep slack overestimated every candidate at this level
        threshold = best

    best_key = None
    mec_cache: dict[frozenset, float] = {}
    for c, cov in zip(centers, covered):
        if len(cov) != best:
            continue
        key_set = frozenset(cov)
        if key_set not in mec_cache:
            mec_cache[key_set] = min_enclosing_circle(pts[sorted(cov)])[1]
        key = (round(mec_cache[key_set], 9), float(c[0]), float(c[1]))
        if best_key is None or key < best_key[0]:
            best_key = (key, cov)
    (_, cx, cy), cov = best_key
    return (cx, cy), {ids[k] for k in cov}


def _pair_centers(a: np.ndarray, b: np.ndarray, r: float) -> np.ndarray:
    """Both radius-r circle centers through each row pair (a_k, b_k), shape (2m, 2)."""
    mid = 0.5 * (a + b)
    v = b - a
    d = np.hypot(v[:, 0], v[:, 1])
    h = np.sqrt(np.maximum(r * r - 0.25 * d * d, 0.0))
    nx, ny = -v[:, 1] / d, v[:, 0] / d
    return np.vstack([np.column_stack([mid[:, 0] + h * nx, mid[:, 1] + h * ny]),
                      np.column_stack([mid[:, 0] - h * nx, mid[:, 1] - h * ny])])

"""Planar polyline helpers: exact segment intersection and simplicity checks."""
from __future__ import annotations

import numpy as np

__all__ = ["dedupe", "self_intersections", "is_simple"]


def dedupe(points: np.ndarray, closed: bool, rtol: float = 1e-12) -> np.ndarray:
    """Drop consecutive (and, for closed curves, wrap-around) repeated points."""
    pts = np.asarray(points, dtype=float)
    if len(pts) < 2:
        return pts
    scale = max(1.0, float(np.max(np.abs(pts))))
    keep = [0]
    for k in range(1, len(pts)):
        if np.max(np.abs(pts[k] - pts[keep[-1]])) > rtol * scale:
            keep.append(k)
    pts = pts[keep]
    if closed and len(pts) > 1 and np.max(np.abs(pts[-1] - pts[0])) <= rtol * scale:
        pts = pts[:-1]
    return pts


def _orient(ax, ay, bx, by, cx, cy):
    return np.sign((bx - ax) * (cy - ay) - (by - ay) * (cx - ax))


def _on_segment(ax, ay, bx, by, cx, cy):
    return (np.minimum(ax, bx) <= cx) & (cx <= np.maximum(ax, bx)) & \
           (np.minimum(ay, by) <= cy) & (cy <= np.maximum(ay, by))


def self_intersections(points, closed: bool = True) -> list[tuple[int, int]]:
    """Index pairs of non-adjacent segments that touch or cross.

    Segments sharing an endpoint in the sequence are exempt.  ``points`` is an
    ``(m, 2)`` array; consecutive duplicates are removed first.
    """
    pts = dedupe(points, closed)
    m = len(pts)
    if m < 4:
        return []
    starts = pts
    ends = np.roll(pts, -1, axis=0) if closed else pts[1:]
    starts = starts if closed else pts[:-1]
    ns = len(starts)
    i, j = np.triu_indices(ns, k=2)
    if closed:
        adjacent = (i == 0) & (j == ns - 1)
        i, j = i[~adjacent], j[~adjacent]
    p1, p2 = starts[i], ends[i]
    q1, q2 = starts[j], ends[j]
    o1 = _orient(p1[:, 0], p1[:, 1], p2[:, 0], p2[:, 1], q1[:, 0], q1[:, 1])
    o2 = _orient(p1[:, 0], p1[:, 1], p2[:, 0], p2[:, 1], q2[:, 0], q2[:, 1])
    o3 = _orient(q1[:, 0], q1[:, 1], q2[:, 0], q2[:, 1], p1[:, 0], p1[:, 1])
    o4 = _orient(q1[:, 0], q1[:, 1], q2[:, 0], q2[:, 1], p2[:, 0], p2[:, 1])
    proper = (o1 * o2 < 0) & (o3 * o4 < 0)
    touch = (
        ((o1 == 0) & _on_segment(p1[:, 0], p1[:, 1], p2[:, 0], p2[:, 1], q1[:, 0], q1[:, 1]))
        | ((o2 == 0) & _on_segment(p1[:, 0], p1[:, 1], p2[:, 0], p2[:, 1], q2[:, 0], q2[:, 1]))
        | ((o3 == 0) & _on_segment(q1[:, 0], q1[:, 1], q2[:, 0], q2[:, 1], p1[:, 0], p1[:, 1]))
        | ((o4 == 0) & _on_segment(q1[:, 0], q1[:, 1], q2[:, 0], q2[:, 1], p2[:, 0], p2[:, 1]))
    )
    hit = proper | touch
    return list(zip(i[hit].tolist(), j[hit].tolist()))


def is_simple(points, closed: bool = True) -> bool:
    return not self_intersections(points, closed)

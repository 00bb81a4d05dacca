"""Point-to-polyline buffers: which road segments serve which school."""

from __future__ import annotations

import warnings

import numpy as np

from ..domain import DEFAULT_RADIUS_M, Neighborhood, Point, School
from ..errors import EmptyNeighborhoodWarning
from .io import RoadNetwork


def point_segment_distance(p: Point, a: Point, b: Point) -> float:
    """Euclidean distance from p to the closed segment a-b."""
    px, py = p
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    denom = dx * dx + dy * dy
    if denom == 0.0:
        return float(np.hypot(px - ax, py - ay))
    t = ((px - ax) * dx + (py - ay) * dy) / denom
    t = min(1.0, max(0.0, t))
    cx, cy = ax + t * dx, ay + t * dy
    return float(np.hypot(px - cx, py - cy))


def point_polyline_distance(p: Point, polyline: tuple[Point, ...]) -> float:
    return min(
        point_segment_distance(p, a, b) for a, b in zip(polyline, polyline[1:])
    )


class _PieceIndex:
    """Flattened consecutive-vertex pieces of every segment, for vector math."""

    def __init__(self, network: RoadNetwork):
        starts, ends, owner = [], [], []
        self.segment_ids = [s.id for s in network.segments]
        for si, seg in enumerate(network.segments):
            for a, b in zip(seg.polyline, seg.polyline[1:]):
                starts.append(a)
                ends.append(b)
                owner.append(si)
        self.a = np.asarray(starts, dtype=float)
        self.b = np.asarray(ends, dtype=float)
        self.owner = np.asarray(owner, dtype=int)
        self.n_segments = len(network.segments)

    def min_distance_per_segment(self, p: Point) -> np.ndarray:
        ab = self.b - self.a
        ap = np.asarray(p, dtype=float) - self.a
        denom = np.einsum("ij,ij->i", ab, ab)
        t = np.divide(
            np.einsum("ij,ij->i", ap, ab),
            denom,
            out=np.zeros_like(denom),
            where=denom > 0,
        )
        t = np.clip(t, 0.0, 1.0)
        closest = self.a + t[:, None] * ab
        d = np.hypot(*(np.asarray(p) - closest).T)
        out = np.full(self.n_segments, np.inf)
        np.minimum.at(out, self.owner, d)
        return out


def build_neighborhoods(
    schools: list[School],
    network: RoadNetwork,
    radius_m: float = DEFAULT_RADIUS_M,
) -> list[Neighborhood]:
    """Collect, per school, every segment within radius_m of its location.

    Membership is inclusive (distance <= radius). A school with no road in
    range yields an empty neighborhood and an EmptyNeighborhoodWarning.
    """
    index = _PieceIndex(network)
    out = []
    for school in schools:
        d = index.min_distance_per_segment(school.location)
        member = [
            index.segment_ids[i] for i in range(len(d)) if d[i] <= radius_m
        ]
        if not member:
            warnings.warn(
                f"school {school.id!r} has no road within {radius_m} m",
                EmptyNeighborhoodWarning,
                stacklevel=2,
            )
        out.append(
            Neighborhood(
                school_id=school.id, road_ids=frozenset(member), radius_m=radius_m
            )
        )
    return out

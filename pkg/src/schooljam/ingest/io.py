"""File loaders: road GeoJSON, school/observation/layer CSVs.

Road networks snap segment endpoints within a small tolerance so that
digitization noise does not split intersections.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

import numpy as np
import pandas as pd

from ..domain import Point, RoadCategory, RoadSegment, School
from ..errors import MissingLayer, ParseError, UnknownCategory, ValidationError

DEFAULT_SNAP_TOLERANCE_M = 0.5


@dataclass
class RoadNetwork:
    """Segments plus the snapped node graph they induce."""

    segments: tuple[RoadSegment, ...]
    nodes: tuple[Point, ...]
    # one (u, v, segment_id) triple per segment, indices into nodes
    edges: tuple[tuple[int, int, str], ...]

    def __post_init__(self):
        self.by_id = {s.id: s for s in self.segments}

    def categories(self) -> dict[str, RoadCategory]:
        return {s.id: s.category for s in self.segments}

    def degrees(self) -> np.ndarray:
        deg = np.zeros(len(self.nodes), dtype=int)
        for u, v, _ in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    def to_networkx(self):
        import networkx as nx

        g = nx.MultiGraph()
        g.add_nodes_from(range(len(self.nodes)))
        for u, v, sid in self.edges:
            g.add_edge(u, v, key=sid, length=self.by_id[sid].length)
        return g


class _NodeSnapper:
    """Merges endpoints within a Euclidean tolerance using a cell grid."""

    def __init__(self, tol: float):
        self.tol = tol
        self.cell = max(tol, 1e-9)
        self.nodes: list[Point] = []
        self.grid: dict[tuple[int, int], list[int]] = {}

    def _key(self, p: Point) -> tuple[int, int]:
        return (math.floor(p[0] / self.cell), math.floor(p[1] / self.cell))

    def lookup(self, p: Point) -> int:
        kx, ky = self._key(p)
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for idx in self.grid.get((kx + dx, ky + dy), ()):
                    q = self.nodes[idx]
                    if math.hypot(p[0] - q[0], p[1] - q[1]) <= self.tol:
                        return idx
        idx = len(self.nodes)
        self.nodes.append(p)
        self.grid.setdefault((kx, ky), []).append(idx)
        return idx


def load_roads(
    path: str | Path, snap_tolerance_m: float = DEFAULT_SNAP_TOLERANCE_M
) -> RoadNetwork:
    """Parse a GeoJSON FeatureCollection of LineString road segments.

    Each feature needs properties {id, category}; category must be one of
    ordinary / main / express. Endpoints closer than the snap tolerance are
    merged into a single graph node.
    """
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not valid JSON ({exc})") from exc

    if doc.get("type") != "FeatureCollection" or "features" not in doc:
        raise ParseError(f"{path}: expected a FeatureCollection")

    segments = []
    seen_ids = set()
    for i, feat in enumerate(doc["features"]):
        geom = feat.get("geometry") or {}
        if geom.get("type") != "LineString":
            raise ParseError(f"{path}: feature {i} is not a LineString")
        coords = geom.get("coordinates")
        if not isinstance(coords, list) or len(coords) < 2:
            raise ParseError(f"{path}: feature {i} needs >= 2 coordinates")
        try:
            polyline = tuple((float(x), float(y)) for x, y in coords)
        except (TypeError, ValueError) as exc:
            raise ParseError(f"{path}: feature {i} has non-numeric coordinates") from exc
        props = feat.get("properties") or {}
        if "id" not in props:
            raise ParseError(f"{path}: feature {i} missing properties.id")
        sid = str(props["id"])
        if sid in seen_ids:
            raise ParseError(f"{path}: duplicate segment id {sid!r}")
        seen_ids.add(sid)
        cat_raw = props.get("category")
        try:
            category = RoadCategory(cat_raw)
        except ValueError:
            raise UnknownCategory(
                f"{path}: segment {sid!r} has unknown category {cat_raw!r}"
            ) from None
        segments.append(RoadSegment(id=sid, category=category, polyline=polyline))

    snapper = _NodeSnapper(snap_tolerance_m)
    edges = []
    for seg in segments:
        a, b = seg.endpoints()
        edges.append((snapper.lookup(a), snapper.lookup(b), seg.id))

    return RoadNetwork(
        segments=tuple(segments),
        nodes=tuple(snapper.nodes),
        edges=tuple(edges),
    )


def load_schools(path: str | Path, center: Point) -> list[School]:
    """CSV with header id,x,y; polar coordinates derive from the center."""
    df = pd.read_csv(path)
    required = {"id", "x", "y"}
    if not required.issubset(df.columns):
        raise ParseError(f"{path}: expected columns id,x,y")
    schools = []
    ids = set()
    for row in df.itertuples(index=False):
        sid = str(row.id)
        if sid in ids:
            raise ParseError(f"{path}: duplicate school id {sid!r}")
        ids.add(sid)
        schools.append(
            School.from_location(sid, (float(row.x), float(row.y)), center)
        )
    return schools


def load_observations(
    path: str | Path, network: RoadNetwork | None = None
) -> pd.DataFrame:
    """CSV with header road_id,timestamp,level (ISO-8601 local timestamps).

    Returns a DataFrame with parsed datetimes and integer levels 1..4.
    When a network is given, every road_id must resolve in it.
    """
    df = pd.read_csv(path, dtype={"road_id": str})
    required = {"road_id", "timestamp", "level"}
    if not required.issubset(df.columns):
        raise ParseError(f"{path}: expected columns road_id,timestamp,level")
    try:
        df["timestamp"] = df["timestamp"].map(datetime.fromisoformat)
    except ValueError as exc:
        raise ParseError(f"{path}: bad timestamp ({exc})") from exc
    levels = pd.to_numeric(df["level"], errors="coerce")
    if levels.isna().any() or not ((levels >= 1) & (levels <= 4)).all():
        raise ParseError(f"{path}: levels must be integers in 1..4")
    if not (levels == levels.astype(int)).all():
        raise ParseError(f"{path}: levels must be integers in 1..4")
    df["level"] = levels.astype(int)
    if network is not None:
        unknown = set(df["road_id"]) - set(network.by_id)
        if unknown:
            raise ValidationError(
                f"{path}: observations reference unknown roads {sorted(unknown)[:5]}"
            )
    return df


# ---------------------------------------------------------------------------
# per-school feature layers

LANDUSE_CATEGORIES = frozenset(
    {"green", "public", "commercial", "educational", "industrial"}
)


@dataclass
class FeatureLayers:
    """School-keyed raw layers behind the threshold-coded features."""

    poi: dict[str, dict[str, float]] = field(default_factory=dict)
    buildings: dict[str, dict[str, float]] = field(default_factory=dict)
    landuse: dict[str, frozenset[str]] = field(default_factory=dict)
    population: dict[str, float] = field(default_factory=dict)
    syntax: dict[str, tuple[float, float]] = field(default_factory=dict)

    def require(self, layer: str, school_id: str):
        table = getattr(self, layer)
        if school_id not in table:
            raise MissingLayer(f"layer {layer!r} has no record for school {school_id!r}")
        return table[school_id]


def load_layers(directory: str | Path) -> FeatureLayers:
    """Read the five layer CSVs from a directory (poi/buildings/landuse/population/syntax)."""
    directory = Path(directory)
    layers = FeatureLayers()

    poi = pd.read_csv(directory / "poi.csv", dtype={"school_id": str})
    for row in poi.itertuples(index=False):
        layers.poi[row.school_id] = {
            "bus_stop": float(row.bus_stop),
            "subway": float(row.subway),
            "parking_lot": float(row.parking_lot),
        }

    bld = pd.read_csv(directory / "buildings.csv", dtype={"school_id": str})
    for row in bld.itertuples(index=False):
        layers.buildings[row.school_id] = {
            "pct_old": float(row.pct_old),
            "pct_new": float(row.pct_new),
            "mean_stories": float(row.mean_stories),
            "pct_high": float(row.pct_high),
            "pct_low": float(row.pct_low),
        }

    lu = pd.read_csv(directory / "landuse.csv", dtype={"school_id": str, "categories": str})
    for row in lu.itertuples(index=False):
        cats = frozenset(c for c in str(row.categories).split(";") if c)
        unknown = cats - LANDUSE_CATEGORIES
        if unknown:
            raise ParseError(f"landuse.csv: unknown categories {sorted(unknown)}")
        layers.landuse[row.school_id] = cats

    pop = pd.read_csv(directory / "population.csv", dtype={"school_id": str})
    for row in pop.itertuples(index=False):
        layers.population[row.school_id] = float(row.signaling_count)

    syn = pd.read_csv(directory / "syntax.csv", dtype={"school_id": str})
    if not {"school_id", "integration", "choice"}.issubset(syn.columns):
        raise ParseError("syntax.csv: expected columns school_id,integration,choice")
    for row in syn.itertuples(index=False):
        layers.syntax[row.school_id] = (float(row.integration), float(row.choice))

    return layers

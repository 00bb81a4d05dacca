"""Threshold-coded built-environment features and column normalization."""

from __future__ import annotations

import warnings

import numpy as np

from ..domain import FeatureVector, Neighborhood, School
from ..errors import ConstantColumn, DisconnectedNeighborhoodWarning
from .io import FeatureLayers, LANDUSE_CATEGORIES, RoadNetwork


def zscore(
    matrix: np.ndarray, columns: list[str] | None = None
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Standardize columns to zero mean, unit population std.

    Returns (normalized, means, stds). Raises ConstantColumn naming the
    first zero-variance column.
    """
    X = np.asarray(matrix, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    means = X.mean(axis=0)
    stds = X.std(axis=0)  # population std, ddof=0
    for j, s in enumerate(stds):
        if s == 0.0 or not np.isfinite(s):
            name = columns[j] if columns else f"column {j}"
            raise ConstantColumn(f"{name} has zero variance")
    return (X - means) / stds, means, stds


def apply_zscore(
    matrix: np.ndarray, means: np.ndarray, stds: np.ndarray
) -> np.ndarray:
    return (np.asarray(matrix, dtype=float) - means) / stds


# ---------------------------------------------------------------------------
# street-network metrics

def compute_edge_betweenness(network: RoadNetwork) -> dict[str, float]:
    """Length-weighted edge betweenness of every segment on the full graph.

    Normalized form: the fraction of all-pairs shortest paths that traverse
    the edge. Computed once citywide and shared by every neighborhood.
    """
    import networkx as nx

    g = network.to_networkx()
    bc = nx.edge_betweenness_centrality(g, weight="length", normalized=True)
    out = {}
    for (u, v, sid), value in bc.items():
        out[sid] = float(value)
    # segments can collapse onto the same snapped node pair; make sure all appear
    for seg in network.segments:
        out.setdefault(seg.id, 0.0)
    return out


def neighborhood_graph_metrics(
    network: RoadNetwork,
    nbhd: Neighborhood,
    school: School,
    betweenness: dict[str, float],
) -> tuple[float, int]:
    """(mean member-edge betweenness, intersection count inside the buffer).

    Intersections are graph nodes of degree >= 3 within radius_m of the
    school. Emits a warning when the network is disconnected, since path
    counts then only cover reachable pairs.
    """
    import networkx as nx

    g = network.to_networkx()
    if g.number_of_nodes() and not nx.is_connected(g):
        warnings.warn(
            "road network is disconnected; betweenness covers reachable pairs only",
            DisconnectedNeighborhoodWarning,
            stacklevel=2,
        )
    member = sorted(nbhd.road_ids)
    mean_bc = (
        float(np.mean([betweenness[sid] for sid in member])) if member else 0.0
    )
    deg = network.degrees()
    sx, sy = school.location
    n_intersections = 0
    for idx, (nx_, ny_) in enumerate(network.nodes):
        if deg[idx] >= 3 and np.hypot(nx_ - sx, ny_ - sy) <= nbhd.radius_m:
            n_intersections += 1
    return mean_bc, n_intersections


# ---------------------------------------------------------------------------
# threshold coding

def count_school_neighbors(
    school: School, schools: list[School], radius_m: float
) -> int:
    sx, sy = school.location
    n = 0
    for other in schools:
        if other.id == school.id:
            continue
        ox, oy = other.location
        if np.hypot(ox - sx, oy - sy) <= radius_m:
            n += 1
    return n


def derive_physical_features(
    school: School,
    nbhd: Neighborhood,
    layers: FeatureLayers,
    *,
    other_schools_in_buffer: int,
    betweeness: float,
    intersecton: int,
) -> dict[str, float]:
    """Code the 15 non-scenescape features for one school.

    Threshold rules (raw counts to dummies):
      school_mix      another school inside the buffer
      population      signaling count > 10,000
      bus_stop        count > 5
      subway          count >= 1
      parking_lot     count > 50
      building_age    |pct_old - pct_new| < 10
      building_height mean stories > 6
      building_mix    |pct_high - pct_low| < 30
      landuse_mix     all 5 non-residential land-use categories present
    """
    poi = layers.require("poi", school.id)
    bld = layers.require("buildings", school.id)
    landuse = layers.require("landuse", school.id)
    population = layers.require("population", school.id)
    integration, choice = layers.require("syntax", school.id)

    return {
        "school_mix": 1.0 if other_schools_in_buffer >= 1 else 0.0,
        "angle": school.angle_deg,
        "distance": school.distance_km,
        "population": 1.0 if population > 10_000 else 0.0,
        "bus_stop": 1.0 if poi["bus_stop"] > 5 else 0.0,
        "subway": 1.0 if poi["subway"] >= 1 else 0.0,
        "parking_lot": 1.0 if poi["parking_lot"] > 50 else 0.0,
        "betweeness": float(betweeness),
        "integration": float(integration),
        "choice": float(choice),
        "intersecton": float(intersecton),
        "building_age": 1.0 if abs(bld["pct_old"] - bld["pct_new"]) < 10.0 else 0.0,
        "building_height": 1.0 if bld["mean_stories"] > 6.0 else 0.0,
        "building_mix": 1.0 if abs(bld["pct_high"] - bld["pct_low"]) < 30.0 else 0.0,
        "landuse_mix": 1.0 if landuse >= LANDUSE_CATEGORIES else 0.0,
    }


def assemble_feature_vector(
    physical: dict[str, float], scene_shares: dict[str, float]
) -> FeatureVector:
    merged = dict(physical)
    merged.update(scene_shares)
    return FeatureVector.from_mapping(merged)

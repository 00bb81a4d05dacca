"""Synthetic city with a fully known data-generating process.

A square grid of roads, uniformly scattered schools, randomized raw layers,
and streetscape vectors with planted cluster structure. Congestion levels
come from a known ordered-logit process on the calendar dummies, and the
per-school congestion frequency is a known linear function of the measured
features plus noise built to hit the target R^2 exactly.

The probability arithmetic here is deliberately self-contained (plain math
on purpose, no imports from the estimation modules), so a fit that recovers
these parameters is confirmed by an independent code path.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from .domain import FEATURE_NAMES, Point, RoadCategory, RoadSegment, School
from .errors import InvalidParams, SpecInfeasible
from .ingest.io import FeatureLayers, RoadNetwork
from .ingest.timeslots import CalendarConfig, label_timeslot
from .scenescape import (
    N_SCENE_LABELS,
    SceneTable,
    load_scene_mask,
    sample_points,
)

#: linear-model coefficients on z-scored features, congestion-frequency
#: (fraction) units; anything not listed is planted at zero
DEFAULT_M2_COEFS: dict[str, float] = {
    "angle": -0.0090,
    "distance": -0.0150,
    "school_mix": 0.0060,
    "bus_stop": 0.0065,
    "betweeness": 0.0140,
    "building_age": 0.0060,
    "building_height": 0.0065,
    "UFB": -0.0140,
    "FBH": 0.0180,
    "RH": -0.0100,
    "DBH": 0.0120,
    "ECH": 0.0090,
    "SPH": 0.0100,
}

#: ordered-logit splits: thresholds and (work, school, exam) rows per split
DEFAULT_ALPHAS: tuple[float, ...] = (-1.0, -2.0, -3.2)
DEFAULT_BETA_ROWS: tuple[tuple[float, float, float], ...] = (
    (0.30, 0.45, 0.12),
    (0.35, 0.40, 0.10),
    (0.40, 0.35, 0.08),
)

_ANCHOR_CONCENTRATION = 0.9  # mass an anchor puts on its own label chunk
_ANCHOR_MIX = 0.85  # anchor weight when blending with per-point noise
_CLUSTER_WEIGHTS = {
    2: (0.60, 0.40),
    3: (0.45, 0.33, 0.22),
    4: (0.40, 0.27, 0.20, 0.13),
}
#: how strongly streetscape cluster weights drift across the city. Each road
#: tilts its category's weights by exp(gain * position) where position runs
#: -1..1 along the map diagonal, so different corners favor different
#: scenescapes and neighborhood share profiles genuinely differ by school.
_SCENE_TILT = 1.4
#: line shares of the three road categories (express, main, the rest ordinary)
_EXPRESS_LINE_SHARE = 1.0 / 7.0
_MAIN_LINE_SHARE = 2.0 / 7.0


@dataclass(frozen=True)
class SynthSpec:
    """Everything the generator plants, structure and parameters alike."""

    grid_nodes: int = 28
    cell_m: float = 700.0
    n_schools: int = 846
    alphas: tuple[float, ...] = DEFAULT_ALPHAS
    beta_rows: tuple[tuple[float, float, float], ...] = DEFAULT_BETA_ROWS
    m2_intercept: float = 0.40
    m2_coefs: Mapping[str, float] = field(
        default_factory=lambda: dict(DEFAULT_M2_COEFS)
    )
    target_r2: float = 0.45

    def __post_init__(self):
        if self.grid_nodes < 4:
            raise SpecInfeasible(
                "grid needs at least 4 nodes per side to host all road categories"
            )
        if self.cell_m <= 0:
            raise SpecInfeasible("cell size must be positive")
        if self.n_schools < 1:
            raise SpecInfeasible("need at least one school")
        if len(self.beta_rows) != len(self.alphas):
            raise InvalidParams("one (work, school, exam) row per threshold required")
        if any(len(row) != 3 for row in self.beta_rows):
            raise InvalidParams("each split row must hold (work, school, exam)")
        if list(self.alphas) != sorted(self.alphas, reverse=True):
            raise InvalidParams("thresholds must decrease strictly")
        unknown = set(self.m2_coefs) - set(FEATURE_NAMES)
        if unknown:
            raise InvalidParams(f"unknown feature names: {sorted(unknown)}")
        if not (0.0 < self.target_r2 <= 1.0):
            raise InvalidParams("target_r2 must lie in (0, 1]")

    @property
    def side_m(self) -> float:
        return (self.grid_nodes - 1) * self.cell_m

    @property
    def center(self) -> Point:
        return (self.side_m / 2.0, self.side_m / 2.0)

    def m2_beta_vector(self) -> np.ndarray:
        return np.array(
            [float(self.m2_coefs.get(name, 0.0)) for name in FEATURE_NAMES]
        )


@dataclass
class SynthCity:
    spec: SynthSpec
    seed: int
    network: RoadNetwork
    schools: list[School]
    center: Point
    layers: FeatureLayers
    scene_table: SceneTable


# ---------------------------------------------------------------------------
# road grid

def _line_categories(
    n_lines: int, rng: np.random.Generator
) -> list[RoadCategory]:
    """Seeded category per full grid line. Roughly 1/7 of lines are express
    and 2/7 main, placed by a random permutation rather than a fixed stride
    so every neighborhood sees its own mix of road types."""
    n_express = max(1, round(n_lines * _EXPRESS_LINE_SHARE))
    n_main = max(1, round(n_lines * _MAIN_LINE_SHARE))
    cats = [RoadCategory.ORDINARY] * n_lines
    order = rng.permutation(n_lines)
    for idx in order[:n_express]:
        cats[idx] = RoadCategory.EXPRESS
    for idx in order[n_express : n_express + n_main]:
        cats[idx] = RoadCategory.MAIN
    return cats


#: node displacement as a fraction of the cell size. Uneven blocks give the
#: street graph distinct segment lengths, so shortest paths stop tying along
#: every staircase of a perfect lattice and betweenness develops corridors
#: instead of tracking distance-to-center one for one.
_NODE_JITTER = 0.15


def _grid_network(spec: SynthSpec, rng: np.random.Generator) -> RoadNetwork:
    n, cell = spec.grid_nodes, spec.cell_m
    offsets = rng.uniform(-_NODE_JITTER * cell, _NODE_JITTER * cell, (n * n, 2))
    nodes: list[Point] = [
        (i * cell + float(offsets[j * n + i, 0]),
         j * cell + float(offsets[j * n + i, 1]))
        for j in range(n) for i in range(n)
    ]
    node_at = lambda i, j: j * n + i  # noqa: E731
    line_cats = _line_categories(2 * n, rng)  # rows first, then columns
    segments: list[RoadSegment] = []
    edges: list[tuple[int, int, str]] = []
    for j in range(n):  # horizontal lines, one per row
        cat = line_cats[j]
        for i in range(n - 1):
            sid = f"H{j:02d}_{i:02d}"
            poly = (nodes[node_at(i, j)], nodes[node_at(i + 1, j)])
            segments.append(RoadSegment(id=sid, category=cat, polyline=poly))
            edges.append((node_at(i, j), node_at(i + 1, j), sid))
    for i in range(n):  # vertical lines, one per column
        cat = line_cats[n + i]
        for j in range(n - 1):
            sid = f"V{i:02d}_{j:02d}"
            poly = (nodes[node_at(i, j)], nodes[node_at(i, j + 1)])
            segments.append(RoadSegment(id=sid, category=cat, polyline=poly))
            edges.append((node_at(i, j), node_at(i, j + 1), sid))
    return RoadNetwork(
        segments=tuple(segments), nodes=tuple(nodes), edges=tuple(edges)
    )


# ---------------------------------------------------------------------------
# schools and raw layers

def _gen_schools(spec: SynthSpec, rng: np.random.Generator) -> list[School]:
    xy = rng.uniform(0.0, spec.side_m, size=(spec.n_schools, 2))
    return [
        School.from_location(f"S{i + 1:04d}", (float(x), float(y)), spec.center)
        for i, (x, y) in enumerate(xy)
    ]


def _gen_layers(
    schools: list[School], rngs: dict[str, np.random.Generator]
) -> FeatureLayers:
    layers = FeatureLayers()
    cats = sorted(["green", "public", "commercial", "educational", "industrial"])
    for s in schools:
        r = rngs["poi"]
        layers.poi[s.id] = {
            "bus_stop": float(r.poisson(5.5)),
            "subway": 1.0 if r.random() < 0.35 else 0.0,
            "parking_lot": float(r.poisson(50.0)),
        }
        r = rngs["buildings"]
        layers.buildings[s.id] = {
            "pct_old": float(r.uniform(0.0, 60.0)),
            "pct_new": float(r.uniform(0.0, 60.0)),
            "mean_stories": float(r.uniform(2.0, 12.0)),
            "pct_high": float(r.uniform(0.0, 50.0)),
            "pct_low": float(r.uniform(0.0, 50.0)),
        }
        r = rngs["landuse"]
        present = frozenset(c for c in cats if r.random() < 0.85)
        layers.landuse[s.id] = present
        r = rngs["population"]
        layers.population[s.id] = float(r.lognormal(math.log(10_000.0), 0.5))
        r = rngs["syntax"]
        layers.syntax[s.id] = (
            float(r.uniform(0.2, 2.0)),
            float(r.uniform(0.0, 1.0)),
        )
    return layers


# ---------------------------------------------------------------------------
# streetscape vectors with planted cluster structure

def _anchor_bank(
    mask: np.ndarray, rng: np.random.Generator
) -> dict[RoadCategory, np.ndarray]:
    """10 anchor distributions over the 365 labels, each concentrating most
    of its mass on a disjoint chunk of masked labels. Ordinary roads get 4
    anchors, main and express 3 each."""
    order = (
        (RoadCategory.ORDINARY, 4),
        (RoadCategory.MAIN, 3),
        (RoadCategory.EXPRESS, 3),
    )
    chunk = len(mask) // 10
    bank: dict[RoadCategory, np.ndarray] = {}
    slot = 0
    for cat, k in order:
        anchors = np.empty((k, N_SCENE_LABELS))
        for a in range(k):
            base = np.full(N_SCENE_LABELS, (1.0 - _ANCHOR_CONCENTRATION) / N_SCENE_LABELS)
            labels = mask[slot * chunk : (slot + 1) * chunk]
            base[labels] += _ANCHOR_CONCENTRATION * rng.dirichlet(
                np.ones(len(labels))
            )
            anchors[a] = base
            slot += 1
        bank[cat] = anchors
    return bank


def _tilted_weights(base: tuple[float, ...], position: float) -> np.ndarray:
    """Category cluster weights shifted by map position in -1..1. Gains are
    spread symmetrically so each corner of the city leans toward a different
    scenescape."""
    k = len(base)
    gains = np.linspace(1.0, -1.0, k) * _SCENE_TILT
    w = np.asarray(base) * np.exp(gains * position)
    return w / w.sum()


def _gen_scene_table(
    spec: SynthSpec,
    network: RoadNetwork,
    mask: np.ndarray,
    rng_anchor: np.random.Generator,
    rng_assign: np.random.Generator,
    rng_jitter: np.random.Generator,
) -> SceneTable:
    xy, road_ids = sample_points(network)
    n = len(road_ids)
    bank = _anchor_bank(mask, rng_anchor)
    cat_by_road = network.categories()

    # one scenescape per road: a street keeps a single visual character,
    # sampled from its category's weights tilted by where the street sits
    cluster_of: dict[str, int] = {}
    for seg in network.segments:
        anchors = bank[seg.category]
        mx = sum(p[0] for p in seg.polyline) / len(seg.polyline)
        my = sum(p[1] for p in seg.polyline) / len(seg.polyline)
        position = min(1.0, max(-1.0, (mx + my) / spec.side_m - 1.0))
        weights = _tilted_weights(
            _CLUSTER_WEIGHTS[len(anchors)], position
        )
        cluster_of[seg.id] = int(
            np.searchsorted(np.cumsum(weights), rng_assign.random())
        )

    probs = np.empty((n, N_SCENE_LABELS))
    for i in range(n):
        rid = str(road_ids[i])
        anchor = bank[cat_by_road[rid]][cluster_of[rid]]
        v = _ANCHOR_MIX * anchor + (1.0 - _ANCHOR_MIX) * rng_jitter.dirichlet(
            np.ones(N_SCENE_LABELS)
        )
        probs[i] = v / v.sum()
    return SceneTable(
        road_ids=np.asarray(road_ids, dtype=object),
        xy=np.asarray(xy, dtype=float),
        probs=probs,
        mask=mask,
    )


def gen_city(spec: SynthSpec, seed: int) -> SynthCity:
    """Deterministic city bundle for a seed: grid roads, schools, layers,
    and streetscape vectors at 50 m intervals."""
    master = np.random.SeedSequence(seed)
    keys = (
        "roads",
        "schools",
        "poi",
        "buildings",
        "landuse",
        "population",
        "syntax",
        "scene_anchor",
        "scene_assign",
        "scene_jitter",
    )
    children = master.spawn(len(keys))
    rngs = {k: np.random.default_rng(c) for k, c in zip(keys, children)}

    network = _grid_network(spec, rngs["roads"])
    schools = _gen_schools(spec, rngs["schools"])
    layers = _gen_layers(
        schools,
        {k: rngs[k] for k in ("poi", "buildings", "landuse", "population", "syntax")},
    )
    mask = load_scene_mask()
    scene_table = _gen_scene_table(
        spec,
        network,
        mask,
        rngs["scene_anchor"],
        rngs["scene_assign"],
        rngs["scene_jitter"],
    )
    return SynthCity(
        spec=spec,
        seed=seed,
        network=network,
        schools=schools,
        center=spec.center,
        layers=layers,
        scene_table=scene_table,
    )


# ---------------------------------------------------------------------------
# congestion levels from the planted ordinal process

def planted_level_probs(
    spec: SynthSpec, dummies: tuple[int, int, int]
) -> list[float]:
    """Category probabilities at one dummy combination, plain-math route."""
    gs = []
    for a, row in zip(spec.alphas, spec.beta_rows):
        eta = a + sum(b * d for b, d in zip(row, dummies))
        gs.append(1.0 / (1.0 + math.exp(-eta)))
    ext = [1.0] + gs + [0.0]
    probs = [ext[i] - ext[i + 1] for i in range(len(ext) - 1)]
    if any(p <= 0.0 for p in probs):
        raise InvalidParams(
            f"split parameters give a non-positive probability at {dummies}"
        )
    return probs


def largest_remainder(targets: np.ndarray, total: int) -> np.ndarray:
    """Integer allocation summing to total, off by < 1 from each target."""
    targets = np.asarray(targets, dtype=float)
    if total < 0 or (targets < 0).any():
        raise InvalidParams("allocation targets must be non-negative")
    scale = targets.sum()
    if scale == 0.0:
        raise InvalidParams("allocation targets sum to zero")
    quota = targets * (total / scale)
    out = np.floor(quota).astype(int)
    short = total - int(out.sum())
    if short > 0:
        frac = quota - np.floor(quota)
        order = np.lexsort((np.arange(len(frac)), -frac))
        out[order[:short]] += 1
    return out


def _balanced_counts(
    spec: SynthSpec,
    slot_dummies: list[tuple[int, int, int]],
    n_obs: int,
) -> np.ndarray:
    """(n_slots, 4) level counts: rows sum to the per-slot budget and, per
    dummy combination, column sums match the planted distribution to < 1
    row per level. The repair loop moves single rows between levels inside
    a combination, keeping slot totals intact."""
    n_slots = len(slot_dummies)
    budgets = largest_remainder(np.ones(n_slots), n_obs)
    counts = np.zeros((n_slots, 4), dtype=int)
    combos = sorted(set(slot_dummies))
    for combo in combos:
        members = [i for i, d in enumerate(slot_dummies) if d == combo]
        probs = np.asarray(planted_level_probs(spec, combo))
        n_c = int(budgets[members].sum())
        target = largest_remainder(probs, n_c)
        quota = np.zeros((len(members), 4), dtype=float)
        for r, s in enumerate(members):
            counts[s] = largest_remainder(probs, int(budgets[s]))
            quota[r] = probs * budgets[s]
        col = counts[members].sum(axis=0)
        while not np.array_equal(col, target):
            over = int(np.argmax(col - target))
            under = int(np.argmin(col - target))
            sub = counts[members][:, over] - quota[:, over]
            sub[counts[members][:, over] == 0] = -np.inf
            r = int(np.argmax(sub))
            counts[members[r], over] -= 1
            counts[members[r], under] += 1
            col[over] -= 1
            col[under] += 1
    return counts


def gen_observations(
    spec: SynthSpec,
    calendar: CalendarConfig,
    seed: int,
    n_obs: int = 50_000,
    road_ids: Sequence[str] = ("R001",),
    mode: str = "balanced",
) -> pd.DataFrame:
    """Observation rows (road_id, timestamp, level) over the study week.

    "balanced" pins each slot's empirical level distribution to the planted
    one up to integer rounding, which makes parameter recovery checks sharp;
    "iid" draws levels independently, so estimates carry ordinary sampling
    noise. Roads are assigned at random either way; the ordinal process
    ignores them by construction.
    """
    if mode not in ("balanced", "iid"):
        raise InvalidParams(f"unknown mode {mode!r}")
    if n_obs < 1:
        raise InvalidParams("n_obs must be positive")
    road_ids = list(road_ids)
    if not road_ids:
        raise InvalidParams("need at least one road id")
    slots = calendar.slot_datetimes()
    slot_dummies = []
    for ts in slots:
        slot = label_timeslot(ts, calendar)
        slot_dummies.append((slot.work, slot.school, slot.exam))

    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])
    rows_ts, rows_level = [], []
    if mode == "balanced":
        counts = _balanced_counts(spec, slot_dummies, n_obs)
        for s, ts in enumerate(slots):
            for level in range(4):
                rows_ts.extend([ts] * counts[s, level])
                rows_level.extend([level + 1] * counts[s, level])
    else:
        probs_by_combo = {
            combo: np.asarray(planted_level_probs(spec, combo))
            for combo in set(slot_dummies)
        }
        slot_idx = rng.integers(0, len(slots), size=n_obs)
        for s in slot_idx:
            p = probs_by_combo[slot_dummies[s]]
            rows_ts.append(slots[s])
            rows_level.append(int(rng.choice(4, p=p)) + 1)

    roads = rng.choice(np.asarray(road_ids, dtype=object), size=len(rows_ts))
    df = pd.DataFrame(
        {"road_id": roads, "timestamp": rows_ts, "level": rows_level}
    )
    df["level"] = df["level"].astype(int)
    return df.sort_values(
        ["timestamp", "road_id", "level"], kind="stable"
    ).reset_index(drop=True)


# ---------------------------------------------------------------------------
# congestion frequency from the planted linear process

def gen_jam(
    spec: SynthSpec, Z: np.ndarray, seed: int
) -> tuple[np.ndarray, dict]:
    """Per-school congestion frequency from z-scored features.

    jam = intercept + Z . beta + eps, with eps projected out of the span of
    the intercept and every feature column and rescaled so the sample R^2
    is the target exactly. With target_r2 = 1 there is no noise and a
    regression on Z recovers the planted coefficients to machine precision.
    Values are clipped to [0, 1]; heavy clipping (over 1% of rows) warns
    because it breaks the exact identities.
    """
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2 or Z.shape[1] != len(FEATURE_NAMES):
        raise InvalidParams(f"Z must be (n, {len(FEATURE_NAMES)})")
    n = len(Z)
    beta = spec.m2_beta_vector()
    signal = spec.m2_intercept + Z @ beta
    sd_signal = float(np.std(signal))
    if sd_signal == 0.0:
        raise SpecInfeasible("planted signal has zero variance on these features")

    if spec.target_r2 == 1.0:
        eps = np.zeros(n)
    else:
        if n <= Z.shape[1] + 1:
            raise SpecInfeasible(
                f"need more than {Z.shape[1] + 1} rows for noisy generation"
            )
        rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])
        eps = rng.standard_normal(n)
        design = np.concatenate([np.ones((n, 1)), Z], axis=1)
        coef, *_ = np.linalg.lstsq(design, eps, rcond=None)
        eps = eps - design @ coef  # exactly orthogonal to the fitted span
        sd_eps = float(np.std(eps))
        if sd_eps == 0.0:
            raise SpecInfeasible("noise degenerated to zero after projection")
        sd_target = sd_signal * math.sqrt((1.0 - spec.target_r2) / spec.target_r2)
        eps *= sd_target / sd_eps

    raw = signal + eps
    jam = np.clip(raw, 0.0, 1.0)
    n_clipped = int((raw != jam).sum())
    if n_clipped > 0.01 * n:
        warnings.warn(
            f"{n_clipped} of {n} frequencies clipped to [0, 1]; "
            "planted-parameter identities no longer hold exactly",
            stacklevel=2,
        )
    info = {
        "n_clipped": n_clipped,
        "sd_signal": sd_signal,
        "sd_noise": float(np.std(eps)),
        "target_r2": spec.target_r2,
    }
    return jam, info


# ---------------------------------------------------------------------------
# writers emitting the ingestion formats

def write_city(city: SynthCity, directory: str | Path) -> dict[str, Path]:
    """roads.geojson, schools.csv, layers/*.csv, scene_vectors.csv.

    Deterministic byte-for-byte for a given (spec, seed): fixed ordering,
    shortest-repr floats, and 5-decimal scene probabilities whose rounding
    error is folded into each row's largest entry.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}

    features = []
    for seg in city.network.segments:
        features.append(
            {
                "type": "Feature",
                "geometry": {
                    "type": "LineString",
                    "coordinates": [[float(x), float(y)] for x, y in seg.polyline],
                },
                "properties": {"id": seg.id, "category": seg.category.value},
            }
        )
    paths["roads"] = directory / "roads.geojson"
    paths["roads"].write_text(
        json.dumps({"type": "FeatureCollection", "features": features}, sort_keys=True)
    )

    paths["schools"] = directory / "schools.csv"
    pd.DataFrame(
        {
            "id": [s.id for s in city.schools],
            "x": [s.location[0] for s in city.schools],
            "y": [s.location[1] for s in city.schools],
        }
    ).to_csv(paths["schools"], index=False)

    layer_dir = directory / "layers"
    layer_dir.mkdir(exist_ok=True)
    ids = [s.id for s in city.schools]
    lay = city.layers
    pd.DataFrame(
        {
            "school_id": ids,
            "bus_stop": [lay.poi[i]["bus_stop"] for i in ids],
            "subway": [lay.poi[i]["subway"] for i in ids],
            "parking_lot": [lay.poi[i]["parking_lot"] for i in ids],
        }
    ).to_csv(layer_dir / "poi.csv", index=False)
    pd.DataFrame(
        {
            "school_id": ids,
            "pct_old": [lay.buildings[i]["pct_old"] for i in ids],
            "pct_new": [lay.buildings[i]["pct_new"] for i in ids],
            "mean_stories": [lay.buildings[i]["mean_stories"] for i in ids],
            "pct_high": [lay.buildings[i]["pct_high"] for i in ids],
            "pct_low": [lay.buildings[i]["pct_low"] for i in ids],
        }
    ).to_csv(layer_dir / "buildings.csv", index=False)
    pd.DataFrame(
        {
            "school_id": ids,
            "categories": [";".join(sorted(lay.landuse[i])) for i in ids],
        }
    ).to_csv(layer_dir / "landuse.csv", index=False)
    pd.DataFrame(
        {
            "school_id": ids,
            "signaling_count": [lay.population[i] for i in ids],
        }
    ).to_csv(layer_dir / "population.csv", index=False)
    pd.DataFrame(
        {
            "school_id": ids,
            "integration": [lay.syntax[i][0] for i in ids],
            "choice": [lay.syntax[i][1] for i in ids],
        }
    ).to_csv(layer_dir / "syntax.csv", index=False)
    paths["layers"] = layer_dir

    paths["scene"] = directory / "scene_vectors.csv"
    _write_scene_csv(city.scene_table, paths["scene"])
    return paths


def _write_scene_csv(table: SceneTable, path: Path) -> None:
    header = "road_id,x,y," + ",".join(f"p{i}" for i in range(N_SCENE_LABELS))
    lines = [header]
    for i in range(len(table.road_ids)):
        probs = np.round(table.probs[i], 5)
        # fold the rounding residue into the largest entry so rows still sum to 1
        probs[int(np.argmax(probs))] += 1.0 - probs.sum()
        cells = ",".join(f"{p:.5f}" for p in probs)
        x, y = float(table.xy[i, 0]), float(table.xy[i, 1])
        lines.append(f"{table.road_ids[i]},{x!r},{y!r},{cells}")
    path.write_text("\n".join(lines) + "\n")


def write_observations(df: pd.DataFrame, path: str | Path) -> Path:
    path = Path(path)
    out = df.copy()
    out["timestamp"] = out["timestamp"].map(lambda t: t.isoformat())
    out.to_csv(path, index=False)
    return path

"""Street-view scene composition: sampling, clustering, neighborhood shares.

Scene vectors are 365-dim label probability distributions per sampled road
point; clustering runs on the masked 159-dim man-made-outdoor subset, per
road category, with fixed cluster counts (ordinary 4, main 3, express 3).
Cluster ids are global: 1-4 ordinary, 5-7 main, 8-10 express, ordered by
descending member count within each category.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
import pandas as pd

from .domain import RoadCategory, Neighborhood
from .errors import (
    InsufficientVectors,
    KTooLarge,
    NoSampledPoints,
    ParseError,
    ValidationError,
)
from .ingest.io import RoadNetwork

N_SCENE_LABELS = 365
N_MASKED_LABELS = 159
SCENE_SUM_TOL = 1e-3

DEFAULT_INTERVAL_M = 50.0

#: cluster count per road category, and the global id layout
CATEGORY_KS: dict[RoadCategory, int] = {
    RoadCategory.ORDINARY: 4,
    RoadCategory.MAIN: 3,
    RoadCategory.EXPRESS: 3,
}
CATEGORY_ORDER: tuple[RoadCategory, ...] = (
    RoadCategory.ORDINARY,
    RoadCategory.MAIN,
    RoadCategory.EXPRESS,
)


def load_scene_mask(path: str | Path | None = None) -> np.ndarray:
    """Plain-text list of the masked label indices, one integer per line."""
    if path is None:
        text = (
            resources.files("schooljam.data")
            .joinpath("scene_mask_default.txt")
            .read_text()
        )
    else:
        text = Path(path).read_text()
    indices = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        indices.append(int(line))
    arr = np.asarray(indices, dtype=int)
    if len(arr) != N_MASKED_LABELS:
        raise ParseError(f"scene mask needs {N_MASKED_LABELS} indices, got {len(arr)}")
    if len(np.unique(arr)) != len(arr) or arr.min() < 0 or arr.max() >= N_SCENE_LABELS:
        raise ParseError("scene mask indices must be unique and within 0..364")
    return arr


@dataclass(frozen=True)
class SceneVector:
    """One sampled point's label distribution plus its masked slice."""

    point: tuple[float, float]
    road_id: str
    probs: np.ndarray
    masked: np.ndarray

    @classmethod
    def build(
        cls, point: tuple[float, float], road_id: str, probs: np.ndarray, mask: np.ndarray
    ) -> "SceneVector":
        probs = np.asarray(probs, dtype=float)
        if probs.shape != (N_SCENE_LABELS,):
            raise ValidationError(f"scene vector needs {N_SCENE_LABELS} entries")
        if (probs < 0).any():
            raise ValidationError("scene vector has negative entries")
        if abs(probs.sum() - 1.0) > SCENE_SUM_TOL:
            raise ValidationError(
                f"scene vector sums to {probs.sum():.6f}, expected 1 +- {SCENE_SUM_TOL}"
            )
        return cls(point=point, road_id=road_id, probs=probs, masked=probs[mask])


@dataclass
class SceneTable:
    """Columnar scene vectors: points, owning roads, full and masked probs."""

    road_ids: np.ndarray  # (n,) str
    xy: np.ndarray  # (n, 2)
    probs: np.ndarray  # (n, 365)
    mask: np.ndarray  # (159,) label indices

    @property
    def masked(self) -> np.ndarray:
        return self.probs[:, self.mask]

    def __len__(self) -> int:
        return len(self.road_ids)


def load_scene_vectors(path: str | Path, mask: np.ndarray) -> SceneTable:
    """CSV with header road_id,x,y,p0..p364."""
    df = pd.read_csv(path, dtype={"road_id": str})
    prob_cols = [f"p{i}" for i in range(N_SCENE_LABELS)]
    if not {"road_id", "x", "y"}.issubset(df.columns) or not set(prob_cols).issubset(
        df.columns
    ):
        raise ParseError(f"{path}: expected road_id,x,y,p0..p{N_SCENE_LABELS - 1}")
    probs = df[prob_cols].to_numpy(dtype=float)
    if (probs < 0).any():
        raise ParseError(f"{path}: negative probabilities")
    sums = probs.sum(axis=1)
    bad = np.abs(sums - 1.0) > SCENE_SUM_TOL
    if bad.any():
        raise ParseError(
            f"{path}: {int(bad.sum())} rows do not sum to 1 within {SCENE_SUM_TOL}"
        )
    return SceneTable(
        road_ids=df["road_id"].to_numpy(dtype=object),
        xy=df[["x", "y"]].to_numpy(dtype=float),
        probs=probs,
        mask=np.asarray(mask, dtype=int),
    )


# ---------------------------------------------------------------------------
# sampling points along segments

def sample_points(
    network: RoadNetwork, interval_m: float = DEFAULT_INTERVAL_M
) -> tuple[np.ndarray, np.ndarray]:
    """Points at arc-length multiples of interval_m from each segment start.

    The start point is always included; a point lands on the end vertex when
    the length is an exact multiple. Returns (xy array, road_id array).
    """
    if interval_m <= 0:
        raise ValidationError("interval_m must be positive")
    pts, owners = [], []
    for seg in network.segments:
        verts = np.asarray(seg.polyline, dtype=float)
        piece_len = np.hypot(*(np.diff(verts, axis=0).T))
        cum = np.concatenate([[0.0], np.cumsum(piece_len)])
        total = cum[-1]
        s = 0.0
        while s <= total + 1e-9:
            # locate the piece containing arc length s
            i = int(np.searchsorted(cum, min(s, total), side="right") - 1)
            i = min(i, len(piece_len) - 1)
            frac = (min(s, total) - cum[i]) / piece_len[i] if piece_len[i] > 0 else 0.0
            p = verts[i] + frac * (verts[i + 1] - verts[i])
            pts.append(p)
            owners.append(seg.id)
            s += interval_m
    return np.asarray(pts, dtype=float), np.asarray(owners, dtype=object)


# ---------------------------------------------------------------------------
# k-means

@dataclass
class KMeansResult:
    centroids: np.ndarray
    assignments: np.ndarray
    inertia: float
    inertia_history: list[float]
    n_iter: int


def _squared_distances(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    # (n, k) matrix of squared Euclidean distances, computed stably
    diff = X[:, None, :] - C[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def _kmeanspp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(X)
    centroids = np.empty((k, X.shape[1]), dtype=float)
    first = int(rng.integers(n))
    centroids[0] = X[first]
    d2 = np.einsum("nd,nd->n", X - centroids[0], X - centroids[0])
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centroids[j] = X[idx]
        cand = np.einsum("nd,nd->n", X - centroids[j], X - centroids[j])
        d2 = np.minimum(d2, cand)
    return centroids


def kmeans(
    vectors: np.ndarray,
    k: int,
    seed: int | np.random.SeedSequence,
    max_iter: int = 300,
    tol: float = 1e-8,
) -> KMeansResult:
    """Lloyd iterations with k-means++ seeding.

    Deterministic for a fixed seed: fixed summation order, empty clusters
    reseeded to the currently farthest point. The recorded inertia history
    (one entry per assignment step) never increases.
    """
    X = np.ascontiguousarray(vectors, dtype=float)
    if X.ndim != 2 or len(X) == 0:
        raise ValidationError("vectors must be a non-empty 2-D array")
    n_distinct = len(np.unique(X, axis=0))
    if k > n_distinct:
        raise KTooLarge(f"k={k} exceeds {n_distinct} distinct vectors")
    rng = np.random.default_rng(seed)
    C = _kmeanspp_init(X, k, rng)

    history: list[float] = []
    prev_assign: np.ndarray | None = None
    assign = np.zeros(len(X), dtype=int)
    for it in range(1, max_iter + 1):
        d2 = _squared_distances(X, C)
        assign = d2.argmin(axis=1)
        inertia = float(d2[np.arange(len(X)), assign].sum())
        history.append(inertia)
        if prev_assign is not None and np.array_equal(assign, prev_assign):
            break
        prev_assign = assign.copy()

        counts = np.bincount(assign, minlength=k)
        sums = np.zeros_like(C)
        np.add.at(sums, assign, X)
        new_C = C.copy()
        nonempty = counts > 0
        new_C[nonempty] = sums[nonempty] / counts[nonempty, None]

        if (~nonempty).any():
            # hand each empty cluster the point currently farthest from its centroid
            point_d2 = d2[np.arange(len(X)), assign].copy()
            for j in np.flatnonzero(~nonempty):
                far = int(point_d2.argmax())
                new_C[j] = X[far]
                point_d2[far] = -1.0

        shift = float(np.abs(new_C - C).max())
        C = new_C
        if shift < tol:
            # one more assignment pass so result state is self-consistent
            d2 = _squared_distances(X, C)
            assign = d2.argmin(axis=1)
            inertia = float(d2[np.arange(len(X)), assign].sum())
            history.append(inertia)
            break
    else:
        d2 = _squared_distances(X, C)
        assign = d2.argmin(axis=1)
        inertia = float(d2[np.arange(len(X)), assign].sum())
        history.append(inertia)

    return KMeansResult(
        centroids=C,
        assignments=assign,
        inertia=history[-1],
        inertia_history=history,
        n_iter=len(history),
    )


# ---------------------------------------------------------------------------
# the fitted scenescape model

@dataclass
class CategoryClusters:
    ids: tuple[int, ...]  # global scenescape ids, ordered
    centroids: np.ndarray  # (k, 159) in id order
    counts: tuple[int, ...]  # training member counts in id order
    inertia: float


@dataclass
class ScenescapeModel:
    categories: dict[RoadCategory, CategoryClusters]
    mask: np.ndarray
    seed: int

    @property
    def n_scenescapes(self) -> int:
        return sum(len(c.ids) for c in self.categories.values())

    def assign(self, masked_vectors: np.ndarray, category: RoadCategory) -> np.ndarray:
        """Global scenescape id of each masked vector's nearest centroid."""
        cc = self.categories[category]
        d2 = _squared_distances(np.asarray(masked_vectors, dtype=float), cc.centroids)
        local = d2.argmin(axis=1)
        ids = np.asarray(cc.ids, dtype=int)
        return ids[local]

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "mask": [int(i) for i in self.mask],
            "categories": {
                cat.value: {
                    "ids": list(cc.ids),
                    "counts": list(cc.counts),
                    "inertia": cc.inertia,
                    "centroids": [[float(v) for v in row] for row in cc.centroids],
                }
                for cat, cc in self.categories.items()
            },
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ScenescapeModel":
        cats = {}
        for name, body in doc["categories"].items():
            cats[RoadCategory(name)] = CategoryClusters(
                ids=tuple(int(i) for i in body["ids"]),
                centroids=np.asarray(body["centroids"], dtype=float),
                counts=tuple(int(c) for c in body["counts"]),
                inertia=float(body["inertia"]),
            )
        return cls(
            categories=cats,
            mask=np.asarray(doc["mask"], dtype=int),
            seed=int(doc["seed"]),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True))

    @classmethod
    def load(cls, path: str | Path) -> "ScenescapeModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def fit_scenescapes(
    table: SceneTable,
    network: RoadNetwork,
    seed: int,
    category_ks: dict[RoadCategory, int] | None = None,
) -> ScenescapeModel:
    """Cluster masked scene vectors citywide per road category.

    Within a category, clusters are numbered by descending member count;
    global ids run ordinary first, then main, then express.
    """
    category_ks = dict(category_ks or CATEGORY_KS)
    cat_by_road = network.categories()
    road_cats = np.asarray([cat_by_road[r].value for r in table.road_ids], dtype=object)

    seed_seq = np.random.SeedSequence(seed)
    child_seeds = seed_seq.spawn(len(CATEGORY_ORDER))

    categories: dict[RoadCategory, CategoryClusters] = {}
    next_id = 1
    for cat, child in zip(CATEGORY_ORDER, child_seeds):
        k = category_ks[cat]
        Xc = table.masked[road_cats == cat.value]
        if len(Xc) == 0 or len(np.unique(Xc, axis=0)) < k:
            raise InsufficientVectors(
                f"category {cat.value!r}: fewer than {k} distinct scene vectors"
            )
        res = kmeans(Xc, k, seed=child)
        counts = np.bincount(res.assignments, minlength=k)
        # stable: larger clusters first, original index breaks ties
        order = sorted(range(k), key=lambda j: (-counts[j], j))
        ids = tuple(range(next_id, next_id + k))
        categories[cat] = CategoryClusters(
            ids=ids,
            centroids=res.centroids[order],
            counts=tuple(int(counts[j]) for j in order),
            inertia=res.inertia,
        )
        next_id += k

    return ScenescapeModel(categories=categories, mask=table.mask, seed=seed)


def neighborhood_shares(
    model: ScenescapeModel,
    table: SceneTable,
    nbhd: Neighborhood,
    network: RoadNetwork,
) -> np.ndarray:
    """Share of each global scenescape among the neighborhood's sampled points.

    Length-10 vector summing to 1. Raises NoSampledPoints when no sampled
    point lies on a member road.
    """
    member = nbhd.road_ids
    sel = np.asarray([r in member for r in table.road_ids], dtype=bool)
    if not sel.any():
        raise NoSampledPoints(f"school {nbhd.school_id!r}: no sampled point on member roads")
    cat_by_road = network.categories()
    road_cats = np.asarray(
        [cat_by_road[r].value for r in table.road_ids[sel]], dtype=object
    )
    masked = table.masked[sel]
    n_total = model.n_scenescapes
    counts = np.zeros(n_total, dtype=int)
    for cat in CATEGORY_ORDER:
        m = road_cats == cat.value
        if not m.any():
            continue
        ids = model.assign(masked[m], cat)
        for i in ids:
            counts[i - 1] += 1
    return counts / counts.sum()

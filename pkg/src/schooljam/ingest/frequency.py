"""Congestion frequencies: the outcome of the built-environment model."""

from __future__ import annotations

from datetime import datetime
from typing import Collection, Iterable

import pandas as pd

from ..domain import CONGESTION_CUTOFF, Neighborhood
from ..errors import EmptyGroup, NoObservations


def congestion_frequency(
    observations: pd.DataFrame,
    nbhd: Neighborhood,
    slots: Collection[datetime],
    cutoff: int = CONGESTION_CUTOFF,
) -> float:
    """Share of congested observations per member road, averaged across roads.

    An observation counts as congested when level >= cutoff. Frequencies are
    computed per road first and then averaged unweighted, so busy roads do
    not dominate. Raises NoObservations when nothing matches the filter.
    """
    slots = set(slots)
    mask = observations["road_id"].isin(nbhd.road_ids) & observations[
        "timestamp"
    ].isin(slots)
    sub = observations.loc[mask]
    if sub.empty:
        raise NoObservations(
            f"school {nbhd.school_id!r}: no observation matches the slot filter"
        )
    per_road = (sub["level"] >= cutoff).groupby(sub["road_id"]).mean()
    return float(per_road.mean())


def congested_road_share(
    observations: pd.DataFrame,
    road_categories: dict[str, str],
    school_road_ids: Collection[str],
    groups: Iterable[tuple[str, bool]] | None = None,
    cutoff: int = CONGESTION_CUTOFF,
) -> pd.DataFrame:
    """Percent of congested roads per time slot for (category, has_school) groups.

    has_school marks roads that belong to at least one school neighborhood.
    Returns a DataFrame with columns timestamp, category, has_school,
    share_pct, n_roads. Raises EmptyGroup when an explicitly requested group
    has no roads.
    """
    school_road_ids = set(school_road_ids)
    df = observations.copy()
    df["category"] = df["road_id"].map(road_categories)
    if df["category"].isna().any():
        missing = sorted(df.loc[df["category"].isna(), "road_id"].unique())
        raise EmptyGroup(f"roads without category: {missing[:5]}")
    df["has_school"] = df["road_id"].isin(school_road_ids)
    df["congested"] = df["level"] >= cutoff

    if groups is not None:
        requested = list(groups)
        present = set(zip(df["category"], df["has_school"]))
        for g in requested:
            if (g[0], bool(g[1])) not in present:
                raise EmptyGroup(f"no roads in group {g!r}")
        df = df[
            [
                (c, h) in {(g[0], bool(g[1])) for g in requested}
                for c, h in zip(df["category"], df["has_school"])
            ]
        ]

    grouped = (
        df.groupby(["timestamp", "category", "has_school"], sort=True)
        .agg(share_pct=("congested", "mean"), n_roads=("road_id", "nunique"))
        .reset_index()
    )
    grouped["share_pct"] = grouped["share_pct"] * 100.0
    return grouped

"""What-if HTTP API over a finished artifact directory.

The app never refits anything: it loads the panel, the linear fit, and the
scorer, verifies them against the run manifest's hashes, and answers
questions about schools and counterfactual feature changes. Overrides can
be expressed in raw units (validated like ingested features) or directly in
z units.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal

import numpy as np
import pandas as pd
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .domain import DUMMY_FEATURES, FEATURE_NAMES, SCENE_FEATURES
from .errors import ArtifactMismatch, MissingArtifact
from .ingest.features import apply_zscore
from .ols import OlsFit
from .pipeline import MANIFEST_NAME, sha256_file
from .scoring import ScoringFunction
from .shapx import shap_interactions, shapley_linear

SERVED_ARTIFACTS = (
    "panel.csv",
    "panel_stats.json",
    "ols_fit.json",
    "scoring.json",
    "importance.json",
    "scores.csv",
)
INTERACTION_FEATURE_CAP = 14


class WhatifRequest(BaseModel):
    school_id: str
    overrides: dict[str, float] = Field(default_factory=dict)
    units: Literal["raw", "z"] = "raw"


class ServedState:
    """Everything the endpoints read, loaded and verified once."""

    def __init__(self, artifact_dir: str | Path):
        art = Path(artifact_dir)
        manifest_path = art / MANIFEST_NAME
        if not manifest_path.exists():
            raise MissingArtifact(f"no {MANIFEST_NAME} in {art}")
        manifest = json.loads(manifest_path.read_text())
        recorded = manifest.get("artifacts", {})
        mismatched = []
        for name in SERVED_ARTIFACTS:
            p = art / name
            if not p.exists() or name not in recorded:
                raise MissingArtifact(f"artifact missing: {name}")
            if sha256_file(p) != recorded[name]:
                mismatched.append(name)
        if mismatched:
            raise ArtifactMismatch(
                f"artifacts differ from the manifest: {', '.join(mismatched)}"
            )

        self.panel = pd.read_csv(art / "panel.csv", dtype={"school_id": str})
        stats = json.loads((art / "panel_stats.json").read_text())
        self.means = np.array([stats["means"][n] for n in FEATURE_NAMES])
        self.stds = np.array([stats["stds"][n] for n in FEATURE_NAMES])
        ols_doc = json.loads((art / "ols_fit.json").read_text())
        self.fit = OlsFit.from_dict(ols_doc)
        self.dropped = tuple(ols_doc.get("dropped_columns", []))
        self.scoring = ScoringFunction.from_dict(
            json.loads((art / "scoring.json").read_text())
        )
        self.validation = json.loads((art / "scoring.json").read_text()).get(
            "validation"
        )
        self.importance = json.loads((art / "importance.json").read_text())
        self.scores = pd.read_csv(art / "scores.csv", dtype={"school_id": str})

        raw = self.panel[list(FEATURE_NAMES)].to_numpy(dtype=float)
        self.Z = apply_zscore(raw, self.means, self.stds)
        self.retained = self.fit.feature_names
        self.retained_cols = [FEATURE_NAMES.index(n) for n in self.retained]
        self.by_school = {
            sid: i for i, sid in enumerate(self.panel["school_id"])
        }
        self.score_rows = {
            row["school_id"]: row for _, row in self.scores.iterrows()
        }

    # -- helpers -----------------------------------------------------------

    def school_index(self, school_id: str) -> int:
        if school_id not in self.by_school:
            raise HTTPException(404, detail=f"unknown school {school_id!r}")
        return self.by_school[school_id]

    def raw_row(self, idx: int) -> dict[str, float]:
        row = self.panel.iloc[idx]
        return {n: float(row[n]) for n in FEATURE_NAMES}

    def apply_overrides(
        self, raw: dict[str, float], overrides: dict[str, float], units: str
    ) -> dict[str, float]:
        out = dict(raw)
        for name, value in overrides.items():
            if name not in FEATURE_NAMES:
                raise HTTPException(422, detail=f"unknown feature {name!r}")
            value = float(value)
            if not np.isfinite(value):
                raise HTTPException(422, detail=f"{name}: non-finite value")
            if units == "z":
                i = FEATURE_NAMES.index(name)
                value = self.means[i] + self.stds[i] * value
            else:
                if name in DUMMY_FEATURES and value not in (0.0, 1.0):
                    raise HTTPException(
                        422, detail=f"{name}: dummy override must be 0 or 1"
                    )
                if name in SCENE_FEATURES and not (0.0 <= value <= 1.0):
                    raise HTTPException(
                        422, detail=f"{name}: share override outside [0, 1]"
                    )
            out[name] = value
        return out

    def evaluate(self, raw: dict[str, float]) -> dict:
        env, jam = self.scoring.score(raw)
        z_full = (
            np.array([raw[n] for n in FEATURE_NAMES]) - self.means
        ) / self.stds
        z_fit = z_full[self.retained_cols]
        predicted = float(self.fit.predict(z_fit[None, :])[0])
        return {
            "env_score": env,
            "jam_score": jam,
            "predicted_frequency": predicted,
            "_z_fit": z_fit,
        }


def build_app(artifact_dir: str | Path) -> FastAPI:
    state = ServedState(artifact_dir)
    app = FastAPI(
        title="school-run congestion what-if service",
        description=(
            "Read-only queries over a finished analysis run: school scores, "
            "model summaries, counterfactual feature overrides."
        ),
    )
    app.state.served = state

    @app.get("/schools")
    def list_schools() -> list[dict]:
        out = []
        for _, row in state.scores.iterrows():
            out.append(
                {
                    "school_id": row["school_id"],
                    "env_score": float(row["env_score"]),
                    "jam_score": float(row["jam_score"]),
                    "frequency": float(row["frequency"]),
                }
            )
        return out

    @app.get("/schools/{school_id}")
    def get_school(school_id: str) -> dict:
        idx = state.school_index(school_id)
        raw = state.raw_row(idx)
        score = state.score_rows.get(school_id)
        if score is None:
            raise HTTPException(404, detail=f"no scores for {school_id!r}")
        return {
            "school_id": school_id,
            "features": raw,
            "env_score": float(score["env_score"]),
            "jam_score": float(score["jam_score"]),
            "frequency": float(score["frequency"]),
        }

    @app.get("/model")
    def get_model() -> dict:
        return {
            "scoring": state.scoring.to_dict(),
            "validation": state.validation,
            "regression": {
                "r_squared": state.fit.r_squared,
                "adj_r_squared": state.fit.adj_r_squared,
                "n_obs": state.fit.n_obs,
                "feature_names": list(state.retained),
                "coef": [float(v) for v in state.fit.coef],
                "intercept": state.fit.intercept,
                "dropped_columns": list(state.dropped),
            },
            "importance": state.importance,
        }

    @app.post("/whatif")
    def whatif(req: WhatifRequest) -> dict:
        idx = state.school_index(req.school_id)
        raw_before = state.raw_row(idx)
        raw_after = state.apply_overrides(raw_before, req.overrides, req.units)
        before = state.evaluate(raw_before)
        after = state.evaluate(raw_after)
        bg = state.Z[:, state.retained_cols]
        phi = shapley_linear(state.fit, after["_z_fit"], bg).phi
        return {
            "school_id": req.school_id,
            "units": req.units,
            "overrides": req.overrides,
            "baseline": {
                k: v for k, v in before.items() if not k.startswith("_")
            },
            "result": {k: v for k, v in after.items() if not k.startswith("_")},
            "delta": {
                "env_score": after["env_score"] - before["env_score"],
                "jam_score": after["jam_score"] - before["jam_score"],
                "predicted_frequency": after["predicted_frequency"]
                - before["predicted_frequency"],
            },
            "phi": {
                name: float(v) for name, v in zip(state.retained, phi)
            },
        }

    @app.get("/interactions")
    def interactions(school_id: str, features: str | None = None) -> dict:
        idx = state.school_index(school_id)
        if features:
            names = [f.strip() for f in features.split(",") if f.strip()]
        else:
            names = list(state.scoring.feature_names)
        for n in names:
            if n not in state.retained:
                raise HTTPException(
                    422, detail=f"feature {n!r} not in the fitted model"
                )
        if len(names) > INTERACTION_FEATURE_CAP:
            raise HTTPException(
                422,
                detail=f"at most {INTERACTION_FEATURE_CAP} features per query",
            )
        if len(set(names)) != len(names):
            raise HTTPException(422, detail="duplicate features in query")

        player_cols = [state.retained.index(n) for n in names]
        z_school = state.Z[idx, state.retained_cols]
        bg_mean = state.Z[:, state.retained_cols].mean(axis=0)

        def submodel(rows: np.ndarray) -> np.ndarray:
            full = np.tile(z_school, (len(rows), 1))
            full[:, player_cols] = rows
            return state.fit.predict(full)

        matrix = shap_interactions(
            submodel, z_school[player_cols], bg_mean[player_cols][None, :]
        )
        return {
            "school_id": school_id,
            "features": names,
            "matrix": [[float(v) for v in row] for row in matrix],
            "row_sums": [float(v) for v in matrix.sum(axis=1)],
        }

    return app

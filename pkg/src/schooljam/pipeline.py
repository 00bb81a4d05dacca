"""End-to-end orchestration: files in, artifact directory out.

Stages mirror the analysis: ingest, streetscape clustering, feature panel,
the two model fits, attribution, scoring. Every stage writes its artifact
with stable ordering and no timestamps, so a rerun over identical inputs is
byte-identical, and run_manifest.json records input and artifact hashes for
downstream consumers to verify against.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd

from .domain import (
    CONGESTION_CUTOFF,
    DEFAULT_RADIUS_M,
    FEATURE_NAMES,
    SCENE_FEATURES,
    Neighborhood,
    Point,
    School,
)
from .errors import (
    MissingArtifact,
    NoObservations,
    RankDeficient,
    ValidationError,
)
from .gologit import (
    GologitSpec,
    build_commute_design,
    build_did_design,
    did_report,
    discrete_changes,
    fit_gologit,
    marginal_effects,
    wald_tests,
)
from .ingest.features import (
    assemble_feature_vector,
    compute_edge_betweenness,
    count_school_neighbors,
    derive_physical_features,
    neighborhood_graph_metrics,
    zscore,
)
from .ingest.frequency import congestion_frequency
from .ingest.io import (
    FeatureLayers,
    RoadNetwork,
    load_layers,
    load_observations,
    load_roads,
    load_schools,
)
from .ingest.neighborhoods import build_neighborhoods
from .ingest.timeslots import CalendarConfig, default_calendar
from .ols import fit_ols, significant_subset, vif
from .scenescape import (
    ScenescapeModel,
    SceneTable,
    fit_scenescapes,
    load_scene_mask,
    load_scene_vectors,
    neighborhood_shares,
)
from .scoring import ScoringFunction, build_scoring, validate_scores
from .shapx import shap_importance, shapley_linear

ARTIFACT_NAMES = (
    "neighborhoods.json",
    "scenescape_model.json",
    "panel.csv",
    "panel_stats.json",
    "gologit_fit.json",
    "gologit_commute_fit.json",
    "did_report.csv",
    "ols_fit.json",
    "ols_fit.csv",
    "explanations.csv",
    "importance.json",
    "scores.csv",
    "scoring.json",
)
MANIFEST_NAME = "run_manifest.json"


@dataclass(frozen=True)
class PipelineConfig:
    radius_m: float = DEFAULT_RADIUS_M
    congestion_cutoff: int = CONGESTION_CUTOFF
    score_alpha: float = 14.0
    p_threshold: float = 0.1
    seed: int = 0
    center: Point | None = None

    def to_dict(self) -> dict:
        return {
            "radius_m": self.radius_m,
            "congestion_cutoff": self.congestion_cutoff,
            "score_alpha": self.score_alpha,
            "p_threshold": self.p_threshold,
            "seed": self.seed,
            "center": None if self.center is None else list(self.center),
        }


def write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


# ---------------------------------------------------------------------------
# inputs

@dataclass
class Inputs:
    network: RoadNetwork
    schools: list[School]
    observations: pd.DataFrame
    layers: FeatureLayers
    scene_table: SceneTable
    calendar: CalendarConfig
    center: Point
    hashes: dict[str, str] = field(default_factory=dict)


def load_inputs(input_dir: str | Path, config: PipelineConfig) -> Inputs:
    """Read the five input files (plus optional calendar.json) from one
    directory. The city center defaults to the road bounding-box center."""
    input_dir = Path(input_dir)
    paths = {
        "roads": input_dir / "roads.geojson",
        "schools": input_dir / "schools.csv",
        "observations": input_dir / "observations.csv",
        "scene_vectors": input_dir / "scene_vectors.csv",
    }
    for name, p in paths.items():
        if not p.exists():
            raise MissingArtifact(f"input file missing: {p}")
    layer_dir = input_dir / "layers"
    if not layer_dir.is_dir():
        raise MissingArtifact(f"input directory missing: {layer_dir}")

    network = load_roads(paths["roads"])
    nodes = np.asarray(network.nodes)
    if config.center is not None:
        center = config.center
    else:
        center = (
            float((nodes[:, 0].min() + nodes[:, 0].max()) / 2.0),
            float((nodes[:, 1].min() + nodes[:, 1].max()) / 2.0),
        )
    schools = load_schools(paths["schools"], center)
    observations = load_observations(paths["observations"], network)
    layers = load_layers(layer_dir)
    mask = load_scene_mask()
    scene_table = load_scene_vectors(paths["scene_vectors"], mask)

    calendar_path = input_dir / "calendar.json"
    if calendar_path.exists():
        calendar = CalendarConfig.from_json(calendar_path)
        paths["calendar"] = calendar_path
    else:
        calendar = default_calendar()

    hashes = {name: sha256_file(p) for name, p in sorted(paths.items())}
    for p in sorted(layer_dir.glob("*.csv")):
        hashes[f"layers/{p.name}"] = sha256_file(p)

    return Inputs(
        network=network,
        schools=schools,
        observations=observations,
        layers=layers,
        scene_table=scene_table,
        calendar=calendar,
        center=center,
        hashes=hashes,
    )


# ---------------------------------------------------------------------------
# stages

def stage_neighborhoods(
    inputs: Inputs, config: PipelineConfig, out_dir: Path
) -> dict[str, Neighborhood]:
    nbhds = build_neighborhoods(
        inputs.schools, inputs.network, radius_m=config.radius_m
    )
    by_school = {n.school_id: n for n in nbhds}
    write_json(
        out_dir / "neighborhoods.json",
        {
            "radius_m": config.radius_m,
            "schools": {
                sid: sorted(n.road_ids) for sid, n in sorted(by_school.items())
            },
        },
    )
    return by_school


def stage_scenescape(
    inputs: Inputs, config: PipelineConfig, out_dir: Path
) -> ScenescapeModel:
    model = fit_scenescapes(inputs.scene_table, inputs.network, seed=config.seed)
    model.save(out_dir / "scenescape_model.json")
    return model


def measure_features(
    inputs: Inputs,
    nbhds: dict[str, Neighborhood],
    scene_model: ScenescapeModel,
    config: PipelineConfig,
) -> pd.DataFrame:
    """One row per school that has roads in its buffer: id plus the 25 raw
    features. The outcome column is attached separately."""
    betweenness = compute_edge_betweenness(inputs.network)
    rows = []
    skipped = 0
    for school in inputs.schools:
        nbhd = nbhds.get(school.id)
        if nbhd is None or not nbhd.road_ids:
            skipped += 1
            continue
        mean_bc, n_int = neighborhood_graph_metrics(
            inputs.network, nbhd, school, betweenness
        )
        other = count_school_neighbors(school, inputs.schools, config.radius_m)
        physical = derive_physical_features(
            school,
            nbhd,
            inputs.layers,
            other_schools_in_buffer=other,
            betweeness=mean_bc,
            intersecton=n_int,
        )
        shares = neighborhood_shares(
            scene_model, inputs.scene_table, nbhd, inputs.network
        )
        scene = dict(zip(SCENE_FEATURES, (float(v) for v in shares)))
        vec = assemble_feature_vector(physical, scene)
        rows.append({"school_id": school.id, **vec.as_dict()})
    if skipped:
        warnings.warn(
            f"{skipped} schools have no roads in their buffer and were skipped",
            stacklevel=2,
        )
    if not rows:
        raise ValidationError("no school has roads in its buffer")
    return pd.DataFrame(rows)


def attach_observed_frequency(
    panel: pd.DataFrame,
    inputs: Inputs,
    nbhds: dict[str, Neighborhood],
    config: PipelineConfig,
) -> pd.DataFrame:
    """Congestion frequency over the week's observed slots, per school.
    Schools whose roads carry no observations are dropped with a warning."""
    slots = inputs.calendar.slot_datetimes()
    freqs, keep = [], []
    dropped = 0
    for _, row in panel.iterrows():
        nbhd = nbhds[row["school_id"]]
        try:
            freqs.append(
                congestion_frequency(
                    inputs.observations, nbhd, slots, cutoff=config.congestion_cutoff
                )
            )
            keep.append(True)
        except NoObservations:
            dropped += 1
            keep.append(False)
    if dropped:
        warnings.warn(
            f"{dropped} schools dropped: no observations on their roads",
            stacklevel=2,
        )
    out = panel.loc[keep].reset_index(drop=True).copy()
    out["frequency"] = [f for f, k in zip(freqs, keep) if k]
    return out


def write_panel(panel: pd.DataFrame, out_dir: Path, source: str) -> None:
    """panel.csv plus the z-score statistics every consumer shares."""
    if panel["frequency"].isna().any():
        raise ValidationError("panel has missing frequencies")
    panel.to_csv(out_dir / "panel.csv", index=False)
    X = panel[list(FEATURE_NAMES)].to_numpy(dtype=float)
    _, means, stds = zscore(X, list(FEATURE_NAMES))
    write_json(
        out_dir / "panel_stats.json",
        {
            "n_schools": int(len(panel)),
            "frequency_source": source,
            "means": {n: float(m) for n, m in zip(FEATURE_NAMES, means)},
            "stds": {n: float(s) for n, s in zip(FEATURE_NAMES, stds)},
        },
    )


def stage_panel(
    inputs: Inputs,
    nbhds: dict[str, Neighborhood],
    scene_model: ScenescapeModel,
    config: PipelineConfig,
    out_dir: Path,
) -> pd.DataFrame:
    panel = measure_features(inputs, nbhds, scene_model, config)
    panel = attach_observed_frequency(panel, inputs, nbhds, config)
    write_panel(panel, out_dir, source="observations")
    return panel


def _fit_payload(fit, data) -> dict:
    ame = marginal_effects(fit, data, mode="AME")
    return {
        "fit": fit.to_dict(),
        "wald": wald_tests(fit).to_dict(),
        "ame": ame.to_dict(),
        "discrete_changes": [
            [float(v) for v in row] for row in discrete_changes(fit, data)
        ],
    }


def stage_m1(inputs: Inputs, config: PipelineConfig, out_dir: Path) -> dict:
    """Both ordered-logit designs: full-week dummies and the morning-commute
    decomposition. Writes the two fit payloads and the combined effect table."""
    data_week = build_did_design(inputs.observations, inputs.calendar)
    fit_week = fit_gologit(
        GologitSpec(feature_names=("work", "school", "exam")), data_week
    )
    data_commute = build_commute_design(inputs.observations, inputs.calendar)
    fit_commute = fit_gologit(
        GologitSpec(feature_names=("commute_school", "commute_no_school")),
        data_commute,
    )
    write_json(out_dir / "gologit_fit.json", _fit_payload(fit_week, data_week))
    write_json(
        out_dir / "gologit_commute_fit.json", _fit_payload(fit_commute, data_commute)
    )
    report = did_report(fit_week, data_week, fit_commute, data_commute)
    report.to_csv(out_dir / "did_report.csv")
    return {
        "week": (fit_week, data_week),
        "commute": (fit_commute, data_commute),
        "report": report,
    }


def stage_m2(panel: pd.DataFrame, config: PipelineConfig, out_dir: Path) -> dict:
    """Frequency on z-scored features; when exact collinearity is reported
    (the ten streetscape shares sum to one), the named dependent columns are
    dropped and the fit is retried on the rest."""
    X = panel[list(FEATURE_NAMES)].to_numpy(dtype=float)
    y = panel["frequency"].to_numpy(dtype=float)
    Z, means, stds = zscore(X, list(FEATURE_NAMES))
    try:
        fit = fit_ols(Z, y, tuple(FEATURE_NAMES))
        retained = tuple(FEATURE_NAMES)
        dropped: tuple[str, ...] = ()
    except RankDeficient as exc:
        dropped = exc.columns
        retained = tuple(n for n in FEATURE_NAMES if n not in dropped)
        cols = [FEATURE_NAMES.index(n) for n in retained]
        fit = fit_ols(Z[:, cols], y, retained)
    vifs = vif(Z[:, [FEATURE_NAMES.index(n) for n in retained]], retained)

    doc = fit.to_dict()
    doc["dropped_columns"] = list(dropped)
    doc["vif"] = {n: float(v) for n, v in vifs.items()}
    write_json(out_dir / "ols_fit.json", doc)

    pd.DataFrame(
        {
            "name": fit.all_names(),
            "coef": fit.all_coef(),
            "std_error": fit.std_errors,
            "t": fit.t_values,
            "p": fit.p_values,
            "ci_low": fit.ci_low,
            "ci_high": fit.ci_high,
            "vif": [np.nan] + [vifs[n] for n in retained],
        }
    ).to_csv(out_dir / "ols_fit.csv", index=False)
    zstats = {
        "means": dict(zip(FEATURE_NAMES, (float(v) for v in means))),
        "stds": dict(zip(FEATURE_NAMES, (float(v) for v in stds))),
    }
    return {
        "fit": fit,
        "retained": retained,
        "dropped": dropped,
        "zstats": zstats,
        "Z": Z,
    }


def stage_explain(
    panel: pd.DataFrame, m2: dict, config: PipelineConfig, out_dir: Path
) -> pd.DataFrame:
    """Per-school attribution of the fitted model against the panel
    background, long CSV plus the mean-|phi| ranking."""
    fit = m2["fit"]
    retained = m2["retained"]
    cols = [FEATURE_NAMES.index(n) for n in retained]
    Zr = m2["Z"][:, cols]
    phi_rows = np.empty_like(Zr)
    for i in range(len(Zr)):
        phi_rows[i] = shapley_linear(fit, Zr[i], Zr).phi
    frame = pd.DataFrame(
        {
            "school_id": np.repeat(panel["school_id"].to_numpy(), len(retained)),
            "feature": list(retained) * len(Zr),
            "phi": phi_rows.ravel(),
        }
    )
    frame.to_csv(out_dir / "explanations.csv", index=False)
    ranking = shap_importance(phi_rows, retained)
    write_json(
        out_dir / "importance.json",
        {
            "n_schools": int(len(Zr)),
            "ranking": [[name, value] for name, value in ranking],
        },
    )
    return frame


def stage_score(
    panel: pd.DataFrame, m2: dict, config: PipelineConfig, out_dir: Path
) -> ScoringFunction:
    """Normalized scorer from the significant subset, per-school scores,
    and the score-vs-frequency correlation check."""
    fit = m2["fit"]
    subset = significant_subset(fit, alpha=config.p_threshold)
    scoring = build_scoring(
        fit,
        subset,
        means=m2["zstats"]["means"],
        stds=m2["zstats"]["stds"],
        alpha=config.score_alpha,
    )
    feature_rows = panel[list(FEATURE_NAMES)].to_dict("records")
    observed = panel["frequency"].to_numpy(dtype=float)
    validation = validate_scores(scoring, feature_rows, observed)
    doc = scoring.to_dict()
    doc["validation"] = validation
    write_json(out_dir / "scoring.json", doc)

    jams = np.array([scoring.jam(row) for row in feature_rows])
    pd.DataFrame(
        {
            "school_id": panel["school_id"],
            "frequency": observed,
            "jam_score": jams,
            "env_score": scoring.alpha - jams,
        }
    ).to_csv(out_dir / "scores.csv", index=False)
    return scoring


def write_manifest(
    out_dir: Path, config: PipelineConfig, input_hashes: dict[str, str]
) -> dict:
    artifacts = {}
    for name in ARTIFACT_NAMES:
        p = out_dir / name
        if p.exists():
            artifacts[name] = sha256_file(p)
    doc = {
        "config": config.to_dict(),
        "inputs": dict(sorted(input_hashes.items())),
        "artifacts": artifacts,
    }
    write_json(out_dir / MANIFEST_NAME, doc)
    return doc


def run_pipeline(
    input_dir: str | Path,
    out_dir: str | Path,
    config: PipelineConfig | None = None,
) -> dict:
    """All stages in order on real input files."""
    config = config or PipelineConfig()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    inputs = load_inputs(input_dir, config)
    nbhds = stage_neighborhoods(inputs, config, out_dir)
    scene_model = stage_scenescape(inputs, config, out_dir)
    panel = stage_panel(inputs, nbhds, scene_model, config, out_dir)
    return _finish_run(inputs, nbhds, scene_model, panel, config, out_dir)


def _finish_run(
    inputs: Inputs,
    nbhds: dict[str, Neighborhood],
    scene_model: ScenescapeModel,
    panel: pd.DataFrame,
    config: PipelineConfig,
    out_dir: Path,
) -> dict:
    m1 = stage_m1(inputs, config, out_dir)
    m2 = stage_m2(panel, config, out_dir)
    explanations = stage_explain(panel, m2, config, out_dir)
    scoring = stage_score(panel, m2, config, out_dir)
    manifest = write_manifest(out_dir, config, inputs.hashes)
    return {
        "inputs": inputs,
        "neighborhoods": nbhds,
        "scene_model": scene_model,
        "panel": panel,
        "m1": m1,
        "m2": m2,
        "explanations": explanations,
        "scoring": scoring,
        "manifest": manifest,
    }


# ---------------------------------------------------------------------------
# synthetic study

def run_synthetic(
    spec=None,
    seed: int = 0,
    out_dir: str | Path = "synth_run",
    n_obs: int = 50_000,
    config: PipelineConfig | None = None,
) -> dict:
    """Generate a city, write its input files, and run the pipeline on them.

    The observation stream drives the ordered-logit stage. The frequency
    outcome is planted directly on the features as the pipeline measures
    them, which gives the linear stage a known answer. City files land in
    out_dir/city, artifacts in out_dir/artifacts.
    """
    from .synth import (
        SynthSpec,
        gen_city,
        gen_jam,
        gen_observations,
        write_city,
        write_observations,
    )

    spec = spec or SynthSpec()
    config = config or PipelineConfig(seed=seed)
    if config.seed != seed:
        config = replace(config, seed=seed)
    out_dir = Path(out_dir)
    city_dir = out_dir / "city"
    art_dir = out_dir / "artifacts"
    art_dir.mkdir(parents=True, exist_ok=True)

    city = gen_city(spec, seed)
    write_city(city, city_dir)
    calendar = default_calendar()
    obs = gen_observations(
        spec,
        calendar,
        seed,
        n_obs=n_obs,
        road_ids=[s.id for s in city.network.segments],
    )
    write_observations(obs, city_dir / "observations.csv")

    cfg = replace(config, center=city.center)
    inputs = load_inputs(city_dir, cfg)
    nbhds = stage_neighborhoods(inputs, cfg, art_dir)
    scene_model = stage_scenescape(inputs, cfg, art_dir)
    panel = measure_features(inputs, nbhds, scene_model, cfg)
    X = panel[list(FEATURE_NAMES)].to_numpy(dtype=float)
    Z, _, _ = zscore(X, list(FEATURE_NAMES))
    jam, jam_info = gen_jam(spec, Z, seed)
    panel = panel.copy()
    panel["frequency"] = jam
    write_panel(panel, art_dir, source="planted")

    result = _finish_run(inputs, nbhds, scene_model, panel, cfg, art_dir)
    result["jam_info"] = jam_info
    result["city"] = city
    result["spec"] = spec
    return result

"""Command-line entry points, one subcommand per pipeline stage.

Every command exits 2 with a single JSON error object on stderr when a
domain error stops it, so wrappers can branch on {"error", "message"}
without scraping tracebacks.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click
import numpy as np
import pandas as pd

from .domain import FEATURE_NAMES, Neighborhood
from .errors import MissingArtifact, SchoolJamError
from .ingest.features import zscore
from .ols import OlsFit
from .pipeline import (
    MANIFEST_NAME,
    PipelineConfig,
    load_inputs,
    run_synthetic,
    stage_m1,
    stage_m2,
    stage_explain,
    stage_neighborhoods,
    stage_panel,
    stage_scenescape,
    stage_score,
    write_manifest,
)
from .scenescape import ScenescapeModel


def _die(exc: SchoolJamError) -> None:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    print(json.dumps(payload), file=sys.stderr)
    sys.exit(2)


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except SchoolJamError as exc:
            _die(exc)

    return wrapper


def _config(config_path: str | None, seed: int | None) -> PipelineConfig:
    fields: dict = {}
    if config_path:
        doc = json.loads(Path(config_path).read_text())
        allowed = {
            "radius_m",
            "congestion_cutoff",
            "score_alpha",
            "p_threshold",
            "seed",
            "center",
        }
        unknown = set(doc) - allowed
        if unknown:
            raise click.BadParameter(f"unknown config keys: {sorted(unknown)}")
        fields.update(doc)
        if fields.get("center") is not None:
            fields["center"] = tuple(fields["center"])
    if seed is not None:
        fields["seed"] = seed
    return PipelineConfig(**fields)


def _out(out_dir: str) -> Path:
    p = Path(out_dir)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _update_manifest(out_dir: Path, config: PipelineConfig, hashes=None) -> None:
    if hashes is None:
        existing = out_dir / MANIFEST_NAME
        hashes = {}
        if existing.exists():
            hashes = json.loads(existing.read_text()).get("inputs", {})
    write_manifest(out_dir, config, hashes)


def _load_neighborhoods(out_dir: Path) -> dict[str, Neighborhood]:
    path = out_dir / "neighborhoods.json"
    if not path.exists():
        raise MissingArtifact("neighborhoods.json not found; run ingest first")
    doc = json.loads(path.read_text())
    return {
        sid: Neighborhood(
            school_id=sid, road_ids=frozenset(ids), radius_m=doc["radius_m"]
        )
        for sid, ids in doc["schools"].items()
    }


def _load_panel(out_dir: Path) -> pd.DataFrame:
    path = out_dir / "panel.csv"
    if not path.exists():
        raise MissingArtifact("panel.csv not found; run features first")
    return pd.read_csv(path, dtype={"school_id": str})


def _load_m2(out_dir: Path, panel: pd.DataFrame) -> dict:
    path = out_dir / "ols_fit.json"
    if not path.exists():
        raise MissingArtifact("ols_fit.json not found; run fit-m2 first")
    doc = json.loads(path.read_text())
    fit = OlsFit.from_dict(doc)
    X = panel[list(FEATURE_NAMES)].to_numpy(dtype=float)
    Z, means, stds = zscore(X, list(FEATURE_NAMES))
    return {
        "fit": fit,
        "retained": fit.feature_names,
        "dropped": tuple(doc.get("dropped_columns", [])),
        "zstats": {
            "means": dict(zip(FEATURE_NAMES, (float(v) for v in means))),
            "stds": dict(zip(FEATURE_NAMES, (float(v) for v in stds))),
        },
        "Z": Z,
    }


@click.group()
def main() -> None:
    """School-run congestion analysis pipeline."""


@main.command()
@click.option("--input-dir", required=True, type=click.Path(exists=True))
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--seed", type=int, default=None)
@handle_errors
def ingest(input_dir, out_dir, config_path, seed):
    """Load inputs and write the school-buffer road membership."""
    cfg = _config(config_path, seed)
    out = _out(out_dir)
    inputs = load_inputs(input_dir, cfg)
    nbhds = stage_neighborhoods(inputs, cfg, out)
    _update_manifest(out, cfg, inputs.hashes)
    click.echo(f"{len(nbhds)} neighborhoods written to {out}")


@main.command()
@click.option("--input-dir", required=True, type=click.Path(exists=True))
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--seed", type=int, default=None)
@handle_errors
def scenescape(input_dir, out_dir, config_path, seed):
    """Cluster streetscape vectors into the per-category scenescapes."""
    cfg = _config(config_path, seed)
    out = _out(out_dir)
    inputs = load_inputs(input_dir, cfg)
    model = stage_scenescape(inputs, cfg, out)
    _update_manifest(out, cfg, inputs.hashes)
    click.echo(f"{model.n_scenescapes} scenescapes written to {out}")


@main.command()
@click.option("--input-dir", required=True, type=click.Path(exists=True))
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--seed", type=int, default=None)
@handle_errors
def features(input_dir, out_dir, config_path, seed):
    """Build the per-school feature panel with observed frequencies."""
    cfg = _config(config_path, seed)
    out = _out(out_dir)
    inputs = load_inputs(input_dir, cfg)
    nbhds = _load_neighborhoods(out)
    model_path = out / "scenescape_model.json"
    if not model_path.exists():
        raise MissingArtifact("scenescape_model.json not found; run scenescape first")
    model = ScenescapeModel.load(model_path)
    panel = stage_panel(inputs, nbhds, model, cfg, out)
    _update_manifest(out, cfg, inputs.hashes)
    click.echo(f"panel with {len(panel)} schools written to {out}")


@main.command("fit-m1")
@click.option("--input-dir", required=True, type=click.Path(exists=True))
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--seed", type=int, default=None)
@handle_errors
def fit_m1(input_dir, out_dir, config_path, seed):
    """Fit the two ordered-logit designs and write the effect table."""
    cfg = _config(config_path, seed)
    out = _out(out_dir)
    inputs = load_inputs(input_dir, cfg)
    m1 = stage_m1(inputs, cfg, out)
    _update_manifest(out, cfg, inputs.hashes)
    week_fit = m1["week"][0]
    click.echo(
        f"week fit loglik {week_fit.loglik:.1f}, converged={week_fit.converged}"
    )


@main.command("fit-m2")
@click.option("--out-dir", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--seed", type=int, default=None)
@handle_errors
def fit_m2(out_dir, config_path, seed):
    """Regress congestion frequency on the z-scored panel features."""
    cfg = _config(config_path, seed)
    out = Path(out_dir)
    panel = _load_panel(out)
    m2 = stage_m2(panel, cfg, out)
    _update_manifest(out, cfg)
    click.echo(
        f"R^2 {m2['fit'].r_squared:.4f}, dropped: {list(m2['dropped']) or 'none'}"
    )


@main.command()
@click.option("--out-dir", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--seed", type=int, default=None)
@handle_errors
def shap(out_dir, config_path, seed):
    """Per-school attribution and the importance ranking."""
    cfg = _config(config_path, seed)
    out = Path(out_dir)
    panel = _load_panel(out)
    m2 = _load_m2(out, panel)
    stage_explain(panel, m2, cfg, out)
    _update_manifest(out, cfg)
    click.echo(f"explanations for {len(panel)} schools written to {out}")


@main.command()
@click.option("--out-dir", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--seed", type=int, default=None)
@handle_errors
def score(out_dir, config_path, seed):
    """Build the normalized scorer and write per-school scores."""
    cfg = _config(config_path, seed)
    out = Path(out_dir)
    panel = _load_panel(out)
    m2 = _load_m2(out, panel)
    scoring = stage_score(panel, m2, cfg, out)
    _update_manifest(out, cfg)
    click.echo(
        f"scores for {len(panel)} schools written (alpha={scoring.alpha:g})"
    )


@main.command()
@click.option("--out-dir", required=True, type=click.Path(exists=True))
@handle_errors
def report(out_dir):
    """Summarize a finished run into report.md."""
    out = Path(out_dir)
    lines = _render_report(out)
    (out / "report.md").write_text("\n".join(lines) + "\n")
    click.echo(f"report.md written to {out}")


def _render_report(out: Path) -> list[str]:
    def need(name: str) -> Path:
        p = out / name
        if not p.exists():
            raise MissingArtifact(f"{name} not found in {out}")
        return p

    lines = ["# School-run congestion study", ""]

    week = json.loads(need("gologit_fit.json").read_text())
    lines += ["## Ordered-logit effects (full week)", ""]
    lines += _ame_table(week)
    commute = json.loads(need("gologit_commute_fit.json").read_text())
    lines += ["", "## Ordered-logit effects (morning commute)", ""]
    lines += _ame_table(commute)

    ols = json.loads(need("ols_fit.json").read_text())
    lines += [
        "",
        "## Frequency regression",
        "",
        f"- schools: {ols['n_obs']}",
        f"- R^2: {ols['r_squared']:.4f} (adjusted {ols['adj_r_squared']:.4f})",
        f"- dropped collinear columns: {ols.get('dropped_columns') or 'none'}",
        "",
        "| feature | coef | p |",
        "|---|---|---|",
    ]
    order = np.argsort([abs(t) for t in ols["t_values"][1:]])[::-1]
    for i in list(order[:10]):
        lines.append(
            f"| {ols['feature_names'][i]} | {ols['coef'][i]:+.5f} "
            f"| {ols['p_values'][i + 1]:.2e} |"
        )

    importance = json.loads(need("importance.json").read_text())
    lines += ["", "## Attribution ranking (mean |phi|)", ""]
    for name, value in importance["ranking"][:10]:
        lines.append(f"- {name}: {value:.5f}")

    scoring = json.loads(need("scoring.json").read_text())
    v = scoring.get("validation", {})
    lines += [
        "",
        "## Scoring",
        "",
        f"- features scored: {len(scoring['feature_names'])}",
        f"- alpha: {scoring['alpha']:g}",
        f"- score-frequency correlation: r={v.get('r', float('nan')):.4f}, "
        f"r^2={v.get('r_squared', float('nan')):.4f}",
    ]
    return lines


def _ame_table(payload: dict) -> list[str]:
    ame = payload["ame"]
    cats = ("smooth", "slow", "congested", "severely congested")
    lines = ["| dummy | " + " | ".join(cats) + " |", "|---|---|---|---|---|"]
    effects = np.asarray(ame["effects"])
    for k, name in enumerate(ame["feature_names"]):
        cells = " | ".join(f"{100 * effects[j, k]:+.2f} pp" for j in range(4))
        lines.append(f"| {name} | {cells} |")
    return lines


@main.command()
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--n-obs", type=int, default=50_000, show_default=True)
@click.option("--grid-nodes", type=int, default=28, show_default=True)
@click.option("--n-schools", type=int, default=846, show_default=True)
@handle_errors
def synth(out_dir, seed, n_obs, grid_nodes, n_schools):
    """Generate a synthetic city and run the full pipeline on it."""
    from .synth import SynthSpec

    spec = SynthSpec(grid_nodes=grid_nodes, n_schools=n_schools)
    result = run_synthetic(spec=spec, seed=seed, out_dir=out_dir, n_obs=n_obs)
    fit = result["m2"]["fit"]
    click.echo(
        f"synthetic run complete: {len(result['panel'])} schools, "
        f"R^2 {fit.r_squared:.4f}, artifacts in {Path(out_dir) / 'artifacts'}"
    )


@main.command()
@click.option("--artifacts", required=True, type=click.Path(exists=True))
@click.option("--bind", default="127.0.0.1:8000", show_default=True)
@handle_errors
def serve(artifacts, bind):
    """Serve the what-if API over a finished artifact directory."""
    import uvicorn

    from .serve import build_app

    host, _, port = bind.rpartition(":")
    if not host or not port.isdigit():
        raise click.BadParameter("--bind must look like HOST:PORT")
    app = build_app(artifacts)
    uvicorn.run(app, host=host, port=int(port), log_level="warning")


if __name__ == "__main__":
    main()

"""Synthetic-city generator: structure counts, planted distributions,
determinism, and the exact-R^2 outcome construction."""

import math
import warnings

import numpy as np
import pytest

from schooljam.domain import FEATURE_NAMES, RoadCategory
from schooljam.errors import InvalidParams, SpecInfeasible
from schooljam.ingest.timeslots import default_calendar
from schooljam.synth import (
    SynthSpec,
    gen_city,
    gen_jam,
    gen_observations,
    largest_remainder,
    planted_level_probs,
    write_city,
    write_observations,
)


def test_minimal_grid_segment_and_node_counts():
    spec = SynthSpec(grid_nodes=4, n_schools=10)
    city = gen_city(spec, seed=0)
    # an n x n lattice has 2 n (n-1) unit segments
    assert len(city.network.segments) == 24
    assert len(city.network.nodes) == 16
    assert len(city.schools) == 10


def test_default_city_shape():
    spec = SynthSpec()
    city = gen_city(spec, seed=1)
    assert len(city.network.segments) == 2 * 28 * 27
    assert len(city.schools) == 846
    cats = {seg.category for seg in city.network.segments}
    assert cats == {RoadCategory.ORDINARY, RoadCategory.MAIN, RoadCategory.EXPRESS}


def test_schools_inside_the_city_square():
    spec = SynthSpec(grid_nodes=8, n_schools=50)
    city = gen_city(spec, seed=2)
    for school in city.schools:
        x, y = school.location
        assert 0.0 <= x <= spec.side_m
        assert 0.0 <= y <= spec.side_m


def test_spec_validation():
    with pytest.raises(SpecInfeasible):
        SynthSpec(grid_nodes=3)
    with pytest.raises(SpecInfeasible):
        SynthSpec(cell_m=0.0)
    with pytest.raises(SpecInfeasible):
        SynthSpec(n_schools=0)
    with pytest.raises(InvalidParams):
        SynthSpec(alphas=(-2.0, -1.0, -3.0))  # not decreasing
    with pytest.raises(InvalidParams):
        SynthSpec(alphas=(-1.0, -2.0), beta_rows=((0, 0, 0),))
    with pytest.raises(InvalidParams):
        SynthSpec(m2_coefs={"not_a_feature": 1.0})
    with pytest.raises(InvalidParams):
        SynthSpec(target_r2=0.0)


def test_planted_level_probs_closed_form():
    spec = SynthSpec()
    for dummies in ((0, 0, 0), (1, 0, 0), (1, 1, 0), (1, 0, 1)):
        probs = planted_level_probs(spec, dummies)
        assert len(probs) == 4
        assert sum(probs) == pytest.approx(1.0, abs=1e-12)
        gs = [
            1.0 / (1.0 + math.exp(-(a + sum(b * d for b, d in zip(row, dummies)))))
            for a, row in zip(spec.alphas, spec.beta_rows)
        ]
        assert probs[0] == pytest.approx(1.0 - gs[0])
        assert probs[3] == pytest.approx(gs[2])


def test_planted_probs_reject_crossed_splits():
    spec = SynthSpec(
        alphas=(0.5, 0.0, -0.5),
        beta_rows=((0.0, 0.0, 0.0), (2.0, 0.0, 0.0), (0.0, 0.0, 0.0)),
    )
    # the middle split overtakes the first at work=1
    with pytest.raises(InvalidParams):
        planted_level_probs(spec, (1, 0, 0))


def test_largest_remainder_properties():
    rng = np.random.default_rng(0)
    for _ in range(50):
        k = rng.integers(2, 9)
        targets = rng.random(k) + 1e-3
        total = int(rng.integers(0, 500))
        out = largest_remainder(targets, total)
        assert out.sum() == total
        quota = targets * total / targets.sum()
        assert (np.abs(out - quota) < 1.0).all()
    with pytest.raises(InvalidParams):
        largest_remainder(np.array([0.0, 0.0]), 5)
    with pytest.raises(InvalidParams):
        largest_remainder(np.array([1.0, -0.5]), 5)


def test_balanced_mode_pins_empirical_shares():
    spec = SynthSpec()
    cal = default_calendar()
    obs = gen_observations(spec, cal, seed=0, n_obs=30_000, road_ids=["R1"])
    assert len(obs) == 30_000
    assert set(obs.columns) == {"road_id", "timestamp", "level"}
    from schooljam.ingest.timeslots import label_timeslot

    combos = {}
    for ts, level in zip(obs["timestamp"], obs["level"]):
        slot = label_timeslot(ts, cal)
        key = (slot.work, slot.school, slot.exam)
        combos.setdefault(key, []).append(level)
    for key, levels in combos.items():
        counts = np.bincount(levels, minlength=5)[1:]
        share = counts / counts.sum()
        planted = np.asarray(planted_level_probs(spec, key))
        # balanced allocation is sharp to less than one row per level
        assert (np.abs(counts - planted * counts.sum()) <= 1.0 + 1e-9).all(), key
        assert np.abs(share - planted).max() < 4.0 / counts.sum()


def test_iid_mode_matches_marginal_shares():
    # neutral dummy parameters: the planted distribution is identical in
    # every slot, so pooled shares estimate it directly
    spec = SynthSpec(
        alphas=(2.0, 0.0, -2.0),
        beta_rows=((0.0, 0.0, 0.0),) * 3,
    )
    cal = default_calendar()
    obs = gen_observations(spec, cal, seed=123, n_obs=100_000, mode="iid")
    counts = np.bincount(obs["level"].to_numpy(), minlength=5)[1:]
    share = counts / counts.sum()
    expect = np.array(planted_level_probs(spec, (0, 0, 0)))
    g = 1.0 / (1.0 + np.exp(-2.0))
    assert np.abs(expect - np.array([1 - g, g - 0.5, 0.5 - (1 - g), 1 - g])).max() < 1e-12
    assert np.abs(share - expect).max() < 0.01


def test_observation_stream_is_seed_deterministic():
    spec = SynthSpec()
    cal = default_calendar()
    a = gen_observations(spec, cal, seed=7, n_obs=5_000, mode="iid")
    b = gen_observations(spec, cal, seed=7, n_obs=5_000, mode="iid")
    c = gen_observations(spec, cal, seed=8, n_obs=5_000, mode="iid")
    assert a.equals(b)
    assert not a.equals(c)


def test_gen_observations_input_checks():
    spec = SynthSpec()
    cal = default_calendar()
    with pytest.raises(InvalidParams):
        gen_observations(spec, cal, seed=0, n_obs=10, mode="weird")
    with pytest.raises(InvalidParams):
        gen_observations(spec, cal, seed=0, n_obs=0)
    with pytest.raises(InvalidParams):
        gen_observations(spec, cal, seed=0, n_obs=10, road_ids=[])


def test_gen_jam_exact_r2_and_recovery():
    rng = np.random.default_rng(0)
    n = 400
    Z = rng.normal(size=(n, len(FEATURE_NAMES)))
    spec = SynthSpec()
    jam, info = gen_jam(spec, Z, seed=5)
    assert info["n_clipped"] == 0
    beta = spec.m2_beta_vector()
    design = np.concatenate([np.ones((n, 1)), Z], axis=1)
    coef, *_ = np.linalg.lstsq(design, jam, rcond=None)
    # orthogonalized noise leaves the planted coefficients untouched
    assert abs(coef[0] - spec.m2_intercept) < 1e-10
    assert np.abs(coef[1:] - beta).max() < 1e-10
    fitted = design @ coef
    resid = jam - fitted
    r2 = 1.0 - float(resid @ resid) / float(((jam - jam.mean()) ** 2).sum())
    assert abs(r2 - spec.target_r2) < 1e-10


def test_gen_jam_noiseless_when_target_is_one():
    rng = np.random.default_rng(1)
    Z = rng.normal(size=(60, len(FEATURE_NAMES)))
    spec = SynthSpec(target_r2=1.0)
    jam, info = gen_jam(spec, Z, seed=9)
    expect = spec.m2_intercept + Z @ spec.m2_beta_vector()
    assert np.abs(jam - np.clip(expect, 0, 1)).max() == 0.0
    assert info["sd_noise"] == 0.0


def test_gen_jam_warns_on_heavy_clipping():
    rng = np.random.default_rng(2)
    Z = rng.normal(size=(200, len(FEATURE_NAMES)))
    coefs = {name: 0.8 for name in FEATURE_NAMES[:10]}
    spec = SynthSpec(m2_coefs=coefs)  # huge planted effects push outside [0, 1]
    with pytest.warns(UserWarning, match="clipped"):
        jam, info = gen_jam(spec, Z, seed=3)
    assert info["n_clipped"] > 0.01 * len(Z)
    assert jam.min() >= 0.0 and jam.max() <= 1.0


def test_gen_jam_shape_check():
    spec = SynthSpec()
    with pytest.raises(InvalidParams):
        gen_jam(spec, np.zeros((10, 3)), seed=0)


def test_city_files_round_trip(tmp_path):
    spec = SynthSpec(grid_nodes=5, n_schools=12)
    city = gen_city(spec, seed=4)
    paths = write_city(city, tmp_path)
    for path in paths.values():
        assert path.exists()
        assert path.stat().st_size > 0

    from schooljam.ingest.io import load_observations, load_roads, load_schools

    network = load_roads(paths["roads"])
    assert len(network.segments) == len(city.network.segments)
    schools = load_schools(paths["schools"], spec.center)
    assert len(schools) == 12

    obs = gen_observations(spec, default_calendar(), seed=4, n_obs=500)
    obs_path = write_observations(obs, tmp_path / "observations.csv")
    assert obs_path.exists()
    loaded = load_observations(obs_path)
    assert len(loaded) == 500


def test_same_seed_same_city_bytes(tmp_path):
    spec = SynthSpec(grid_nodes=5, n_schools=12)
    dirs = []
    for name in ("a", "b"):
        out = tmp_path / name
        out.mkdir()
        write_city(gen_city(spec, seed=99), out)
        dirs.append(out)
    files_a = sorted(p.relative_to(dirs[0]) for p in dirs[0].rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(dirs[1]) for p in dirs[1].rglob("*") if p.is_file())
    assert files_a == files_b
    for rel in files_a:
        assert (dirs[0] / rel).read_bytes() == (dirs[1] / rel).read_bytes()

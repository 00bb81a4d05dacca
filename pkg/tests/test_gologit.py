"""Ordered-logit estimator checks against closed forms, finite differences,
and planted-parameter recovery."""

import numpy as np
import pytest
from scipy.special import expit

from schooljam.errors import (
    EmptyCategory,
    IndexOutOfRange,
    NotConverged,
    SeparationDetected,
    UnconvergedFit,
    ValidationError,
)
from schooljam.gologit import (
    FitOptions,
    GologitData,
    GologitFit,
    GologitSpec,
    build_commute_design,
    build_did_design,
    category_probs,
    cum_prob,
    did_report,
    discrete_changes,
    fit_gologit,
    log_likelihood,
    marginal_effects,
    wald_tests,
    _hessian,
    _loglik_parts,
)
from schooljam.ingest.timeslots import default_calendar
from schooljam.synth import SynthSpec, gen_observations

from conftest import central_diff_gradient

REFERENCE_LEVEL_COUNTS = np.array([1_314_210.0, 41_193.0, 39_078.0, 6_778.0])


def _random_valid_data(rng, n=400, k=3, m=4):
    X = (rng.random((n, k)) < 0.5).astype(float)
    y = rng.integers(1, m + 1, size=n)
    return GologitData(X=X, y=y, n_categories=m)


def _parallel_theta(rng, k=3, m=4):
    """Random parameters with shared slopes: split curves never cross, so
    probabilities stay positive for every x. The alpha gaps are wide enough
    that small per-split perturbations cannot make the curves cross on a
    binary design either."""
    alphas = np.sort(rng.uniform(-2.5, 2.5, m - 1))[::-1]
    alphas += np.linspace(0.9, 0.0, m - 1)  # enforce strict gaps
    beta = rng.uniform(-0.8, 0.8, k)
    theta = np.concatenate([[a, *beta] for a in alphas])
    return theta


def test_intercept_only_matches_closed_form():
    X = np.zeros((4, 0))
    y = np.array([1, 2, 3, 4])
    data = GologitData(X=X, y=y, n_categories=4, weights=REFERENCE_LEVEL_COUNTS)
    fit = fit_gologit(GologitSpec(feature_names=()), data)
    total = REFERENCE_LEVEL_COUNTS.sum()
    tail = np.cumsum(REFERENCE_LEVEL_COUNTS[::-1])[::-1]
    expected = np.log(tail[1:] / (total - tail[1:]))
    assert np.abs(fit.alphas.ravel() - expected).max() < 1e-6
    assert fit.converged
    # the closed-form start IS the MLE here, so no iterations are needed
    assert fit.n_iter == 0


def test_gradient_matches_central_differences():
    rng = np.random.default_rng(42)
    data = _random_valid_data(rng, n=200)
    for _ in range(12):
        theta = _parallel_theta(rng)
        theta += rng.uniform(-0.05, 0.05, theta.shape)  # mild split separation
        ll, grad = log_likelihood(theta, data)
        num = central_diff_gradient(lambda t: log_likelihood(t, data)[0], theta)
        denom = max(1.0, np.abs(num).max())
        assert np.abs(grad - num).max() / denom < 1e-6


def test_hessian_matches_gradient_differences():
    rng = np.random.default_rng(7)
    data = _random_valid_data(rng, n=150)
    theta = _parallel_theta(rng)
    H = _hessian(theta, data)
    assert np.abs(H - H.T).max() < 1e-10
    num = np.zeros_like(H)
    h = 1e-6
    for i in range(len(theta)):
        up, dn = theta.copy(), theta.copy()
        up[i] += h
        dn[i] -= h
        gu = log_likelihood(up, data)[1]
        gd = log_likelihood(dn, data)[1]
        num[:, i] = (gu - gd) / (2 * h)
    scale = max(1.0, np.abs(num).max())
    assert np.abs(H - num).max() / scale < 1e-5


def test_category_probs_sum_to_one():
    rng = np.random.default_rng(3)
    spec = GologitSpec(feature_names=("a", "b", "c"))
    for _ in range(50):
        theta = _parallel_theta(rng)
        alphas = theta.reshape(3, 4)[:, 0]
        betas = theta.reshape(3, 4)[:, 1:]
        fit = GologitFit(
            spec=spec,
            alphas=alphas,
            betas=betas,
            covariance=None,
            loglik=0.0,
            converged=True,
            n_obs=1,
            n_iter=0,
            gradient_max_norm=0.0,
            negative_prob_rows=0,
        )
        x = rng.random(3)
        p = category_probs(fit, x)
        assert abs(p.sum() - 1.0) < 1e-12
        assert (p >= 0).all()


def test_cum_prob_and_index_bounds():
    spec = GologitSpec(feature_names=("a",))
    fit = GologitFit(
        spec=spec,
        alphas=np.array([1.0, 0.0, -1.0]),
        betas=np.zeros((3, 1)),
        covariance=None,
        loglik=0.0,
        converged=True,
        n_obs=1,
        n_iter=0,
        gradient_max_norm=0.0,
        negative_prob_rows=0,
    )
    x = np.zeros(1)
    assert cum_prob(fit, x, 1) == pytest.approx(expit(1.0))
    assert cum_prob(fit, x, 3) == pytest.approx(expit(-1.0))
    with pytest.raises(IndexOutOfRange):
        cum_prob(fit, x, 0)
    with pytest.raises(IndexOutOfRange):
        cum_prob(fit, x, 4)


def test_recovery_single_seed():
    spec = SynthSpec()
    cal = default_calendar()
    obs = gen_observations(spec, cal, seed=11, n_obs=50_000, road_ids=["R1", "R2"])
    data = build_did_design(obs, cal)
    fit = fit_gologit(GologitSpec(feature_names=("work", "school", "exam")), data)
    assert fit.converged
    assert np.abs(fit.alphas - np.array(spec.alphas)).max() < 0.05
    assert np.abs(fit.betas - np.array(spec.beta_rows)).max() < 0.05


def test_row_order_invariance():
    rng = np.random.default_rng(5)
    spec = SynthSpec()
    cal = default_calendar()
    obs = gen_observations(spec, cal, seed=2, n_obs=8_000, road_ids=["R1"])
    data = build_did_design(obs, cal)
    gspec = GologitSpec(feature_names=("work", "school", "exam"))
    fit_a = fit_gologit(gspec, data)

    perm = rng.permutation(len(data.y))
    data_b = GologitData(
        X=data.X[perm], y=data.y[perm], n_categories=4, weights=data.w[perm]
    )
    fit_b = fit_gologit(gspec, data_b)
    assert np.abs(fit_a.theta - fit_b.theta).max() < 1e-8


def test_empty_category_raises():
    X = np.zeros((30, 1))
    y = np.array([1, 2, 4] * 10)  # level 3 never observed
    data = GologitData(X=X, y=y, n_categories=4)
    with pytest.raises(EmptyCategory):
        fit_gologit(GologitSpec(feature_names=("a",)), data)


def test_separation_detected():
    # x perfectly predicts the outcome split
    X = np.array([[0.0]] * 40 + [[1.0]] * 40)
    y = np.array([1] * 40 + [2] * 40)
    data = GologitData(X=X, y=y, n_categories=2)
    with pytest.raises(SeparationDetected):
        fit_gologit(GologitSpec(feature_names=("a",), n_categories=2), data)


def test_strict_mode_raises_not_converged():
    # a tolerance below the float noise floor of the summed likelihood can
    # never be met, so strict mode must refuse the fit
    rng = np.random.default_rng(0)
    data = _random_valid_data(rng, n=300)
    tight = GologitSpec(
        feature_names=("a", "b", "c"), options=FitOptions(gtol=1e-20)
    )
    with pytest.raises(NotConverged):
        fit_gologit(tight, data, strict=True)


def test_lenient_mode_warns_instead():
    rng = np.random.default_rng(0)
    data = _random_valid_data(rng, n=300)
    tight = GologitSpec(
        feature_names=("a", "b", "c"), options=FitOptions(gtol=1e-20)
    )
    with pytest.warns(UserWarning, match="gradient max-norm"):
        fit = fit_gologit(tight, data)
    assert not fit.converged


def test_marginal_effects_columns_sum_to_zero():
    rng = np.random.default_rng(9)
    spec = SynthSpec()
    cal = default_calendar()
    obs = gen_observations(spec, cal, seed=4, n_obs=10_000, road_ids=["R1"])
    data = build_did_design(obs, cal)
    fit = fit_gologit(GologitSpec(feature_names=("work", "school", "exam")), data)
    for mode in ("AME", "MEM"):
        me = marginal_effects(fit, data, mode=mode)
        assert np.abs(me.effects.sum(axis=0)).max() < 1e-10
        assert me.std_errors.shape == me.effects.shape
        assert ((me.p_values >= 0) & (me.p_values <= 1)).all()


def test_marginal_effects_need_convergence():
    spec = GologitSpec(feature_names=("a",))
    fit = GologitFit(
        spec=spec,
        alphas=np.array([0.0, -1.0, -2.0]),
        betas=np.zeros((3, 1)),
        covariance=np.eye(6),
        loglik=0.0,
        converged=False,
        n_obs=10,
        n_iter=0,
        gradient_max_norm=1.0,
        negative_prob_rows=0,
    )
    data = GologitData(X=np.zeros((4, 1)), y=np.array([1, 2, 3, 4]), n_categories=4)
    with pytest.raises(UnconvergedFit):
        marginal_effects(fit, data)


def test_ame_standard_errors_match_numeric_jacobian():
    rng = np.random.default_rng(21)
    spec = SynthSpec()
    cal = default_calendar()
    obs = gen_observations(spec, cal, seed=8, n_obs=6_000, road_ids=["R1"])
    data = build_did_design(obs, cal)
    fit = fit_gologit(GologitSpec(feature_names=("work", "school", "exam")), data)
    me = marginal_effects(fit, data, mode="AME")

    from schooljam.gologit import _unpack

    def ame_at(theta):
        alphas, betas = _unpack(theta, 3, 3)
        G = expit(alphas[None, :] + data.X @ betas.T)
        W = G * (1 - G)
        padded = np.zeros((len(data.y), 5))
        padded[:, 1:4] = W
        out = np.empty((4, 3))
        for j in range(4):
            for kk in range(3):
                bl = betas[j - 1, kk] if j >= 1 else 0.0
                bu = betas[j, kk] if j < 3 else 0.0
                term = padded[:, j] * bl - padded[:, j + 1] * bu
                out[j, kk] = np.average(term, weights=data.w)
        return out

    base = ame_at(fit.theta)
    assert np.abs(base - me.effects).max() < 1e-10

    h = 1e-6
    var = np.zeros((4, 3))
    J = np.zeros((4, 3, len(fit.theta)))
    for i in range(len(fit.theta)):
        up, dn = fit.theta.copy(), fit.theta.copy()
        up[i] += h
        dn[i] -= h
        J[:, :, i] = (ame_at(up) - ame_at(dn)) / (2 * h)
    for j in range(4):
        for kk in range(3):
            g = J[j, kk]
            var[j, kk] = g @ fit.covariance @ g
    num_se = np.sqrt(var)
    assert np.abs(num_se - me.std_errors).max() / num_se.max() < 1e-5


def test_discrete_changes_shape_and_meaning():
    spec = SynthSpec()
    cal = default_calendar()
    obs = gen_observations(spec, cal, seed=6, n_obs=6_000, road_ids=["R1"])
    data = build_did_design(obs, cal)
    fit = fit_gologit(GologitSpec(feature_names=("work", "school", "exam")), data)
    dc = discrete_changes(fit, data)
    assert dc.shape == (4, 3)
    # flipping a dummy reallocates probability mass, never creates it
    assert np.abs(dc.sum(axis=0)).max() < 1e-12


def test_wald_table():
    spec = SynthSpec()
    cal = default_calendar()
    obs = gen_observations(spec, cal, seed=13, n_obs=8_000, road_ids=["R1"])
    data = build_did_design(obs, cal)
    fit = fit_gologit(GologitSpec(feature_names=("work", "school", "exam")), data)
    table = wald_tests(fit)
    assert len(table.names) == len(fit.theta)
    assert table.names[0] == "alpha:1"
    assert "school:2" in table.names
    assert np.allclose(table.estimates, fit.theta)
    assert (table.std_errors > 0).all()
    assert np.allclose(table.ci_low, table.estimates - 1.96 * table.std_errors)
    assert np.allclose(table.ci_high, table.estimates + 1.96 * table.std_errors)
    assert ((table.p >= 0) & (table.p <= 1)).all()
    doc = table.to_dict()
    assert set(doc) == {"names", "estimates", "std_errors", "z", "p", "ci_low", "ci_high"}


def test_did_report_layout():
    spec = SynthSpec()
    cal = default_calendar()
    obs = gen_observations(spec, cal, seed=19, n_obs=12_000, road_ids=["R1"])
    dw = build_did_design(obs, cal)
    fw = fit_gologit(GologitSpec(feature_names=("work", "school", "exam")), dw)
    dcm = build_commute_design(obs, cal)
    fcm = fit_gologit(
        GologitSpec(feature_names=("commute_school", "commute_no_school")), dcm
    )
    report = did_report(fw, dw, fcm, dcm)
    frame = report.to_frame()
    assert set(frame["model"]) == {"within_week", "commute_decomposition"}
    assert set(frame["dummy"]) == {
        "work",
        "school",
        "exam",
        "commute_school",
        "commute_no_school",
    }
    # 5 dummies x 4 categories
    assert len(frame) == 20
    assert {"category", "effect_pct", "se_pct", "p"} <= set(frame.columns)
    assert set(frame["category"]) == {
        "smooth",
        "slow",
        "congested",
        "severely_congested",
    }
    # effects are in percentage points, so each dummy's column sums to zero
    sums = frame.groupby(["model", "dummy"])["effect_pct"].sum()
    assert np.abs(sums.to_numpy()).max() < 1e-8


def test_validation_errors():
    with pytest.raises(ValidationError):
        GologitData(X=np.zeros((3, 1)), y=np.array([1, 2, 5]), n_categories=4)
    with pytest.raises(ValidationError):
        GologitData(
            X=np.zeros((3, 1)),
            y=np.array([1, 2, 3]),
            n_categories=4,
            weights=np.array([1.0, -1.0, 1.0]),
        )
    with pytest.raises(ValidationError):
        GologitData(
            X=np.full((3, 1), np.nan), y=np.array([1, 2, 3]), n_categories=4
        )


def test_loglik_parts_clamped_vs_raw():
    rng = np.random.default_rng(1)
    data = _random_valid_data(rng, n=60)
    theta = _parallel_theta(rng)
    ll_c, grad_c, *_ = _loglik_parts(theta, data, clamp=True)
    ll_r, grad_r = log_likelihood(theta, data)
    assert ll_c == pytest.approx(ll_r)
    assert np.abs(grad_c - grad_r).max() < 1e-12

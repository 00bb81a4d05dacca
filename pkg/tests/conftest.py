"""Shared fixtures: one small synthetic study reused across modules, plus
independently coded oracles (brute-force Shapley, normal-equations OLS,
finite differences) that the fast library code is checked against."""

import itertools
import math

import numpy as np
import pytest

from schooljam.pipeline import run_synthetic
from schooljam.synth import SynthSpec


@pytest.fixture(scope="session")
def small_run(tmp_path_factory):
    """A complete small-city pipeline run: 10x10 grid, 300 schools.

    300 schools keeps every planted Model-2 coefficient detectable at
    p < 0.1 while the whole run stays under a few seconds.
    """
    out = tmp_path_factory.mktemp("smallrun")
    spec = SynthSpec(grid_nodes=10, n_schools=300)
    result = run_synthetic(spec=spec, seed=3, out_dir=out, n_obs=20000)
    return {"dir": out, "result": result, "spec": spec, "seed": 3}


@pytest.fixture(scope="session")
def small_artifacts(small_run):
    return small_run["dir"] / "artifacts"


# ---------------------------------------------------------------------------
# oracle implementations, deliberately written the slow obvious way


def ols_normal_equations(X, y):
    """Textbook (X'X)^-1 X'y with an explicit intercept column."""
    n = len(y)
    A = np.column_stack([np.ones(n), X])
    xtx = A.T @ A
    beta = np.linalg.solve(xtx, A.T @ y)
    resid = y - A @ beta
    df = n - A.shape[1]
    sigma2 = float(resid @ resid) / df
    cov = sigma2 * np.linalg.inv(xtx)
    return beta, np.sqrt(np.diag(cov)), sigma2


def shapley_bruteforce(model, x, background, m):
    """Definition-level Shapley values: iterate every coalition with
    factorial weights. Exponential, fine for m <= 12."""
    x = np.asarray(x, dtype=float)
    bg = np.atleast_2d(np.asarray(background, dtype=float))
    fact = math.factorial
    phi = np.zeros(m)

    def value(coal):
        comp = bg.copy()
        for j in coal:
            comp[:, j] = x[j]
        return float(np.mean(model(comp)))

    for i in range(m):
        others = [j for j in range(m) if j != i]
        for size in range(m):
            w = fact(size) * fact(m - size - 1) / fact(m)
            for coal in itertools.combinations(others, size):
                phi[i] += w * (value(coal + (i,)) - value(coal))
    return phi


def interaction_bruteforce(model, x, background, m):
    """Pairwise Shapley interaction index straight from its definition."""
    x = np.asarray(x, dtype=float)
    bg = np.atleast_2d(np.asarray(background, dtype=float))
    fact = math.factorial

    def value(coal):
        comp = bg.copy()
        for j in coal:
            comp[:, j] = x[j]
        return float(np.mean(model(comp)))

    out = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            rest = [k for k in range(m) if k not in (i, j)]
            total = 0.0
            for size in range(m - 1):
                w = fact(size) * fact(m - size - 2) / (2.0 * fact(m - 1))
                for coal in itertools.combinations(rest, size):
                    d = (
                        value(coal + (i, j))
                        - value(coal + (i,))
                        - value(coal + (j,))
                        + value(coal)
                    )
                    total += w * d
            out[i, j] = out[j, i] = total
    return out


def central_diff_gradient(f, theta, h=1e-5):
    g = np.zeros_like(theta)
    for i in range(len(theta)):
        up = theta.copy()
        dn = theta.copy()
        up[i] += h
        dn[i] -= h
        g[i] = (f(up) - f(dn)) / (2.0 * h)
    return g

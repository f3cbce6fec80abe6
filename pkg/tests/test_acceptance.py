"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with:  pytest tests/test_acceptance.py -v -s

The Scenario A and Scenario B fits are shared, module-scoped fixtures; the
full module takes roughly 20 minutes on one core.
"""

import numpy as np
import pytest
from scipy.stats import invgamma, kstest

from mgffa.basis import TimeGrid, build_basis_system, build_penalty, build_bspline_basis
from mgffa.cli import main as cli_main
from mgffa.cusp import CuspHyper, sample_gamma_scales
from mgffa.gibbs import (
    SHARED,
    SamplerConfig,
    beta_conditional,
    factor_conditional,
    gamma_conditional,
    rescale_expansion,
    run_chain,
    sample_beta,
    sample_factors,
    sample_gamma_sequential,
    sample_rho,
    sample_sigma_beta,
    sample_sigma_eps,
    sample_signs,
    sample_xi,
    sigma_beta_conditional,
    sigma_eps_conditional,
    sign_posterior_prob,
    xi_conditional,
)
from mgffa.metrics import geweke_diagnostic, rv_coefficient, total_mse
from mgffa.model import log_likelihood
from mgffa.postprocess import (
    covariance_derived_loadings,
    covariance_summaries,
    modal_configuration,
    posterior_mean_curves,
    rsp_align,
    varimax,
    varimax_criterion,
)
from mgffa.simulate import generate_replicate, generate_truth, scenario_preset

import gir
from conftest import make_problem
from oracles import (
    gaussian_linear_posterior,
    inverse_gamma_quadrature_moments,
    second_difference_quadratic_form,
)

SCENARIO_A_SEED = 20260808
SCENARIO_B_SEED = 20260809
NUM_KERNEL_DRAWS = 100_000


def report(criterion, passed, detail):
    print(f"\n[criterion {criterion:>2}] {'PASS' if passed else 'FAIL'}: {detail}")
    assert passed, f"criterion {criterion}: {detail}"


def moment_se(x):
    """Standard errors of the sample mean and sample variance."""
    n = x.size
    var = np.var(x, ddof=1)
    fourth = np.mean((x - x.mean()) ** 4)
    return np.sqrt(var / n), np.sqrt(max(fourth - var**2, 0.0) / n)


def check_moments(name, draws, mean, var, failures):
    se_mean, se_var = moment_se(draws)
    if abs(draws.mean() - mean) > 3.0 * se_mean:
        failures.append(f"{name} mean {draws.mean():.4f} vs {mean:.4f} (se {se_mean:.2g})")
    if abs(np.var(draws, ddof=1) - var) > 3.0 * se_var:
        failures.append(
            f"{name} var {np.var(draws, ddof=1):.4f} vs {var:.4f} (se {se_var:.2g})"
        )


# ---------------------------------------------------------------------------
# shared fixtures


def _fit_replicates(preset, scenario_seed, chain_seeds):
    truth = generate_truth(
        scenario_preset(preset, replicates=len(chain_seeds), seed=scenario_seed)
    )
    basis = build_basis_system(truth.grid, 30)
    fits = []
    for rep, seed in enumerate(chain_seeds, start=1):
        data = generate_replicate(truth, rep)
        config = SamplerConfig(
            iterations=8000, burn_in=4000, L_max=10, K_max=10, num_basis=30, seed=seed
        )
        draws = run_chain(data, config, basis)
        modal, members = modal_configuration(draws)
        fits.append({"draws": draws, "modal": modal, "members": members})
    return {"truth": truth, "basis": basis, "fits": fits}


@pytest.fixture(scope="module")
def scenario_a():
    return _fit_replicates("A-322-n40-80", SCENARIO_A_SEED, [1001, 1002, 1003, 1004, 1005])


@pytest.fixture(scope="module")
def scenario_b():
    return _fit_replicates("B-300-n40-40", SCENARIO_B_SEED, [2001, 2002, 2003])


# ---------------------------------------------------------------------------
# criterion 1: conjugacy oracles


def test_criterion_1_conjugacy_oracles():
    data, basis, config, state, _ = make_problem(
        T=6, R=4, L_max=1, K_max=1, n=(3,), seed=314
    )
    rng = np.random.default_rng(2718)
    failures = []

    # --- beta: analytic vs dense GLS, then kernel draws
    mean, prec = beta_conditional(state, data, basis, 0)
    g = data.groups[0]
    X = np.vstack([basis.B] * g.num_subjects)
    factor_part = (
        state.eta[0] @ state.shared.loadings.T + state.rho[0] @ state.specific[0].loadings.T
    ) @ basis.B.T
    oracle_mean, oracle_cov = gaussian_linear_posterior(
        X,
        (g.Y - factor_part).ravel(),
        state.sigma2_eps[0],
        np.zeros(4),
        basis.Omega / state.sigma2_beta[0],
    )
    if not np.allclose(mean, oracle_mean, rtol=1e-6, atol=1e-12):
        failures.append("beta analytic mean vs GLS oracle")
    draws = np.empty(NUM_KERNEL_DRAWS)
    for i in range(NUM_KERNEL_DRAWS):
        sample_beta(state, data, basis, rng)
        draws[i] = state.beta[0][0]
        state.beta[0] = oracle_mean.copy()  # conditional ignores beta itself
    check_moments("beta[0]", draws, oracle_mean[0], oracle_cov[0, 0], failures)
    state.beta[0] = oracle_mean.copy()

    # --- sigma_eps: analytic vs log-grid quadrature of the flat-prior posterior
    shape, rate = sigma_eps_conditional(state, data, basis, config, 0)
    n_obs = g.Y.size
    curves0 = (
        state.beta[0][None, :]
        + state.eta[0] @ state.shared.loadings.T
        + state.rho[0] @ state.specific[0].loadings.T
    ) @ basis.B.T
    rss = float(np.sum((g.Y - curves0) ** 2))
    quad_mean, quad_var = inverse_gamma_quadrature_moments(
        lambda v: -0.5 * n_obs * np.log(v) - rss / (2.0 * v), rate / 500.0, rate * 500.0
    )
    if abs(quad_mean - rate / (shape - 1.0)) > 1e-6 * quad_mean:
        failures.append("sigma_eps analytic mean vs quadrature")
    sigma_before = state.sigma2_eps.copy()
    draws = np.empty(NUM_KERNEL_DRAWS)
    for i in range(NUM_KERNEL_DRAWS):
        sample_sigma_eps(state, data, basis, config, rng)
        draws[i] = state.sigma2_eps[0]
        state.sigma2_eps[:] = sigma_before
    check_moments("sigma2_eps", draws, quad_mean, quad_var, failures)
    ks = kstest(draws, invgamma(a=shape, scale=rate).cdf).statistic
    if ks >= 0.01:
        failures.append(f"sigma_eps KS {ks:.4f} >= 0.01")

    # --- sigma_beta: quadrature oracle built from second differences directly
    shape, rate = sigma_beta_conditional(state, basis, config, 0)
    quad_form = second_difference_quadratic_form(state.beta[0])
    quad_form += basis.ridge * float(np.sum(state.beta[0] ** 2))
    quad_mean, quad_var = inverse_gamma_quadrature_moments(
        lambda v: -(config.a_beta + 1.0 + 2.0) * np.log(v)
        - (config.b_beta + quad_form / 2.0) / v,
        rate / 500.0,
        rate * 5000.0,
    )
    if abs(quad_mean - rate / (shape - 1.0)) > 1e-6 * quad_mean:
        failures.append("sigma_beta analytic mean vs quadrature")
    sb_before = state.sigma2_beta.copy()
    draws = np.empty(NUM_KERNEL_DRAWS)
    for i in range(NUM_KERNEL_DRAWS):
        sample_sigma_beta(state, basis, config, rng)
        draws[i] = state.sigma2_beta[0]
        state.sigma2_beta[:] = sb_before
    # the variance posterior has shape 3, so its fourth moment diverges;
    # moment-check the precision instead, whose moments all exist
    check_moments("1/sigma2_beta", 1.0 / draws, shape / rate, shape / rate**2, failures)

    # --- signs: probability formula vs density ratio, then frequencies
    from scipy.stats import norm

    xi = state.shared.xi
    ratio = norm.pdf(xi, loc=1.0) / (norm.pdf(xi, loc=1.0) + norm.pdf(xi, loc=-1.0))
    if not np.allclose(sign_posterior_prob(xi), ratio, rtol=1e-6):
        failures.append("sign probabilities vs density-ratio oracle")
    plus = np.zeros_like(xi)
    for _ in range(NUM_KERNEL_DRAWS):
        sample_signs(state.shared, rng)
        plus += state.shared.signs == 1.0
    freq = plus / NUM_KERNEL_DRAWS
    se = np.sqrt(ratio * (1.0 - ratio) / NUM_KERNEL_DRAWS)
    if np.any(np.abs(freq - ratio) > 3.0 * se):
        failures.append("sign frequencies vs probabilities")
    state.shared.signs = np.ones_like(xi)

    # --- xi: analytic vs dense GLS on the vectorized regression
    mean, prec = xi_conditional(state, data, basis, SHARED)
    rows, ys = [], []
    for s in range(data.num_groups):
        scaled = state.eta[s] * state.shared.gamma[None, :]
        resid = (
            data.groups[s].Y
            - (state.beta[s][None, :] + state.rho[s] @ state.specific[s].loadings.T)
            @ basis.B.T
        )
        w = np.sqrt(state.sigma2_eps[s])
        for i in range(data.groups[s].num_subjects):
            rows.append(np.kron(scaled[i][None, :], basis.B) / w)
            ys.append(resid[i] / w)
    oracle_mean, oracle_cov = gaussian_linear_posterior(
        np.vstack(rows),
        np.concatenate(ys),
        1.0,
        state.shared.signs.ravel(order="F"),
        np.eye(4),
    )
    if not np.allclose(mean, oracle_mean, rtol=1e-6, atol=1e-12):
        failures.append("xi analytic mean vs GLS oracle")
    xi_before = state.shared.xi.copy()
    draws = np.empty(NUM_KERNEL_DRAWS)
    for i in range(NUM_KERNEL_DRAWS):
        sample_xi(state, data, basis, SHARED, rng)
        draws[i] = state.shared.xi[0, 0]
        state.shared.xi = xi_before.copy()
    check_moments("xi[0,0]", draws, oracle_mean[0], oracle_cov[0, 0], failures)

    # --- gamma: analytic vs scalar GLS, then the sequential kernel
    mu, var = gamma_conditional(state, data, basis, SHARED, 0)
    u = basis.B @ state.shared.xi[:, 0]
    xs, ys = [], []
    for s in range(data.num_groups):
        resid = (
            data.groups[s].Y
            - (state.beta[s][None, :] + state.rho[s] @ state.specific[s].loadings.T)
            @ basis.B.T
        )
        w = np.sqrt(state.sigma2_eps[s])
        for i in range(data.groups[s].num_subjects):
            xs.append(state.eta[s][i, 0] * u / w)
            ys.append(resid[i] / w)
    prior_var = state.shared.cusp.theta[0] * state.shared.cusp.sigma2_gamma[0]
    oracle_mean, oracle_cov = gaussian_linear_posterior(
        np.concatenate(xs)[:, None],
        np.concatenate(ys),
        1.0,
        np.zeros(1),
        np.array([[1.0 / prior_var]]),
    )
    if abs(mu - oracle_mean[0]) > 1e-6 * max(abs(oracle_mean[0]), 1e-12):
        failures.append("gamma analytic mean vs GLS oracle")
    draws = np.empty(NUM_KERNEL_DRAWS)
    for i in range(NUM_KERNEL_DRAWS):
        sample_gamma_sequential(state, data, basis, SHARED, rng)
        draws[i] = state.shared.gamma[0]
    state.shared.gamma[:] = oracle_mean
    check_moments("gamma[0]", draws, oracle_mean[0], oracle_cov[0, 0], failures)

    # --- factors: eta via the joint kernel (rho restored), rho directly
    means, prec = factor_conditional(state, data, basis, SHARED, 0)
    resid = (
        data.groups[0].Y
        - (state.beta[0][None, :] + state.rho[0] @ state.specific[0].loadings.T)
        @ basis.B.T
    )
    W = basis.B @ state.shared.loadings
    oracle_mean, oracle_cov = gaussian_linear_posterior(
        W, resid[0], state.sigma2_eps[0], np.zeros(1), np.eye(1)
    )
    if not np.allclose(means[0], oracle_mean, rtol=1e-6, atol=1e-12):
        failures.append("eta analytic mean vs GLS oracle")
    rho_before = [r.copy() for r in state.rho]
    eta_draws = np.empty(NUM_KERNEL_DRAWS)
    for i in range(NUM_KERNEL_DRAWS):
        sample_factors(state, data, basis, rng)
        eta_draws[i] = state.eta[0][0, 0]
        state.rho = [r.copy() for r in rho_before]
    check_moments("eta[0,0]", eta_draws, oracle_mean[0], oracle_cov[0, 0], failures)
    eta_before = [e.copy() for e in state.eta]
    means_r, prec_r = factor_conditional(state, data, basis, 0, 0)
    resid_r = (
        data.groups[0].Y
        - (state.beta[0][None, :] + state.eta[0] @ state.shared.loadings.T) @ basis.B.T
    )
    Wr = basis.B @ state.specific[0].loadings
    oracle_mean_r, oracle_cov_r = gaussian_linear_posterior(
        Wr, resid_r[0], state.sigma2_eps[0], np.zeros(1), np.eye(1)
    )
    rho_draws = np.empty(NUM_KERNEL_DRAWS)
    for i in range(NUM_KERNEL_DRAWS):
        sample_rho(state, data, basis, 0, rng)
        rho_draws[i] = state.rho[0][0, 0]
    check_moments("rho[0,0]", rho_draws, oracle_mean_r[0], oracle_cov_r[0, 0], failures)

    # --- gamma scale variances
    cusp = state.shared.cusp
    gamma_val = state.shared.gamma.copy()
    shape = cusp.hyper.a1 + 0.5
    rate = cusp.hyper.a2 + gamma_val[0] ** 2 / (2.0 * cusp.theta[0])
    quad_mean, quad_var = inverse_gamma_quadrature_moments(
        lambda v: -(cusp.hyper.a1 + 1.0) * np.log(v)
        - cusp.hyper.a2 / v
        - 0.5 * np.log(v)
        - gamma_val[0] ** 2 / (2.0 * cusp.theta[0] * v),
        rate / 500.0,
        rate * 500.0,
    )
    if abs(quad_mean - rate / (shape - 1.0)) > 1e-6 * quad_mean:
        failures.append("gamma-scale analytic mean vs quadrature")
    draws = np.empty(NUM_KERNEL_DRAWS)
    for i in range(NUM_KERNEL_DRAWS):
        sample_gamma_scales(gamma_val, cusp, rng)
        draws[i] = cusp.sigma2_gamma[0]
    check_moments("sigma2_gamma", draws, quad_mean, quad_var, failures)

    report(
        1,
        not failures,
        "all 8 conjugate kernels match their oracles"
        if not failures
        else "; ".join(failures),
    )


# ---------------------------------------------------------------------------
# criterion 2: getting it right


def test_criterion_2_getting_it_right():
    template = gir.make_template(T=12, n=(5, 5))
    basis = build_basis_system(template.grid, 6, ridge=1.0)
    config = SamplerConfig(
        iterations=2,
        burn_in=1,
        L_max=3,
        K_max=2,
        hyper_shared=CuspHyper(a1=5.0, a2=10.0),
        hyper_specific=CuspHyper(a1=5.0, a2=10.0),
        a_beta=6.0,
        b_beta=6.0,
        a_eps=6.0,
        b_eps=30.0,
        num_basis=6,
        ridge=1.0,
    )
    rng = np.random.default_rng(424242)
    mc = gir.marginal_conditional(template, basis, config, 20_000, rng)
    sc = gir.successive_conditional(template, basis, config, 20_000, rng, burn=1000, thin=3)
    rows = gir.compare_panels(mc, sc)
    for r in rows:
        print(
            f"    {r['stat']:>12s} {r['moment']:>6s}: marginal={r['mc']:+.4f} "
            f"successive={r['sc']:+.4f} z={r['z']:+.2f}"
        )
    bad = [f"{r['stat']}/{r['moment']} z={r['z']:+.2f}" for r in rows if abs(r["z"]) > 3.0]
    report(
        2,
        not bad,
        "successive- and marginal-conditional simulators agree on the panel"
        if not bad
        else "; ".join(bad),
    )


# ---------------------------------------------------------------------------
# criteria 3-5, 9: Scenario A fits


def test_criterion_3_scenario_a_configuration(scenario_a):
    modals = [f["modal"].as_tuple() for f in scenario_a["fits"]]
    print(f"\n    modal configurations: {modals}")
    hits = sum(m == (3, 2, 2) for m in modals)
    mean_l = float(np.mean([m[0] for m in modals]))
    mean_k1 = float(np.mean([m[1] for m in modals]))
    mean_k2 = float(np.mean([m[2] for m in modals]))
    ok = (
        hits >= 3
        and 2.3 <= mean_l <= 3.7
        and 1.4 <= mean_k1 <= 2.8
        and 1.0 <= mean_k2 <= 2.4
    )
    report(
        3,
        ok,
        f"(3,2,2) in {hits}/5 replicates; means L*={mean_l:.2f}, "
        f"K1*={mean_k1:.2f}, K2*={mean_k2:.2f}",
    )


def test_criterion_4_loading_recovery(scenario_a):
    truth = scenario_a["truth"]
    basis = scenario_a["basis"]
    values = []
    for rep, fit in enumerate(scenario_a["fits"], start=1):
        if fit["modal"].as_tuple() != (3, 2, 2):
            continue
        summaries = covariance_summaries(fit["draws"], basis, fit["members"])
        ident = covariance_derived_loadings(summaries, fit["modal"])
        values.append(
            (
                rep,
                rv_coefficient(ident.shared, truth.loadings_time_shared),
                rv_coefficient(ident.specific[0], truth.loadings_time_specific(0)),
                rv_coefficient(ident.specific[1], truth.loadings_time_specific(1)),
            )
        )
    print(f"\n    RV per correctly-configured replicate: {values}")
    ok = bool(values) and all(min(v[1:]) >= 0.75 for v in values)
    worst = min((min(v[1:]) for v in values), default=float("nan"))
    report(4, ok, f"RV >= 0.75 for every block (worst {worst:.3f})")


def test_criterion_5_curve_mse(scenario_a):
    truth = scenario_a["truth"]
    basis = scenario_a["basis"]
    per_group = {0: [], 1: []}
    for fit in scenario_a["fits"]:
        curves = posterior_mean_curves(fit["draws"], basis, fit["members"])
        for s in range(2):
            per_group[s].append(total_mse(truth.f_true[s], curves[s]["mean"]))
    means = [float(np.mean(per_group[s])) for s in range(2)]
    print(f"\n    per-replicate MSE: group1={np.round(per_group[0], 3)}, "
          f"group2={np.round(per_group[1], 3)}")
    report(
        5,
        all(m <= 0.25 for m in means),
        f"mean total MSE {means[0]:.3f} / {means[1]:.3f} (limit 0.25)",
    )


def test_criterion_9_geweke_convergence(scenario_a):
    cells = []
    for fit in scenario_a["fits"]:
        draws = fit["draws"]
        for s in range(2):
            cells.append(geweke_diagnostic(draws.sigma2_eps[:, s]))
            cells.append(geweke_diagnostic(draws.sigma2_beta[:, s]))
    cells = np.asarray(cells)
    frac = float(np.mean(np.abs(cells) < 1.96))
    print(f"\n    |z| values: {np.round(np.abs(cells), 2)}")
    report(9, frac >= 0.80, f"|z| < 1.96 in {frac:.0%} of 20 cells (need 80%)")


# ---------------------------------------------------------------------------
# criterion 6: Scenario B prunes group factors


def test_criterion_6_scenario_b_pruning(scenario_b):
    modals = [f["modal"].as_tuple() for f in scenario_b["fits"]]
    print(f"\n    modal configurations: {modals}")
    mean_k1 = float(np.mean([m[1] for m in modals]))
    mean_k2 = float(np.mean([m[2] for m in modals]))
    report(
        6,
        mean_k1 <= 0.3 and mean_k2 <= 0.3,
        f"mean K1*={mean_k1:.2f}, K2*={mean_k2:.2f} (limit 0.3)",
    )


# ---------------------------------------------------------------------------
# criterion 7: basis invariants


def test_criterion_7_basis_invariants():
    failures = []
    grid = TimeGrid(np.linspace(0.0, 1.0, 60))
    B = build_bspline_basis(grid, 30)
    if np.max(np.abs(B.sum(axis=1) - 1.0)) > 1e-10:
        failures.append("partition of unity")
    Omega = build_penalty(30, 1e-7)
    if np.linalg.matrix_rank(Omega - 1e-7 * np.eye(30)) != 28:
        failures.append("penalty rank")
    rng = np.random.default_rng(31)
    for _ in range(5):
        beta = rng.standard_normal(30)
        direct = second_difference_quadratic_form(beta)
        if abs(beta @ (Omega - 1e-7 * np.eye(30)) @ beta - direct) > 1e-10:
            failures.append("quadratic form vs direct summation")
            break
    report(7, not failures, "basis invariants exact" if not failures else "; ".join(failures))


# ---------------------------------------------------------------------------
# criterion 8: post-processing properties


def test_criterion_8_postprocessing_properties():
    failures = []
    data, basis, config, state, rng = make_problem(T=8, R=5, L_max=3, K_max=2, seed=88)
    lam_before = state.shared.loadings.copy()
    ll_before = log_likelihood(state, data, basis)
    rescale_expansion(state.shared)
    if np.max(np.abs(state.shared.loadings - lam_before)) > 1e-10:
        failures.append("rescale changed the loadings")
    if abs(log_likelihood(state, data, basis) - ll_before) > 1e-10:
        failures.append("rescale changed the log likelihood")

    base = rng.standard_normal((12, 3)) * np.array([3.0, 2.0, 1.0])
    perturbed = []
    for _ in range(20):
        perm = rng.permutation(3)
        signs = rng.choice([-1.0, 1.0], size=3)
        P = np.zeros((3, 3))
        P[perm, np.arange(3)] = signs
        perturbed.append(base @ P)
    aligned, _ = rsp_align(perturbed)
    spread = max(np.max(np.abs(m - aligned[0])) for m in aligned)
    if spread > 1e-8:
        failures.append(f"signed-permutation recovery off by {spread:.2e}")

    chain_data = gir.make_template(T=10, n=(4, 3))
    chain_rng = np.random.default_rng(5)
    for s, g in enumerate(chain_data.groups):
        g.Y = chain_rng.standard_normal(g.Y.shape)
    draws = run_chain(
        chain_data,
        SamplerConfig(iterations=30, burn_in=10, L_max=3, K_max=2, num_basis=5, seed=6),
    )
    chain_basis = build_basis_system(chain_data.grid, 5)
    before = posterior_mean_curves(draws, chain_basis)
    for m in range(draws.num_draws):
        perm = chain_rng.permutation(3)
        signs = chain_rng.choice([-1.0, 1.0], size=3)
        P = np.zeros((3, 3))
        P[perm, np.arange(3)] = signs
        draws.lam[m] = draws.lam[m] @ P
        for s in range(2):
            draws.eta[s][m] = draws.eta[s][m] @ P
    after = posterior_mean_curves(draws, chain_basis)
    for s in range(2):
        if np.max(np.abs(after[s]["mean"] - before[s]["mean"])) > 1e-10:
            failures.append("posterior mean curves not alignment-invariant")
            break

    for _ in range(10):
        A = rng.standard_normal((10, 3))
        Q = varimax(A)
        if np.max(np.abs(Q.T @ Q - np.eye(3))) > 1e-10:
            failures.append("varimax rotation not orthogonal")
            break
        if varimax_criterion(A @ Q) < varimax_criterion(A) - 1e-12:
            failures.append("varimax criterion decreased")
            break
    report(8, not failures, "post-processing properties hold" if not failures else "; ".join(failures))


# ---------------------------------------------------------------------------
# criterion 10: CLI determinism


def test_criterion_10_cli_determinism(tmp_path):
    sim = tmp_path / "sim.yaml"
    sim.write_text(
        "scenario:\n  L_true: 2\n  K_true: [1, 1]\n  n: [6, 5]\n  T: 16\n"
        "  num_basis: 8\n  replicates: 1\n  seed: 33\n"
    )
    fit = tmp_path / "fit.yaml"
    fit.write_text(
        "sampler:\n  iterations: 80\n  burn_in: 40\n  seed: 12\n  L_max: 3\n  K_max: 2\n"
        "basis:\n  num_basis: 8\n"
    )
    data_dir = tmp_path / "data"
    assert cli_main(["simulate", "--config", str(sim), "--out", str(data_dir)]) == 0
    outs = []
    for tag in ("one", "two"):
        out = tmp_path / tag
        code = cli_main(
            [
                "fit",
                str(data_dir / "dataset_r1.csv"),
                "--config",
                str(fit),
                "--out",
                str(out),
            ]
        )
        assert code == 0
        outs.append(out)
    families = [
        "beta.csv",
        "sigma2_eps.csv",
        "sigma2_beta.csv",
        "loadings_shared.csv",
        "loadings_specific.csv",
        "scores_shared.csv",
        "scores_specific.csv",
        "indicators_shared.csv",
        "indicators_specific.csv",
        "configs.csv",
    ]
    different = [
        name
        for name in families
        if (outs[0] / name).read_bytes() != (outs[1] / name).read_bytes()
    ]
    report(
        10,
        not different,
        "same-seed draw files byte-identical"
        if not different
        else f"files differ: {different}",
    )

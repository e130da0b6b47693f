import math

import numpy as np
import pytest
from scipy.stats import norm

from rsamp.exceptions import (
    DimensionError,
    NotSamplableError,
    SamplerDegeneracyError,
    ScheduleInfeasibleError,
)
from rsamp.models import Model, get_model, make_shockpack, simulate_dataset
from rsamp.optimize import OptimOptions
from rsamp.posterior import GammaPosterior, weighted_ks, weighted_ks_2samp, weighted_mean
from rsamp.priors import FlatPrior, PowerVariancePrior, StandardNormalPrior, UniformBoxPrior
from rsamp.samplers import (
    SmdConfig,
    abc_acceptance_probability,
    abc_ar,
    abc_mcmc,
    abc_smc,
    j_objective,
    rs_draw,
    rs_sample,
    smd_estimate,
    weight_matrix,
)

from oracles import exponential_rs_weight


# --- objective ---------------------------------------------------------------

def test_j_objective_examples():
    assert j_objective([1.0, 2.0], [1.0, 2.0], np.eye(2)) == 0.0
    assert j_objective([1.0, 2.0], [0.0, 0.0], np.eye(2)) == 5.0
    assert j_objective([1.0, 1.0], [0.0, 0.0], np.diag([0.2, 0.8])) == pytest.approx(1.0)


def test_j_objective_dimension_mismatch():
    with pytest.raises(DimensionError):
        j_objective([1.0, 2.0], [1.0], np.eye(2))
    with pytest.raises(DimensionError):
        j_objective([1.0, 2.0], [1.0, 2.0], np.eye(3))


def test_weight_matrix_validation():
    np.testing.assert_array_equal(weight_matrix(None, 2), np.eye(2))
    np.testing.assert_array_equal(weight_matrix([1.0, 2.0], 2), np.diag([1.0, 2.0]))
    with pytest.raises(ValueError):
        weight_matrix([[1.0, 2.0], [0.0, 1.0]], 2)
    with pytest.raises(ValueError):
        weight_matrix([1.0, -1.0], 2)


# --- SMD ---------------------------------------------------------------------

def test_smd_closed_form_normal():
    m = get_model("normal-ji", 20)
    psi_hat = m.aux_stats(simulate_dataset(m, [1.0, 2.0], 999))
    res = smd_estimate(m, psi_hat, SmdConfig(S=1, seed=3))
    e = make_shockpack(m, 3, 0).normals
    s2e = np.mean((e - e.mean()) ** 2)
    sigma2 = psi_hat[1] / s2e
    assert res.minimizer[1] == pytest.approx(sigma2, rel=1e-6)
    assert res.minimizer[0] == pytest.approx(psi_hat[0] - math.sqrt(sigma2) * e.mean(), abs=1e-6)


def test_smd_recovers_truth_with_same_shocks():
    m = get_model("normal-ji", 20)
    packs = [make_shockpack(m, 5, s) for s in range(3)]
    psi_hat = sum(m.psi([0.5, 1.5], p) for p in packs) / 3
    res = smd_estimate(m, psi_hat, SmdConfig(S=3, seed=5))
    np.testing.assert_allclose(res.minimizer, [0.5, 1.5], atol=1e-6)
    assert res.objective_value < 1e-12


def test_smd_config_validation():
    with pytest.raises(ValueError):
        SmdConfig(S=0)


def test_smd_flags_nonconvergence():
    m = get_model("normal-ji", 20)
    res = smd_estimate(m, np.array([0.0, 1.0]), SmdConfig(optim=OptimOptions(max_iterations=2)), start=[3.0, 3.0])
    assert not res.converged


# --- reverse sampler -----------------------------------------------------------

def test_rs_draw_example_one():
    m = get_model("normal-mean", 1)
    for b in range(5):
        d = rs_draw(m, [1.0], None, StandardNormalPrior(1), b, 0)
        eps = make_shockpack(m, 0, b).normals[0]
        # f_tolerance 1e-12 on J = (theta - theta*)^2 bounds the error near 1e-6
        assert d.theta[0] == pytest.approx(1.0 - eps, abs=1e-6)
        assert d.vol_inv == pytest.approx(1.0, abs=1e-6)
        assert d.weight_unnorm == pytest.approx(math.exp(-0.5 * d.theta[0] ** 2), rel=1e-6)


def test_rs_draw_exponential_weight_is_theta_over_ybar():
    m = get_model("exponential-ji", 5)
    ybar = 0.8
    prior = FlatPrior(1, 0.0, None, strict=True)
    for b in range(5):
        d = rs_draw(m, [ybar], None, prior, b, 1)
        assert d.j_value < 1e-10
        assert d.weight_unnorm == pytest.approx(exponential_rs_weight(d.theta[0], ybar), rel=1e-6)


def test_rs_draw_mixture():
    m = get_model("mixture")
    prior = FlatPrior(1, -10.0, 10.0)
    for b in range(5):
        pack = make_shockpack(m, 2, b)
        scale = 1.0 if pack.uniforms[0] < 0.5 else 0.1
        d = rs_draw(m, [0.0], None, prior, b, 2)
        assert d.theta[0] == pytest.approx(-scale * pack.normals[0], abs=1e-7)
        assert d.vol_inv == pytest.approx(1.0, abs=1e-8)


def test_rs_draw_j_value_consistent_with_pack():
    m = get_model("normal-oi", 20)
    psi_hat = m.aux_stats(simulate_dataset(m, [0.0, 1.0], 4))
    d = rs_draw(m, psi_hat, None, PowerVariancePrior(0.0), 3, 4)
    assert d.j_value == pytest.approx(j_objective(psi_hat, m.psi(d.theta, make_shockpack(m, 4, 3))), rel=1e-12)


def test_rs_sample_quantile_retention():
    m = get_model("exponential-oi", 5)
    psi_hat = m.aux_stats(simulate_dataset(m, [1.0], 0))
    s = rs_sample(m, psi_hat, np.diag([0.2, 0.8]), FlatPrior(1, 0.0, None, True), 20, 0.1, 3)
    assert s.kept_count == 20 and s.proposed_count == 200
    kept = {d.index for d in s.draws}
    full = [rs_draw(m, psi_hat, np.diag([0.2, 0.8]), FlatPrior(1, 0.0, None, True), b, 3) for b in range(200)]
    dropped = [d.j_value for d in full if d.index not in kept]
    assert max(s.j_values) <= min(dropped)
    assert s.delta_used == max(s.j_values)
    assert s.weights.sum() == pytest.approx(1.0)


def test_rs_sample_deterministic_across_threads():
    m = get_model("normal-ji", 20)
    psi_hat = m.aux_stats(simulate_dataset(m, [0.0, 2.0], 1))
    a = rs_sample(m, psi_hat, None, PowerVariancePrior(0.0), 40, master_seed=9, n_jobs=1)
    b = rs_sample(m, psi_hat, None, PowerVariancePrior(0.0), 40, master_seed=9, n_jobs=3)
    np.testing.assert_array_equal(a.thetas, b.thetas)
    np.testing.assert_array_equal(a.weights, b.weights)


class _Flat(Model):
    """Statistic that ignores theta: every Jacobian is singular."""

    name = "flat"
    param_labels = ("a",)
    aux_labels = ("s",)
    normals_per_obs = 1

    def _simulate(self, theta, shocks):
        return np.asarray(shocks.normals)

    def aux_stats(self, y):
        return np.array([y.mean()])

    def start_point(self, psi_hat):
        return np.zeros(1)


def test_rs_degeneracy_error():
    with pytest.raises(SamplerDegeneracyError):
        rs_sample(_Flat(3), [0.0], None, FlatPrior(1), 10, master_seed=0)


def test_rs_sample_argument_checks():
    m = get_model("normal-mean", 1)
    with pytest.raises(ValueError):
        rs_sample(m, [0.0], None, StandardNormalPrior(1), 0)
    with pytest.raises(ValueError):
        rs_sample(m, [0.0], None, StandardNormalPrior(1), 10, quantile=0.0)


# --- accept-reject ABC ---------------------------------------------------------

def test_abc_ar_requires_proper_prior():
    with pytest.raises(NotSamplableError):
        abc_ar(get_model("normal-ji"), [0.0, 1.0], None, PowerVariancePrior(0.0), 10, 0.1)


def test_abc_ar_quantile_one_is_prior_pushforward():
    m = get_model("mixture")
    prior = FlatPrior(1, -10.0, 10.0)
    s = abc_ar(m, [0.0], None, prior, 500, 1.0, master_seed=0)
    assert s.kept_count == 500 == s.proposed_count
    thetas = s.thetas[:, 0]
    assert weighted_ks(s, 0, _Uniform(-10, 10)) < 0.08
    assert np.all(s.weights == s.weights[0])
    assert thetas.min() >= -10 and thetas.max() <= 10


class _Uniform:
    def __init__(self, a, b):
        self.a, self.b = a, b

    def cdf(self, x):
        return np.clip((np.asarray(x) - self.a) / (self.b - self.a), 0, 1)


def test_abc_ar_retention_and_delta():
    m = get_model("mixture")
    s = abc_ar(m, [0.0], None, FlatPrior(1, -10.0, 10.0), 100, 0.05, master_seed=4)
    assert s.proposed_count == 2000
    assert s.delta_used == pytest.approx(s.j_values.max())


def test_abc_ar_fixed_delta():
    m = get_model("mixture")
    s = abc_ar(m, [0.0], None, FlatPrior(1, -10.0, 10.0), 50, delta=0.5, distance="norm", master_seed=4)
    assert s.kept_count == 50
    assert np.all(np.sqrt(s.j_values) <= 0.5)
    assert s.delta_used == 0.5


def test_abc_ar_spread_shrinks_with_delta():
    m = get_model("mixture")
    prior = FlatPrior(1, -10.0, 10.0)
    sds = [abc_ar(m, [0.0], None, prior, 400, delta=d, distance="norm", master_seed=1).thetas.std()
           for d in (2.0, 0.5, 0.025)]
    # the two smaller tolerances are both close to the exact sd (about 0.71)
    assert sds[0] > 1.2 > sds[1]
    assert abs(sds[2] - np.sqrt(0.505)) < 0.1


def test_abc_ar_deterministic_across_threads():
    m = get_model("exponential-ji", 5)
    prior = FlatPrior(1, 0.0, 10.0)
    a = abc_ar(m, [1.0], None, prior, 30, delta=0.01, master_seed=2, n_jobs=1)
    b = abc_ar(m, [1.0], None, prior, 30, delta=0.01, master_seed=2, n_jobs=2)
    np.testing.assert_array_equal(a.thetas, b.thetas)
    assert a.proposed_count == b.proposed_count


# --- MCMC-ABC ------------------------------------------------------------------

def test_acceptance_probability_rules():
    assert abc_acceptance_probability(True, 0.0, 0.0) == 1.0
    assert abc_acceptance_probability(False, 0.0, 5.0) == 0.0
    assert abc_acceptance_probability(True, 0.0, math.log(0.25)) == pytest.approx(0.25)
    assert abc_acceptance_probability(True, 0.0, -math.inf) == 0.0


def test_mcmc_chain_repeats_on_rejection_and_is_deterministic():
    m = get_model("normal-ji", 20)
    psi_hat = m.aux_stats(simulate_dataset(m, [0.0, 2.0], 0))
    kw = dict(proposal_sd=0.5, delta=0.5, chain_length=300, master_seed=3, distance="norm")
    a = abc_mcmc(m, psi_hat, None, PowerVariancePrior(0.0), **kw)
    b = abc_mcmc(m, psi_hat, None, PowerVariancePrior(0.0), **kw)
    np.testing.assert_array_equal(a.thetas, b.thetas)
    th = a.thetas
    moves = np.any(th[1:] != th[:-1], axis=1).sum()
    assert moves <= a.metadata["accepted"]
    assert 0 < a.metadata["acceptance_rate"] < 1
    assert a.kept_count == 300


def test_mcmc_zero_acceptance_warns():
    m = get_model("normal-ji", 20)
    s = abc_mcmc(m, [0.0, 1.0], None, PowerVariancePrior(0.0), proposal_sd=5.0, delta=1e-9,
                 chain_length=50, master_seed=0, theta0=[0.0, 1.0])
    assert s.metadata["accepted"] == 0 and "warning" in s.metadata


def test_mcmc_rejects_start_outside_prior():
    with pytest.raises(ValueError):
        abc_mcmc(get_model("normal-ji"), [0.0, 1.0], None, PowerVariancePrior(0.0), theta0=[0.0, -1.0])


# --- SMC ---------------------------------------------------------------------

def test_smc_schedule_must_decrease():
    m = get_model("mixture")
    prior = FlatPrior(1, -10.0, 10.0)
    with pytest.raises(ValueError):
        abc_smc(m, [0.0], None, prior, 100, (0.5, 2.0))
    with pytest.raises(ValueError):
        abc_smc(m, [0.0], None, prior, 100, (1.0, 1.0))


def test_smc_infeasible_schedule():
    m = get_model("mixture")
    with pytest.raises(ScheduleInfeasibleError):
        abc_smc(m, [0.0], None, FlatPrior(1, -10.0, 10.0), 5, (1e-12,), retry_factor=20)


def test_smc_weights_and_determinism():
    m = get_model("mixture")
    prior = FlatPrior(1, -10.0, 10.0)
    a = abc_smc(m, [0.0], None, prior, 200, (2.0, 0.5), distance="norm", master_seed=1, n_jobs=1)
    b = abc_smc(m, [0.0], None, prior, 200, (2.0, 0.5), distance="norm", master_seed=1, n_jobs=2)
    np.testing.assert_array_equal(a.thetas, b.thetas)
    assert a.weights.sum() == pytest.approx(1.0)
    assert np.all(np.sqrt(a.j_values) <= 0.5)
    assert len(a.metadata["attempts_per_round"]) == 2


def test_smc_single_round_matches_accept_reject():
    m = get_model("exponential-ji", 5)
    prior = FlatPrior(1, 0.0, 10.0)
    smc = abc_smc(m, [0.8], None, prior, 2000, (0.05,), distance="norm", master_seed=5)
    ar = abc_ar(m, [0.8], None, prior, 2000, delta=0.05, distance="norm", master_seed=6)
    # two independent samples of 2000: the 0.1% two-sample KS critical value is about 0.062
    assert weighted_ks_2samp(smc, ar) < 0.062


# --- proper-prior agreement ------------------------------------------------------

def test_rs_and_abc_target_same_gamma():
    m = get_model("exponential-ji", 5)
    ybar = 0.7
    prior = FlatPrior(1, 0.0, 10.0)
    ref = GammaPosterior.for_exponential(5, ybar)
    rs = rs_sample(m, [ybar], None, prior, 3000, master_seed=8)
    assert weighted_ks(rs, 0, ref) < 0.04
    ar = abc_ar(m, [ybar], None, prior, 1000, 0.01, master_seed=8)
    assert weighted_ks(ar, 0, ref) < 0.08
    assert abs(weighted_mean(rs)[0] - ref.mean()) < 0.05

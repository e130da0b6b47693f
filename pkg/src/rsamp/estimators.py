"""Scikit-learn style front ends for the samplers.

Each estimator takes its configuration in ``__init__`` (so ``get_params``
and ``set_params`` work and estimators can be cloned) and does all
computation in ``fit``, which accepts one observed dataset ``y``. Use
``fit_statistics`` when only the auxiliary statistics are available.

Examples
--------
>>> import numpy as np
>>> from rsamp import ReverseSampler
>>> rs = ReverseSampler("normal-mean", prior="standard-normal", n_draws=200).fit(np.array([1.0]))
>>> rs.sample_.kept_count
200
"""
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import _validation as v
from .jacobian import JacobianSpec
from .optimize import OptimOptions
from .posterior import ess, mc_standard_error, summarize, weighted_mean, weighted_var
from .samplers import SmdConfig, abc_ar, abc_mcmc, abc_smc, rs_sample, smd_estimate


class _PosteriorEstimator(BaseEstimator):
    """Shared ``fit`` plumbing; subclasses implement ``_sample``."""

    def fit(self, y):
        """Sample the posterior given an observed dataset ``y``."""
        y = v.check_data(y)
        model = v.resolve_model(self.model, y.shape[0])
        return self._fit(model, model.aux_stats(y))

    def fit_statistics(self, psi_hat, n_obs=None):
        """Sample the posterior given observed auxiliary statistics."""
        model = v.resolve_model(self.model, n_obs)
        return self._fit(model, v.check_psi_hat(psi_hat, model))

    def _fit(self, model, psi_hat):
        seed = v.check_seed(self.random_state)
        prior = v.resolve_prior(self.prior, model)
        self.model_ = model
        self.prior_ = prior
        self.psi_hat_ = psi_hat
        self.sample_ = self._sample(model, psi_hat, prior, seed)
        self.posterior_mean_ = weighted_mean(self.sample_)
        self.posterior_var_ = weighted_var(self.sample_)
        self.mc_se_ = mc_standard_error(self.sample_)
        self.ess_ = ess(self.sample_)
        self.delta_ = self.sample_.delta_used
        return self

    def summary(self, reference=None):
        """JSON-ready posterior summary."""
        check_is_fitted(self, "sample_")
        return summarize(self.sample_, reference)


class ReverseSampler(_PosteriorEstimator):
    """Reverse sampler posterior.

    Parameters
    ----------
    model : str or Model
    prior : str, Prior or None
        None selects the flat prior on the model's parameter space.
    W : array-like or None
        Weight matrix (or its diagonal); identity when None.
    n_draws : int
        Draws retained.
    quantile : float
        Fraction of valid draws retained by smallest objective; 1 keeps all.
    random_state : int
    x_tolerance, f_tolerance, max_iter, restarts
        Optimizer controls.
    fd_step : float or None
        Relative finite-difference step for the Jacobian.
    n_jobs : int or None
        Thread count; results do not depend on it.
    """

    def __init__(self, model="normal-ji", prior=None, W=None, n_draws=1000, quantile=1.0, random_state=0,
                 x_tolerance=1e-8, f_tolerance=1e-12, max_iter=None, restarts=0, fd_step=None, n_jobs=None):
        self.model = model
        self.prior = prior
        self.W = W
        self.n_draws = n_draws
        self.quantile = quantile
        self.random_state = random_state
        self.x_tolerance = x_tolerance
        self.f_tolerance = f_tolerance
        self.max_iter = max_iter
        self.restarts = restarts
        self.fd_step = fd_step
        self.n_jobs = n_jobs

    def _sample(self, model, psi_hat, prior, seed):
        optim = OptimOptions(self.max_iter, self.x_tolerance, self.f_tolerance,
                             restarts=v.check_positive_int(self.restarts, "restarts", 0))
        fd = JacobianSpec() if self.fd_step is None else JacobianSpec(v.check_positive(self.fd_step, "fd_step"))
        return rs_sample(model, psi_hat, self.W, prior, v.check_positive_int(self.n_draws, "n_draws"),
                         v.check_fraction(self.quantile, "quantile"), seed, optim, fd, self.n_jobs)


class RejectionABC(_PosteriorEstimator):
    """Accept-reject ABC with quantile or fixed-tolerance retention.

    Give exactly one of ``quantile`` and ``delta``. ``distance`` is
    ``"quadratic"`` (``J <= delta``) or ``"norm"`` (``sqrt(J) <= delta``).
    """

    def __init__(self, model="normal-ji", prior=None, W=None, n_draws=1000, quantile=None, delta=None,
                 distance="quadratic", random_state=0, n_jobs=None):
        self.model = model
        self.prior = prior
        self.W = W
        self.n_draws = n_draws
        self.quantile = quantile
        self.delta = delta
        self.distance = distance
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _sample(self, model, psi_hat, prior, seed):
        q = None if self.quantile is None else v.check_fraction(self.quantile, "quantile")
        d = None if self.delta is None else v.check_positive(self.delta, "delta")
        return abc_ar(model, psi_hat, self.W, prior, v.check_positive_int(self.n_draws, "n_draws"), q, seed,
                      d, self.distance, n_jobs=self.n_jobs)


class MCMCABC(_PosteriorEstimator):
    """MCMC-ABC with Gaussian random-walk proposals."""

    def __init__(self, model="normal-ji", prior=None, W=None, chain_length=1000, delta=1.0, proposal_sd=1.0,
                 theta0=None, distance="quadratic", random_state=0):
        self.model = model
        self.prior = prior
        self.W = W
        self.chain_length = chain_length
        self.delta = delta
        self.proposal_sd = proposal_sd
        self.theta0 = theta0
        self.distance = distance
        self.random_state = random_state

    def _sample(self, model, psi_hat, prior, seed):
        return abc_mcmc(model, psi_hat, self.W, prior, self.proposal_sd, v.check_positive(self.delta, "delta"),
                        v.check_positive_int(self.chain_length, "chain_length"), seed, self.theta0, self.distance)

    def _fit(self, model, psi_hat):
        super()._fit(model, psi_hat)
        self.acceptance_rate_ = self.sample_.metadata["acceptance_rate"]
        return self


class SMCABC(_PosteriorEstimator):
    """ABC-SMC over a fixed, strictly decreasing tolerance schedule."""

    def __init__(self, model="mixture", prior=None, W=None, population_size=1000, schedule=(2.0, 0.5, 0.025),
                 perturb_sd=None, distance="quadratic", random_state=0, n_jobs=None):
        self.model = model
        self.prior = prior
        self.W = W
        self.population_size = population_size
        self.schedule = schedule
        self.perturb_sd = perturb_sd
        self.distance = distance
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _sample(self, model, psi_hat, prior, seed):
        return abc_smc(model, psi_hat, self.W, prior, v.check_positive_int(self.population_size, "population_size"),
                       self.schedule, self.perturb_sd, seed, self.distance, n_jobs=self.n_jobs)


class SMDEstimator(BaseEstimator):
    """Simulated minimum distance point estimator.

    Attributes
    ----------
    theta_ : ndarray
    objective_ : float
    converged_ : bool
    """

    def __init__(self, model="normal-ji", n_simulations=1, W=None, random_state=0, x_tolerance=1e-8,
                 f_tolerance=1e-12, max_iter=None):
        self.model = model
        self.n_simulations = n_simulations
        self.W = W
        self.random_state = random_state
        self.x_tolerance = x_tolerance
        self.f_tolerance = f_tolerance
        self.max_iter = max_iter

    def fit(self, y):
        y = v.check_data(y)
        model = v.resolve_model(self.model, y.shape[0])
        return self._fit(model, model.aux_stats(y))

    def fit_statistics(self, psi_hat, n_obs=None):
        model = v.resolve_model(self.model, n_obs)
        return self._fit(model, v.check_psi_hat(psi_hat, model))

    def _fit(self, model, psi_hat):
        cfg = SmdConfig(v.check_positive_int(self.n_simulations, "n_simulations"), self.W,
                        v.check_seed(self.random_state), OptimOptions(self.max_iter, self.x_tolerance, self.f_tolerance))
        res = smd_estimate(model, psi_hat, cfg)
        self.model_ = model
        self.psi_hat_ = psi_hat
        self.theta_ = res.minimizer
        self.objective_ = res.objective_value
        self.converged_ = res.converged
        return self


class AuxStatsTransformer(TransformerMixin, BaseEstimator):
    """Map datasets (rows of ``X``) to auxiliary statistics."""

    def __init__(self, model="normal-ji"):
        self.model = model

    def fit(self, X, y=None):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        self.model_ = v.resolve_model(self.model, X.shape[1])
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "model_")
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} observations per row, got {X.shape[1]}")
        return np.array([self.model_.aux_stats(row) for row in X])

"""Simulable models and their auxiliary statistics.

A model maps a parameter vector and a fixed pack of primitive shocks to a
synthetic dataset, and a dataset to a vector of auxiliary statistics.
Because shock packs hold primitives (standard normals and uniforms) rather
than transformed shocks, one pack can be re-used at many parameter values,
which is what makes ``theta -> psi(theta, shocks)`` smooth.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter
from scipy.special import ndtri

from . import _random
from .exceptions import DimensionError, DomainError
from .numlin import ols_fit


@dataclass(frozen=True, eq=False)
class ShockPack:
    """Primitive draws for one synthetic dataset.

    Attributes
    ----------
    seed, index : int
        Master seed and draw index the pack was derived from.
    normals, uniforms : ndarray
        Read-only standard-normal and uniform(0, 1) variates.
    """

    seed: int
    index: int
    normals: np.ndarray
    uniforms: np.ndarray

    def __post_init__(self):
        for arr in (self.normals, self.uniforms):
            arr.flags.writeable = False

    def __eq__(self, other):
        if not isinstance(other, ShockPack):
            return NotImplemented
        return (
            self.seed == other.seed
            and self.index == other.index
            and np.array_equal(self.normals, other.normals)
            and np.array_equal(self.uniforms, other.uniforms)
        )

    __hash__ = None


def make_shockpack(model, seed, index):
    """Derive the shock pack for draw ``index`` of a run seeded with ``seed``.

    Identical ``(seed, index)`` pairs give bit-identical packs; distinct
    indices give independent streams.
    """
    rng = _random.stream(seed, index, _random.SHOCKS)
    normals = rng.standard_normal(model.n_obs * model.normals_per_obs)
    uniforms = rng.random(model.n_obs * model.uniforms_per_obs)
    return ShockPack(int(seed), int(index), normals, uniforms)


def simulate_dataset(model, theta, seed):
    """Observed-data stand-in: simulate at ``theta`` from a stream reserved for data.

    The stream never coincides with any sampler's per-draw shock pack.
    """
    rng = _random.stream(seed, _random.DATA)
    normals = rng.standard_normal(model.n_obs * model.normals_per_obs)
    uniforms = rng.random(model.n_obs * model.uniforms_per_obs)
    return model.simulate(theta, ShockPack(int(seed), -1, normals, uniforms))


def _as_theta(theta, k):
    if not (isinstance(theta, np.ndarray) and theta.ndim == 1 and theta.dtype == float):
        theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.shape[0] != k:
        raise DimensionError(f"expected {k} parameters, got {theta.shape[0]}")
    return theta


class Model:
    """Base class for simulable models.

    Subclasses set ``param_dim``, ``aux_dim``, ``n_obs``, the number of
    primitive normals/uniforms consumed per observation, and implement
    ``_simulate`` and ``aux_stats``.
    """

    name = "model"
    param_labels = ()
    aux_labels = ()
    normals_per_obs = 0
    uniforms_per_obs = 0
    min_obs = 1

    def __init__(self, n_obs):
        n_obs = int(n_obs)
        if n_obs < self.min_obs:
            raise DimensionError(f"{self.name} needs at least {self.min_obs} observations")
        self.n_obs = n_obs

    @property
    def param_dim(self):
        return len(self.param_labels)

    @property
    def aux_dim(self):
        return len(self.aux_labels)

    def in_support(self, theta):
        return True

    def check_theta(self, theta):
        theta = _as_theta(theta, self.param_dim)
        if not (np.isfinite(theta).all() and self.in_support(theta)):
            raise DomainError(f"{self.name}: parameter {theta} outside support")
        return theta

    def simulate(self, theta, shocks):
        """Synthetic dataset at ``theta``; deterministic in ``(theta, shocks)``."""
        return self._simulate(self.check_theta(theta), shocks)

    def aux_stats(self, y):
        raise NotImplementedError

    def psi(self, theta, shocks):
        """Auxiliary statistics of the dataset simulated at ``theta``."""
        return self.aux_stats(self._simulate(self.check_theta(theta), shocks))

    def _check_data(self, y, ndim=1):
        y = np.asarray(y, dtype=float)
        if y.shape[0] != self.n_obs:
            raise DimensionError(f"{self.name}: expected {self.n_obs} observations, got {y.shape[0]}")
        return y

    def psi_batch(self, thetas, normals, uniforms):
        """Statistics for many parameters at once.

        Row ``i`` uses ``thetas[i]`` with shocks ``normals[i]`` and
        ``uniforms[i]``; returns NaN rows where ``theta`` is outside the
        support.
        """
        out = np.full((len(thetas), self.aux_dim), np.nan)
        for i, theta in enumerate(thetas):
            if self.in_support(theta):
                out[i] = self.psi(theta, ShockPack(0, i, np.array(normals[i]), np.array(uniforms[i])))
        return out

    def start_point(self, psi_hat):
        """Moment-style starting value for the optimizers."""
        raise NotImplementedError

    def search_bounds(self, psi_hat):
        """Finite search box of shape (K, 2), or None when unbounded."""
        return None

    def analytic_jacobian(self, theta, shocks):
        raise NotImplementedError(f"{self.name} has no closed-form Jacobian")

    def __repr__(self):
        return f"{type(self).__name__}(n_obs={self.n_obs})"


def _centered_moments(y):
    n = y.shape[0]
    ybar = y.sum() / n
    d = y - ybar
    return ybar, d, (d @ d) / n


class NormalMeanModel(Model):
    """``y_t = m + sigma * e_t`` with known variance; statistic is the mean."""

    name = "normal-mean"
    param_labels = ("m",)
    aux_labels = ("mean",)
    normals_per_obs = 1

    def __init__(self, n_obs=1, variance=1.0):
        super().__init__(n_obs)
        if not variance > 0:
            raise DomainError("variance must be positive")
        self.variance = float(variance)
        self._sd = np.sqrt(self.variance)

    def _simulate(self, theta, shocks):
        return theta[0] + self._sd * shocks.normals

    def aux_stats(self, y):
        y = self._check_data(y)
        return np.array([y.sum() / y.shape[0]])

    def start_point(self, psi_hat):
        return np.array([float(psi_hat[0])])

    def analytic_jacobian(self, theta, shocks):
        return np.ones((1, 1))

    def __repr__(self):
        return f"NormalMeanModel(n_obs={self.n_obs}, variance={self.variance})"


class NormalModel(Model):
    """``y_t = m + sqrt(s2) e_t`` with ``theta = (m, s2)``.

    Just identified statistics are ``(mean, var)``; the over-identified
    variant appends ``mu3 / var`` and ``mu4 / var**2`` with centered
    moments. All moments use divisor ``T``.
    """

    param_labels = ("m", "sigma2")
    normals_per_obs = 1
    min_obs = 2

    def __init__(self, n_obs=20, over_identified=False):
        super().__init__(n_obs)
        self.over_identified = bool(over_identified)
        self.name = "normal-oi" if over_identified else "normal-ji"
        self.aux_labels = ("mean", "var", "mu3/var", "mu4/var2") if over_identified else ("mean", "var")

    def in_support(self, theta):
        return theta[1] > 0

    def _simulate(self, theta, shocks):
        return theta[0] + math.sqrt(theta[1]) * shocks.normals

    def aux_stats(self, y):
        y = self._check_data(y)
        ybar, d, s2 = _centered_moments(y)
        if not self.over_identified:
            return np.array([ybar, s2])
        if not s2 > 0:
            raise DomainError("zero sample variance; higher moment ratios undefined")
        d2 = d * d
        n = y.shape[0]
        mu3 = (d2 @ d) / n
        mu4 = (d2 @ d2) / n
        return np.array([ybar, s2, mu3 / s2, mu4 / (s2 * s2)])

    def start_point(self, psi_hat):
        return np.array([psi_hat[0], psi_hat[1]], dtype=float)

    def psi_batch(self, thetas, normals, uniforms):
        thetas = np.asarray(thetas, dtype=float)
        ok = thetas[:, 1] > 0
        y = thetas[:, :1] + np.sqrt(np.where(ok, thetas[:, 1], 0.0))[:, None] * normals
        n = y.shape[1]
        ybar = y.sum(axis=1) / n
        d = y - ybar[:, None]
        s2 = np.einsum("ij,ij->i", d, d) / n
        cols = [ybar, s2]
        if self.over_identified:
            with np.errstate(divide="ignore", invalid="ignore"):
                cols += [(d**3).sum(axis=1) / n / s2, (d**4).sum(axis=1) / n / s2**2]
        out = np.column_stack(cols)
        out[~ok] = np.nan
        return out

    def analytic_jacobian(self, theta, shocks):
        theta = self.check_theta(theta)
        e = shocks.normals
        ebar, _, s2e = _centered_moments(e)
        sd = np.sqrt(theta[1])
        jac = np.array([[1.0, ebar / (2 * sd)], [0.0, s2e]])
        if self.over_identified:
            n = e.shape[0]
            d = e - ebar
            m3e = (d * d @ d) / n
            # mu3/var = sd * m3e / s2e; mu4/var^2 does not depend on theta.
            jac = np.vstack([jac, [0.0, m3e / (s2e * 2 * sd)], [0.0, 0.0]])
        return jac

    def __repr__(self):
        return f"NormalModel(n_obs={self.n_obs}, over_identified={self.over_identified})"


class ExponentialModel(Model):
    """``y_t = -log(1 - u_t) / theta``: exponential with rate ``theta``."""

    param_labels = ("theta",)
    uniforms_per_obs = 1

    def __init__(self, n_obs=5, over_identified=False):
        super().__init__(n_obs)
        self.over_identified = bool(over_identified)
        self.name = "exponential-oi" if over_identified else "exponential-ji"
        self.aux_labels = ("mean", "var") if over_identified else ("mean",)

    def in_support(self, theta):
        return theta[0] > 0

    def _simulate(self, theta, shocks):
        return -np.log1p(-shocks.uniforms) / theta[0]

    def aux_stats(self, y):
        y = self._check_data(y)
        ybar, _, s2 = _centered_moments(y)
        if self.over_identified:
            return np.array([ybar, s2])
        return np.array([ybar])

    def start_point(self, psi_hat):
        return np.array([1.0 / psi_hat[0]])

    def search_bounds(self, psi_hat):
        return np.array([[0.0, max(10.0, 20.0 / psi_hat[0])]])

    def analytic_jacobian(self, theta, shocks):
        theta = self.check_theta(theta)
        psi = self.psi(theta, shocks)
        if self.over_identified:
            return -np.array([[psi[0]], [2.0 * psi[1]]]) / theta[0]
        return np.array([[-psi[0] / theta[0]]])

    def __repr__(self):
        return f"ExponentialModel(n_obs={self.n_obs}, over_identified={self.over_identified})"


class ARMA11Model(Model):
    """ARMA(1,1) ``y_t = a y_{t-1} + e_t + b e_{t-1}``, ``e_t ~ N(0, sigma^2)``.

    Simulation starts from ``y_0 = e_0 = 0`` without burn-in. Statistics are
    the least squares coefficients of ``y_t`` on ``n_lags`` of its own lags
    (no intercept) followed by the residual variance.
    """

    name = "arma11"
    param_labels = ("alpha", "theta", "sigma")
    normals_per_obs = 1

    def __init__(self, n_obs=200, n_lags=4):
        self.n_lags = int(n_lags)
        self.min_obs = 2 * self.n_lags + 1
        super().__init__(n_obs)
        self.aux_labels = tuple(f"phi{j + 1}" for j in range(self.n_lags)) + ("sigma2_u",)

    def in_support(self, theta):
        return theta[2] > 0

    def _simulate(self, theta, shocks):
        alpha, ma, sigma = theta
        return lfilter([1.0, ma], [1.0, -alpha], sigma * shocks.normals)

    def aux_stats(self, y):
        y = self._check_data(y)
        p = self.n_lags
        if y.shape[0] <= 2 * p:
            raise DimensionError("too few observations for the lag regression")
        n = y.shape[0]
        X = np.column_stack([y[p - j - 1:n - j - 1] for j in range(p)])
        coef, s2 = ols_fit(X, y[p:])
        return np.append(coef, s2)

    def start_point(self, psi_hat):
        phi1, phi2 = psi_hat[0], psi_hat[1]
        ma = -phi2 / phi1 if abs(phi1) > 1e-8 else 0.0
        ma = float(np.clip(ma, -0.95, 0.95))
        alpha = float(np.clip(phi1 - ma, -0.95, 0.95))
        return np.array([alpha, ma, np.sqrt(max(psi_hat[-1], 1e-8))])

    def __repr__(self):
        return f"ARMA11Model(n_obs={self.n_obs}, n_lags={self.n_lags})"


class MixtureModel(Model):
    """``x | theta ~ 1/2 N(theta, 1) + 1/2 N(theta, 1/100)``.

    Each observation consumes one uniform (component label) and one normal.
    The statistic is the sample mean, i.e. the observation itself when
    ``n_obs == 1``.
    """

    name = "mixture"
    param_labels = ("theta",)
    aux_labels = ("x",)
    normals_per_obs = 1
    uniforms_per_obs = 1
    scales = (1.0, 0.1)

    def __init__(self, n_obs=1):
        super().__init__(n_obs)

    def _simulate(self, theta, shocks):
        scale = np.where(shocks.uniforms < 0.5, self.scales[0], self.scales[1])
        return theta[0] + scale * shocks.normals

    def aux_stats(self, y):
        y = self._check_data(y)
        return np.array([y.sum() / y.shape[0]])

    def start_point(self, psi_hat):
        return np.array([float(psi_hat[0])])

    def analytic_jacobian(self, theta, shocks):
        return np.ones((1, 1))


def quantile_simulate(q_fn, theta, u):
    """Dataset ``y_t = q_fn(u_t, theta)`` from uniform draws ``u``."""
    y = np.asarray(q_fn(np.asarray(u, dtype=float), theta), dtype=float)
    if not np.all(np.isfinite(y)):
        raise DomainError("quantile function returned non-finite values")
    return y


class QuantileModel(Model):
    """Wrap a user quantile function ``Q(u, theta)`` as a model.

    Parameters
    ----------
    q_fn : callable
        Vectorized in ``u``; returns one observation per uniform.
    n_obs, param_dim : int
    stats : callable, optional
        Maps a dataset to a 1-D statistic vector; defaults to the mean.
    support : callable, optional
        Predicate on ``theta``.
    """

    name = "quantile"
    uniforms_per_obs = 1

    def __init__(self, q_fn, n_obs, param_dim=1, stats=None, n_stats=1, support=None):
        super().__init__(n_obs)
        self.q_fn = q_fn
        self.stats = stats
        self.param_labels = tuple(f"theta{j + 1}" for j in range(param_dim))
        self.aux_labels = tuple(f"stat{j + 1}" for j in range(n_stats if stats else 1))
        self.support = support

    def in_support(self, theta):
        return True if self.support is None else bool(self.support(theta))

    def _simulate(self, theta, shocks):
        return quantile_simulate(self.q_fn, theta if self.param_dim > 1 else theta[0], shocks.uniforms)

    def aux_stats(self, y):
        y = self._check_data(y)
        if self.stats is None:
            return np.array([y.mean()])
        return np.atleast_1d(np.asarray(self.stats(y), dtype=float))

    def start_point(self, psi_hat):
        return np.zeros(self.param_dim)


def normal_location_quantile(u, theta):
    """``theta + Phi^{-1}(u)``; reproduces the unit-variance normal model."""
    return theta + ndtri(u)


def exponential_quantile(u, theta):
    """Inverse CDF of the exponential distribution with rate ``theta``."""
    return -np.log1p(-u) / theta


MODEL_NAMES = ("normal-mean", "normal-ji", "normal-oi", "exponential-ji", "exponential-oi", "arma11", "mixture")


def get_model(name, n_obs=None, **kwargs):
    """Build a registered model by name."""
    builders = {
        "normal-mean": lambda: NormalMeanModel(n_obs or 1, **kwargs),
        "normal-ji": lambda: NormalModel(n_obs or 20, over_identified=False, **kwargs),
        "normal-oi": lambda: NormalModel(n_obs or 20, over_identified=True, **kwargs),
        "exponential-ji": lambda: ExponentialModel(n_obs or 5, over_identified=False, **kwargs),
        "exponential-oi": lambda: ExponentialModel(n_obs or 5, over_identified=True, **kwargs),
        "arma11": lambda: ARMA11Model(n_obs or 200, **kwargs),
        "mixture": lambda: MixtureModel(n_obs or 1, **kwargs),
    }
    if name not in builders:
        raise KeyError(f"unknown model {name!r}; choose from {', '.join(MODEL_NAMES)}")
    return builders[name]()

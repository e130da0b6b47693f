"""Weighted-sample diagnostics and closed-form reference posteriors."""
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc, gammaincc, ndtr

from .exceptions import DegenerateSampleError, DomainError

SUMMARY_QUANTILES = (0.025, 0.25, 0.5, 0.75, 0.975)


def _values_weights(sample, weights=None):
    """Return ``(values (B, K), normalized weights (B,))``.

    ``sample`` is a :class:`~rsamp.samplers.PosteriorSample` or an array of
    draws; bare arrays get equal weights unless ``weights`` is given.
    """
    if hasattr(sample, "draws"):
        values, w = sample.thetas, sample.weights_unnorm
    else:
        values = np.asarray(sample, dtype=float)
        values = values.reshape(values.shape[0], -1) if values.ndim else values.reshape(1, 1)
        w = np.ones(values.shape[0]) if weights is None else np.asarray(weights, dtype=float).reshape(-1)
    if w.shape[0] != values.shape[0]:
        raise ValueError("weights and draws differ in length")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and non-negative")
    total = w.sum()
    if not total > 0:
        raise DegenerateSampleError("sample has no positive weight")
    return values, w / total


def _column(sample, coordinate, weights=None):
    values, w = _values_weights(sample, weights)
    if not 0 <= coordinate < values.shape[1]:
        raise IndexError(f"coordinate {coordinate} out of range for {values.shape[1]} parameters")
    return values[:, coordinate], w


def weighted_mean(sample, weights=None):
    """Self-normalized weighted mean of each coordinate."""
    values, w = _values_weights(sample, weights)
    return w @ values


def weighted_var(sample, weights=None):
    """Weighted variance ``sum w (theta - mean)^2`` of each coordinate."""
    values, w = _values_weights(sample, weights)
    d = values - w @ values
    return w @ (d * d)


def mc_standard_error(sample, weights=None):
    """Monte Carlo standard error of the weighted mean, ``sqrt(sum w^2 (theta - mean)^2)``."""
    values, w = _values_weights(sample, weights)
    d = values - w @ values
    return np.sqrt((w * w) @ (d * d))


def weighted_quantile(sample, coordinate=0, p=0.5, weights=None):
    """Smallest draw whose cumulative normalized weight reaches ``p``."""
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    x, w = _column(sample, coordinate, weights)
    order = np.argsort(x, kind="stable")
    cw = np.cumsum(w[order])
    k = int(np.searchsorted(cw, p - 1e-12, side="left"))
    return float(x[order][min(k, x.shape[0] - 1)])


def ess(sample, weights=None):
    """Effective sample size ``1 / sum(w^2)`` of the normalized weights."""
    _, w = _values_weights(sample, weights)
    return float(1.0 / (w @ w))


def _step_cdf(x, w):
    """Distinct sorted support points with left limits and values of the weighted ECDF."""
    order = np.argsort(x, kind="stable")
    xs, ws = x[order], w[order]
    cw = np.cumsum(ws)
    cw[-1] = 1.0
    last = np.r_[xs[1:] != xs[:-1], True]
    pts = xs[last]
    right = cw[last]
    left = np.r_[0.0, right[:-1]]
    return pts, left, right


def weighted_ks(sample, coordinate=0, reference=None, weights=None):
    """Kolmogorov distance between the weighted ECDF and a reference CDF.

    Both one-sided limits of the ECDF at every jump are compared, so the
    supremum over the real line is attained exactly.
    """
    if reference is None:
        raise ValueError("a reference posterior is required")
    x, w = _column(sample, coordinate, weights)
    pts, left, right = _step_cdf(x, w)
    g = reference.cdf(pts)
    return float(max(np.max(np.abs(right - g)), np.max(np.abs(left - g))))


def weighted_ks_2samp(a, b, coordinate=0, weights_a=None, weights_b=None):
    """Kolmogorov distance between two weighted empirical CDFs."""
    xa, wa = _column(a, coordinate, weights_a)
    xb, wb = _column(b, coordinate, weights_b)
    grid = np.union1d(xa, xb)

    def ecdf(x, w):
        order = np.argsort(x, kind="stable")
        cw = np.r_[0.0, np.cumsum(w[order])]
        return cw[np.searchsorted(x[order], grid, side="right")]

    return float(np.max(np.abs(ecdf(xa, wa) - ecdf(xb, wb))))


class ReferencePosterior:
    """Closed-form posterior of one scalar coordinate."""

    kind = "reference"

    def cdf(self, x):
        raise NotImplementedError

    def mean(self):
        raise NotImplementedError

    def var(self):
        raise NotImplementedError

    def to_dict(self):
        return {"kind": self.kind, **{k: v for k, v in vars(self).items() if not k.startswith("_")}}


@dataclass
class NormalPosterior(ReferencePosterior):
    """``N(loc, scale^2)``; one observation under a standard normal prior gives ``N(y/2, 1/2)``."""

    loc: float
    scale: float
    kind = "normal"

    @classmethod
    def from_single_observation(cls, y):
        return cls(0.5 * float(y), math.sqrt(0.5))

    def cdf(self, x):
        return ndtr((np.asarray(x, dtype=float) - self.loc) / self.scale)

    def mean(self):
        return self.loc

    def var(self):
        return self.scale**2


@dataclass
class GammaPosterior(ReferencePosterior):
    """Gamma with ``shape`` and ``rate``; exponential data give ``shape=T+1, rate=T*ybar``."""

    shape: float
    rate: float
    kind = "gamma"

    @classmethod
    def for_exponential(cls, T, ybar):
        return cls(T + 1.0, T * float(ybar))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x > 0, gammainc(self.shape, self.rate * np.maximum(x, 0.0)), 0.0)

    def mean(self):
        return self.shape / self.rate

    def var(self):
        return self.shape / self.rate**2


@dataclass
class TruncatedMixturePosterior(ReferencePosterior):
    """``1/2 N(x, 1) + 1/2 N(x, 0.01)`` restricted to ``[lower, upper]``."""

    x: float = 0.0
    lower: float = -10.0
    upper: float = 10.0
    kind = "truncated-mixture"
    scales = (1.0, 0.1)

    def _mass(self, t):
        t = np.asarray(t, dtype=float)
        return sum(0.5 * (ndtr((t - self.x) / s) - ndtr((self.lower - self.x) / s)) for s in self.scales)

    def cdf(self, t):
        t = np.clip(np.asarray(t, dtype=float), self.lower, self.upper)
        return self._mass(t) / self._mass(self.upper)

    def _moment(self, power):
        # Truncated-normal first and second moments per component.
        total = 0.0
        for s in self.scales:
            a, b = (self.lower - self.x) / s, (self.upper - self.x) / s
            pa, pb = math.exp(-a * a / 2) / math.sqrt(2 * math.pi), math.exp(-b * b / 2) / math.sqrt(2 * math.pi)
            z = ndtr(b) - ndtr(a)
            m1 = (pa - pb)
            m2 = z + a * pa - b * pb
            if power == 1:
                total += 0.5 * (self.x * z + s * m1)
            else:
                total += 0.5 * (self.x**2 * z + 2 * self.x * s * m1 + s * s * m2)
        return total / float(self._mass(self.upper))

    def mean(self):
        return self._moment(1)

    def var(self):
        return self._moment(2) - self._moment(1) ** 2


@dataclass
class NormalVarianceMarginal(ReferencePosterior):
    """Marginal posterior of ``sigma2`` for normal data under ``pi = sigma2^-alpha``.

    Inverse gamma with shape ``(T - 3) / 2 + alpha`` and scale ``T * s2hat / 2``.
    """

    T: int
    s2hat: float
    alpha: float = 0.0
    kind = "normal-variance-marginal"

    @property
    def ig_shape(self):
        return (self.T - 3) / 2.0 + self.alpha

    @property
    def ig_scale(self):
        return self.T * self.s2hat / 2.0

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x > 0, gammaincc(self.ig_shape, self.ig_scale / np.where(x > 0, x, 1.0)), 0.0)

    def mean(self):
        if not self.ig_shape > 1:
            raise DomainError("posterior mean does not exist")
        return self.ig_scale / (self.ig_shape - 1)

    def var(self):
        if not self.ig_shape > 2:
            raise DomainError("posterior variance does not exist")
        return self.ig_scale**2 / ((self.ig_shape - 1) ** 2 * (self.ig_shape - 2))


def reference_cdf(ref, x):
    """CDF of a reference posterior at ``x``."""
    return ref.cdf(x)


def kappa1(S, T):
    """Variance inflation factor of the S-simulation SMD variance estimator."""
    n = S * (T - 1)
    return n * n * (T - 1 + n - 2) / ((n - 2) ** 2 * (n - 4))


def table1_oracle(T, S, sigma2):
    """Exact finite-sample moments of the variance estimators in the normal model.

    Returns a dict keyed by ``mle``, ``bayes``, ``rs`` and ``smd`` (each with
    ``mean``, ``bias``, ``variance``, ``mse``) plus ``kappa1``. Bayes and RS
    use the flat prior on ``(m, sigma2 > 0)``.
    """
    if not T > 5:
        raise DomainError("T must exceed 5")
    n = S * (T - 1)
    if not n > 4:
        raise DomainError("S(T - 1) must exceed 4")
    s4 = sigma2 * sigma2
    k1 = kappa1(S, T)
    # Bias and MSE follow from the mean and variance: E = sigma2 (T-1)/(T-5)
    # gives bias 4 sigma2/(T-5) and MSE 2 sigma4 (T+7)/(T-5)^2.
    bayes = {
        "mean": sigma2 * (T - 1) / (T - 5),
        "bias": 4 * sigma2 / (T - 5),
        "variance": 2 * s4 * (T - 1) / (T - 5) ** 2,
        "mse": 2 * s4 * (T + 7) / (T - 5) ** 2,
    }
    return {
        "mle": {
            "mean": sigma2 * (T - 1) / T,
            "bias": -sigma2 / T,
            "variance": 2 * s4 * (T - 1) / T**2,
            "mse": s4 * (2 * T - 1) / T**2,
        },
        "bayes": bayes,
        "rs": dict(bayes),
        "smd": {
            "mean": sigma2 * n / (n - 2),
            "bias": 2 * sigma2 / (n - 2),
            "variance": 2 * s4 * k1 / (T - 1),
            "mse": 2 * s4 * k1 / (T - 1) + 4 * s4 / (n - 2) ** 2,
        },
        "kappa1": k1,
    }


def summarize(sample, reference=None, labels=None):
    """JSON-ready summary: method, B, delta, ESS and per-coordinate statistics.

    ``reference`` may be a single :class:`ReferencePosterior` (applied to
    coordinate 0) or a dict mapping coordinate index to one.
    """
    values, w = _values_weights(sample)
    labels = labels or getattr(sample, "param_labels", None) or [f"theta_{k + 1}" for k in range(values.shape[1])]
    if reference is not None and not isinstance(reference, dict):
        reference = {0: reference}
    mean, var, se = weighted_mean(sample), weighted_var(sample), mc_standard_error(sample)
    coords = []
    for k in range(values.shape[1]):
        entry = {
            "label": labels[k],
            "mean": float(mean[k]),
            "sd": float(math.sqrt(var[k])),
            "mc_se": float(se[k]),
            "quantiles": {str(p): weighted_quantile(sample, k, p) for p in SUMMARY_QUANTILES},
        }
        ref = (reference or {}).get(k)
        if ref is not None:
            entry["reference"] = ref.to_dict()
            entry["reference_mean"] = float(ref.mean())
            entry["ks"] = weighted_ks(sample, k, ref)
        coords.append(entry)
    out = {
        "method": getattr(sample, "method", None),
        "B": int(values.shape[0]),
        "delta": getattr(sample, "delta_used", None),
        "ess": ess(sample),
        "coordinates": coords,
    }
    if hasattr(sample, "draws"):
        out.update(
            proposed_count=int(sample.proposed_count),
            seed=sample.master_seed,
            invalid_count=len(sample.invalid),
            metadata={k: v for k, v in sample.metadata.items()},
        )
    return out

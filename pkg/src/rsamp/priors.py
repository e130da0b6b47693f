"""Prior distributions: unnormalized log densities and sampling.

Importance weights only ever enter through self-normalized ratios, so the
densities here are unnormalized and improper priors are allowed; sampling
is available only for proper priors.
"""
import numpy as np

from .exceptions import DimensionError, NotSamplableError


class Prior:
    """Base prior over a ``dim``-dimensional parameter."""

    kind = "prior"
    proper = False

    def __init__(self, dim):
        self.dim = int(dim)

    def log_density_unnorm(self, theta):
        raise NotImplementedError

    def density_unnorm(self, theta):
        return float(np.exp(self.log_density_unnorm(theta)))

    def in_support(self, theta):
        return self.log_density_unnorm(theta) > -np.inf

    def sample(self, rng):
        raise NotSamplableError(f"{self.kind} prior is improper and cannot be sampled")

    def bounds(self):
        """Support box, shape (dim, 2); infinite entries for open directions."""
        return np.tile([-np.inf, np.inf], (self.dim, 1))

    def _theta(self, theta):
        theta = np.asarray(theta, dtype=float).reshape(-1)
        if theta.shape[0] != self.dim:
            raise DimensionError(f"prior of dimension {self.dim} got {theta.shape[0]} parameters")
        return theta


def _box(dim, lower, upper, default):
    lo = np.full(dim, default[0]) if lower is None else np.broadcast_to(np.asarray(lower, float), (dim,)).copy()
    hi = np.full(dim, default[1]) if upper is None else np.broadcast_to(np.asarray(upper, float), (dim,)).copy()
    if np.any(lo >= hi):
        raise ValueError("prior bounds need lower < upper")
    return lo, hi


class FlatPrior(Prior):
    """Indicator of a (possibly unbounded) box; improper unless the box is finite.

    ``strict`` excludes the boundary, e.g. ``sigma2 > 0``.
    """

    kind = "flat"

    def __init__(self, dim=1, lower=None, upper=None, strict=False):
        super().__init__(dim)
        self.lower, self.upper = _box(self.dim, lower, upper, (-np.inf, np.inf))
        self.strict = bool(strict)
        self.proper = bool(np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper)))

    def log_density_unnorm(self, theta):
        theta = self._theta(theta)
        if self.strict:
            inside = np.all(theta > self.lower) and np.all(theta < self.upper)
        else:
            inside = np.all(theta >= self.lower) and np.all(theta <= self.upper)
        return 0.0 if inside else -np.inf

    def sample(self, rng):
        if not self.proper:
            return super().sample(rng)
        return rng.uniform(self.lower, self.upper)

    def bounds(self):
        return np.column_stack([self.lower, self.upper])


class UniformBoxPrior(FlatPrior):
    """Uniform indicator prior on a box, sampled from a finite sampling box.

    The sampling box defaults to the support; it may be narrower when the
    support is unbounded in some direction (e.g. ``sigma >= 0`` sampled on
    ``[0, 3]``), in which case draws come from the truncated box.
    """

    kind = "uniform-box"

    def __init__(self, lower, upper, sample_lower=None, sample_upper=None, dim=None):
        dim = dim or np.size(lower)
        super().__init__(dim, lower, upper)
        self.sample_lower, self.sample_upper = _box(
            self.dim,
            self.lower if sample_lower is None else sample_lower,
            self.upper if sample_upper is None else sample_upper,
            (-np.inf, np.inf),
        )
        if not (np.all(np.isfinite(self.sample_lower)) and np.all(np.isfinite(self.sample_upper))):
            raise ValueError("uniform-box prior needs a finite sampling box")
        self.proper = True

    def sample(self, rng):
        return rng.uniform(self.sample_lower, self.sample_upper)


class PowerVariancePrior(Prior):
    """``pi(theta) = theta[var_index] ** (-alpha) * 1{theta[var_index] > 0}``.

    Other coordinates are flat. ``alpha = 0`` gives the flat prior on a
    positive variance.
    """

    kind = "power-variance"

    def __init__(self, alpha=1.0, dim=2, var_index=1):
        super().__init__(dim)
        self.alpha = float(alpha)
        self.var_index = int(var_index)

    def log_density_unnorm(self, theta):
        theta = self._theta(theta)
        v = theta[self.var_index]
        if not v > 0:
            return -np.inf
        return -self.alpha * np.log(v)

    def bounds(self):
        b = super().bounds()
        b[self.var_index, 0] = 0.0
        return b


class StandardNormalPrior(Prior):
    """Independent standard normals."""

    kind = "standard-normal"
    proper = True

    def log_density_unnorm(self, theta):
        theta = self._theta(theta)
        return -0.5 * float(theta @ theta)

    def sample(self, rng):
        return rng.standard_normal(self.dim)


class ProductPrior(Prior):
    """Independent product of lower-dimensional priors, concatenated in order."""

    kind = "product"

    def __init__(self, marginals):
        self.marginals = list(marginals)
        super().__init__(sum(m.dim for m in self.marginals))
        self.proper = all(m.proper for m in self.marginals)
        self._splits = np.cumsum([m.dim for m in self.marginals])[:-1]

    def log_density_unnorm(self, theta):
        theta = self._theta(theta)
        total = 0.0
        for m, part in zip(self.marginals, np.split(theta, self._splits)):
            total += m.log_density_unnorm(part)
            if total == -np.inf:
                break
        return total

    def sample(self, rng):
        if not self.proper:
            return super().sample(rng)
        return np.concatenate([np.atleast_1d(m.sample(rng)) for m in self.marginals])

    def bounds(self):
        return np.vstack([m.bounds() for m in self.marginals])


def make_prior(kind, dim=1, lower=None, upper=None, alpha=None, sample_lower=None, sample_upper=None):
    """Build a prior from a ``kind`` string and bound/exponent settings."""
    if kind in ("flat", "flat-indicator"):
        return FlatPrior(dim, lower, upper)
    if kind == "uniform-box":
        if lower is None or upper is None:
            raise ValueError("uniform-box prior needs lower and upper bounds")
        return UniformBoxPrior(lower, upper, sample_lower, sample_upper, dim=dim)
    if kind == "power-variance":
        return PowerVariancePrior(1.0 if alpha is None else alpha, dim=dim)
    if kind == "standard-normal":
        return StandardNormalPrior(dim)
    raise KeyError(f"unknown prior kind {kind!r}")


def default_prior(model):
    """Flat prior on the natural parameter space of a registered model."""
    name = getattr(model, "name", "")
    if name.startswith("normal-") and name != "normal-mean":
        return PowerVariancePrior(0.0, dim=2)
    if name.startswith("exponential"):
        return FlatPrior(1, 0.0, None, strict=True)
    if name == "mixture":
        return FlatPrior(1, -10.0, 10.0)
    if name == "arma11":
        return FlatPrior(3, [-1.0, -1.0, 0.0], [1.0, 1.0, np.inf], strict=True)
    return FlatPrior(model.param_dim)

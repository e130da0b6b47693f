"""Input checks shared by the estimators and the command-line driver."""
import numbers

import numpy as np
from sklearn.utils import check_array

from .exceptions import DimensionError
from .models import Model, get_model
from .priors import Prior, default_prior, make_prior


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def check_seed(value, name="random_state"):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < 0:
        raise ValueError(f"{name} must be a non-negative integer seed, got {value!r}")
    return int(value)


def check_fraction(value, name):
    if not isinstance(value, numbers.Real) or not 0 < value <= 1:
        raise ValueError(f"{name} must lie in (0, 1], got {value!r}")
    return float(value)


def check_positive(value, name):
    if not isinstance(value, numbers.Real) or not value > 0:
        raise ValueError(f"{name} must be positive, got {value!r}")
    return float(value)


def check_data(y):
    """Observed dataset as a finite 1-D float array."""
    return check_array(np.asarray(y, dtype=float).reshape(-1, 1), ensure_min_samples=1).ravel()


def check_psi_hat(psi_hat, model):
    psi_hat = check_array(np.asarray(psi_hat, dtype=float).reshape(1, -1)).ravel()
    if psi_hat.shape[0] != model.aux_dim:
        raise DimensionError(f"{model.name} has {model.aux_dim} statistics, got {psi_hat.shape[0]}")
    return psi_hat


def resolve_model(model, n_obs=None):
    """Accept a :class:`Model` instance or a registered model name."""
    if isinstance(model, Model):
        if n_obs is not None and model.n_obs != n_obs:
            raise DimensionError(f"model expects {model.n_obs} observations, data has {n_obs}")
        return model
    if isinstance(model, str):
        return get_model(model, n_obs)
    raise TypeError(f"model must be a Model or a registered name, got {type(model).__name__}")


def resolve_prior(prior, model):
    """Accept a :class:`Prior`, a kind string, or None for the model default."""
    if prior is None:
        return default_prior(model)
    if isinstance(prior, Prior):
        if prior.dim != model.param_dim:
            raise DimensionError(f"prior has dimension {prior.dim}, model has {model.param_dim} parameters")
        return prior
    if isinstance(prior, str):
        return make_prior(prior, dim=model.param_dim)
    raise TypeError(f"prior must be a Prior, a kind name or None, got {type(prior).__name__}")

"""Finite-difference Jacobians of simulated statistics under common shocks."""
from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateJacobianError, EvaluationError, RankDeficiencyError
from .numlin import volume

DEFAULT_STEP = np.finfo(float).eps ** (1.0 / 3.0)


@dataclass(frozen=True)
class JacobianSpec:
    """Central differences with relative step ``h_j = step * max(1, |theta_j|)``."""

    step: float = DEFAULT_STEP
    scheme: str = "central"

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("finite-difference step must be positive")
        if self.scheme != "central":
            raise ValueError(f"unsupported scheme {self.scheme!r}")


def _probe(psi_fn, theta, j):
    try:
        out = np.asarray(psi_fn(theta), dtype=float).reshape(-1)
    except Exception as exc:
        raise EvaluationError(f"statistics failed at coordinate {j}, point {theta!r}: {exc}", point=theta) from exc
    if not np.all(np.isfinite(out)):
        raise EvaluationError(f"non-finite statistics at coordinate {j}, point {theta!r}", point=theta)
    return out


def fd_jacobian(psi_fn, theta, spec=None, in_support=None):
    """Jacobian (L x K) of ``psi_fn`` at ``theta`` by central differences.

    ``psi_fn`` must close over a fixed shock pack so that every probe uses
    the same random numbers. If one of ``theta +/- h e_j`` leaves the support
    (``in_support`` returns False), coordinate ``j`` falls back to a
    one-sided difference of span ``2h`` on the feasible side.
    """
    spec = spec or JacobianSpec()
    theta = np.asarray(theta, dtype=float).reshape(-1)
    ok = in_support or (lambda t: True)
    cols = []
    center = None
    for j in range(theta.shape[0]):
        h = spec.step * max(1.0, abs(theta[j]))
        up, down = theta.copy(), theta.copy()
        up[j] += h
        down[j] -= h
        up_ok, down_ok = ok(up), ok(down)
        if up_ok and down_ok:
            cols.append((_probe(psi_fn, up, j) - _probe(psi_fn, down, j)) / (2.0 * h))
            continue
        if center is None:
            center = _probe(psi_fn, theta, j)
        far = theta.copy()
        if up_ok:
            far[j] += 2.0 * h
            if not ok(far):
                raise EvaluationError(f"no feasible difference for coordinate {j}", point=theta)
            cols.append((_probe(psi_fn, far, j) - center) / (2.0 * h))
        elif down_ok:
            far[j] -= 2.0 * h
            if not ok(far):
                raise EvaluationError(f"no feasible difference for coordinate {j}", point=theta)
            cols.append((center - _probe(psi_fn, far, j)) / (2.0 * h))
        else:
            raise EvaluationError(f"both probes infeasible for coordinate {j}", point=theta)
    return np.column_stack(cols)


def jacobian_volume_inverse(psi_fn, theta, spec=None, in_support=None):
    """Inverse volume of the finite-difference Jacobian at ``theta``.

    For a square Jacobian this is ``1 / |det|``.

    Raises
    ------
    DegenerateJacobianError
        When the Jacobian volume is below the rank tolerance.
    """
    jac = fd_jacobian(psi_fn, theta, spec, in_support)
    try:
        return 1.0 / volume(jac)
    except RankDeficiencyError as exc:
        raise DegenerateJacobianError(str(exc)) from exc

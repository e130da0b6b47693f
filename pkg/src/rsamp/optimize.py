"""Derivative-free minimizers: golden-section search and Nelder-Mead.

Both are deterministic. Box bounds for Nelder-Mead are enforced by clamping
the evaluation point into the box and adding a quadratic penalty on the
violation, which keeps the simplex iteration itself textbook-standard.
"""
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import EvaluationError, OptimizationError

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
PENALTY = 1e10


@dataclass(frozen=True)
class OptimOptions:
    """Tolerances and limits shared by the optimizers.

    ``max_iterations=None`` means ``200 * dim``. ``bounds`` is an array of
    shape (dim, 2) or None.
    """

    max_iterations: int = None
    x_tolerance: float = 1e-8
    f_tolerance: float = 1e-12
    bounds: np.ndarray = None
    restarts: int = 0

    def __post_init__(self):
        if not (self.x_tolerance > 0 and self.f_tolerance > 0):
            raise ValueError("tolerances must be positive")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.bounds is not None:
            b = np.asarray(self.bounds, dtype=float).reshape(-1, 2)
            if np.any(b[:, 0] >= b[:, 1]):
                raise ValueError("bounds need lower < upper")
            object.__setattr__(self, "bounds", b)

    def with_bounds(self, bounds):
        return replace(self, bounds=bounds)

    def iterations_for(self, dim):
        return self.max_iterations if self.max_iterations is not None else 200 * dim


@dataclass
class OptimResult:
    minimizer: np.ndarray
    objective_value: float
    iterations: int
    converged: bool
    n_evaluations: int = 0
    message: str = field(default="", repr=False)


def _finite_or_raise(f, x):
    try:
        val = float(f(x))
    except EvaluationError:
        raise
    except Exception as exc:
        raise EvaluationError(f"objective raised at {x!r}: {exc}", point=x) from exc
    if not math.isfinite(val):
        raise EvaluationError(f"objective is not finite at {x!r}", point=x)
    return val


def golden_section(f, lo, hi, opts=None):
    """Minimize a scalar function on ``[lo, hi]`` by golden-section search.

    Only interior points are probed. The search stops when the bracketing
    interval is narrower than ``x_tolerance``; the better of the two final
    interior points is returned.

    Raises
    ------
    EvaluationError
        If ``f`` is non-finite (or raises) at a probe point.
    """
    opts = opts or OptimOptions()
    a, b = float(lo), float(hi)
    if not a < b:
        raise ValueError("golden_section needs lo < hi")
    maxit = opts.iterations_for(1)
    call = lambda x: _finite_or_raise(f, x)  # noqa: E731
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = call(c), call(d)
    nev, it = 2, 0
    while b - a > opts.x_tolerance and it < maxit:
        it += 1
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = call(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = call(d)
        nev += 1
    x, fx = (c, fc) if fc <= fd else (d, fd)
    return OptimResult(np.array([x]), fx, it, b - a <= opts.x_tolerance, nev)


def _penalized(f, bounds):
    if bounds is None:
        def g(x):
            v = f(x)
            return v if v == v else math.inf
        return g, lambda x: x
    lo, hi = bounds[:, 0], bounds[:, 1]

    def clamp(x):
        return np.minimum(np.maximum(x, lo), hi)

    def g(x):
        xc = clamp(x)
        v = f(xc)
        if v != v:
            v = math.inf
        viol = x - xc
        return v + PENALTY * float(viol @ viol)

    return g, clamp


def nelder_mead(f, x0, opts=None):
    """Minimize ``f`` from ``x0`` with the Nelder-Mead simplex method.

    Standard coefficients (reflection 1, expansion 2, contraction 1/2,
    shrink 1/2). The initial simplex is ``x0`` plus the vertices
    ``x0 + 0.05 * max(1, |x0_j|) e_j``. Iteration stops when the simplex
    diameter (max-norm) drops below ``x_tolerance``, when the spread of
    function values drops below ``f_tolerance``, or after
    ``max_iterations``; the last case returns ``converged=False``.

    Non-finite values away from ``x0`` are treated as ``+inf``.
    """
    opts = opts or OptimOptions()
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    n = x0.shape[0]
    if n < 1:
        raise ValueError("nelder_mead needs at least one dimension")
    maxit = opts.iterations_for(n)
    g, clamp = _penalized(f, opts.bounds)
    x0 = clamp(x0)
    f0 = _finite_or_raise(g, x0)

    sim = np.empty((n + 1, n))
    sim[0] = x0
    fs = np.empty(n + 1)
    fs[0] = f0
    for j in range(n):
        v = x0.copy()
        v[j] += 0.05 * max(1.0, abs(x0[j]))
        sim[j + 1] = v
        fs[j + 1] = g(v)
    nev = n + 1
    it = 0
    converged = False
    while True:
        order = np.argsort(fs, kind="stable")
        sim, fs = sim[order], fs[order]
        if fs[-1] - fs[0] <= opts.f_tolerance or np.abs(sim[1:] - sim[0]).max() <= opts.x_tolerance:
            converged = True
            break
        if it >= maxit:
            break
        it += 1
        worst = sim[-1]
        xbar = sim[:-1].sum(axis=0) / n
        xr = 2.0 * xbar - worst
        fr = g(xr)
        nev += 1
        if fr < fs[0]:
            xe = 3.0 * xbar - 2.0 * worst
            fe = g(xe)
            nev += 1
            if fe < fr:
                sim[-1], fs[-1] = xe, fe
            else:
                sim[-1], fs[-1] = xr, fr
            continue
        if fr < fs[-2]:
            sim[-1], fs[-1] = xr, fr
            continue
        if fr < fs[-1]:
            xc = 1.5 * xbar - 0.5 * worst
            fc = g(xc)
            nev += 1
            if fc <= fr:
                sim[-1], fs[-1] = xc, fc
                continue
        else:
            xc = 0.5 * (xbar + worst)
            fc = g(xc)
            nev += 1
            if fc < fs[-1]:
                sim[-1], fs[-1] = xc, fc
                continue
        for i in range(1, n + 1):
            sim[i] = sim[0] + 0.5 * (sim[i] - sim[0])
            fs[i] = g(sim[i])
        nev += n
    best = sim[0]
    xbest = clamp(best)
    if opts.bounds is not None and not np.array_equal(xbest, best):
        fbest = float(f(xbest))
        nev += 1
    else:
        fbest = float(fs[0])
    return OptimResult(xbest, fbest, it, converged, nev)


def multistart(f, starts, opts=None):
    """Run Nelder-Mead from each start and keep the lowest objective.

    Ties go to the earliest start. Starts whose evaluation fails are
    skipped; if all fail an :class:`OptimizationError` lists the failures.
    """
    starts = list(starts)
    if not starts:
        raise ValueError("multistart needs at least one start")
    best, failures = None, []
    for x0 in starts:
        try:
            res = nelder_mead(f, x0, opts)
        except EvaluationError as exc:
            failures.append(exc)
            continue
        if best is None or res.objective_value < best.objective_value:
            best = res
    if best is None:
        raise OptimizationError(f"all {len(starts)} starts failed", failures)
    return best

"""Likelihood-free estimators built on auxiliary statistics.

* :func:`smd_estimate` - simulated minimum distance point estimate.
* :func:`rs_draw` / :func:`rs_sample` - the reverse sampler: each draw solves
  a one-simulation minimum distance problem under its own shock pack and is
  importance-weighted by prior density times inverse Jacobian volume.
* :func:`abc_ar`, :func:`abc_mcmc`, :func:`abc_smc` - accept-reject,
  MCMC and tolerance-schedule SMC versions of ABC.

Every random quantity is derived from ``(master_seed, index...)`` so that
results are reproducible and independent of ``n_jobs``.
"""
import math
import time
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from . import _random
from .exceptions import (
    DegenerateJacobianError,
    DegenerateSampleError,
    DimensionError,
    DomainError,
    EvaluationError,
    NotSamplableError,
    OptimizationError,
    RankDeficiencyError,
    SamplerDegeneracyError,
    ScheduleInfeasibleError,
)
from .jacobian import JacobianSpec, jacobian_volume_inverse
from .models import ShockPack, make_shockpack
from .optimize import OptimOptions, golden_section, multistart, nelder_mead

#: Exactly identified draws with a larger attained objective get one extra restart.
RESTART_THRESHOLD = 1e-6


@dataclass
class WeightedDraw:
    """One output draw: parameter, unnormalized weight and diagnostics."""

    theta: np.ndarray
    weight_unnorm: float
    j_value: float
    psi_sim: np.ndarray
    index: object
    vol_inv: float = 1.0
    valid: bool = True
    converged: bool = True
    reason: str = ""


@dataclass
class PosteriorSample:
    """Ordered weighted draws plus provenance.

    ``delta_used`` is expressed in the sampler's distance (``J`` or its
    square root, see ``metadata['distance']``).
    """

    draws: list
    proposed_count: int
    delta_used: float
    master_seed: int
    method: str
    param_labels: tuple = ()
    invalid: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def kept_count(self):
        return len(self.draws)

    @property
    def thetas(self):
        return np.array([d.theta for d in self.draws], dtype=float).reshape(len(self.draws), -1)

    @property
    def weights_unnorm(self):
        return np.array([d.weight_unnorm for d in self.draws], dtype=float)

    @property
    def weights(self):
        w = self.weights_unnorm
        total = w.sum()
        if not total > 0:
            raise DegenerateSampleError("all weights are zero")
        return w / total

    @property
    def j_values(self):
        return np.array([d.j_value for d in self.draws], dtype=float)

    @property
    def indices(self):
        return [d.index for d in self.draws]


@dataclass(frozen=True)
class SmdConfig:
    """Simulated minimum distance settings: ``S`` simulations, weight matrix, seed."""

    S: int = 1
    W: np.ndarray = None
    seed: int = 0
    optim: OptimOptions = field(default_factory=OptimOptions)

    def __post_init__(self):
        if int(self.S) < 1:
            raise ValueError("S must be at least 1")


def weight_matrix(W, L):
    """Validate ``W`` as an L x L symmetric positive definite matrix.

    ``None`` gives the identity and a 1-D array gives a diagonal matrix.
    """
    if W is None:
        return np.eye(L)
    W = np.asarray(W, dtype=float)
    if W.ndim == 1:
        W = np.diag(W)
    if W.shape != (L, L):
        raise DimensionError(f"weight matrix must be {L}x{L}, got {W.shape}")
    if not np.allclose(W, W.T):
        raise ValueError("weight matrix must be symmetric")
    try:
        np.linalg.cholesky(W)
    except np.linalg.LinAlgError:
        raise ValueError("weight matrix must be positive definite") from None
    return W


def j_objective(psi_hat, psi_sim, W=None):
    """Quadratic distance ``g' W g`` with ``g = psi_hat - psi_sim``."""
    psi_hat = np.asarray(psi_hat, dtype=float).reshape(-1)
    psi_sim = np.asarray(psi_sim, dtype=float).reshape(-1)
    if psi_hat.shape != psi_sim.shape:
        raise DimensionError(f"statistics of length {psi_hat.shape[0]} and {psi_sim.shape[0]}")
    g = psi_hat - psi_sim
    if W is None:
        return float(g @ g)
    W = np.asarray(W, dtype=float)
    if W.ndim == 1:
        return max(0.0, float(g @ (W * g)))
    if W.shape != (g.shape[0], g.shape[0]):
        raise DimensionError(f"weight matrix shape {W.shape} does not match {g.shape[0]} statistics")
    return max(0.0, float(g @ W @ g))


def _distance(j, distance):
    if distance == "quadratic":
        return j
    if distance == "norm":
        return math.sqrt(j)
    raise ValueError(f"distance must be 'quadratic' or 'norm', got {distance!r}")


def _map(fn, items, n_jobs):
    items = list(items)
    if not n_jobs or n_jobs == 1 or len(items) < 2:
        return [fn(i) for i in items]
    n_chunks = min(len(items), 4 * abs(int(n_jobs)))
    chunks = [c for c in np.array_split(np.arange(len(items)), n_chunks) if len(c)]
    parts = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(lambda idx: [fn(items[k]) for k in idx])(c) for c in chunks
    )
    return [r for part in parts for r in part]


def _search_box(model, prior, psi_hat, optim):
    if optim.bounds is not None:
        return optim.bounds
    box = prior.bounds().astype(float)
    model_box = model.search_bounds(psi_hat)
    if model_box is not None:
        box = np.column_stack([np.maximum(box[:, 0], model_box[:, 0]), np.minimum(box[:, 1], model_box[:, 1])])
    return box


def _minimize(objective, box, start, optim, extra_starts=()):
    """Golden section for bounded scalar problems, Nelder-Mead otherwise."""
    if box.shape[0] == 1 and np.all(np.isfinite(box)):
        return golden_section(lambda x: objective(np.array([x])), box[0, 0], box[0, 1], optim)
    bounded = optim.with_bounds(box) if np.any(np.isfinite(box)) else optim
    starts = [start, *extra_starts]
    if len(starts) == 1:
        return nelder_mead(objective, start, bounded)
    return multistart(objective, starts, bounded)


def _perturbed(start, rng):
    return start + 0.1 * np.maximum(1.0, np.abs(start)) * rng.standard_normal(start.shape[0])


def smd_estimate(model, psi_hat, cfg=None, start=None):
    """Simulated minimum distance estimate.

    Minimizes ``g_S(theta)' W g_S(theta)`` with
    ``g_S = psi_hat - mean_s psi(theta, shocks_s)``; the ``S`` shock packs
    are drawn once from ``cfg.seed`` and reused at every ``theta``.
    """
    cfg = cfg or SmdConfig()
    psi_hat = np.asarray(psi_hat, dtype=float).reshape(-1)
    if psi_hat.shape[0] != model.aux_dim:
        raise DimensionError(f"{model.name} has {model.aux_dim} statistics, got {psi_hat.shape[0]}")
    W = weight_matrix(cfg.W, model.aux_dim)
    packs = [make_shockpack(model, cfg.seed, s) for s in range(int(cfg.S))]

    def objective(theta):
        try:
            sims = sum(model.psi(theta, p) for p in packs) / len(packs)
        except (DomainError, RankDeficiencyError):
            return math.inf
        g = psi_hat - sims
        return float(g @ W @ g)

    x0 = model.start_point(psi_hat) if start is None else np.asarray(start, dtype=float)
    box = cfg.optim.bounds
    if box is None:
        box = model.search_bounds(psi_hat)
    if box is None:
        box = np.tile([-np.inf, np.inf], (model.param_dim, 1))
    return _minimize(objective, box, x0, cfg.optim)


def rs_draw(model, psi_hat, W, prior, b, master_seed, optim=None, fd=None):
    """One reverse-sampler draw for shock pack ``b``.

    Solves ``theta_b = argmin J(psi_hat, psi(theta, shocks_b))`` and weights
    it by ``prior(theta_b) / vol(d psi / d theta)`` with the Jacobian taken
    by finite differences under the same shocks. The kernel factor is
    applied later, at retention time.

    Draws whose optimization or Jacobian fails come back with
    ``valid=False`` and zero weight instead of raising.
    """
    optim = optim or OptimOptions()
    fd = fd or JacobianSpec()
    psi_hat = np.asarray(psi_hat, dtype=float).reshape(-1)
    W = weight_matrix(W, model.aux_dim)
    pack = make_shockpack(model, master_seed, b)
    K = model.param_dim

    def objective(theta):
        try:
            g = psi_hat - model.psi(theta, pack)
        except (DomainError, RankDeficiencyError):
            return math.inf
        return float(g @ W @ g)

    def invalid(theta, reason, j=math.nan):
        return WeightedDraw(np.asarray(theta, dtype=float), 0.0, j, np.full(model.aux_dim, np.nan), b,
                            math.nan, valid=False, converged=False, reason=reason)

    box = _search_box(model, prior, psi_hat, optim)
    if prior.proper:
        start = np.asarray(prior.sample(_random.stream(master_seed, b, _random.PRIOR)), dtype=float)
    else:
        start = np.asarray(model.start_point(psi_hat), dtype=float)
    rng = _random.stream(master_seed, b, _random.START)
    extra = [_perturbed(start, rng) for _ in range(optim.restarts)]
    golden = box.shape[0] == 1 and np.all(np.isfinite(box))
    try:
        res = _minimize(objective, box, start, optim, extra)
        if model.aux_dim == K and not golden and res.objective_value > RESTART_THRESHOLD:
            retry = _minimize(objective, box, _perturbed(start, rng), optim)
            if retry.objective_value < res.objective_value:
                res = retry
    except (EvaluationError, OptimizationError) as exc:
        return invalid(np.full(K, np.nan), f"optimization failed: {exc}")
    theta = res.minimizer
    if not math.isfinite(res.objective_value):
        return invalid(theta, "non-finite objective")
    try:
        psi_sim = model.psi(theta, pack)
        vol_inv = jacobian_volume_inverse(
            lambda t: model.psi(t, pack), theta, fd, in_support=model.in_support
        )
    except DegenerateJacobianError as exc:
        return invalid(theta, f"degenerate Jacobian: {exc}", res.objective_value)
    except (EvaluationError, DomainError) as exc:
        return invalid(theta, f"Jacobian evaluation failed: {exc}", res.objective_value)
    log_prior = prior.log_density_unnorm(theta)
    weight = math.exp(log_prior) * vol_inv if log_prior > -math.inf else 0.0
    return WeightedDraw(theta, weight, res.objective_value, psi_sim, b, vol_inv, True, res.converged)


def _retain(draws, n_keep):
    j = np.array([d.j_value for d in draws])
    order = np.argsort(j, kind="stable")[:n_keep]
    order.sort()
    return [draws[k] for k in order]


def rs_sample(model, psi_hat, W=None, prior=None, B=1000, quantile=1.0, master_seed=0,
              optim=None, fd=None, n_jobs=None):
    """Reverse sampler posterior sample.

    Generates ``ceil(B / quantile)`` valid draws and keeps the ``B`` with
    the smallest attained objective; ``delta_used`` is the largest kept
    value. With exact identification ``quantile=1`` keeps every draw.

    Raises
    ------
    SamplerDegeneracyError
        If more than half of the proposals are invalid.
    """
    B = int(B)
    if B < 1:
        raise ValueError("B must be at least 1")
    if not 0 < quantile <= 1:
        raise ValueError("quantile must lie in (0, 1]")
    if prior is None:
        raise ValueError("a prior is required")
    W = weight_matrix(W, model.aux_dim)
    n_target = math.ceil(B / quantile - 1e-9)
    valid, invalid = [], []
    next_b = 0
    t0 = time.perf_counter()
    while len(valid) < n_target:
        batch = range(next_b, next_b + n_target - len(valid))
        next_b = batch.stop
        for d in _map(lambda b: rs_draw(model, psi_hat, W, prior, b, master_seed, optim, fd), batch, n_jobs):
            (valid if d.valid else invalid).append(d)
        if len(invalid) > 0.5 * next_b:
            raise SamplerDegeneracyError(f"{len(invalid)} of {next_b} reverse-sampler draws were invalid")
    elapsed = time.perf_counter() - t0
    kept = _retain(valid, B)
    return PosteriorSample(
        draws=kept,
        proposed_count=next_b,
        delta_used=max(d.j_value for d in kept),
        master_seed=master_seed,
        method="rs",
        param_labels=tuple(model.param_labels),
        invalid=invalid,
        metadata={
            "distance": "quadratic",
            "valid_count": len(valid),
            "invalid_count": len(invalid),
            "unconverged_count": sum(not d.converged for d in valid),
            "quantile": quantile,
            "seconds": elapsed,
        },
    )


def _abc_propose(model, psi_hat, W, prior, seed, key):
    """Prior draw, simulation and objective for one AR-ABC proposal."""
    theta = np.asarray(prior.sample(_random.stream(seed, *key, _random.PRIOR)), dtype=float)
    pack = make_shockpack(model, seed, key[0])
    try:
        psi = model.psi(theta, pack)
    except (DomainError, RankDeficiencyError):
        return theta, math.inf, np.full(model.aux_dim, np.nan)
    g = psi_hat - psi
    return theta, float(g @ W @ g), psi


def _pack_from(model, rng, seed, key):
    normals = rng.standard_normal(model.n_obs * model.normals_per_obs)
    uniforms = rng.random(model.n_obs * model.uniforms_per_obs)
    return ShockPack(int(seed), key, normals, uniforms)


def _first_accepted(attempt, n_accept, n_jobs, max_attempts, fail_after=None, fail_error=None):
    """Evaluate attempts 0, 1, ... in chunks and return the first ``n_accept`` accepted.

    ``attempt(i)`` returns ``(accepted, payload)``. Returns the accepted
    payloads and the number of attempts up to the last accepted one.
    ``fail_error`` is raised if nothing is accepted within ``fail_after``
    attempts; a :class:`SamplerDegeneracyError` if ``max_attempts`` runs out.
    """
    accepted, i = [], 0
    while len(accepted) < n_accept:
        remaining = n_accept - len(accepted)
        if accepted:
            size = int(math.ceil(1.1 * remaining * i / len(accepted))) + 16
        else:
            size = max(2 * remaining, 1000) if i == 0 else 4 * i
        limit = max_attempts if accepted or fail_after is None else min(max_attempts, fail_after)
        size = min(size, 200_000, limit - i)
        if size <= 0:
            if not accepted and fail_error is not None:
                raise fail_error
            raise SamplerDegeneracyError(f"only {len(accepted)} of {n_accept} accepted in {i} attempts")
        results = _map(attempt, range(i, i + size), n_jobs)
        for k, (ok, payload) in enumerate(results):
            if ok:
                accepted.append(payload)
                if len(accepted) == n_accept:
                    return accepted, i + k + 1
        i += size
    return accepted, i


def abc_ar(model, psi_hat, W=None, prior=None, B=1000, quantile=None, master_seed=0, delta=None,
           distance="quadratic", max_proposals=10**8, n_jobs=None):
    """Accept-reject ABC.

    Two modes:

    * ``quantile`` - draw ``ceil(B / quantile)`` proposals from the prior and
      keep the ``B`` closest; ``delta_used`` is the largest kept distance.
    * ``delta`` - propose until ``B`` proposals fall within ``delta``.

    Retained draws have equal weights.
    """
    if prior is None or not prior.proper:
        raise NotSamplableError("accept-reject ABC needs a proper prior")
    if (quantile is None) == (delta is None):
        raise ValueError("give exactly one of quantile or delta")
    B = int(B)
    if B < 1:
        raise ValueError("B must be at least 1")
    _distance(0.0, distance)
    psi_hat = np.asarray(psi_hat, dtype=float).reshape(-1)
    W = weight_matrix(W, model.aux_dim)
    t0 = time.perf_counter()

    def make(theta, j, psi, b):
        return WeightedDraw(theta, 1.0, j, psi, b)

    if quantile is not None:
        if not 0 < quantile <= 1:
            raise ValueError("quantile must lie in (0, 1]")
        n = math.ceil(B / quantile - 1e-9)
        props = _map(lambda b: _abc_propose(model, psi_hat, W, prior, master_seed, (b,)), range(n), n_jobs)
        j = np.array([p[1] for p in props])
        keep = np.sort(np.argsort(j, kind="stable")[:B])
        draws = [make(props[k][0], props[k][1], props[k][2], int(k)) for k in keep]
        delta_used = _distance(float(j[keep].max()), distance)
        proposed = n
    else:
        if not delta > 0:
            raise ValueError("delta must be positive")

        def attempt(b):
            theta, jv, psi = _abc_propose(model, psi_hat, W, prior, master_seed, (b,))
            return _distance(jv, distance) <= delta, (theta, jv, psi, b)

        acc, proposed = _first_accepted(attempt, B, n_jobs, int(max_proposals))
        draws = [make(*a) for a in acc]
        delta_used = float(delta)
    return PosteriorSample(
        draws=draws,
        proposed_count=proposed,
        delta_used=delta_used,
        master_seed=master_seed,
        method="abc-ar",
        param_labels=tuple(model.param_labels),
        metadata={"distance": distance, "acceptance_rate": len(draws) / proposed,
                  "seconds": time.perf_counter() - t0},
    )


def abc_acceptance_probability(within, log_prior_current, log_prior_proposal,
                               log_q_reverse=0.0, log_q_forward=0.0):
    """MCMC-ABC acceptance probability.

    ``min(1, 1{within} * pi(prop) q(cur | prop) / (pi(cur) q(prop | cur)))``.
    """
    if not within or log_prior_proposal == -math.inf:
        return 0.0
    log_ratio = log_prior_proposal - log_prior_current + log_q_reverse - log_q_forward
    return 1.0 if log_ratio >= 0 else math.exp(log_ratio)


def abc_mcmc(model, psi_hat, W=None, prior=None, proposal_sd=1.0, delta=1.0, chain_length=1000,
             master_seed=0, theta0=None, distance="quadratic"):
    """MCMC-ABC with a Gaussian random-walk proposal.

    Each proposal gets a fresh shock pack; it is accepted with probability
    :func:`abc_acceptance_probability`. On rejection the chain repeats its
    current state. The recorded chain (``chain_length`` states after the
    initial one) carries equal weights.
    """
    if prior is None:
        raise ValueError("a prior is required")
    if not delta > 0:
        raise ValueError("delta must be positive")
    _distance(0.0, distance)
    psi_hat = np.asarray(psi_hat, dtype=float).reshape(-1)
    W = weight_matrix(W, model.aux_dim)
    K = model.param_dim
    sd = np.broadcast_to(np.asarray(proposal_sd, dtype=float), (K,))
    theta = np.asarray(model.start_point(psi_hat) if theta0 is None else theta0, dtype=float).reshape(-1)
    lp = prior.log_density_unnorm(theta)
    if lp == -math.inf:
        raise ValueError("initial state lies outside the prior support")
    psi = model.psi(theta, make_shockpack(model, master_seed, 0))
    j = j_objective(psi_hat, psi, W)
    t0 = time.perf_counter()
    draws, n_acc = [], 0
    for b in range(1, int(chain_length) + 1):
        prop = theta + sd * _random.stream(master_seed, b, _random.PROPOSAL).standard_normal(K)
        lp_prop = prior.log_density_unnorm(prop)
        rho = 0.0
        if lp_prop > -math.inf and model.in_support(prop):
            psi_prop = model.psi(prop, make_shockpack(model, master_seed, b))
            j_prop = j_objective(psi_hat, psi_prop, W)
            rho = abc_acceptance_probability(_distance(j_prop, distance) <= delta, lp, lp_prop)
        if rho > 0 and (rho >= 1 or _random.stream(master_seed, b, _random.ACCEPT).random() < rho):
            theta, lp, psi, j = prop, lp_prop, psi_prop, j_prop
            n_acc += 1
        draws.append(WeightedDraw(theta.copy(), 1.0, j, psi, b))
    meta = {"distance": distance, "accepted": n_acc, "acceptance_rate": n_acc / int(chain_length),
            "seconds": time.perf_counter() - t0}
    if n_acc == 0:
        meta["warning"] = "no proposal was accepted"
    return PosteriorSample(draws, int(chain_length), float(delta), master_seed, "abc-mcmc",
                           tuple(model.param_labels), metadata=meta)


def _kernel_mixture_density(x, centers, weights, scale):
    """``sum_j w_j prod_k N(x_k; c_jk, scale_k^2)`` for each row of ``x``."""
    out = np.empty(x.shape[0])
    norm = np.prod(scale) * (2 * np.pi) ** (x.shape[1] / 2)
    for s in range(0, x.shape[0], 512):
        z = (x[s:s + 512, None, :] - centers[None, :, :]) / scale
        out[s:s + 512] = np.exp(-0.5 * np.sum(z * z, axis=2)) @ weights / norm
    return out


def abc_smc(model, psi_hat, W=None, prior=None, population_size=1000, schedule=(1.0,), perturb_sd=None,
            master_seed=0, distance="quadratic", retry_factor=100, n_jobs=None):
    """ABC sequential Monte Carlo with a fixed decreasing tolerance schedule.

    The first population is drawn from the prior under ``schedule[0]``.
    Each later round resamples the previous population by weight, perturbs
    with a Gaussian kernel (``perturb_sd``, or twice the weighted variance
    per coordinate when None) and re-simulates; accepted particles get
    weight ``prior / sum_j w_j K(theta | theta_j)``.

    Raises
    ------
    ScheduleInfeasibleError
        If a round accepts nothing within ``retry_factor * population_size``
        attempts.
    """
    if prior is None or not prior.proper:
        raise NotSamplableError("ABC-SMC needs a proper prior")
    schedule = [float(e) for e in schedule]
    if not schedule or any(e <= 0 for e in schedule) or any(b >= a for a, b in zip(schedule, schedule[1:])):
        raise ValueError("tolerance schedule must be strictly decreasing and positive")
    _distance(0.0, distance)
    N = int(population_size)
    if N < 1:
        raise ValueError("population_size must be at least 1")
    psi_hat = np.asarray(psi_hat, dtype=float).reshape(-1)
    W = weight_matrix(W, model.aux_dim)
    K = model.param_dim
    t0 = time.perf_counter()
    attempts, total = [], 0
    particles = weights = None
    for r, eps in enumerate(schedule):
        budget = ScheduleInfeasibleError(f"round {r} (tolerance {eps}) accepted nothing in {retry_factor * N} attempts")
        if r == 0:
            cdf = prev = scale = None
        else:
            if perturb_sd is None:
                mean = weights @ particles
                scale = np.sqrt(2.0 * (weights @ (particles - mean) ** 2))
                scale = np.where(scale > 0, scale, 1e-8)
            else:
                scale = np.broadcast_to(np.asarray(perturb_sd, dtype=float), (K,)).copy()
            cdf = np.cumsum(weights)
            cdf[-1] = 1.0
            prev = particles

        def attempt(i, eps=eps, r=r, cdf=cdf, prev=prev, scale=scale):
            # One stream per attempt: proposal first, then the shock pack.
            rng = _random.stream(master_seed, r, i, _random.PROPOSAL)
            if r == 0:
                theta = np.asarray(prior.sample(rng), dtype=float)
            else:
                k = int(np.searchsorted(cdf, rng.random(), side="right"))
                theta = prev[min(k, len(prev) - 1)] + scale * rng.standard_normal(K)
                if prior.log_density_unnorm(theta) == -math.inf:
                    return False, None
            if not model.in_support(theta):
                return False, None
            pack = _pack_from(model, rng, master_seed, (r, i))
            try:
                g = psi_hat - model.psi(theta, pack)
            except (DomainError, RankDeficiencyError):
                return False, None
            jv = max(0.0, float(g @ W @ g))
            return _distance(jv, distance) <= eps, (theta, jv, psi_hat - g, (r, i))

        acc, used = _first_accepted(attempt, N, n_jobs, 10**9, retry_factor * N, budget)
        attempts.append(used)
        total += used
        new = np.array([a[0] for a in acc]).reshape(N, K)
        if r == 0:
            new_w = np.ones(N)
        else:
            log_p = np.array([prior.log_density_unnorm(t) for t in new])
            new_w = np.exp(log_p) / _kernel_mixture_density(new, particles, weights, scale)
        particles, weights = new, new_w / new_w.sum()
        last = acc
    draws = [WeightedDraw(a[0], float(w), a[1], a[2], a[3]) for a, w in zip(last, weights)]
    return PosteriorSample(
        draws=draws,
        proposed_count=total,
        delta_used=schedule[-1],
        master_seed=master_seed,
        method="abc-smc",
        param_labels=tuple(model.param_labels),
        metadata={"distance": distance, "attempts_per_round": attempts, "schedule": schedule,
                  "seconds": time.perf_counter() - t0},
    )

"""Experiment drivers behind the command-line interface.

Configuration files are flat ``key = value`` lines with dotted section
names and ``#`` comments. Parsing is strict: unknown keys, duplicate keys
and malformed values raise :class:`~rsamp.exceptions.ConfigError`.
"""
import csv
import json
import math
import time
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import _random
from . import _validation as v
from .exceptions import ConfigError, DimensionError
from .jacobian import JacobianSpec
from .models import MODEL_NAMES, get_model, simulate_dataset
from .optimize import OptimOptions
from .posterior import (
    GammaPosterior,
    NormalPosterior,
    NormalVarianceMarginal,
    TruncatedMixturePosterior,
    ess,
    summarize,
    table1_oracle,
    weighted_mean,
    weighted_quantile,
)
from .priors import FlatPrior, PowerVariancePrior, StandardNormalPrior, UniformBoxPrior, default_prior, make_prior
from .samplers import SmdConfig, abc_ar, abc_mcmc, abc_smc, rs_sample, smd_estimate, weight_matrix

METHODS = ("rs", "abc-ar", "abc-mcmc", "abc-smc")


def _floats(text):
    return tuple(float(t) for t in text.replace(",", " ").split())


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce one sampler run."""

    seed: int = None
    threads: int = 1
    model_name: str = None
    model_T: int = None
    model_theta0: tuple = None
    data_seed: int = None
    data_y: tuple = None
    prior_kind: str = None
    prior_lower: tuple = None
    prior_upper: tuple = None
    prior_alpha: float = None
    prior_sample_lower: tuple = None
    prior_sample_upper: tuple = None
    weights_diag: tuple = None
    sampler_method: str = "rs"
    sampler_B: int = 1000
    sampler_quantile: float = None
    sampler_delta: float = None
    sampler_distance: str = "quadratic"
    sampler_chain_length: int = None
    sampler_proposal_sd: tuple = None
    sampler_theta0: tuple = None
    sampler_schedule: tuple = None
    sampler_perturb_sd: tuple = None
    optim_xtol: float = 1e-8
    optim_ftol: float = 1e-12
    optim_max_iter: int = None
    optim_restarts: int = 0
    optim_fd_step: float = None
    output_dir: str = "out"
    extra: dict = field(default_factory=dict, repr=False)

    def validate(self):
        """Raise :class:`ConfigError` naming the first offending field."""
        if self.seed is None:
            raise ConfigError("seed: required (no clock-based default)")
        try:
            v.check_seed(self.seed, "seed")
            v.check_positive_int(self.threads, "threads")
            v.check_positive_int(self.sampler_B, "sampler.B")
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.model_name not in MODEL_NAMES:
            raise ConfigError(f"model.name: unknown model {self.model_name!r}; choose from {', '.join(MODEL_NAMES)}")
        if self.sampler_method not in METHODS:
            raise ConfigError(f"sampler.method: unknown method {self.sampler_method!r}; choose from {', '.join(METHODS)}")
        if self.sampler_distance not in ("quadratic", "norm"):
            raise ConfigError("sampler.distance: must be 'quadratic' or 'norm'")
        if self.data_y is None and self.model_theta0 is None:
            raise ConfigError("data.y or model.theta0: one is required")
        if self.sampler_quantile is not None and not 0 < self.sampler_quantile <= 1:
            raise ConfigError("sampler.quantile: must lie in (0, 1]")
        if self.sampler_delta is not None and not self.sampler_delta > 0:
            raise ConfigError("sampler.delta: must be positive")
        if self.sampler_method == "abc-ar" and (self.sampler_quantile is None) == (self.sampler_delta is None):
            raise ConfigError("sampler.quantile / sampler.delta: abc-ar needs exactly one")
        if self.sampler_method == "abc-mcmc" and self.sampler_delta is None:
            raise ConfigError("sampler.delta: required for abc-mcmc")
        if self.sampler_method == "abc-smc" and not self.sampler_schedule:
            raise ConfigError("sampler.schedule: required for abc-smc")
        return self


_TYPES = {
    "seed": int, "threads": int, "model.name": str, "model.T": int, "model.theta0": _floats,
    "data.seed": int, "data.y": _floats, "prior.kind": str, "prior.lower": _floats, "prior.upper": _floats,
    "prior.alpha": float, "prior.sample_lower": _floats, "prior.sample_upper": _floats,
    "weights.diag": _floats, "sampler.method": str, "sampler.B": int, "sampler.quantile": float,
    "sampler.delta": float, "sampler.distance": str, "sampler.chain_length": int,
    "sampler.proposal_sd": _floats, "sampler.theta0": _floats, "sampler.schedule": _floats,
    "sampler.perturb_sd": _floats, "optim.xtol": float, "optim.ftol": float, "optim.max_iter": int,
    "optim.restarts": int, "optim.fd_step": float, "output.dir": str,
}
CONFIG_KEYS = tuple(_TYPES)


def parse_config(text):
    """Parse config text into a validated :class:`ExperimentConfig`."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _TYPES:
            raise ConfigError(f"{key}: unknown key (line {lineno})")
        if key in values:
            raise ConfigError(f"{key}: given twice (line {lineno})")
        try:
            values[key] = _TYPES[key](value)
        except ValueError:
            raise ConfigError(f"{key}: cannot parse {value!r} (line {lineno})") from None
    return ExperimentConfig(**{k.replace(".", "_"): val for k, val in values.items()}).validate()


def load_config(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"--config: cannot read {path}: {exc}") from None
    return parse_config(text)


def apply_overrides(cfg, **overrides):
    """Return a copy with non-None overrides applied, then re-validate."""
    known = {f.name for f in fields(cfg)}
    clean = {k: val for k, val in overrides.items() if val is not None}
    bad = set(clean) - known
    if bad:
        raise ConfigError(f"unknown override {sorted(bad)[0]}")
    return replace(cfg, **clean).validate()


def build_model(cfg):
    try:
        return get_model(cfg.model_name, cfg.model_T)
    except (DimensionError, ValueError) as exc:
        raise ConfigError(f"model.T: {exc}") from None


def build_prior(cfg, model):
    if cfg.prior_kind is None:
        return default_prior(model)
    try:
        prior = make_prior(cfg.prior_kind, model.param_dim, cfg.prior_lower, cfg.prior_upper, cfg.prior_alpha,
                           cfg.prior_sample_lower, cfg.prior_sample_upper)
    except KeyError as exc:
        raise ConfigError(f"prior.kind: {exc.args[0]}") from None
    except ValueError as exc:
        raise ConfigError(f"prior: {exc}") from None
    return prior


def observed_data(cfg, model):
    if cfg.data_y is not None:
        y = np.array(cfg.data_y)
        if y.shape[0] != model.n_obs:
            raise ConfigError(f"data.y: model expects {model.n_obs} observations, got {y.shape[0]}")
        return y
    if len(cfg.model_theta0) != model.param_dim:
        raise ConfigError(f"model.theta0: expected {model.param_dim} values")
    seed = cfg.seed if cfg.data_seed is None else cfg.data_seed
    return simulate_dataset(model, np.array(cfg.model_theta0), seed)


def build_weights(cfg, model):
    if cfg.weights_diag is None:
        return None
    try:
        return weight_matrix(np.array(cfg.weights_diag), model.aux_dim)
    except (ValueError, DimensionError) as exc:
        raise ConfigError(f"weights.diag: {exc}") from None


def reference_posterior(model, prior, y):
    """Closed-form posterior when one is known for ``(model, prior)``, else None.

    Returns a dict mapping coordinate index to a reference.
    """
    T = model.n_obs
    ybar = float(np.mean(y))
    if model.name == "normal-mean" and isinstance(prior, StandardNormalPrior):
        precision = 1.0 + T / model.variance
        return {0: NormalPosterior(T * ybar / model.variance / precision, math.sqrt(1.0 / precision))}
    if model.name == "exponential-ji" and type(prior) is FlatPrior and prior.lower[0] == 0 and np.isinf(prior.upper[0]):
        return {0: GammaPosterior.for_exponential(T, ybar)}
    if model.name == "mixture" and type(prior) is FlatPrior and T == 1:
        return {0: TruncatedMixturePosterior(ybar, prior.lower[0], prior.upper[0])}
    if model.name == "normal-ji" and isinstance(prior, PowerVariancePrior):
        s2 = float(np.mean((np.asarray(y) - ybar) ** 2))
        return {1: NormalVarianceMarginal(T, s2, prior.alpha)}
    return None


def sample_from_config(cfg, model, prior, psi_hat, W):
    method, B, seed = cfg.sampler_method, cfg.sampler_B, cfg.seed
    n_jobs = cfg.threads
    if method == "rs":
        optim = OptimOptions(cfg.optim_max_iter, cfg.optim_xtol, cfg.optim_ftol, restarts=cfg.optim_restarts)
        fd = JacobianSpec() if cfg.optim_fd_step is None else JacobianSpec(cfg.optim_fd_step)
        return rs_sample(model, psi_hat, W, prior, B, cfg.sampler_quantile or 1.0, seed, optim, fd, n_jobs)
    if method == "abc-ar":
        return abc_ar(model, psi_hat, W, prior, B, cfg.sampler_quantile, seed, cfg.sampler_delta,
                      cfg.sampler_distance, n_jobs=n_jobs)
    if method == "abc-mcmc":
        sd = cfg.sampler_proposal_sd or (1.0,)
        return abc_mcmc(model, psi_hat, W, prior, np.array(sd), cfg.sampler_delta, cfg.sampler_chain_length or B,
                        seed, cfg.sampler_theta0, cfg.sampler_distance)
    return abc_smc(model, psi_hat, W, prior, B, cfg.sampler_schedule,
                   None if cfg.sampler_perturb_sd is None else np.array(cfg.sampler_perturb_sd), seed,
                   cfg.sampler_distance, n_jobs=n_jobs)


def _fmt(x):
    return repr(float(x))


def write_draws_csv(sample, path):
    """Kept draws followed by invalid ones; weights are normalized over kept draws."""
    K = len(sample.param_labels) or sample.thetas.shape[1]
    w = sample.weights
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["b", *[f"theta_{k + 1}" for k in range(K)], "weight_norm", "j_value", "vol_inv", "valid"])
        rows = [(d, wn) for d, wn in zip(sample.draws, w)] + [(d, 0.0) for d in sample.invalid]
        for d, wn in rows:
            b = ":".join(map(str, d.index)) if isinstance(d.index, tuple) else d.index
            theta = np.broadcast_to(np.asarray(d.theta, dtype=float), (K,))
            out.writerow([b, *map(_fmt, theta), _fmt(wn), _fmt(d.j_value), _fmt(d.vol_inv), int(d.valid)])


def histogram_rows(sample, bins=100):
    """Weighted histogram per coordinate over the weighted 0.1%-99.9% range."""
    values, w = sample.thetas, sample.weights
    rows = []
    for k in range(values.shape[1]):
        lo, hi = weighted_quantile(sample, k, 0.001), weighted_quantile(sample, k, 0.999)
        if not hi > lo:
            lo, hi = lo - 0.5, hi + 0.5
        mass, edges = np.histogram(values[:, k], bins=bins, range=(lo, hi), weights=w)
        label = sample.param_labels[k] if sample.param_labels else f"theta_{k + 1}"
        rows += [(label, edges[i], edges[i + 1], mass[i]) for i in range(bins)]
    return rows


def write_histogram_csv(sample, path, bins=100):
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["coordinate", "bin_left", "bin_right", "weight"])
        for label, a, b, m in histogram_rows(sample, bins):
            out.writerow([label, _fmt(a), _fmt(b), _fmt(m)])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(val) for k, val in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(x) for x in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def write_json(data, path):
    Path(path).write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")


SUMMARY_FIELDS = ("method", "B", "delta", "ess", "coordinates")


def run(cfg, out_dir=None):
    """Run one configured sampler and write its artifacts.

    Writes ``draws.csv``, ``summary.json``, ``histogram.csv`` and
    ``report.md`` to ``out_dir`` (default ``cfg.output_dir``) and returns
    ``(sample, summary)``.
    """
    model = build_model(cfg)
    prior = build_prior(cfg, model)
    W = build_weights(cfg, model)
    y = observed_data(cfg, model)
    psi_hat = model.aux_stats(y)
    sample = sample_from_config(cfg, model, prior, psi_hat, W)
    ref = reference_posterior(model, prior, y)
    summary = summarize(sample, ref)
    summary["psi_hat"] = psi_hat
    summary["model"] = model.name
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_draws_csv(sample, out / "draws.csv")
    write_histogram_csv(sample, out / "histogram.csv")
    write_json(summary, out / "summary.json")
    (out / "report.md").write_text(run_report(summary))
    return sample, summary


def _cell(x, spec):
    return "-" if x is None else format(x, spec)


def run_report(summary):
    lines = [
        f"# {summary['method']} on {summary['model']}",
        "",
        f"- kept draws: {summary['B']}, proposals: {summary.get('proposed_count')}",
        f"- tolerance used: {summary['delta']}",
        f"- effective sample size: {summary['ess']:.1f}",
        "",
        "| parameter | mean | sd | 2.5% | 97.5% | reference mean | KS |",
        "|---|---|---|---|---|---|---|",
    ]
    for c in summary["coordinates"]:
        q = c["quantiles"]
        lines.append(
            f"| {c['label']} | {c['mean']:.5g} | {c['sd']:.5g} | {q['0.025']:.5g} | {q['0.975']:.5g} "
            f"| {_cell(c.get('reference_mean'), '.5g')} | {_cell(c.get('ks'), '.4f')} |"
        )
    return "\n".join(lines) + "\n"


# --- benchmarks -----------------------------------------------------------------

ACCEPTANCE_DELTAS = (10.0, 1.0, 0.1, 0.01, 0.001)


def derive_seed(seed, *key):
    """Independent 32-bit seed for sub-experiment ``key`` of a run seeded with ``seed``."""
    return int(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)).generate_state(1)[0])


def bench_acceptance(deltas=ACCEPTANCE_DELTAS, proposals=1_000_000, seed=0, data_seed=None, theta0=(0.0, 2.0), T=20,
                     proposal_sd=3.0, distance="norm", block=100_000):
    """Empirical ABC acceptance rate as a function of the tolerance.

    Data are simulated at ``theta0``. Proposals are
    ``theta* = theta_mle + proposal_sd * z`` under the flat prior
    ``sigma2 >= 0``; each is simulated with fresh shocks and accepted when
    the ``W``-distance with ``W = diag(s2, 2 s2^2) / T`` is at most delta.
    The same proposals are scored against every delta, so the rates are
    nested.
    """
    model = get_model("normal-ji", T)
    y = simulate_dataset(model, np.asarray(theta0, dtype=float), seed if data_seed is None else data_seed)
    psi_hat = model.aux_stats(y)
    s2 = psi_hat[1]
    w_diag = np.array([s2, 2 * s2 * s2]) / T
    deltas = np.asarray(deltas, dtype=float)
    hits = np.zeros(deltas.shape[0], dtype=np.int64)
    t0 = time.perf_counter()
    done = 0
    for blk in range(math.ceil(proposals / block)):
        n = min(block, proposals - done)
        rng = _random.stream(seed, blk, _random.PROPOSAL)
        thetas = psi_hat + proposal_sd * rng.standard_normal((n, 2))
        sims = model.psi_batch(thetas, rng.standard_normal((n, T)), np.empty((n, 0)))
        g = psi_hat - sims
        j = (g * g) @ w_diag
        j = np.where(np.isnan(j), np.inf, j)
        dist = j if distance == "quadratic" else np.sqrt(j)
        hits += (dist[:, None] <= deltas[None, :]).sum(axis=0)
        done += n
    rate = hits / proposals
    rows = [
        {"delta": float(d), "accepted": int(h), "proposals": int(proposals), "rate": float(r),
         "se": float(math.sqrt(r * (1 - r) / proposals))}
        for d, h, r in zip(deltas, hits, rate)
    ]
    return {"psi_hat": psi_hat, "W_diag": w_diag, "proposal_sd": proposal_sd, "distance": distance,
            "rows": rows, "seconds": time.perf_counter() - t0}


def acceptance_report(result, reference=(0.72171, 0.16876, 0.00182, 0.00002, None)):
    lines = ["# Acceptance rate by tolerance", "",
             "Published cells depend on one particular data draw; compare orders of magnitude.", "",
             "| delta | accepted | rate | binomial SE | published |", "|---|---|---|---|---|"]
    for row, ref in zip(result["rows"], list(reference) + [None] * len(result["rows"])):
        pub = "<0.00001" if ref is None and row["delta"] == 0.001 else ("" if ref is None else f"{ref:g}")
        lines.append(f"| {row['delta']:g} | {row['accepted']} | {row['rate']:.6g} | {row['se']:.2g} | {pub} |")
    return "\n".join(lines) + "\n"


RACE_SETUPS = {
    "mixture": {"theta0": (0.0,), "T": 1, "data_y": (0.0,)},
    "arma11": {"theta0": (0.5, 0.5, 1.0), "T": 200, "data_y": None},
}


def race_prior(model):
    if model.name == "arma11":
        return UniformBoxPrior([-1.0, -1.0, 0.0], [1.0, 1.0, np.inf], sample_upper=[1.0, 1.0, 3.0])
    if model.name == "mixture":
        return FlatPrior(1, -10.0, 10.0)
    return default_prior(model)


def bench_race(model_name="mixture", methods=("rs", "abc-ar"), proposals=10_000, keep_fraction=1.0, seed=0,
               schedule=(2.0, 0.5, 0.025), n_jobs=None):
    """Compare samplers at an equal proposal budget.

    RS and AR-ABC each consume ``proposals`` simulations and keep the
    ``keep_fraction`` closest (RS keeps all in exactly identified models).
    ABC-SMC, if requested, runs ``schedule`` with population equal to the
    kept count. Tolerances are reported as attained ``J``.
    """
    methods = list(methods)
    if len(methods) < 2:
        raise ValueError("bench_race needs at least two methods")
    if len(set(methods)) != len(methods) or not set(methods) <= {"rs", "abc-ar", "abc-smc"}:
        raise ValueError("methods must be distinct members of rs, abc-ar, abc-smc")
    setup = RACE_SETUPS[model_name]
    model = get_model(model_name, setup["T"])
    if setup["data_y"] is not None:
        y = np.array(setup["data_y"])
    else:
        y = simulate_dataset(model, np.array(setup["theta0"]), seed)
    psi_hat = model.aux_stats(y)
    prior = race_prior(model)
    exact = model.aux_dim == model.param_dim
    kept = max(1, int(round(proposals * keep_fraction)))
    rows = []
    samples = {}
    for method in methods:
        t0 = time.perf_counter()
        if method == "rs":
            q = 1.0 if exact and keep_fraction == 1.0 else kept / proposals
            s = rs_sample(model, psi_hat, None, prior, kept, q, seed, n_jobs=n_jobs)
        elif method == "abc-ar":
            s = abc_ar(model, psi_hat, None, prior, kept, kept / proposals, seed, n_jobs=n_jobs)
        else:
            s = abc_smc(model, psi_hat, None, prior, kept, schedule, master_seed=seed, n_jobs=n_jobs)
        seconds = time.perf_counter() - t0
        samples[method] = s
        rows.append({
            "method": method, "seconds": seconds, "proposals": s.proposed_count, "kept": s.kept_count,
            "delta": float(s.delta_used) if method != "rs" else float(s.j_values.max()),
            "ess": ess(s), "posterior_mean": weighted_mean(s),
        })
    return {"model": model_name, "psi_hat": psi_hat, "rows": rows, "samples": samples}


def race_report(result):
    lines = [f"# Sampler race on {result['model']}", "",
             "Times are machine dependent and carry no pass/fail meaning.", "",
             "| method | seconds | proposals | kept | tolerance J | ESS | posterior mean |",
             "|---|---|---|---|---|---|---|"]
    for r in result["rows"]:
        mean = ", ".join(f"{x:.4g}" for x in r["posterior_mean"])
        lines.append(f"| {r['method']} | {r['seconds']:.3f} | {r['proposals']} | {r['kept']} | "
                     f"{r['delta']:.3g} | {r['ess']:.1f} | {mean} |")
    return "\n".join(lines) + "\n"


def _mean_se(x):
    x = np.asarray(x, dtype=float)
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.shape[0]))


def _var_se(x):
    x = np.asarray(x, dtype=float)
    d = x - x.mean()
    s2 = float(d @ d / (x.shape[0] - 1))
    m4 = float(np.mean(d**4))
    return s2, math.sqrt(max(m4 - s2 * s2, 0.0) / x.shape[0])


def table1_experiment(T=20, S=10, replications=500, seed=0, sigma2=2.0, m=0.0, B=200, n_jobs=None):
    """Monte Carlo moments of the MLE, RS (flat prior) and SMD variance estimators.

    Each replication simulates a dataset at ``(m, sigma2)``, records the
    MLE of ``sigma2``, the RS posterior mean from ``B`` draws, the exact
    posterior mean ``s2 * T / (T - 5)`` and the ``S``-simulation SMD
    estimate. Returns per-estimator Monte Carlo means and variances with
    standard errors next to the closed-form values.
    """
    v.check_positive_int(replications, "replications", 100)
    model = get_model("normal-ji", T)
    prior = PowerVariancePrior(0.0)
    mle, rs, exact, smd = [], [], [], []
    t0 = time.perf_counter()
    for r in range(replications):
        rep_seed = derive_seed(seed, r, 0)
        y = simulate_dataset(model, np.array([m, sigma2]), rep_seed)
        psi_hat = model.aux_stats(y)
        mle.append(psi_hat[1])
        exact.append(psi_hat[1] * T / (T - 5))
        sample = rs_sample(model, psi_hat, None, prior, B, 1.0, rep_seed, n_jobs=n_jobs)
        rs.append(weighted_mean(sample)[1])
        res = smd_estimate(model, psi_hat, SmdConfig(S=S, seed=derive_seed(seed, r, 1)))
        smd.append(res.minimizer[1])
    oracle = table1_oracle(T, S, sigma2)
    cells = {}
    for name, draws, key in (("mle", mle, "mle"), ("rs", rs, "rs"), ("smd", smd, "smd")):
        mean, mean_se = _mean_se(draws)
        var, var_se = _var_se(draws)
        o = oracle[key]
        cells[name] = {
            "mean": mean, "mean_se": mean_se, "oracle_mean": o["mean"],
            "mean_ok": abs(mean - o["mean"]) <= 3 * mean_se,
            "bias": mean - sigma2, "oracle_bias": o["bias"],
            "variance": var, "variance_se": var_se, "oracle_variance": o["variance"],
            "variance_ok": abs(var - o["variance"]) <= 3 * var_se,
        }
    diff = np.asarray(rs) - np.asarray(exact)
    exact_mean, _ = _mean_se(exact)
    rs_mean, rs_se = _mean_se(rs)
    cells["rs_vs_exact"] = {
        "rs_mean": rs_mean, "rs_mean_se": rs_se, "exact_mean": exact_mean,
        "ok": abs(rs_mean - exact_mean) <= 3 * rs_se,
        "paired_diff": float(diff.mean()), "paired_se": float(diff.std(ddof=1) / math.sqrt(diff.shape[0])),
    }
    return {"T": T, "S": S, "sigma2": sigma2, "replications": replications, "B": B, "seed": seed,
            "kappa1": oracle["kappa1"], "cells": cells, "seconds": time.perf_counter() - t0}


def table1_report(result):
    lines = [f"# Variance estimators, T={result['T']}, S={result['S']}, sigma2={result['sigma2']}", "",
             f"{result['replications']} replications, {result['B']} RS draws each. "
             "Cells more than 3 standard errors from the closed form are marked **off**.", "",
             "| estimator | MC mean (SE) | exact mean | | MC variance (SE) | exact variance | |",
             "|---|---|---|---|---|---|---|"]
    for name in ("mle", "rs", "smd"):
        c = result["cells"][name]
        lines.append(
            f"| {name} | {c['mean']:.4f} ({c['mean_se']:.4f}) | {c['oracle_mean']:.4f} | {'ok' if c['mean_ok'] else '**off**'} "
            f"| {c['variance']:.4f} ({c['variance_se']:.4f}) | {c['oracle_variance']:.4f} | "
            f"{'ok' if c['variance_ok'] else '**off**'} |"
        )
    c = result["cells"]["rs_vs_exact"]
    lines += ["", f"RS posterior mean averaged over datasets: {c['rs_mean']:.4f} (SE {c['rs_mean_se']:.4f}); "
              f"exact posterior mean averaged over the same datasets: {c['exact_mean']:.4f} "
              f"({'ok' if c['ok'] else '**off**'}). Paired difference {c['paired_diff']:.4f} "
              f"(SE {c['paired_se']:.4f}).", f"", f"kappa1 = {result['kappa1']:.6f}"]
    return "\n".join(lines) + "\n"

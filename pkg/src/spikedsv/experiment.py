"""Reproducible Monte Carlo experiments against the asymptotic predictions.

Each trial draws the noise matrix and the perturbation from a private
generator derived deterministically from (seed, trial index), measures the
extreme singular values and whatever the collect flags request, and checks
Weyl interlacing as a hard invariant.  Trials are independent, so they may
run in worker processes; results are combined by trial index, which makes
the aggregate identical at any parallelism level.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import randmat
from .errors import InvalidSpec, InvariantViolation
from .prediction import SpikePrediction, SpikeSpec
from .randmat import NoiseModel

EDGES = ("largest", "smallest_square")

# Absolute slack (relative to the top noise singular value) granted to the
# interlacing inequalities to absorb LAPACK roundoff; the inequalities
# themselves are exact in exact arithmetic.
WEYL_SLACK = 1e-9


@dataclass(frozen=True)
class CollectFlags:
    values: bool = True
    projections: bool = False
    fluctuations: bool = False
    master_diagnostics: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    m: int
    noise: NoiseModel
    spikes: SpikeSpec
    trials: int
    seed: int
    which_edge: str = "largest"
    collect: CollectFlags = field(default_factory=CollectFlags)
    entry_law: str = "gaussian"

    def __post_init__(self):
        if not 1 <= self.n <= self.m:
            raise InvalidSpec(f"need 1 <= n <= m, got n = {self.n}, m = {self.m}")
        if self.trials < 1:
            raise InvalidSpec("at least one trial is required")
        if not 0 <= self.seed < 2**64:
            raise InvalidSpec("seed must fit in 64 unsigned bits")
        if self.which_edge not in EDGES:
            raise InvalidSpec(f"which_edge must be one of {EDGES}")
        if self.which_edge == "smallest_square" and self.n != self.m:
            raise InvalidSpec("smallest_square requires a square matrix")
        if self.collect.fluctuations and self.spikes.r != 1:
            raise InvalidSpec("fluctuation collection requires exactly one spike")


@dataclass(frozen=True)
class TrialResult:
    extreme_values: np.ndarray  # r + 2 values, descending
    proj_left_sq: Optional[np.ndarray]  # per spike index
    proj_right_sq: Optional[np.ndarray]
    fluct_sample: Optional[float]
    master_residual: Optional[Tuple[float, float, float]]  # (min sv rel, identity, kernel vec)


def _trial_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def _sigma_1based(s: np.ndarray, j: int) -> float:
    if j <= 0:
        return math.inf
    if j > s.size:
        return 0.0
    return float(s[j - 1])


def _check_weyl(s_noise: np.ndarray, s_pert: np.ndarray, r: int) -> None:
    """sigma_{i+r}(X) <= sigma_i(X + P) <= sigma_{i-r}(X) at both spectrum ends."""
    n = s_noise.size
    slack = WEYL_SLACK * max(1.0, float(s_noise[0]))
    head = range(1, min(r + 2, n) + 1)
    tail = range(max(1, n - r - 1), n + 1)
    for i in sorted(set(head) | set(tail)):
        lo = _sigma_1based(s_noise, i + r)
        hi = _sigma_1based(s_noise, i - r)
        val = float(s_pert[i - 1])
        if not (lo - slack <= val <= hi + slack):
            raise InvariantViolation(
                f"Weyl interlacing failed at i = {i}: "
                f"{lo!r} <= {val!r} <= {hi!r} is false"
            )


def _spike_value(extremes: np.ndarray, which_edge: str, k: int) -> float:
    if which_edge == "largest":
        return float(extremes[k])
    return float(extremes[-(k + 1)])


def run_trial(cfg: ExperimentConfig, predictions: Sequence[SpikePrediction], index: int) -> TrialResult:
    """One independent trial; deterministic given (cfg.seed, index)."""
    rng = _trial_rng(cfg.seed, index)
    x = randmat.sample_noise(cfg.noise, cfg.n, cfg.m, rng)
    pert = randmat.sample_perturbation(cfg.spikes, cfg.n, cfg.m, rng, cfg.entry_law)
    perturbed = x + pert.matrix()
    r = cfg.spikes.r

    sigma_x = np.linalg.svd(x, compute_uv=False)
    need_vectors = cfg.collect.projections or cfg.collect.master_diagnostics
    if need_vectors:
        s, w, y = randmat.svd_dense(perturbed)
    else:
        s = np.linalg.svd(perturbed, compute_uv=False)
        w = y = None

    _check_weyl(sigma_x, s, r)

    keep = min(r + 2, cfg.n)
    if cfg.which_edge == "largest":
        extremes = s[:keep].copy()
    else:
        extremes = s[-keep:].copy()

    proj_left = proj_right = None
    if cfg.collect.projections:
        proj_left = np.empty(r)
        proj_right = np.empty(r)
        for k in range(r):
            col = k if cfg.which_edge == "largest" else cfg.n - 1 - k
            lsq, rsq = randmat.projection_norms(
                w[:, col], y[:, col], pert, cfg.spikes.thetas[k]
            )
            proj_left[k] = lsq
            proj_right[k] = rsq

    fluct = None
    if cfg.collect.fluctuations:
        target = _spike_value(extremes, cfg.which_edge, 0)
        fluct = math.sqrt(cfg.n) * (target - predictions[0].limit)

    master = None
    if cfg.collect.master_diagnostics:
        z = _spike_value(extremes, cfg.which_edge, 0)
        col = 0 if cfg.which_edge == "largest" else cfg.n - 1
        mm = randmat.master_matrix(x, pert, z, sigma_x)
        ident, kvec = randmat.kernel_identity_residual(
            x, pert, z, w[:, col], y[:, col], sigma_x
        )
        master = (mm.min_singular_relative(), ident, kvec)

    return TrialResult(extremes, proj_left, proj_right, fluct, master)


def _trial_star(args) -> TrialResult:
    cfg, predictions, index = args
    return run_trial(cfg, predictions, index)


@dataclass
class Aggregate:
    """Order-independent summary of an experiment plus the raw trials."""

    cfg: ExperimentConfig
    predictions: List[SpikePrediction]
    trials: List[TrialResult]
    spike_means: np.ndarray
    spike_stds: np.ndarray
    spike_quantiles: np.ndarray  # (r, 3): q10, q50, q90
    proj_left_means: Optional[np.ndarray]
    proj_left_stds: Optional[np.ndarray]
    proj_right_means: Optional[np.ndarray]
    proj_right_stds: Optional[np.ndarray]
    bulk_means: np.ndarray  # first two non-spike extreme positions
    fluct_mean: Optional[float]
    fluct_var: Optional[float]
    master_max: Optional[Tuple[float, float, float]]
    weyl_violations: int = 0

    def to_csv(self) -> str:
        """Long-format CSV (metric, spike, value); 12 significant digits."""
        rows = [("metric", "spike", "value")]

        def add(metric: str, spike, value) -> None:
            rows.append((metric, "" if spike is None else str(spike), _fmt(value)))

        add("n", None, self.cfg.n)
        add("m", None, self.cfg.m)
        add("trials", None, self.cfg.trials)
        add("seed", None, self.cfg.seed)
        for k, pred in enumerate(self.predictions, start=1):
            add("theta", k, pred.theta)
            add("supercritical", k, int(pred.supercritical))
            add("limit_pred", k, pred.limit)
            add("limit_mean", k, self.spike_means[k - 1])
            add("limit_std", k, self.spike_stds[k - 1])
            add("limit_q10", k, self.spike_quantiles[k - 1, 0])
            add("limit_q50", k, self.spike_quantiles[k - 1, 1])
            add("limit_q90", k, self.spike_quantiles[k - 1, 2])
            add("limit_delta", k, self.spike_means[k - 1] - pred.limit)
            if self.proj_left_means is not None:
                add("proj_left_pred", k, pred.left_proj_sq)
                add("proj_left_mean", k, self.proj_left_means[k - 1])
                add("proj_left_std", k, self.proj_left_stds[k - 1])
                add("proj_right_pred", k, pred.right_proj_sq)
                add("proj_right_mean", k, self.proj_right_means[k - 1])
                add("proj_right_std", k, self.proj_right_stds[k - 1])
        for j, v in enumerate(self.bulk_means, start=1):
            add(f"bulk_extreme_{j}_mean", None, v)
        if self.fluct_var is not None:
            add("fluct_mean", None, self.fluct_mean)
            add("fluct_var", None, self.fluct_var)
            if self.predictions[0].fluct_std is not None:
                add("fluct_var_pred", None, self.predictions[0].fluct_std ** 2)
        if self.master_max is not None:
            add("master_min_sv_rel_max", None, self.master_max[0])
            add("kernel_identity_residual_max", None, self.master_max[1])
            add("kernel_vector_residual_max", None, self.master_max[2])
        add("weyl_violations", None, self.weyl_violations)
        return "\n".join(",".join(row) for row in rows) + "\n"


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "%.12g" % float(value)


def run_experiment(
    cfg: ExperimentConfig,
    predictions: Sequence[SpikePrediction],
    workers: int = 1,
) -> Aggregate:
    """Run all trials and aggregate; identical output at any worker count.

    Trial k draws from default_rng(SeedSequence(cfg.seed, spawn_key=(k,))).
    With workers > 1 the config must be picklable (builtin noise models
    are; a MatrixFactory with an unpicklable closure requires workers = 1).
    A failure in any trial aborts the whole experiment.
    """
    predictions = list(predictions)
    if len(predictions) != cfg.spikes.r:
        raise InvalidSpec("one prediction per spike is required")
    if cfg.collect.master_diagnostics and not predictions[0].supercritical:
        raise InvalidSpec("master diagnostics need a supercritical leading spike")

    if workers > 1 and cfg.trials > 1:
        args = [(cfg, predictions, k) for k in range(cfg.trials)]
        chunk = max(1, cfg.trials // (workers * 8))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_trial_star, args, chunksize=chunk))
    else:
        results = [run_trial(cfg, predictions, k) for k in range(cfg.trials)]

    r = cfg.spikes.r
    values = np.array(
        [
            [_spike_value(t.extreme_values, cfg.which_edge, k) for k in range(r)]
            for t in results
        ]
    )
    keep = results[0].extreme_values.size
    extra = keep - r
    if cfg.which_edge == "largest":
        bulk = np.array([t.extreme_values[r:] for t in results])
    else:
        bulk = np.array([t.extreme_values[:extra][::-1] for t in results])
    spike_means = values.mean(axis=0)
    spike_stds = values.std(axis=0, ddof=1) if len(results) > 1 else np.zeros(r)
    quantiles = np.quantile(values, [0.1, 0.5, 0.9], axis=0).T

    proj_lm = proj_ls = proj_rm = proj_rs = None
    if cfg.collect.projections:
        pl = np.array([t.proj_left_sq for t in results])
        pr = np.array([t.proj_right_sq for t in results])
        proj_lm, proj_rm = pl.mean(axis=0), pr.mean(axis=0)
        if len(results) > 1:
            proj_ls, proj_rs = pl.std(axis=0, ddof=1), pr.std(axis=0, ddof=1)
        else:
            proj_ls = proj_rs = np.zeros(r)

    fluct_mean = fluct_var = None
    if cfg.collect.fluctuations:
        samples = np.array([t.fluct_sample for t in results])
        fluct_mean = float(samples.mean())
        fluct_var = float(samples.var(ddof=1)) if samples.size > 1 else 0.0

    master_max = None
    if cfg.collect.master_diagnostics:
        arr = np.array([t.master_residual for t in results])
        master_max = tuple(float(v) for v in arr.max(axis=0))

    return Aggregate(
        cfg=cfg,
        predictions=predictions,
        trials=results,
        spike_means=spike_means,
        spike_stds=spike_stds,
        spike_quantiles=quantiles,
        proj_left_means=proj_lm,
        proj_left_stds=proj_ls,
        proj_right_means=proj_rm,
        proj_right_stds=proj_rs,
        bulk_means=bulk.mean(axis=0),
        fluct_mean=fluct_mean,
        fluct_var=fluct_var,
        master_max=master_max,
    )


def fluct_samples(agg: Aggregate) -> np.ndarray:
    return np.array([t.fluct_sample for t in agg.trials if t.fluct_sample is not None])


def histogram_bins(samples: np.ndarray, bins: int = 40) -> List[Tuple[float, float, int]]:
    """(left edge, right edge, count) triples for external plotting."""
    counts, edges = np.histogram(samples, bins=bins)
    return [(float(edges[i]), float(edges[i + 1]), int(c)) for i, c in enumerate(counts)]

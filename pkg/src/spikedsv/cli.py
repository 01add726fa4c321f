"""Command-line entry point: transforms, predictions, simulation, verification.

Subcommands:
  transform  evaluate a transform on a grid of inputs
  predict    per-spike asymptotic predictions
  simulate   run a Monte Carlo experiment from a JSON config
  verify     transform property suite + master-matrix diagnostics
  examples   closed-form vs numerical tables for the worked examples

Exit codes: 0 success, 1 verification failure, 2 usage/domain error,
3 runtime failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import time
from typing import List, Optional, Tuple

import numpy as np

from . import __version__, measures, prediction, randmat, transforms
from .experiment import (
    Aggregate,
    CollectFlags,
    ExperimentConfig,
    _fmt,
    fluct_samples,
    histogram_bins,
    run_experiment,
)
from .errors import (
    DimensionError,
    DomainError,
    InvalidSpec,
    OutOfRange,
    SchemaError,
    SpikedSVError,
    UnknownTheta,
)
from .measures import SpectralMeasure
from .prediction import SpikePrediction, SpikeSpec
from .transforms import TransformContext

USAGE_ERRORS = (
    SchemaError,
    DomainError,
    OutOfRange,
    InvalidSpec,
    DimensionError,
    UnknownTheta,
)

# Comparison tolerances applied by `simulate` when writing the manifest.
# Calibrated desk-scale defaults (n in the hundreds, 100-2000 trials).
TOL_LIMIT_SUPER = 0.02
TOL_LIMIT_SUB = 0.05
TOL_PROJ_LARGEST = 0.03
TOL_PROJ_SMALLEST = 0.04
TOL_PROJ_SUB = 0.05
TOL_PROJ_CONSISTENCY = 0.05
TOL_FLUCT_VAR_REL = 0.15
TOL_MASTER = 1e-6


# ---------------------------------------------------------------------------
# Measure literals
# ---------------------------------------------------------------------------


def _require_keys(obj: dict, required: set, optional: set, what: str) -> None:
    keys = set(obj)
    missing = required - keys
    unknown = keys - required - optional
    if missing:
        raise SchemaError(f"{what}: missing keys {sorted(missing)}")
    if unknown:
        raise SchemaError(f"{what}: unknown keys {sorted(unknown)}")


def measure_from_literal(obj: dict) -> Tuple[SpectralMeasure, Optional[float], Optional[str]]:
    """Parse a measure literal; returns (measure, implied c, noise kind).

    Kinds: atomic, mp, uniform, empirical, haar.  Only mp and haar carry a
    built-in matrix model (Gaussian resp. Haar noise); the others can be
    predicted against but not simulated without a custom factory.
    """
    if not isinstance(obj, dict) or "kind" not in obj:
        raise SchemaError(f"measure literal must be an object with a 'kind': {obj!r}")
    kind = obj["kind"]
    if kind == "atomic":
        _require_keys(obj, {"kind", "atoms"}, set(), "atomic measure")
        atoms = [(float(l), float(w)) for l, w in obj["atoms"]]
        return measures.atomic(atoms), None, None
    if kind == "mp":
        _require_keys(obj, {"kind", "c"}, set(), "mp measure")
        c = float(obj["c"])
        return measures.marchenko_pastur(c), c, "gaussian"
    if kind == "uniform":
        _require_keys(obj, {"kind", "a", "b"}, set(), "uniform measure")
        return measures.uniform(float(obj["a"]), float(obj["b"])), None, None
    if kind == "empirical":
        _require_keys(obj, {"kind", "values"}, set(), "empirical measure")
        return measures.empirical([float(v) for v in obj["values"]]), None, None
    if kind == "haar":
        _require_keys(obj, {"kind"}, set(), "haar measure")
        return measures.point_mass(1.0), 1.0, "haar"
    raise SchemaError(f"unknown measure kind {kind!r}")


def _measure_from_args(args) -> Tuple[SpectralMeasure, Optional[float], Optional[str]]:
    spec = args.measure
    if spec.strip().startswith("{"):
        try:
            literal = json.loads(spec)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"bad measure JSON: {exc}") from exc
        return measure_from_literal(literal)
    if spec == "mp":
        if args.c is None:
            raise SchemaError("--measure mp requires --c")
        return measure_from_literal({"kind": "mp", "c": args.c})
    if spec == "haar":
        return measure_from_literal({"kind": "haar"})
    if spec == "uniform":
        if args.a is None or args.b is None:
            raise SchemaError("--measure uniform requires --a and --b")
        return measure_from_literal({"kind": "uniform", "a": args.a, "b": args.b})
    if spec == "atomic":
        if not args.atoms:
            raise SchemaError("--measure atomic requires --atoms loc:w,loc:w,...")
        atoms = []
        for item in args.atoms.split(","):
            loc, _, w = item.partition(":")
            atoms.append([float(loc), float(w)])
        return measure_from_literal({"kind": "atomic", "atoms": atoms})
    if spec == "empirical":
        if not args.values:
            raise SchemaError("--measure empirical requires --values v,v,...")
        vals = [float(v) for v in args.values.split(",")]
        return measure_from_literal({"kind": "empirical", "values": vals})
    raise SchemaError(f"unknown measure {spec!r}")


def _context_from_args(args) -> TransformContext:
    mu, implied_c, _ = _measure_from_args(args)
    c = args.c if args.c is not None else implied_c
    if c is None:
        raise SchemaError("aspect ratio --c is required for this measure")
    return TransformContext(mu, float(c))


def _parse_floats(text: str) -> List[float]:
    return [float(v) for v in text.split(",")]


# ---------------------------------------------------------------------------
# transform
# ---------------------------------------------------------------------------

TRANSFORM_FNS = (
    "phi",
    "phi-prime",
    "d",
    "d-prime",
    "d-at-b-plus",
    "dinv",
    "threshold-large",
    "threshold-small",
    "phiinv-small",
    "c-transform",
    "u",
)


def cmd_transform(args) -> int:
    fn = args.fn
    rows: List[Tuple[str, float]] = []
    if fn == "u":
        if args.c is None or args.z is None:
            raise SchemaError("--fn u requires --c and --z")
        for z in _parse_floats(args.z):
            rows.append((_fmt(z), transforms.u_function(args.c, z)))
    else:
        ctx = _context_from_args(args)
        if fn in ("phi", "phi-prime", "d", "d-prime", "c-transform"):
            if args.z is None:
                raise SchemaError(f"--fn {fn} requires --z")
            for z in _parse_floats(args.z):
                if fn == "phi":
                    val = measures.phi(ctx.mu, z)
                elif fn == "phi-prime":
                    val = measures.phi_prime(ctx.mu, z)
                elif fn == "d":
                    val = transforms.d_transform(ctx, z)
                elif fn == "d-prime":
                    val = transforms.d_prime(ctx, z)
                else:
                    val = transforms.c_transform(ctx, z)
                rows.append((_fmt(z), val))
        elif fn == "dinv":
            if args.w is None:
                raise SchemaError("--fn dinv requires --w")
            for w in _parse_floats(args.w):
                rows.append((_fmt(w), transforms.d_inverse(ctx, w)))
        elif fn == "phiinv-small":
            if args.theta is None:
                raise SchemaError("--fn phiinv-small requires --theta")
            for theta in _parse_floats(args.theta):
                rows.append((_fmt(theta), transforms.phi_inverse_small(ctx, theta)))
        elif fn == "d-at-b-plus":
            rows.append(("", transforms.d_at_b_plus(ctx)))
        elif fn == "threshold-large":
            rows.append(("", transforms.threshold_large(ctx)))
        elif fn == "threshold-small":
            rows.append(("", transforms.threshold_small(ctx)))
        else:
            raise SchemaError(f"unknown transform function {fn!r}")
    if args.json:
        print(json.dumps([{"input": i, "value": v} for i, v in rows]))
    else:
        print("input,value")
        for inp, val in rows:
            print(f"{inp},{_fmt(val)}")
    return 0


# ---------------------------------------------------------------------------
# predict
# ---------------------------------------------------------------------------


def _predict(ctx: TransformContext, spec: SpikeSpec, edge: str) -> List[SpikePrediction]:
    if edge == "largest":
        return prediction.predict_largest(ctx, spec)
    return prediction.predict_smallest_square(ctx, spec)


def cmd_predict(args) -> int:
    ctx = _context_from_args(args)
    spec = SpikeSpec(
        thetas=tuple(_parse_floats(args.thetas)), model=args.model, field=args.field
    )
    preds = _predict(ctx, spec, args.edge)
    if args.json:
        print(
            json.dumps(
                [
                    {
                        "theta": p.theta,
                        "supercritical": p.supercritical,
                        "limit": p.limit,
                        "left_proj_sq": p.left_proj_sq,
                        "right_proj_sq": p.right_proj_sq,
                        "fluct_std": p.fluct_std,
                    }
                    for p in preds
                ]
            )
        )
        return 0
    print("theta,supercritical,limit,left_proj_sq,right_proj_sq,fluct_std")
    for p in preds:
        std = "" if p.fluct_std is None else _fmt(p.fluct_std)
        print(
            f"{_fmt(p.theta)},{int(p.supercritical)},{_fmt(p.limit)},"
            f"{_fmt(p.left_proj_sq)},{_fmt(p.right_proj_sq)},{std}"
        )
    return 0


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

CONFIG_KEYS_REQUIRED = {"measure", "c", "spikes", "n", "m", "trials", "seed"}
CONFIG_KEYS_OPTIONAL = {"edge", "collect"}
COLLECT_FLAGS = ("values", "projections", "fluctuations", "master_diagnostics")


def load_config(path: str):
    """Parse and validate a simulation config document."""
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: config must be a JSON object")
    _require_keys(doc, CONFIG_KEYS_REQUIRED, CONFIG_KEYS_OPTIONAL, "config")

    mu, implied_c, noise_kind = measure_from_literal(doc["measure"])
    c = float(doc["c"])
    if implied_c is not None and abs(c - implied_c) > 1e-12:
        raise SchemaError(
            f"config c = {c} conflicts with the measure's own ratio {implied_c}"
        )
    n, m = int(doc["n"]), int(doc["m"])
    if m <= 0 or abs(n / m - c) > 1e-9:
        raise SchemaError(f"n/m = {n}/{m} does not match c = {c}")

    spikes_doc = doc["spikes"]
    _require_keys(spikes_doc, {"thetas"}, {"model", "field"}, "spikes")
    spec = SpikeSpec(
        thetas=tuple(float(t) for t in spikes_doc["thetas"]),
        model=spikes_doc.get("model", "orthonormalized"),
        field=spikes_doc.get("field", "real"),
    )

    edge = doc.get("edge", "largest")
    collect_list = doc.get("collect", ["values"])
    unknown = set(collect_list) - set(COLLECT_FLAGS)
    if unknown:
        raise SchemaError(f"unknown collect flags {sorted(unknown)}")
    # Extreme values are always measured; the flag is accepted for symmetry.
    collect = CollectFlags(
        values=True,
        projections="projections" in collect_list,
        fluctuations="fluctuations" in collect_list,
        master_diagnostics="master_diagnostics" in collect_list,
    )

    if noise_kind == "gaussian":
        noise = randmat.GaussianRect(beta=spec.beta)
    elif noise_kind == "haar":
        noise = randmat.HaarSquare(beta=spec.beta)
    else:
        raise SchemaError(
            f"measure kind {doc['measure'].get('kind')!r} has no built-in matrix model"
        )

    try:
        cfg = ExperimentConfig(
            n=n,
            m=m,
            noise=noise,
            spikes=spec,
            trials=int(doc["trials"]),
            seed=int(doc["seed"]),
            which_edge=edge,
            collect=collect,
        )
    except InvalidSpec as exc:
        raise SchemaError(str(exc)) from exc
    ctx = TransformContext(mu, c)
    return cfg, ctx, doc


def _manifest_checks(cfg: ExperimentConfig, ctx: TransformContext, preds, agg: Aggregate):
    checks = []

    def add(name, spike, measured, predicted, tol, ok):
        checks.append(
            {
                "name": name,
                "spike": spike,
                "measured": float(measured),
                "predicted": float(predicted),
                "tolerance": float(tol),
                "pass": bool(ok),
            }
        )

    for k, pred in enumerate(preds, start=1):
        tol = TOL_LIMIT_SUPER if pred.supercritical else TOL_LIMIT_SUB
        delta = abs(agg.spike_means[k - 1] - pred.limit)
        add("limit_mean", k, agg.spike_means[k - 1], pred.limit, tol, delta <= tol)
        if cfg.collect.projections:
            if pred.supercritical:
                tol = TOL_PROJ_LARGEST if cfg.which_edge == "largest" else TOL_PROJ_SMALLEST
                for side, mean, predv in (
                    ("left", agg.proj_left_means[k - 1], pred.left_proj_sq),
                    ("right", agg.proj_right_means[k - 1], pred.right_proj_sq),
                ):
                    add(
                        f"proj_{side}_mean",
                        k,
                        mean,
                        predv,
                        tol,
                        abs(mean - predv) <= tol,
                    )
                if cfg.which_edge == "largest":
                    p = measures.phi(ctx.mu, pred.limit)
                    factor = pred.theta**2 * p * p
                    lhs = agg.proj_left_means[k - 1]
                    rhs = factor * agg.proj_right_means[k - 1]
                    add(
                        "proj_consistency",
                        k,
                        lhs,
                        rhs,
                        TOL_PROJ_CONSISTENCY,
                        abs(lhs - rhs) <= TOL_PROJ_CONSISTENCY,
                    )
            else:
                for side, mean in (
                    ("left", agg.proj_left_means[k - 1]),
                    ("right", agg.proj_right_means[k - 1]),
                ):
                    add(f"proj_{side}_mean", k, mean, 0.0, TOL_PROJ_SUB, mean <= TOL_PROJ_SUB)
    if cfg.collect.fluctuations and preds[0].fluct_std is not None:
        s_sq = preds[0].fluct_std ** 2
        tol = TOL_FLUCT_VAR_REL * s_sq
        add(
            "fluct_var",
            1,
            agg.fluct_var,
            s_sq,
            tol,
            abs(agg.fluct_var - s_sq) <= tol,
        )
    if cfg.collect.master_diagnostics:
        names = ("master_min_sv_rel", "kernel_identity_residual", "kernel_vector_residual")
        for name, value in zip(names, agg.master_max):
            add(name, None, value, 0.0, TOL_MASTER, value <= TOL_MASTER)
    add("weyl_violations", None, agg.weyl_violations, 0.0, 0.0, agg.weyl_violations == 0)
    return checks


def cmd_simulate(args) -> int:
    cfg, ctx, doc = load_config(args.config)
    if args.trials is not None:
        cfg = dataclasses.replace(cfg, trials=args.trials)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    preds = _predict(ctx, cfg.spikes, cfg.which_edge)

    start = time.perf_counter()
    agg = run_experiment(cfg, preds, workers=args.workers)
    wall = time.perf_counter() - start

    outdir = args.out
    os.makedirs(outdir, exist_ok=True)
    written = []
    try:
        agg_path = os.path.join(outdir, "aggregate.csv")
        with open(agg_path, "w") as fh:
            fh.write(agg.to_csv())
        written.append(agg_path)

        if args.dump_trials:
            path = os.path.join(outdir, "trials.csv")
            with open(path, "w") as fh:
                fh.write(_trials_csv(cfg, agg))
            written.append(path)

        if cfg.collect.fluctuations:
            path = os.path.join(outdir, "fluct_hist.csv")
            samples = fluct_samples(agg)
            with open(path, "w") as fh:
                fh.write("bin_left,bin_right,count\n")
                for left, right, count in histogram_bins(samples, bins=args.fluct_bins):
                    fh.write(f"{_fmt(left)},{_fmt(right)},{count}\n")
            written.append(path)

        checks = _manifest_checks(cfg, ctx, preds, agg)
        manifest = {
            "artifact_version": __version__,
            "config": doc,
            "resolved_seed": cfg.seed,
            "resolved_trials": cfg.trials,
            "wall_clock_seconds": wall,
            "checks": checks,
            "all_pass": all(c["pass"] for c in checks),
        }
        path = os.path.join(outdir, "manifest.json")
        with open(path, "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        written.append(path)
    except Exception:
        for path in written:
            try:
                os.unlink(path)
            except OSError:
                pass
        raise
    for path in written:
        print(path)
    return 0


def _trials_csv(cfg: ExperimentConfig, agg: Aggregate) -> str:
    r = cfg.spikes.r
    cols = ["trial"] + [f"value_{k+1}" for k in range(agg.trials[0].extreme_values.size)]
    if cfg.collect.projections:
        cols += [f"proj_left_{k+1}" for k in range(r)]
        cols += [f"proj_right_{k+1}" for k in range(r)]
    if cfg.collect.fluctuations:
        cols.append("fluct_sample")
    lines = [",".join(cols)]
    for i, t in enumerate(agg.trials):
        row = [str(i)] + [_fmt(v) for v in t.extreme_values]
        if cfg.collect.projections:
            row += [_fmt(v) for v in t.proj_left_sq]
            row += [_fmt(v) for v in t.proj_right_sq]
        if cfg.collect.fluctuations:
            row.append(_fmt(t.fluct_sample))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def _verify_lines(cfg: ExperimentConfig, ctx: TransformContext, doc: dict):
    """Yield (name, measured, threshold, ok) for each diagnostic."""
    grid = np.linspace(-0.2, 10.0, 103)
    worst = 0.0
    for c in (0.0, 0.25, 0.5, 1.0):
        for z in grid:
            u = transforms.u_function(c, float(z))
            worst = max(worst, abs(c * u * u + (c + 1.0) * u - z))
    yield ("u_identity", worst, 1e-12, worst < 1e-12)

    b = ctx.bounds.b
    zs = np.linspace(b + 0.01, b + 10.0, 100)
    dvals = [transforms.d_transform(ctx, float(z)) for z in zs]
    max_increase = max(y - x for x, y in zip(dvals, dvals[1:]))
    yield ("d_monotone_decreasing", max_increase, 0.0, max_increase < 0.0)

    dbp = transforms.d_at_b_plus(ctx)
    wmax = 20.0 if math.isinf(dbp) else 0.95 * dbp
    worst = 0.0
    for w in np.linspace(0.05 * min(wmax, 1.0), wmax, 20):
        z = transforms.d_inverse(ctx, float(w))
        worst = max(worst, abs(transforms.d_transform(ctx, z) - w))
    yield ("dinv_round_trip", worst, 1e-9, worst < 1e-9)

    kind = doc["measure"].get("kind")
    if kind == "mp":
        c = ctx.c
        worst = 0.0
        for w in np.linspace(0.02, 0.98, 50) / math.sqrt(c):
            closed = math.sqrt((w + 1.0) * (c * w + 1.0) / w)
            worst = max(worst, abs(transforms.d_inverse(ctx, float(w)) - closed))
        yield ("dinv_closed_form", worst, 1e-8, worst < 1e-8)
    elif kind == "haar":
        worst = 0.0
        for theta in (0.5, 1.0, 2.0, 3.0):
            closed = 0.5 * (theta + math.sqrt(theta * theta + 4.0))
            num = transforms.d_inverse(ctx, 1.0 / theta**2)
            worst = max(worst, abs(num - closed))
        yield ("dinv_closed_form", worst, 1e-10, worst < 1e-10)

    if ctx.c == 1.0 and ctx.bounds.a > 0.0:
        under = transforms.threshold_small(ctx)
        worst = 0.0
        for theta in (max(under * 1.5, 0.2), max(under * 4.0, 1.0)):
            rho = transforms.phi_inverse_small(ctx, theta)
            worst = max(worst, abs(abs(measures.phi(ctx.mu, rho)) - 1.0 / theta))
        yield ("phiinv_round_trip", worst, 1e-9, worst < 1e-9)

    preds = _predict(ctx, cfg.spikes, cfg.which_edge)
    if preds[0].supercritical:
        diag_cfg = ExperimentConfig(
            n=cfg.n,
            m=cfg.m,
            noise=cfg.noise,
            spikes=cfg.spikes,
            trials=1,
            seed=cfg.seed,
            which_edge=cfg.which_edge,
            collect=CollectFlags(projections=True, master_diagnostics=True),
        )
        agg = run_experiment(diag_cfg, preds, workers=1)
        min_sv, ident, kvec = agg.master_max
        yield ("master_min_sv_rel", min_sv, TOL_MASTER, min_sv < TOL_MASTER)
        yield ("kernel_identity_residual", ident, TOL_MASTER, ident < TOL_MASTER)
        yield ("kernel_vector_residual", kvec, TOL_MASTER, kvec < TOL_MASTER)

        rng = np.random.default_rng(np.random.SeedSequence(entropy=cfg.seed, spawn_key=(0,)))
        x = randmat.sample_noise(cfg.noise, cfg.n, cfg.m, rng)
        pert = randmat.sample_perturbation(cfg.spikes, cfg.n, cfg.m, rng, cfg.entry_law)
        rho = preds[0].limit
        mn = randmat.master_matrix(x, pert, rho).entries
        mlim = randmat.master_matrix_limit(ctx, np.asarray(cfg.spikes.thetas), rho)
        dev = float(np.max(np.abs(mn - mlim)))
        thresh = 0.15 * math.sqrt(800.0 / cfg.n)
        yield ("master_limit_deviation", dev, thresh, dev < thresh)


def cmd_verify(args) -> int:
    cfg, ctx, doc = load_config(args.config)
    failures = 0
    for name, measured, threshold, ok in _verify_lines(cfg, ctx, doc):
        status = "PASS" if ok else "FAIL"
        print(f"{status} {name}: measured {_fmt(measured)} threshold {_fmt(threshold)}")
        failures += 0 if ok else 1
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# examples
# ---------------------------------------------------------------------------


def cmd_examples(args) -> int:
    thetas = (0.5, 1.0, 2.0, 3.0)
    print("# gaussian model: closed form vs numerical transform")
    print(
        "c,theta,threshold,limit_closed,limit_numeric,"
        "left_proj_closed,left_proj_numeric,right_proj_closed,right_proj_numeric"
    )
    for c in (1.0, 0.5, 0.25, 0.05, 1e-4):
        ctx = TransformContext(measures.marchenko_pastur(c), c)
        for theta in thetas:
            thr = c**0.25
            if theta > thr:
                t2 = theta * theta
                limit_closed = math.sqrt((1.0 + t2) * (c + t2)) / theta
                left_closed = 1.0 - c * (1.0 + t2) / (t2 * (t2 + c))
                right_closed = 1.0 - (c + t2) / (t2 * (t2 + 1.0))
                limit_num = transforms.d_inverse(ctx, 1.0 / t2)
                left_num, right_num = prediction.predict_projections_largest(ctx, theta)
            else:
                limit_closed = 1.0 + math.sqrt(c)
                left_closed = right_closed = 0.0
                limit_num = ctx.bounds.b
                left_num = right_num = 0.0
            print(
                ",".join(
                    _fmt(v)
                    for v in (
                        c,
                        theta,
                        thr,
                        limit_closed,
                        limit_num,
                        left_closed,
                        left_num,
                        right_closed,
                        right_num,
                    )
                )
            )
    print("# haar model: largest and smallest spikes")
    print("theta,largest_closed,largest_numeric,smallest_closed,smallest_numeric")
    ctx = TransformContext(measures.point_mass(1.0), 1.0)
    for theta in thetas:
        root = math.sqrt(theta * theta + 4.0)
        largest_closed = 0.5 * (theta + root)
        smallest_closed = 0.5 * (-theta + root)
        largest_num = transforms.d_inverse(ctx, 1.0 / theta**2)
        smallest_num = transforms.phi_inverse_small(ctx, theta)
        print(
            ",".join(
                _fmt(v)
                for v in (theta, largest_closed, largest_num, smallest_closed, smallest_num)
            )
        )
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_measure_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--measure", required=True, help="mp|haar|uniform|atomic|empirical or JSON literal")
    p.add_argument("--c", type=float, default=None, help="aspect ratio limit n/m")
    p.add_argument("--a", type=float, default=None)
    p.add_argument("--b", type=float, default=None)
    p.add_argument("--atoms", default=None, help="loc:weight,loc:weight,...")
    p.add_argument("--values", default=None, help="comma-separated singular values")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spikedsv",
        description="Spiked singular value asymptotics and Monte Carlo validation",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transform", help="evaluate a transform on a grid")
    _add_measure_args(p)
    p.add_argument("--fn", required=True, choices=TRANSFORM_FNS)
    p.add_argument("--z", default=None, help="comma-separated z values")
    p.add_argument("--w", default=None, help="comma-separated w values")
    p.add_argument("--theta", default=None, help="comma-separated spike strengths")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("predict", help="per-spike asymptotic predictions")
    _add_measure_args(p)
    p.add_argument("--thetas", required=True, help="descending spike strengths")
    p.add_argument("--model", default="orthonormalized", choices=prediction.MODELS)
    p.add_argument("--field", default="real", choices=prediction.FIELDS)
    p.add_argument("--edge", default="largest", choices=("largest", "smallest_square"))
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("simulate", help="run a Monte Carlo experiment from a config")
    p.add_argument("config")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument("--trials", type=int, default=None, help="override config trials")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--dump-trials", action="store_true")
    p.add_argument("--fluct-bins", type=int, default=40)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="diagnostics and transform property suite")
    p.add_argument("config")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("examples", help="worked-example tables, closed vs numerical")
    p.set_defaults(func=cmd_examples)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SpikedSVError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

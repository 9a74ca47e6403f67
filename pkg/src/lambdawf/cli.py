"""Command-line front end: formula evaluation, simulation runs, validation
suites, and heatmap grid export.

Exit codes: 0 success, 1 validation failure, 2 usage error, 3 numeric
failure, 4 IO error.  All randomness flows from --seed, which defaults to a
fixed value (0) so repeated invocations are reproducible.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import estimation as est
from . import formulas as fm
from . import lookdown as ld
from .config import RunConfig, parse_config
from .fixation_line import (
    explosion_times_beta,
    explosion_times_kingman,
    sample_explosion,
)
from .measures import (
    BetaComponent,
    LambdaSpec,
    ModelParams,
    fixation_jump_rate,
    lambda_rate,
    total_up_rate,
)

__all__ = ["main", "build_parser", "EVAL_FORMULAS"]

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

EVAL_FORMULAS = (
    "coupon-pmf",
    "order-prob",
    "first-lost",
    "fix-mean-kingman",
    "fix-mean-beta",
    "explosion-beta",
    "phi",
    "charfunc",
    "stationary-mean",
    "lambda-rate",
    "fixline-rate",
)

VALIDATE_SUITES = ("formulas", "duality", "coalescence", "stationarity", "all")

HEATMAP_PANELS = (
    ("delta0", "kingman"),
    ("alpha1.8", "beta:1.8"),
    ("alpha1.5", "beta:1.5"),
    ("alpha1.2", "beta:1.2"),
)


def _floats(raw: str) -> list[float]:
    return [float(v) for v in raw.split(",") if v != ""]


def _ints(raw: str) -> list[int]:
    return [int(v) for v in raw.split(",") if v != ""]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lambdawf",
        description=(
            "Multi-type Lambda-Wright-Fisher simulation, closed-form "
            "evaluators, and formula-vs-simulation validation"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("eval", help="evaluate a closed-form quantity")
    p_eval.add_argument("formula", choices=EVAL_FORMULAS)
    p_eval.add_argument("--x", type=_floats, help="frequencies x1,..,xd")
    p_eval.add_argument("--k", type=int, default=1)
    p_eval.add_argument("--p", type=int)
    p_eval.add_argument("--j", type=int)
    p_eval.add_argument("--n", type=int)
    p_eval.add_argument("--l", type=int)
    p_eval.add_argument("--s", type=float)
    p_eval.add_argument("--t", type=float)
    p_eval.add_argument("--order", type=_ints, help="types, last lost first")
    p_eval.add_argument("--type", type=int, dest="eta")
    p_eval.add_argument("--kingman", type=float, default=0.0)
    p_eval.add_argument("--alpha", type=float)
    p_eval.add_argument("--scale", type=float, default=1.0)
    p_eval.add_argument("--theta", type=float, default=0.0)

    p_sim = sub.add_parser("simulate", help="run a configured experiment")
    p_sim.add_argument("config", help="path to a run configuration file")
    p_sim.add_argument("--seed", type=int, help="override the config seed")

    p_val = sub.add_parser("validate", help="run a validation suite")
    p_val.add_argument("suite", choices=VALIDATE_SUITES)
    p_val.add_argument("--seed", type=int, default=0)
    p_val.add_argument("--workers", type=int, default=1)
    p_val.add_argument(
        "--scale",
        type=float,
        default=1.0,
        help="replicate budget multiplier (1.0 = acceptance budget)",
    )
    p_val.add_argument("--out", help="also write the report CSV to this path")

    p_map = sub.add_parser("heatmap", help="export mean-fixation-time grids")
    p_map.add_argument("--out-dir", default=".")
    p_map.add_argument("--step", type=int, default=30, help="lattice resolution m")
    p_map.add_argument("--k", type=int, default=1)
    p_map.add_argument("--kingman", type=float, default=1.0)
    return parser


def _require(args, names):
    for name in names:
        if getattr(args, name) is None:
            raise ValueError(f"eval {args.formula} requires --{name}")


def cmd_eval(args) -> int:
    name = args.formula
    err = 0.0
    if name == "coupon-pmf":
        _require(args, ["x", "p"])
        value = fm.coupon_pmf(args.x, args.k, args.p)
    elif name == "order-prob":
        _require(args, ["x", "order"])
        value = fm.disappearance_order_prob(args.x, args.order)
    elif name == "first-lost":
        _require(args, ["x", "eta"])
        value = fm.first_to_disappear_prob(args.x, args.eta)
    elif name == "fix-mean-kingman":
        _require(args, ["x"])
        c = args.kingman if args.kingman > 0.0 else 1.0
        value = fm.mean_fixation_kingman(args.x, args.k, c)
    elif name == "fix-mean-beta":
        _require(args, ["x", "alpha"])
        value = fm.mean_fixation_beta(args.x, args.k, args.alpha)
        err = 1e-8 * value
    elif name == "explosion-beta":
        _require(args, ["alpha"])
        value = fm.mean_explosion_beta(args.k, args.alpha)
        err = 1e-8 * value
    elif name == "phi":
        _require(args, ["j", "s", "alpha"])
        value = fm.phi_generating(args.j, args.s, args.alpha)
        err = 1e-7 * max(1.0, abs(value))
    elif name == "charfunc":
        _require(args, ["x", "t"])
        c = args.kingman if args.kingman > 0.0 else 1.0
        z = fm.fixation_charfunc_kingman(args.x, args.k, args.t / c)
        print(f"{z.real:.12g}{z.imag:+.12g}i (error <= 1e-08)")
        return EXIT_OK
    elif name == "stationary-mean":
        _require(args, ["kingman", "theta"])
        value = fm.stationary_time_mean(args.kingman, args.theta)
    elif name == "lambda-rate":
        _require(args, ["n"])
        spec = _spec_from_args(args)
        value = lambda_rate(spec, args.n, args.k)
    elif name == "fixline-rate":
        _require(args, ["n"])
        params = ModelParams(
            d=1, lam=_spec_from_args(args), theta=args.theta,
            nu=(0.5,) if args.theta > 0.0 else (),
        )
        if args.l is not None:
            value = fixation_jump_rate(params, args.n, args.l)
        else:
            value = total_up_rate(params, args.n)
    else:  # pragma: no cover - argparse restricts choices
        raise ValueError(f"unknown formula {name}")
    print(f"{value:.12g} (error <= {err:.3g})")
    return EXIT_OK


def _spec_from_args(args) -> LambdaSpec:
    beta = None
    if args.alpha is not None:
        beta = BetaComponent(alpha=args.alpha, scale=args.scale)
    return LambdaSpec(kingman_mass=args.kingman, beta=beta)


def _simulate_lookdown(cfg: RunConfig) -> str:
    times = cfg.sample_times if cfg.sample_times else (cfg.horizon,)
    out = ld.run(
        cfg.params,
        cfg.N,
        cfg.horizon,
        [list(x) for x in cfg.ics],
        seed=cfg.seed,
        sample_times=times,
    )
    lines = cfg.header_lines()
    lines.append("time,ic_index," + ",".join(f"x{i+1}" for i in range(cfg.params.d)))
    for it, t in enumerate(out.sample_times):
        freqs = out.frequencies(it)
        for ic in range(len(cfg.ics)):
            row = ",".join(f"{v:.10g}" for v in freqs[ic, : cfg.params.d])
            lines.append(f"{t:.10g},{ic},{row}")
    with open(cfg.output, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return (
        f"wrote {cfg.output}: lookdown N={cfg.N} "
        f"{len(times)} times x {len(cfg.ics)} conditions"
    )


def _simulate_explosion(cfg: RunConfig) -> str:
    spec = cfg.params.lam
    rng = np.random.default_rng(cfg.seed)
    start = np.full(cfg.replicates, cfg.k, dtype=np.int64)
    if spec.kingman_mass > 0.0 and spec.beta is None and not spec.atoms:
        times, tail = explosion_times_kingman(
            spec.kingman_mass, cfg.params.theta, start, cfg.M, rng
        )
    elif spec.kingman_mass == 0.0 and spec.beta is not None and not spec.atoms:
        times, tail = explosion_times_beta(
            spec.beta.alpha, spec.beta.scale, start, cfg.M, rng
        )
    else:
        times = np.empty(cfg.replicates)
        tail = 0.0
        for i in range(cfg.replicates):
            s = sample_explosion(cfg.params, cfg.k, cfg.M, rng)
            times[i] = s.elapsed
            tail = max(tail, s.tail_bound)
    lines = cfg.header_lines()
    lines.append("sample")
    lines.extend(f"{v:.10g}" for v in times)
    with open(cfg.output, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    mean = float(times.mean())
    se = float(times.std(ddof=1) / np.sqrt(times.size)) if times.size > 1 else 0.0
    return (
        f"wrote {cfg.output}: {cfg.replicates} explosion samples "
        f"mean={mean:.6g} se={se:.3g} tail<={tail:.3g}"
    )


def cmd_simulate(args) -> int:
    with open(args.config) as fh:
        cfg = parse_config(fh.read())
    if args.seed is not None:
        cfg = RunConfig(
            params=cfg.params,
            kind=cfg.kind,
            replicates=cfg.replicates,
            seed=args.seed,
            N=cfg.N,
            horizon=cfg.horizon,
            output=cfg.output,
            ics=cfg.ics,
            sample_times=cfg.sample_times,
            k=cfg.k,
            M=cfg.M,
        )
    if cfg.kind == "lookdown":
        summary = _simulate_lookdown(cfg)
    else:
        summary = _simulate_explosion(cfg)
    print(summary)
    return EXIT_OK


def cmd_validate(args) -> int:
    rows, all_passed = est.run_suite(
        args.suite, seed=args.seed, workers=args.workers, scale=args.scale
    )
    text = est.report_csv(rows)
    sys.stdout.write(text)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    return EXIT_OK if all_passed else EXIT_VALIDATION


def cmd_heatmap(args) -> int:
    import os

    written = []
    for tag, measure in HEATMAP_PANELS:
        rows = est.heatmap_grid(
            measure, args.k, args.step, kingman_mass=args.kingman
        )
        path = os.path.join(args.out_dir, f"heatmap_{tag}.csv")
        est.write_heatmap_csv(rows, path)
        written.append(path)
    print(f"wrote {len(written)} panels: " + " ".join(written))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help; pass both through
        return int(exc.code or 0)
    try:
        if args.command == "eval":
            return cmd_eval(args)
        if args.command == "simulate":
            return cmd_simulate(args)
        if args.command == "validate":
            return cmd_validate(args)
        if args.command == "heatmap":
            return cmd_heatmap(args)
        raise ValueError(f"unknown command {args.command}")
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Three subcommands: ``test`` runs the conditional test on one pair read from
series files, ``simulate`` drives a batch experiment from a config file plus
flag overrides, ``oracle`` cross-checks the fast engine against brute force
on small problems.  Exit codes: 0 success, 2 input or parse error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict

import numpy as np

from .baselines import si_dtw_oc_p_value
from .dtw_core import dtw, enumerate_alignments
from .harness import (
    ExperimentConfig,
    UcrFormatError,
    load_ucr_pair,
    parse_config_file,
    run_ci,
    run_tpr,
    write_report_csv,
    write_report_jsonl,
)
from .inference import (
    DegenerateDirectionError,
    RegionMassUnderflowError,
    selective_confidence_interval,
    selective_p_value,
)
from .parametric import DataLine, envelope_bruteforce, para_dtw, quadratic_loss

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3

COV_TOKENS = {"indep": "independence", "ar": "ar-correlation"}
NOISE_TOKENS = {
    "gauss": "gaussian",
    "laplace": "laplace",
    "skewnormal": "skew-normal-10",
    "t20": "student-t-20",
}

INT_FIELDS = {"n", "m", "trials", "seed", "B"}
FLOAT_FIELDS = {"delta", "alpha"}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dtwsi")
    sub = parser.add_subparsers(dest="command", required=True)

    p_test = sub.add_parser("test", help="conditional test for one pair of series files")
    p_test.add_argument("path_a")
    p_test.add_argument("path_b")
    p_test.add_argument("--row-a", type=int, default=0)
    p_test.add_argument("--row-b", type=int, default=0)
    p_test.add_argument("--method", choices=["si-dtw", "si-dtw-oc"], default="si-dtw")
    p_test.add_argument("--alpha", type=float, default=0.05)
    p_test.add_argument("--variance", choices=["known", "estimated"], default="estimated")
    p_test.add_argument("--out", default=None)

    p_sim = sub.add_parser("simulate", help="batch experiment from a config file")
    p_sim.add_argument("--config", default=None, help="flat key = value file")
    p_sim.add_argument("--method", choices=["si-dtw", "si-dtw-oc", "permutation", "data-split"])
    p_sim.add_argument("--n", type=int)
    p_sim.add_argument("--m", type=int)
    p_sim.add_argument("--delta", type=float)
    p_sim.add_argument("--cov", choices=sorted(COV_TOKENS))
    p_sim.add_argument("--noise", choices=sorted(NOISE_TOKENS))
    p_sim.add_argument("--variance", choices=["known", "estimated"])
    p_sim.add_argument("--alpha", type=float)
    p_sim.add_argument("--trials", type=int)
    p_sim.add_argument("--seed", type=int)
    p_sim.add_argument("--perm-B", type=int, dest="perm_b")
    p_sim.add_argument("--ci", action="store_true", help="also record confidence intervals")
    p_sim.add_argument("--out", default=None)
    p_sim.add_argument("--format", choices=["json-lines", "csv"], default="json-lines")

    p_orc = sub.add_parser("oracle", help="brute-force cross-checks for small sizes")
    p_orc.add_argument("--n", type=int, default=4)
    p_orc.add_argument("--m", type=int, default=4)
    p_orc.add_argument("--instances", type=int, default=20)
    p_orc.add_argument("--seed", type=int, default=0)
    return parser


def _cmd_test(args) -> int:
    pair = load_ucr_pair(
        args.path_a, args.path_b, args.row_a, args.row_b, variance_mode=args.variance
    )
    result = selective_p_value(pair) if args.method == "si-dtw" else si_dtw_oc_p_value(pair)
    ci = selective_confidence_interval(pair, args.alpha, result=result)

    def finite(x):
        # strict JSON has no Infinity literal
        if x == float("inf"):
            return "inf"
        if x == float("-inf"):
            return "-inf"
        return x

    record = {
        "method": args.method,
        "p_selective": result.p_selective,
        "statistic": result.z_obs,
        "sigma": result.sigma,
        "alpha": args.alpha,
        "ci": list(ci),
        "region": [[finite(lo), finite(hi)] for lo, hi in result.region],
        "alignment": [list(cell) for cell in result.alignment.path],
    }
    text = json.dumps(record, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(text + "\n")
    print(text)
    return EXIT_OK


def _config_from_args(args) -> ExperimentConfig:
    values: dict = {}
    if args.config:
        raw = parse_config_file(args.config)
        for key, value in raw.items():
            if key in INT_FIELDS:
                values[key] = int(value)
            elif key in FLOAT_FIELDS:
                values[key] = float(value)
            else:
                values[key] = value
    overrides = {
        "method": args.method,
        "n": args.n,
        "m": args.m,
        "delta": args.delta,
        "covariance": COV_TOKENS.get(args.cov) if args.cov else None,
        "noise": NOISE_TOKENS.get(args.noise) if args.noise else None,
        "variance_mode": args.variance,
        "alpha": args.alpha,
        "trials": args.trials,
        "seed": args.seed,
        "B": args.perm_b,
    }
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)


def _cmd_simulate(args) -> int:
    config = _config_from_args(args)
    report = run_ci(config) if args.ci else run_tpr(config)
    if args.out:
        if args.format == "json-lines":
            write_report_jsonl(report, args.out)
        else:
            write_report_csv(report, args.out)
    summary = {
        "config": asdict(config),
        "methods": {
            name: {"rejection_rate": res.rejection_rate, "trials": len(res.p_values)}
            for name, res in report.results.items()
        },
    }
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def _cmd_oracle(args) -> int:
    rng = np.random.default_rng(args.seed)
    n, m = args.n, args.m
    alignments = enumerate_alignments(n, m)
    failures = 0
    for k in range(args.instances):
        from .dtw_core import TimeSeriesPair, cost_matrix

        pair = TimeSeriesPair(rng.normal(size=n), rng.normal(size=m))
        M, dist = dtw(pair)
        C = cost_matrix(pair)
        brute = min(float((A.matrix() * C).sum()) for A in alignments)
        ok_dtw = abs(dist - brute) <= 1e-9 * max(1.0, brute)

        a = rng.normal(size=n + m)
        b = rng.normal(size=n + m)
        line = DataLine(a, b, n)
        env = para_dtw(line, n, m)
        env_bf = envelope_bruteforce(alignments, line)
        losses = [quadratic_loss(A, line) for A in alignments]
        zs = np.linspace(-20.0, 20.0, 200)
        worst = max(
            abs(env.value(z) - min(q(z) for q in losses)) / max(1.0, abs(env.value(z)))
            for z in zs
        )
        ok_env = worst <= 1e-8 and env.breakpoints == env_bf.breakpoints

        p_fast = selective_p_value(pair).p_selective
        p_slow = selective_p_value(pair, engine="enumeration").p_selective
        ok_p = abs(p_fast - p_slow) <= 1e-9

        status = "ok" if (ok_dtw and ok_env and ok_p) else "MISMATCH"
        print(
            f"instance {k:3d}: dtw={'ok' if ok_dtw else 'FAIL'} "
            f"envelope={'ok' if ok_env else 'FAIL'} p={'ok' if ok_p else 'FAIL'} -> {status}"
        )
        failures += status != "ok"
    print(f"{args.instances - failures}/{args.instances} instances consistent")
    return EXIT_OK if failures == 0 else EXIT_NUMERIC


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "test":
            return _cmd_test(args)
        if args.command == "simulate":
            return _cmd_simulate(args)
        return _cmd_oracle(args)
    except (UcrFormatError, FileNotFoundError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (DegenerateDirectionError, RegionMassUnderflowError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, TypeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except RuntimeError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

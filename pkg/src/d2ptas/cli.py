"""Command-line entry point: ``d2ptas {solve,oracle,bench,check}``.

Every successful or refused command prints one JSON report on stdout.
Diagnostics go to stderr. Exit codes: 0 success, 1 failed check,
2 resource refusal, 64 usage error, 65 unreadable input.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
import time
from typing import Optional, Sequence

import numpy as np

from . import harness, measure, oracle, ptas
from .errors import DatasetParseError, RefusalError, UsageError
from .report import RunReport, centers_payload, input_digest
from .sampler import derive_rng

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_REFUSED = 2
EXIT_USAGE = 64
EXIT_DATAERR = 65


def load_dataset(path) -> np.ndarray:
    """Read a CSV of points, one per row.

    A first row containing any non-numeric field is taken as a header.
    Blank lines are ignored.
    """
    rows = []
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DatasetParseError(f"cannot read {path}: {exc.strerror}") from exc
    with fh:
        for lineno, raw in enumerate(csv.reader(fh), start=1):
            if not raw or all(not cell.strip() for cell in raw):
                continue
            try:
                values = [float(cell) for cell in raw]
            except ValueError:
                if not rows and lineno == 1:
                    continue  # header
                raise DatasetParseError(f"non-numeric field in {raw!r}", line=lineno) from None
            if not all(math.isfinite(v) for v in values):
                raise DatasetParseError("non-finite value", line=lineno)
            if rows and len(values) != len(rows[0][1]):
                raise DatasetParseError(
                    f"expected {len(rows[0][1])} fields, found {len(values)}", line=lineno)
            rows.append((lineno, values))
    if not rows:
        raise DatasetParseError(f"{path} contains no data rows")
    return np.array([v for _, v in rows], dtype=np.float64)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="d2ptas", description="D^2-sampling PTAS for k-means")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, needs_input=True):
        p.add_argument("--input", required=needs_input, help="CSV file, one point per row")
        p.add_argument("--threads", type=_positive_int, default=1)

    p = sub.add_parser("solve", help="run the PTAS on a CSV dataset")
    common(p)
    p.add_argument("--k", type=_positive_int, required=True)
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--mode", choices=[ptas.PRACTICAL, ptas.THEORETICAL], default=ptas.PRACTICAL)
    p.add_argument("--N", type=_positive_int)
    p.add_argument("--M", type=_positive_int)
    p.add_argument("--reps", type=_positive_int, help="restarts (default 2^k)")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--leaf-budget", type=_positive_int, default=ptas.DEFAULT_LEAF_BUDGET)

    p = sub.add_parser("oracle", help="exact k-means by partition enumeration (n <= 15)")
    common(p)
    p.add_argument("--k", type=_positive_int, required=True)

    p = sub.add_parser("bench", help="approximation ratios against the exact oracle")
    common(p, needs_input=False)
    p.add_argument("--generator", choices=harness.GENERATORS, default="uniform_box")
    p.add_argument("--n", type=_positive_int, default=10)
    p.add_argument("--d", type=_positive_int, default=2)
    p.add_argument("--k", type=_positive_int, default=2)
    p.add_argument("--epsilon", type=float, default=0.5)
    p.add_argument("--trials", type=_positive_int, default=50)
    p.add_argument("--N", type=_positive_int)
    p.add_argument("--M", type=_positive_int)
    p.add_argument("--reps", type=_positive_int)
    p.add_argument("--seed", type=_seed, default=0)

    p = sub.add_parser("check", help="spot-check measure properties")
    common(p, needs_input=False)
    p.add_argument("--property", dest="prop", default="all",
                   choices=["centroid", "symmetry", "triangle", "sampling", "all"])
    p.add_argument("--samples", type=_positive_int, default=200,
                   help="random tuples per property")
    p.add_argument("--rel-tol", type=float, default=1e-9)
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--delta", type=float, default=0.2)
    p.add_argument("--n", type=_positive_int, default=100)
    p.add_argument("--d", type=_positive_int, default=2)
    p.add_argument("--trials", type=_positive_int, default=1000)
    p.add_argument("--seed", type=_seed, default=0)
    return parser


def _load(args):
    P = load_dataset(args.input)
    return P, input_digest(args.input, *P.shape)


def run_solve(args) -> tuple[RunReport, int]:
    P, digest = _load(args)
    k = args.k
    if args.mode == ptas.THEORETICAL:
        tp = ptas.theoretical_params(k, args.epsilon)
        params = ptas.theoretical_ptas_params(k, args.epsilon, repetitions=args.reps,
                                              master_seed=args.seed)
        theory = {
            "eta": tp.eta,
            "N": tp.N,
            "M": tp.M,
            "kappa_log2": tp.kappa_log2,
            "leaf_estimate_log2": ptas.leaf_estimate_log2(tp.N, tp.M, k),
            "leaf_budget": args.leaf_budget,
        }
    else:
        params = ptas.practical_params(k, args.epsilon, N=args.N, M=args.M,
                                       repetitions=args.reps, master_seed=args.seed)
        theory = None
    echo = {"k": k, "leaf_budget": args.leaf_budget,
            **params.to_dict()}
    try:
        res = ptas.find_k_means(P, k, params, leaf_budget=args.leaf_budget,
                                threads=args.threads)
    except RefusalError as exc:
        print(f"d2ptas: refused: {exc}", file=sys.stderr)
        result = {"refusal": str(exc)}
        if theory:
            result["theoretical"] = theory
        return RunReport("solve", echo, result, args.seed, digest, status="refused"), EXIT_REFUSED
    result = {
        "centers": centers_payload(res.centers),
        "cost": res.cost,
        "candidates_evaluated": res.candidates_evaluated,
    }
    if theory:
        result["theoretical"] = theory
    return RunReport("solve", echo, result, args.seed, digest), EXIT_OK


def run_oracle(args) -> tuple[RunReport, int]:
    P, digest = _load(args)
    echo = {"k": args.k}
    try:
        part, centers, best = oracle.optimal_kmeans(P, args.k, threads=args.threads)
    except RefusalError as exc:
        print(f"d2ptas: refused: {exc}", file=sys.stderr)
        return RunReport("oracle", echo, {"refusal": str(exc)}, None, digest,
                         status="refused"), EXIT_REFUSED
    result = {
        "labels": list(part.labels),
        "k_used": part.k_used,
        "centers": centers_payload(centers),
        "cost": best,
    }
    return RunReport("oracle", echo, result, None, digest), EXIT_OK


def _finite_or_none(x: float) -> Optional[float]:
    return x if math.isfinite(x) else None


def run_bench(args) -> tuple[RunReport, int]:
    dataset, digest = (None, None)
    if args.input:
        dataset, digest = _load(args)
    config = harness.ExperimentConfig(
        generator=args.generator, n=args.n, d=args.d, k=args.k, epsilon=args.epsilon,
        trials=args.trials, N=args.N, M=args.M, repetitions=args.reps,
        master_seed=args.seed, dataset=dataset, threads=args.threads)
    echo = {key: getattr(config, key) for key in
            ("generator", "n", "d", "k", "epsilon", "trials", "N", "M", "repetitions")}
    if dataset is not None:
        echo["generator"] = None
        echo["n"], echo["d"] = dataset.shape
    try:
        rep = harness.ratio_experiment(config)
    except RefusalError as exc:
        print(f"d2ptas: refused: {exc}", file=sys.stderr)
        return RunReport("bench", echo, {"refusal": str(exc)}, args.seed, digest,
                         status="refused"), EXIT_REFUSED
    summary = rep.summary()
    summary["max_ratio"] = _finite_or_none(summary["max_ratio"])
    summary["mean_ratio"] = _finite_or_none(summary["mean_ratio"])
    result = {
        "trials": [
            {"ptas_cost": t.ptas_cost, "oracle_cost": t.oracle_cost,
             "ratio": _finite_or_none(t.ratio), "baseline_cost": t.baseline_cost}
            for t in rep.trials
        ],
        "summary": summary,
    }
    return RunReport("bench", echo, result, args.seed, digest), EXIT_OK


def run_check(args) -> tuple[RunReport, int]:
    props = ["centroid", "symmetry", "triangle", "sampling"] if args.prop == "all" else [args.prop]
    needs_data = [p for p in props if p != "sampling"]
    P, digest = (None, None)
    if needs_data:
        if not args.input:
            raise UsageError(f"--input is required for --property {','.join(needs_data)}")
        P, digest = _load(args)
    verdicts = {}
    for i, prop in enumerate(props):
        rng = derive_rng(args.seed, i)
        if prop == "centroid":
            lo, hi = P.min(axis=0), P.max(axis=0)
            span = np.maximum(hi - lo, 1.0)
            probes = np.vstack([P, rng.uniform(lo - span, hi + span, size=(args.samples, P.shape[1]))])
            verdicts[prop] = all(measure.check_centroid_property(P, c, rel_tol=args.rel_tol)
                                 for c in probes)
        elif prop in ("symmetry", "triangle"):
            width = 2 if prop == "symmetry" else 3
            picks = P[rng.integers(len(P), size=(args.samples, width))]
            tuples = [tuple(row) for row in picks]
            if prop == "symmetry":
                verdicts[prop] = measure.check_symmetry_and_triangle(pairs=tuples)
            else:
                verdicts[prop] = measure.check_symmetry_and_triangle(triples=tuples)
        else:
            st = harness.sampling_property_test(args.gamma, args.delta, args.n, args.d,
                                                args.trials, rng)
            verdicts[prop] = {"passed": st.passed, "success_rate": st.success_rate,
                              "threshold": st.threshold, "sample_size": st.sample_size}
    passed = all(v["passed"] if isinstance(v, dict) else v for v in verdicts.values())
    echo = {"properties": props, "samples": args.samples, "rel_tol": args.rel_tol,
            "gamma": args.gamma, "delta": args.delta, "n": args.n, "d": args.d,
            "trials": args.trials}
    result = {"verdicts": verdicts, "passed": passed}
    status = "ok" if passed else "failed"
    return (RunReport("check", echo, result, args.seed, digest, status=status),
            EXIT_OK if passed else EXIT_CHECK_FAILED)


COMMANDS = {"solve": run_solve, "oracle": run_oracle, "bench": run_bench, "check": run_check}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    try:
        report, code = COMMANDS[args.command](args)
    except DatasetParseError as exc:
        print(f"d2ptas: input error: {exc}", file=sys.stderr)
        return EXIT_DATAERR
    except UsageError as exc:
        print(f"d2ptas: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report.duration_s = time.perf_counter() - start
    print(report.to_json())
    return code


if __name__ == "__main__":
    sys.exit(main())

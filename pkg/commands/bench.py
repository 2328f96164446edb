# commands/bench.py
"""`bench`: sweep timing, product counts and memory over a grid of problem sizes."""

import csv
import itertools
import logging
import time

import numpy as np

import config
from commands.common import make_ladder
from diagnostics import naive_gibbs_sweep
from model import random_sequence
from solvers.tempering import SamplerConfig, solve
from synthetic import random_model
from utils.text_utils import format_table

try:
    import resource
except ImportError:  # not available on Windows
    resource = None

logger = logging.getLogger(__name__)

TIME_RATIO_T = 2.5
TIME_RATIO_THREADS = 0.7


def _ints(value: str):
    return [int(v) for v in value.split(",") if v.strip()]


def peak_rss_mb() -> float:
    if resource is None:
        return float("nan")
    # ru_maxrss is in kilobytes on Linux
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024.0


def bench_point(T: int, n_psi: int, M: int, threads: int, n_actions: int, sweeps: int, seed: int,
                beta_min: float, beta_max: float, naive: bool = False) -> dict:
    """Time one solve() on a random stable model and count its products."""
    model = random_model(n_psi, T, n_actions, seed=seed)
    ladder = make_ladder(beta_min, beta_max, M)
    result = solve(model, SamplerConfig(ladder=ladder, sweeps=sweeps, seed=seed, threads=threads))
    # start-up builds every forward cache once
    sweep_products = result.matvecs - M * T
    row = {
        "T": T, "n_psi": n_psi, "M": M, "threads": threads,
        "sweep_seconds": result.wall_time / sweeps,
        "matvecs_per_replica_sweep": sweep_products / (sweeps * M),
        "expected_matvecs": T * (n_actions + 2),
        "cache_mb": M * 2 * (T + 1) * n_psi * 8 / 2**20,
        "peak_rss_mb": peak_rss_mb(),
    }
    if naive:
        rng = np.random.default_rng(seed)
        u = random_sequence(model, rng)
        started = time.perf_counter()
        for _ in range(sweeps):
            u = naive_gibbs_sweep(model, u, ladder.beta_max, rng)
        row["naive_sweep_seconds"] = (time.perf_counter() - started) / sweeps
    return row


def soft_checks(rows) -> list:
    """Scaling ratios that depend on the host; reported, never fatal."""
    notes = []
    by_key = {(r["T"], r["n_psi"], r["M"], r["threads"]): r for r in rows}
    for (T, n, M, th), r in by_key.items():
        doubled = by_key.get((2 * T, n, M, th))
        if doubled is not None:
            ratio = doubled["sweep_seconds"] / r["sweep_seconds"]
            notes.append((f"T {T}->{2 * T} n_psi={n} M={M} threads={th}", ratio, ratio <= TIME_RATIO_T))
        more = by_key.get((T, n, M, 2 * th))
        if more is not None and M >= 2 * th:
            ratio = more["sweep_seconds"] / r["sweep_seconds"]
            notes.append((f"threads {th}->{2 * th} T={T} n_psi={n} M={M}", ratio, ratio <= TIME_RATIO_THREADS))
    for name, ratio, ok in notes:
        if not ok:
            logger.warning("soft criterion missed: %s time ratio %.3f", name, ratio)
    return notes


def cmd_bench(args) -> int:
    seed = config.SEED if args.seed is None else args.seed
    rows = []
    for T, n, M, th in itertools.product(_ints(args.T), _ints(args.n_psi), _ints(args.temps), _ints(args.threads)):
        logger.info("bench T=%d n_psi=%d M=%d threads=%d", T, n, M, th)
        rows.append(bench_point(T, n, M, th, args.actions, args.sweeps, seed,
                                args.beta_min, args.beta_max, naive=args.naive))

    headers = list(rows[0].keys())
    print(format_table([[f"{r[h]:.6g}" if isinstance(r[h], float) else r[h] for h in headers] for r in rows],
                       headers))
    notes = soft_checks(rows)
    if notes:
        print()
        print(format_table([(name, f"{ratio:.3f}", "ok" if ok else "slow") for name, ratio, ok in notes],
                           ["scaling", "time_ratio", "status"]))
    for r in rows:
        if r["matvecs_per_replica_sweep"] != r["expected_matvecs"]:
            logger.warning("product count %s differs from T(|U|+2)=%d",
                           r["matvecs_per_replica_sweep"], r["expected_matvecs"])

    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=headers, lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
    return 0


def register_commands(subparsers) -> None:
    p = subparsers.add_parser("bench", help="time sweeps across a grid of sizes")
    p.add_argument("--T", default="10,20", help="comma-separated horizons")
    p.add_argument("--n-psi", default="64", help="comma-separated lifted dimensions")
    p.add_argument("--temps", default="4", help="comma-separated replica counts")
    p.add_argument("--threads", default=str(config.THREADS), help="comma-separated worker counts")
    p.add_argument("--actions", type=int, default=4, help="|U| of the random models")
    p.add_argument("--sweeps", type=int, default=20)
    p.add_argument("--beta-min", type=float, default=config.BETA_MIN)
    p.add_argument("--beta-max", type=float, default=config.BETA_MAX)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--naive", action="store_true", help="also time the full-evaluation sweep")
    p.add_argument("--output", help="CSV file for the result rows")
    p.set_defaults(func=cmd_bench)

# commands/solve.py
"""`solve`: parallel-tempering Gibbs search for the minimum-cost sequence."""

import logging

import config
from commands.common import (add_ladder_flags, add_output_flags, add_seed_flags, finish_output,
                             load_manifest, make_ladder, resolve)
from errors import ConfigError, SolveAborted
from solvers.tempering import SamplerConfig, flip_rates, solve
from utils import io
from utils.text_utils import fmt_float, fmt_sequence

logger = logging.getLogger(__name__)


def load_model_flag(args, manifest):
    path = resolve(args, manifest, "model", None)
    if path is None:
        raise ConfigError("--model is required")
    return path, io.read_model(path)


def cmd_solve(args) -> int:
    manifest = load_manifest(args)
    model_path, model = load_model_flag(args, manifest)
    settings = {
        "model": str(model_path),
        "solver": "tempering",
        "beta_min": resolve(args, manifest, "beta_min", config.BETA_MIN),
        "beta_max": resolve(args, manifest, "beta_max", config.BETA_MAX),
        "temps": resolve(args, manifest, "temps", config.TEMPS),
        "sweeps": resolve(args, manifest, "sweeps", config.SWEEPS),
        "trace_every": resolve(args, manifest, "trace_every", config.TRACE_EVERY),
        "seed": resolve(args, manifest, "seed", config.SEED),
        "threads": resolve(args, manifest, "threads", config.THREADS),
    }
    ladder = make_ladder(settings["beta_min"], settings["beta_max"], settings["temps"])
    settings["betas"] = list(ladder.betas)
    sampler = SamplerConfig(ladder=ladder, sweeps=settings["sweeps"], seed=settings["seed"],
                            threads=settings["threads"], trace_every=settings["trace_every"],
                            progress=config.PROGRESS)

    try:
        result = solve(model, sampler)
    except SolveAborted as e:
        if e.partial is not None:
            finish_output("solve", settings, model, io.solve_trace_rows(e.partial), args.output, None)
        raise

    finish_output("solve", settings, model, io.solve_trace_rows(result), args.output, manifest)
    print(f"best_cost: {fmt_float(result.best_cost)}")
    print(f"best_sequence: {fmt_sequence(result.best_sequence.labels(model))}")
    print(f"found_at: sweep {result.best_found_at[0]} replica {result.best_found_at[1]}")
    print(f"sweeps: {result.sweep_count}")
    print(f"temperatures: {len(result.betas)}")
    print(f"matvecs: {result.matvecs}")
    print(f"wall_time: {result.wall_time:.3f}")
    if len(result.betas) > 1:
        print("flip_rates: " + " ".join(f"{r:.4f}" for r in flip_rates(result)))
    return 0


def register_commands(subparsers) -> None:
    p = subparsers.add_parser("solve", help="run the tempering sampler on a model file")
    p.add_argument("--model", help="model file (JSON)")
    add_ladder_flags(p)
    p.add_argument("--sweeps", type=int, default=None, help=f"iterations (default {config.SWEEPS})")
    p.add_argument("--trace-every", type=int, default=None, help="record every k-th sweep")
    add_seed_flags(p)
    add_output_flags(p)
    p.set_defaults(func=cmd_solve)

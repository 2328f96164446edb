# commands/baselines.py
"""`relax` and `ga`: the comparison optimizers, traced in the solver's schema."""

import config
from commands.common import add_output_flags, add_seed_flags, finish_output, load_manifest, resolve
from commands.solve import load_model_flag
from errors import RelaxationDiverged
from solvers.genetic import GAConfig, genetic_solve
from solvers.relaxation import RelaxConfig, gradient_solve
from utils import io
from utils.text_utils import fmt_float, fmt_sequence


def cmd_relax(args) -> int:
    manifest = load_manifest(args)
    model_path, model = load_model_flag(args, manifest)
    settings = {
        "model": str(model_path),
        "solver": "relaxation",
        "eta": resolve(args, manifest, "eta", config.ETA),
        "iterations": resolve(args, manifest, "iterations", config.ITERATIONS),
        "init": resolve(args, manifest, "init", "uniform"),
        "seed": resolve(args, manifest, "seed", config.SEED),
    }
    relax = RelaxConfig(eta=settings["eta"], iterations=settings["iterations"], seed=settings["seed"],
                        init=settings["init"], progress=config.PROGRESS)
    settings.update(beta1=relax.beta1, beta2=relax.beta2, eps=relax.eps)
    try:
        result = gradient_solve(model, config=relax)
    except RelaxationDiverged as e:
        finish_output("relax", settings, model, io.history_trace_rows(e.history), args.output, None)
        raise

    finish_output("relax", settings, model, io.history_trace_rows(result.history), args.output, manifest)
    print(f"relaxed_cost: {fmt_float(result.J_relax)}")
    print(f"rounded_cost: {fmt_float(result.J_rounded)}")
    print(f"rounded_sequence: {fmt_sequence(result.rounded.labels(model))}")
    print(f"iterations: {settings['iterations']}")
    print(f"wall_time: {result.wall_time:.3f}")
    return 0


def cmd_ga(args) -> int:
    manifest = load_manifest(args)
    model_path, model = load_model_flag(args, manifest)
    settings = {
        "model": str(model_path),
        "solver": "genetic",
        "population": resolve(args, manifest, "population", config.POPULATION),
        "selection_mu": resolve(args, manifest, "selection_mu", config.SELECTION_MU),
        "crossover": "single-point",
        "mutation_rate": resolve(args, manifest, "mutation_rate", config.MUTATION_RATE),
        "gene_mutation_prob": resolve(args, manifest, "gene_mutation_prob", config.GENE_MUTATION_PROB),
        "generations": resolve(args, manifest, "generations", config.GENERATIONS),
        "seed": resolve(args, manifest, "seed", config.SEED),
        "threads": resolve(args, manifest, "threads", config.THREADS),
    }
    ga = GAConfig(**{k: v for k, v in settings.items() if k not in ("model", "solver")}, progress=config.PROGRESS)
    result = genetic_solve(model, ga)

    finish_output("ga", settings, model, io.history_trace_rows(result.history), args.output, manifest)
    print(f"best_cost: {fmt_float(result.best_cost)}")
    print(f"best_sequence: {fmt_sequence(result.best.labels(model))}")
    print(f"generations: {settings['generations']}")
    print(f"wall_time: {result.wall_time:.3f}")
    return 0


def register_commands(subparsers) -> None:
    p = subparsers.add_parser("relax", help="projected NAdam on the continuous relaxation")
    p.add_argument("--model", help="model file (JSON)")
    p.add_argument("--eta", type=float, default=None, help=f"step size (default {config.ETA})")
    p.add_argument("--iterations", type=int, default=None, help=f"default {config.ITERATIONS}")
    p.add_argument("--init", choices=("uniform", "random"), default=None)
    add_seed_flags(p, threads=False)
    add_output_flags(p)
    p.set_defaults(func=cmd_relax)

    p = subparsers.add_parser("ga", help="genetic algorithm over control sequences")
    p.add_argument("--model", help="model file (JSON)")
    p.add_argument("--population", type=int, default=None, help=f"default {config.POPULATION}")
    p.add_argument("--selection-mu", type=int, default=None, help=f"default {config.SELECTION_MU}")
    p.add_argument("--mutation-rate", type=float, default=None, help=f"default {config.MUTATION_RATE}")
    p.add_argument("--gene-mutation-prob", type=float, default=None, help=f"default {config.GENE_MUTATION_PROB}")
    p.add_argument("--generations", type=int, default=None, help=f"default {config.GENERATIONS}")
    add_seed_flags(p)
    add_output_flags(p)
    p.set_defaults(func=cmd_ga)

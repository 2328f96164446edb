# commands/oracle.py
"""`oracle`: exact minimum by enumeration, for instances small enough to list."""

from commands.common import count_arg
from commands.solve import load_model_flag
from diagnostics import brute_force_min
from utils.text_utils import fmt_float, fmt_sequence


def cmd_oracle(args) -> int:
    _, model = load_model_flag(args, None)
    J_star, minimizers = brute_force_min(model, cap=args.cap)
    print(f"J_star: {fmt_float(J_star)}")
    print(f"minimizers: {len(minimizers)}")
    print(f"minimizer: {fmt_sequence(minimizers[0].labels(model))}")
    return 0


def register_commands(subparsers) -> None:
    p = subparsers.add_parser("oracle", help="exact minimum cost by enumeration")
    p.add_argument("--model", required=True, help="model file (JSON)")
    p.add_argument("--cap", type=count_arg, default=None, help="refuse above this many sequences")
    p.set_defaults(func=cmd_oracle)

# commands/fit.py
"""`fit`: least-squares Koopman model from a transition dataset."""

import json
import logging

import numpy as np

from edmd import fit_koopman, fit_residuals
from errors import ConfigError, DatasetError, ModelInvalidError
from utils import io
from utils.text_utils import fmt_float, format_table

logger = logging.getLogger(__name__)


def _cost_spec(value: str):
    if value == "last":
        return value
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"--cost must be 'last' or a coordinate index, got {value!r}")


def _initial_state(value: str):
    try:
        return json.loads(value)
    except json.JSONDecodeError as e:
        raise ConfigError(f"--initial-state must be a JSON array: {e}")


def cmd_fit(args) -> int:
    actions = [a.strip() for a in args.actions.split(",")] if args.actions else None
    dataset = io.read_dataset(args.data, actions=actions)
    basis = io.read_basis(args.basis) if args.basis else None
    if basis is None and any(np.asarray(tr.states[0]).ndim != 1 for tr in dataset.trajectories):
        raise DatasetError(f"{args.data}: raw point-set states need --basis")

    initial = _initial_state(args.initial_state) if args.initial_state else None
    if initial is None and args.initial_cost is not None:
        raise ConfigError("--initial-cost needs --initial-state")
    try:
        model = fit_koopman(dataset, basis, c_spec=_cost_spec(args.cost), horizon=args.horizon,
                            initial_state=initial, initial_cost=args.initial_cost)
    except ModelInvalidError as e:
        if initial is None:
            raise
        raise ConfigError(f"--initial-state does not lift to the fitted dimension: {e}")
    io.write_model(model, args.output)

    residuals = fit_residuals(dataset, basis, model.A)
    print(format_table([(label, fmt_float(r)) for label, r in zip(model.actions, residuals)],
                       ["action", "residual"]))
    print(f"n_psi: {model.n_psi}")
    print(f"wrote: {args.output}")
    return 0


def register_commands(subparsers) -> None:
    p = subparsers.add_parser("fit", help="fit A(u) per action from transitions")
    p.add_argument("--data", required=True, help="transitions, one JSON object per line")
    p.add_argument("--basis", help="RBF basis file; omit for pre-lifted data")
    p.add_argument("--actions", help="comma-separated action labels, in model order")
    p.add_argument("--horizon", type=int, default=1, help="horizon written into the model")
    p.add_argument("--cost", default="last", help="'last' or the lifted coordinate holding the cost")
    p.add_argument("--initial-state",
                   help="raw state psi1 is lifted from, as JSON (a point list with --basis); default: first row")
    p.add_argument("--initial-cost", type=float, help="cost observable appended to the initial state")
    p.add_argument("--output", required=True, help="model file to write")
    p.set_defaults(func=cmd_fit)

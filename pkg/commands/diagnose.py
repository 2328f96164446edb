# commands/diagnose.py
"""`diagnose`: balance, stationarity and mixing checks on an enumerable model."""

import logging

import numpy as np

from commands.common import count_arg
from commands.solve import load_model_flag
from diagnostics import (boltzmann, detailed_balance_residual, gibbs_kernel, global_balance_residual,
                         hoffman_bound, joint_boltzmann, mixing_time_bound, stationary_distribution,
                         sweep_kernel, tempering_kernel)
from errors import EnumerationRefused
from utils.text_utils import fmt_float, format_table

logger = logging.getLogger(__name__)


def check_beta(model, beta: float, cap, tol_detailed: float, tol_global: float):
    """Rows of (check, value, threshold, ok) for one temperature."""
    target = boltzmann(model, beta, cap).probs
    rows = []
    for t in range(model.horizon):
        r = detailed_balance_residual(gibbs_kernel(model, beta, t, cap), target)
        rows.append((f"beta={beta:g} detailed_balance[t={t}]", r, tol_detailed, r <= tol_detailed))

    P = sweep_kernel(model, beta, cap)
    r = global_balance_residual(P, target)
    rows.append((f"beta={beta:g} sweep_global_balance", r, tol_global, r <= tol_global))
    pi = stationary_distribution(P)
    r = float(np.abs(pi - target).sum())
    rows.append((f"beta={beta:g} stationary_vs_boltzmann", r, tol_global, r <= tol_global))

    lam, mixing = hoffman_bound(P)
    rows.append((f"beta={beta:g} hoffman_lambda", lam, None, True))
    rows.append((f"beta={beta:g} hoffman_mixing", mixing, None, True))
    rows.append((f"beta={beta:g} mixing_1_over_1_minus_lambda", mixing_time_bound(lam), None, True))
    if np.ptp(pi) <= 1e-12:
        logger.info("beta=%g: stationary distribution is uniform over %d sequences", beta, len(pi))
        rows.append((f"beta={beta:g} stationary_uniform", 1.0, None, True))
    return rows


def cmd_diagnose(args) -> int:
    _, model = load_model_flag(args, None)
    betas = args.beta or [2.0]
    rows = []
    for beta in betas:
        rows.extend(check_beta(model, beta, args.cap, args.tol_detailed, args.tol_global))

    if len(betas) > 1:
        try:
            K = tempering_kernel(model, betas, args.cap)
            r = global_balance_residual(K, joint_boltzmann(model, betas, args.cap))
            rows.append(("tempering_global_balance", r, args.tol_global, r <= args.tol_global))
        except EnumerationRefused as e:
            logger.warning("tempering kernel skipped: %s", e)

    table = [(name, fmt_float(value), "" if tol is None else fmt_float(tol), "ok" if ok else "FAIL")
             for name, value, tol, ok in rows]
    print(format_table(table, ["check", "value", "threshold", "status"]))
    failed = [name for name, _, _, ok in rows if not ok]
    if failed:
        logger.warning("%d checks failed: %s", len(failed), ", ".join(failed))
        return 1
    return 0


def register_commands(subparsers) -> None:
    p = subparsers.add_parser("diagnose", help="balance and mixing checks by enumeration")
    p.add_argument("--model", required=True, help="model file (JSON)")
    p.add_argument("--beta", type=float, action="append",
                   help="inverse temperature (repeat for a ladder; default 2)")
    p.add_argument("--cap", type=count_arg, default=None, help="refuse above this many sequences")
    p.add_argument("--tol-detailed", type=float, default=1e-12)
    p.add_argument("--tol-global", type=float, default=1e-10)
    p.set_defaults(func=cmd_diagnose)

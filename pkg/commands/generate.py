# commands/generate.py
"""`generate`: random models and synthetic datasets, so nothing needs external data."""

import numpy as np

from edmd import ObservableBasis
from errors import ConfigError
from synthetic import grid_centers, random_model, switched_linear_dataset, toy_particle_dataset
from utils import io


def cmd_generate(args) -> int:
    if args.toy:
        if not (args.data and args.basis):
            raise ConfigError("--toy writes a dataset and a basis: give --data and --basis")
        dataset = toy_particle_dataset(args.trajectories, args.length, seed=args.seed)
        io.write_dataset(dataset, args.data)
        io.write_basis(ObservableBasis(grid_centers(args.grid), lam=args.lam), args.basis)
        print(f"wrote: {args.data} ({dataset.transitions()} transitions)")
        print(f"wrote: {args.basis}")
        return 0

    if not args.output:
        raise ConfigError("--output is required")
    model = random_model(args.n_psi, args.horizon, args.actions, seed=args.seed,
                         spectral_radius=args.spectral_radius)
    io.write_model(model, args.output)
    print(f"wrote: {args.output}")
    if args.data:
        dataset = switched_linear_dataset(np.asarray(model.A), args.trajectories, args.length,
                                          seed=args.seed + 1, actions=model.actions)
        io.write_dataset(dataset, args.data)
        print(f"wrote: {args.data} ({dataset.transitions()} transitions)")
    return 0


def register_commands(subparsers) -> None:
    p = subparsers.add_parser("generate", help="write a random stable model or a synthetic dataset")
    p.add_argument("--n-psi", type=int, default=4)
    p.add_argument("--horizon", type=int, default=8)
    p.add_argument("--actions", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--spectral-radius", type=float, default=0.95)
    p.add_argument("--output", help="model file to write")
    p.add_argument("--data", help="also write transitions generated by the model (pre-lifted)")
    p.add_argument("--trajectories", type=int, default=20)
    p.add_argument("--length", type=int, default=10)
    p.add_argument("--toy", action="store_true", help="write the toy point-cloud dataset and an RBF basis")
    p.add_argument("--basis", help="basis file to write with --toy")
    p.add_argument("--grid", type=int, default=4, help="RBF centers per side for --toy")
    p.add_argument("--lam", type=float, default=20.0, help="RBF width for --toy")
    p.set_defaults(func=cmd_generate)

# commands/common.py
"""Flags and helpers shared by several subcommands."""

import logging
from pathlib import Path
from typing import Optional

import config
from errors import ConfigError
from solvers.tempering import TemperatureLadder, make_log_ladder
from utils import io

logger = logging.getLogger(__name__)


def add_seed_flags(parser, threads: bool = True) -> None:
    # None means "not given": the manifest or the environment fills it in
    parser.add_argument("--seed", type=int, default=None, help=f"random seed (default {config.SEED})")
    if threads:
        parser.add_argument("--threads", type=int, default=None,
                            help=f"worker threads (default KOOPTEMPER_THREADS={config.THREADS})")


def add_ladder_flags(parser) -> None:
    parser.add_argument("--temps", type=int, default=None, help=f"number of temperatures (default {config.TEMPS})")
    parser.add_argument("--beta-min", type=float, default=None, help=f"hottest beta (default {config.BETA_MIN})")
    parser.add_argument("--beta-max", type=float, default=None, help=f"coldest beta (default {config.BETA_MAX})")


def add_output_flags(parser) -> None:
    parser.add_argument("--output", help="trace file (CSV); a manifest is written next to it")
    parser.add_argument("--manifest", help="replay the settings of an earlier run")


def resolve(args, manifest: Optional[dict], key: str, default):
    """Explicit flag, then the replayed manifest, then the configured default."""
    value = getattr(args, key, None)
    if value is not None:
        return value
    if manifest is not None and key in manifest["settings"]:
        return manifest["settings"][key]
    return default


def load_manifest(args) -> Optional[dict]:
    if not getattr(args, "manifest", None):
        return None
    manifest = io.read_manifest(args.manifest)
    logger.info("replaying %s (%s, version %s)", args.manifest, manifest.get("command"), manifest.get("version"))
    return manifest


def make_ladder(beta_min: float, beta_max: float, temps: int) -> TemperatureLadder:
    """Log-spaced ladder; a single temperature runs plain Gibbs at beta_max."""
    if temps < 1:
        raise ConfigError(f"--temps must be >= 1, got {temps}")
    if temps == 1:
        if beta_min != beta_max:
            logger.warning("single temperature: using beta_max=%s, beta_min=%s ignored", beta_max, beta_min)
        return TemperatureLadder((beta_max,))
    return make_log_ladder(beta_min, beta_max, temps)


def manifest_path(output) -> Path:
    return Path(str(output) + ".manifest.json")


def finish_output(command: str, settings: dict, model, rows, output, manifest: Optional[dict]) -> Optional[str]:
    """Write the trace and its manifest; compare against a replayed manifest's digest."""
    if not output:
        return None
    digest = io.write_trace(rows, output)
    io.write_manifest(manifest_path(output), command, settings, model=model, output_digest=digest)
    logger.info("wrote %s (sha256 %s)", output, digest[:12])
    if manifest is not None and manifest.get("output_sha256"):
        if manifest["output_sha256"] == digest:
            logger.info("output reproduces the replayed run")
        else:
            logger.warning("output differs from the replayed run (%s != %s)",
                           digest[:12], manifest["output_sha256"][:12])
    return digest


def count_arg(value: str) -> int:
    """argparse type for counts, accepting integral floats such as 1e7."""
    try:
        return int(value)
    except ValueError:
        as_float = float(value)
        if not as_float.is_integer():
            raise ValueError(value)
        return int(as_float)

# config.py
"""Configuration settings for the solver and its command-line front end."""

import os
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables from .env file
env_path = Path(__file__).parent / '.env'
load_dotenv(dotenv_path=env_path)

VERSION = "0.3.0"


def get_bool_env(key: str, default: bool = False) -> bool:
    """Get boolean from environment variable. Accepts 'true', 'True', 'TRUE', '1', etc."""
    value = os.getenv(key, str(default))
    return value.lower() in ("true", "1", "yes", "on")


def get_int_env(key: str, default: int) -> int:
    """Get integer from environment variable. Accepts plain digits or integral floats like '1e7'."""
    value = os.getenv(key)
    if value is None or value.strip() == "":
        return default
    try:
        return int(value)
    except ValueError:
        try:
            as_float = float(value)
        except ValueError:
            raise ValueError(f"{key} must be an integer, got {value!r}")
        if not as_float.is_integer():
            raise ValueError(f"{key} must be an integer, got {value!r}")
        return int(as_float)


def get_float_env(key: str, default: float) -> float:
    """Get float from environment variable."""
    value = os.getenv(key)
    if value is None or value.strip() == "":
        return default
    try:
        return float(value)
    except ValueError:
        raise ValueError(f"{key} must be a number, got {value!r}")


# === Engine ===
# Worker threads for the replica sweeps. The --threads flag overrides it.
THREADS = get_int_env("KOOPTEMPER_THREADS", 1)
SEED = get_int_env("KOOPTEMPER_SEED", 0)
PROGRESS = get_bool_env("KOOPTEMPER_PROGRESS", False)
LOG_LEVEL = os.getenv("KOOPTEMPER_LOG_LEVEL", "INFO").upper()

# === Tempering ===
# The typical run in the source material uses 12 log-spaced temperatures; the
# ladder bounds are not reported there, so these are our defaults.
BETA_MIN = get_float_env("KOOPTEMPER_BETA_MIN", 0.5)
BETA_MAX = get_float_env("KOOPTEMPER_BETA_MAX", 50.0)
TEMPS = get_int_env("KOOPTEMPER_TEMPS", 12)
SWEEPS = get_int_env("KOOPTEMPER_SWEEPS", 1000)
TRACE_EVERY = get_int_env("KOOPTEMPER_TRACE_EVERY", 1)

# === Enumeration (diagnostics / oracle) ===
ENUMERATION_CAP = get_int_env("KOOPTEMPER_ENUMERATION_CAP", 10**7)
# Dense transition matrices are |states| x |states|; above this we refuse.
DENSE_STATE_CAP = get_int_env("KOOPTEMPER_DENSE_STATE_CAP", 4096)

# === Relaxation baseline ===
ETA = get_float_env("KOOPTEMPER_ETA", 0.5)
ITERATIONS = get_int_env("KOOPTEMPER_ITERATIONS", 200)

# === Genetic baseline ===
POPULATION = get_int_env("KOOPTEMPER_POPULATION", 50)
SELECTION_MU = get_int_env("KOOPTEMPER_SELECTION_MU", 2)
MUTATION_RATE = get_float_env("KOOPTEMPER_MUTATION_RATE", 0.10)
GENE_MUTATION_PROB = get_float_env("KOOPTEMPER_GENE_MUTATION_PROB", 0.05)
GENERATIONS = get_int_env("KOOPTEMPER_GENERATIONS", 200)

# === Tests ===
RUN_FULL_SCALE = get_bool_env("KOOPTEMPER_RUN_FULL_SCALE", False)

if THREADS < 1:
    raise ValueError("KOOPTEMPER_THREADS must be >= 1")

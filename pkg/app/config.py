"""
Environment-driven defaults shared by the library and the command line.
"""

import os
import logging
from dotenv import load_dotenv

load_dotenv()
# Configuration from environment
DEFAULT_SEED = 20240611  # used when CASIMIR_SEED is unset
MC_SAMPLES = int(os.getenv("CASIMIR_MC_SAMPLES", "1000000"))
MC_BATCH = int(os.getenv("CASIMIR_MC_BATCH", "100000"))
WORKERS = int(os.getenv("CASIMIR_WORKERS", "1"))
LOG_LEVEL = os.getenv("CASIMIR_LOG_LEVEL", "WARNING").upper()


def seed_from_env(default: int = DEFAULT_SEED) -> int:
    """CASIMIR_SEED read at call time; a malformed value is a ValueError"""
    raw = os.getenv("CASIMIR_SEED")
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"CASIMIR_SEED must be an integer, got {raw!r}")


def configure_logging(verbose: bool = False) -> None:
    """Send library logs to stderr so stdout stays machine-readable"""
    level = logging.DEBUG if verbose else getattr(logging, LOG_LEVEL, logging.WARNING)
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s %(message)s",
    )

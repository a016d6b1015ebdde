"""Centralized configuration for the psa tools.

All settings live here so they can be overridden by environment variables or a
``.env`` file without touching source code.

Usage::

    from psa.config import TOL_RESIDUAL, get_threads

    cfg = DescentConfig(tol_residual=TOL_RESIDUAL)
"""

from __future__ import annotations

import logging
import os

from dotenv import load_dotenv

# Load .env from current working directory
load_dotenv()

LOGGER = logging.getLogger(__name__)


def _env(key: str, fallback: str = "") -> str:
    """Read an env var, falling back to *fallback*."""
    return os.getenv(key, fallback)


def _env_float(key: str, fallback: float) -> float:
    raw = _env(key).strip()
    if not raw:
        return fallback
    try:
        return float(raw)
    except ValueError:
        LOGGER.warning("Unparseable %s=%r, falling back to %g.", key, raw, fallback)
        return fallback


def _env_int(key: str, fallback: int) -> int:
    raw = _env(key).strip()
    if not raw:
        return fallback
    try:
        return int(raw)
    except ValueError:
        LOGGER.warning("Unparseable %s=%r, falling back to %d.", key, raw, fallback)
        return fallback


# ── Descent tolerances ───────────────────────────────────────────────────────
TOL_RESIDUAL: float = _env_float("PSA_TOL_RESIDUAL", 1e-8)
TOL_DISCRIMINANT: float = _env_float("PSA_TOL_DISCRIMINANT", 1e-10)
TOL_DEDUPE: float = _env_float("PSA_TOL_DEDUPE", 1e-7)
MAX_SOLUTIONS: int = _env_int("PSA_MAX_SOLUTIONS", 1024)

# ── Grids ────────────────────────────────────────────────────────────────────
# Gauss nodes used for CSV grids when --nodes is not given.
DEFAULT_NODES: int = _env_int("PSA_NODES", 64)

# ── Run log ──────────────────────────────────────────────────────────────────
# Append-only JSONL of every CLI run. Empty string disables it.
RUN_LOG: str = _env("PSA_RUN_LOG", ".run_log.jsonl").strip()


def get_threads() -> int:
    """Worker cap for internal parallelism (``PSA_THREADS``, 0 = all cores).

    Read at call time so the CLI and tests can override it per run.
    """
    threads = _env_int("PSA_THREADS", 0)
    if threads <= 0:
        return os.cpu_count() or 1
    return threads

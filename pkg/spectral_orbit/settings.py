"""Environment-driven defaults.

Environment (.env):
  SPECTRAL_ORBIT_THREADS       worker cap for flow grids (default 1)
  SPECTRAL_ORBIT_SEED          default seed for random instances (default 42)
  SPECTRAL_ORBIT_OUT_DIR       base directory for relative --out paths
  SPECTRAL_ORBIT_TOL_THETA     |theta| / row-norm product below which a point counts as on Θ
  SPECTRAL_ORBIT_TOL_FRAME     frame residual tolerance (unitarity, reality, char poly)
  SPECTRAL_ORBIT_TOL_HITCHIN   Hitchin identity residual tolerance
  SPECTRAL_ORBIT_TOL_ODE       ODE vs algebraic flow tolerance
  SPECTRAL_ORBIT_QUIET         true → no progress messages on stderr
"""
from __future__ import annotations
import os, sys
from typing import Optional
from dotenv import load_dotenv

load_dotenv()


def env_truthy(name: str, default: bool = False) -> bool:
    v = os.getenv(name)
    if v is None:
        return default
    return v.strip().lower() in ("1", "true", "yes", "y", "on")


THREADS      = max(1, int(os.getenv("SPECTRAL_ORBIT_THREADS", "1")))
DEFAULT_SEED = int(os.getenv("SPECTRAL_ORBIT_SEED", "42"))
OUT_DIR      = os.getenv("SPECTRAL_ORBIT_OUT_DIR", "")
TOL_THETA    = float(os.getenv("SPECTRAL_ORBIT_TOL_THETA", "1e-12"))
TOL_FRAME    = float(os.getenv("SPECTRAL_ORBIT_TOL_FRAME", "1e-9"))
TOL_HITCHIN  = float(os.getenv("SPECTRAL_ORBIT_TOL_HITCHIN", "1e-7"))
TOL_ODE      = float(os.getenv("SPECTRAL_ORBIT_TOL_ODE", "1e-6"))
DEFAULT_STEP = 1e-3


def worker_count(requested: Optional[int] = None) -> int:
    """Threads to use, never above SPECTRAL_ORBIT_THREADS (read at call time)."""
    cap = max(1, int(os.getenv("SPECTRAL_ORBIT_THREADS", str(THREADS))))
    if requested is None:
        return cap
    return max(1, min(int(requested), cap))


def log(msg: str) -> None:
    if env_truthy("SPECTRAL_ORBIT_QUIET", False):
        return
    print(msg, file=sys.stderr, flush=True)

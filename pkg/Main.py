# Main.py
from __future__ import annotations
import os, sys, argparse
from typing import List
from dotenv import load_dotenv

# Ensure local imports work when run from anywhere
PROJECT_ROOT = os.path.dirname(os.path.abspath(__file__))
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

load_dotenv()

# --- Project modules ---
from spectral_orbit import settings
from spectral_orbit.cli_harness import COMMANDS, FORMATS, RunConfig, run
from spectral_orbit.selftest import Tolerances


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="Main.py",
        description="Spectral curves, theta functions and Nahm flows for adjoint-orbit hyperkähler metrics.",
    )
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--curve", help="curve JSON: {\"k\", \"points\": [{\"x\", \"z\": [re, im]}]}")
    ap.add_argument("--gluing", help="gluing JSON: {\"ratios\": [{\"i\", \"j\", \"re\", \"im\"}]} (1-based)")
    ap.add_argument("--p", type=int, default=1)
    ap.add_argument("--q", type=int, default=0)
    ap.add_argument("--t0", type=float, default=0.0)
    ap.add_argument("--t1", type=float, default=2.0)
    ap.add_argument("--steps", type=int, default=20)
    ap.add_argument("--h", type=float, default=settings.DEFAULT_STEP, help="RK4 step for nahm-ode")
    ap.add_argument("--tol-theta", type=float, default=settings.TOL_THETA)
    ap.add_argument("--tol-frame", type=float, default=settings.TOL_FRAME)
    ap.add_argument("--tol-hitchin", type=float, default=settings.TOL_HITCHIN)
    ap.add_argument("--tol-ode", type=float, default=settings.TOL_ODE)
    ap.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)
    ap.add_argument("--format", dest="fmt", choices=FORMATS, default=None,
                    help="json everywhere; csv for flow (its default)")
    ap.add_argument("--out", default=None, help="write here instead of stdout")
    ap.add_argument("--threads", type=int, default=None,
                    help="worker threads for flow grids (capped by SPECTRAL_ORBIT_THREADS)")
    return ap


def config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        curve=args.curve,
        gluing=args.gluing,
        p=args.p,
        q=args.q,
        t0=args.t0,
        t1=args.t1,
        steps=args.steps,
        h=args.h,
        tol=Tolerances(theta=args.tol_theta, frame=args.tol_frame, hitchin=args.tol_hitchin, ode=args.tol_ode),
        seed=args.seed,
        fmt=args.fmt,
        out=args.out,
        threads=args.threads,
    )


def main(argv: List[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    config = config_from_args(args)
    settings.log(f"🔧 {args.command}: seed={config.seed} threads={settings.worker_count(config.threads)}")
    return run(args.command, config)


if __name__ == "__main__":
    try:
        raise SystemExit(main())
    except KeyboardInterrupt:
        print("⚠️  Interrupted.", file=sys.stderr)
        raise SystemExit(130)

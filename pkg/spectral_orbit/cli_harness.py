"""Command dispatch for Main.py.

``run(command, config, stream)`` writes JSON (or CSV for ``flow``) to the
stream or to ``config.out`` and returns the exit code: 0 ok, 1 validation
error, 2 numerical failure, 3 selftest tolerance breach.
"""
from __future__ import annotations
import json
import sys
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import IO, Dict, Iterator, List, Optional

from . import settings
from .beauville_frames import frame_checks, polynomial_from_frame, unitary_frame
from .curve_core import IntersectionTable, validate_curve
from .errors import MalformedInput, SpectralOrbitError
from .io_formats import (
    FLOW_CSV_HEADER, curve_to_dict, frame_to_dict, load_curve, load_gluing, pair, point_to_dict,
    polynomial_to_dict, resolve_out, table_to_dict, write_csv, write_json,
)
from .jacobian_sections import is_definite
from .kahler_potential import eguchi_hanson_from_frame, hitchin_residual, kahler_potential
from .nahm_flow import compare_flows, flow_sample, flow_trace, integrate_nahm
from .selftest import Tolerances, run_selftest
from .theta_engine import JacobianPoint, build_xi, row_scale, theta_flow_derivatives, theta_pq

COMMANDS = ("curve", "theta", "frame", "flow", "nahm-ode", "potential", "selftest")
FORMATS = ("json", "csv")


@dataclass
class RunConfig:
    curve: Optional[str] = None
    gluing: Optional[str] = None
    p: int = 1
    q: int = 0
    t0: float = 0.0
    t1: float = 2.0
    steps: int = 20
    h: float = settings.DEFAULT_STEP
    tol: Tolerances = field(default_factory=Tolerances)
    seed: int = settings.DEFAULT_SEED
    fmt: Optional[str] = None
    out: Optional[str] = None
    threads: Optional[int] = None

    def grid(self) -> List[float]:
        if self.steps < 1:
            raise MalformedInput(f"--steps must be >= 1, got {self.steps}")
        return [self.t0 + j * (self.t1 - self.t0) / self.steps for j in range(self.steps + 1)]

    def output_format(self, command: str) -> str:
        fmt = self.fmt or ("csv" if command == "flow" else "json")
        if fmt not in FORMATS:
            raise MalformedInput(f"unknown format {fmt!r}")
        if fmt == "csv" and command != "flow":
            raise MalformedInput(f"csv output is only available for 'flow', not {command!r}")
        return fmt


# ---------- helpers ----------
def _need(value: Optional[str], flag: str, command: str) -> str:
    if not value:
        raise MalformedInput(f"'{command}' needs {flag}")
    return value


def _load_table(config: RunConfig, command: str) -> IntersectionTable:
    table = validate_curve(load_curve(_need(config.curve, "--curve", command)))
    settings.log(f"🔧 curve k={table.k}, genus {table.spec.genus}")
    return table


def _load_point(config: RunConfig, table: IntersectionTable, command: str) -> JacobianPoint:
    return load_gluing(_need(config.gluing, "--gluing", command), table.k)


@contextmanager
def _sink(config: RunConfig, stream: IO[str]) -> Iterator[IO[str]]:
    if not config.out:
        yield stream
        return
    path = resolve_out(config.out, settings.OUT_DIR)
    try:
        f = open(path, "w", encoding="utf-8", newline="")
    except OSError as e:
        raise MalformedInput(f"cannot write {path}: {e}")
    with f:
        yield f
    settings.log(f"✅ wrote {path}")


# ---------- commands ----------
def cmd_curve(config: RunConfig) -> Dict:
    table = _load_table(config, "curve")
    out = curve_to_dict(table.spec)
    out.update(table_to_dict(table))
    return out


def cmd_theta(config: RunConfig) -> Dict:
    table = _load_table(config, "theta")
    pt = _load_point(config, table, "theta")
    value = theta_pq(table, pt, config.p, config.q)
    scale = row_scale(build_xi(table, pt.gluing()))
    out: Dict = {
        "p": config.p,
        "q": config.q,
        "theta": pair(value),
        "relative": abs(value) / scale,
        "point": point_to_dict(pt),
        "definite": is_definite(table, pt).as_dict(),
    }
    try:
        theta, dlog, d2log = theta_flow_derivatives(table, pt, config.t0, config.tol.theta)
        out["flow"] = {"t": config.t0, "theta_1_0": pair(theta), "dlog": pair(dlog), "d2log": pair(d2log)}
    except SpectralOrbitError as e:
        out["flow"] = e.to_dict(one_based=True)
    return out


def cmd_frame(config: RunConfig) -> Dict:
    table = _load_table(config, "frame")
    pt = _load_point(config, table, "frame")
    frame = unitary_frame(table, pt)
    poly = polynomial_from_frame(table.spec, frame)
    report = frame_checks(table.spec, table, frame, poly)
    if not report.passed(config.tol.frame):
        settings.log(f"⚠️  frame residual {report.worst():.2e} above {config.tol.frame:g}")
    return {
        "point": point_to_dict(pt),
        "polynomial": polynomial_to_dict(poly),
        "report": report.as_dict(config.tol.frame),
        "frame": frame_to_dict(frame),
    }


def flow_rows(config: RunConfig) -> List[List[float]]:
    table = _load_table(config, "flow")
    pt = _load_point(config, table, "flow")
    settings.log(f"🧮 flow over {config.steps + 1} grid points")
    samples = flow_trace(table.spec, table, pt, config.grid(), config.tol.theta, max_workers=config.threads)
    rows = []
    for s in samples:
        res = hitchin_residual(table.spec, table, pt, s.t, config.tol.theta, poly=s.A)
        rows.append([
            s.t,
            s.trT1sq.real, s.trT1sq.imag, s.trT2sq.real, s.trT2sq.imag, s.trT3sq.real, s.trT3sq.imag,
            s.theta.real, s.theta.imag, s.dlog.real, s.d2log.real, abs(res.res_global),
        ])
    return rows


def cmd_nahm_ode(config: RunConfig) -> Dict:
    table = _load_table(config, "nahm-ode")
    pt = _load_point(config, table, "nahm-ode")
    grid = config.grid()
    start = flow_sample(table.spec, table, pt, config.t0, config.tol.theta)
    settings.log(f"🧮 RK4 from t={config.t0} to t={config.t1}, h={config.h:g}")
    traj = integrate_nahm(*start.A.nahm_matrices(), t_end=config.t1, h=config.h, t_start=config.t0)
    samples = flow_trace(table.spec, table, pt, grid, config.tol.theta, max_workers=config.threads)
    comparison = compare_flows(traj, samples)
    out = comparison.as_dict()
    out.update({
        "h": config.h,
        "tolerance": config.tol.ode,
        "passed": comparison.max_delta < config.tol.ode,
        "invariant_drift": traj.invariant_drift(),
        "skew_drift": traj.skew_drift(),
    })
    return out


def cmd_potential(config: RunConfig) -> Dict:
    table = _load_table(config, "potential")
    pt = _load_point(config, table, "potential")
    out: Dict = {"K": kahler_potential(table.spec, table, pt, config.tol.theta)}
    if table.k == 2:
        poly = polynomial_from_frame(table.spec, unitary_frame(table, pt))
        f, k_closed = eguchi_hanson_from_frame(table.spec, poly)
        out["K_closed_form"] = k_closed
        out["f_closed_form"] = f
    return out


def cmd_selftest(config: RunConfig, sink: IO[str]) -> int:
    results = run_selftest(config.seed, config.tol)
    for r in results:
        sink.write(json.dumps(r.as_dict(), ensure_ascii=False) + "\n")
    failed = [r.name for r in results if not r.passed]
    if failed:
        settings.log(f"❌ selftest failures: {', '.join(failed)}")
        return 3
    settings.log(f"✅ selftest: {len(results)} checks passed")
    return 0


JSON_COMMANDS = {
    "curve": cmd_curve,
    "theta": cmd_theta,
    "frame": cmd_frame,
    "nahm-ode": cmd_nahm_ode,
    "potential": cmd_potential,
}


def run(command: str, config: RunConfig, stream: Optional[IO[str]] = None) -> int:
    stream = stream or sys.stdout
    try:
        if command not in COMMANDS:
            raise MalformedInput(f"unknown command {command!r}; expected one of {', '.join(COMMANDS)}")
        fmt = config.output_format(command)
        if command == "selftest":
            with _sink(config, stream) as sink:
                return cmd_selftest(config, sink)
        if command == "flow":
            rows = flow_rows(config)
            with _sink(config, stream) as sink:
                if fmt == "csv":
                    write_csv(FLOW_CSV_HEADER, rows, sink)
                else:
                    write_json({"columns": FLOW_CSV_HEADER, "rows": rows}, sink)
            return 0
        report = JSON_COMMANDS[command](config)
        with _sink(config, stream) as sink:
            write_json(report, sink)
        return 0
    except SpectralOrbitError as e:
        settings.log(f"❌ {e.name}: {e}")
        write_json(e.to_dict(one_based=True), stream)
        return e.exit_code

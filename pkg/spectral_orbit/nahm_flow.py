"""The linear flow on the Jacobian and the Nahm equations.

Two independent routes to T_i(t): the algebraic one (flow the Jacobian
point, rebuild a unitary frame, read off A(t, ζ)) and a direct RK4
integration of Ṫ₁ = −[T₂, T₃] and cyclic.  They differ by a t-dependent
unitary gauge, so they are compared through traces and spectra only.
"""
from __future__ import annotations
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import settings
from .beauville_frames import MatricialPolynomial, polynomial_from_frame, unitary_frame
from .curve_core import CurveSpec, IntersectionTable
from .errors import BlowUp, GridMismatch, MalformedInput
from .theta_engine import EPS_THETA, JacobianPoint, flowed_ratios, theta_flow_derivatives

SKEW_TOL = 1e-10
BLOWUP_FACTOR = 1e6
GRID_TOL = 1e-9
DEFAULT_ZETAS = (0.3 + 0.4j, -0.5 + 0.2j, 0.7 - 0.6j)


def flow_point(table: IntersectionTable, pt: JacobianPoint, t: float) -> JacobianPoint:
    return JacobianPoint.from_ratios(flowed_ratios(table, pt.ratios, t))


@dataclass(frozen=True, eq=False)
class FlowSample:
    t: float
    point: JacobianPoint
    A: MatricialPolynomial
    trT1sq: complex
    trT2sq: complex
    trT3sq: complex
    theta: complex
    dlog: complex
    d2log: complex

    def trace_squares(self) -> np.ndarray:
        return np.array([self.trT1sq, self.trT2sq, self.trT3sq])


def trace_squares(a: MatricialPolynomial) -> Tuple[complex, complex, complex]:
    return tuple(complex(np.trace(t @ t)) for t in a.nahm_matrices())


def flow_sample(spec: CurveSpec, table: IntersectionTable, pt: JacobianPoint, t: float,
                eps_theta: float = EPS_THETA) -> FlowSample:
    theta, dlog, d2log = theta_flow_derivatives(table, pt, t, eps_theta)
    moved = flow_point(table, pt, t)
    a = polynomial_from_frame(spec, unitary_frame(table, moved))
    t1, t2, t3 = trace_squares(a)
    return FlowSample(t=float(t), point=moved, A=a, trT1sq=t1, trT2sq=t2, trT3sq=t3,
                      theta=theta, dlog=dlog, d2log=d2log)


def flow_trace(spec: CurveSpec, table: IntersectionTable, pt: JacobianPoint, t_grid: Sequence[float],
               eps_theta: float = EPS_THETA, max_workers: Optional[int] = None) -> List[FlowSample]:
    """One independent sample per grid point; output follows the grid order."""
    grid = [float(t) for t in t_grid]
    workers = settings.worker_count(max_workers)
    if workers <= 1 or len(grid) <= 1:
        return [flow_sample(spec, table, pt, t, eps_theta) for t in grid]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda t: flow_sample(spec, table, pt, t, eps_theta), grid))


# ---------- Nahm equations ----------
def _bracket(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def _skew(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m - m.conj().T)


def nahm_rhs(t1: np.ndarray, t2: np.ndarray, t3: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    return (_skew(-_bracket(t2, t3)),
            _skew(-_bracket(t3, t1)),
            _skew(-_bracket(t1, t2)))


def lax_rhs(a: MatricialPolynomial, connection: str = "metric") -> MatricialPolynomial:
    """dA/dt = [A, ½A₁ + A₂ζ] (metric) or [A, A₂ζ] (evaluation), coefficientwise."""
    a0, a1, a2 = a.A0, a.A1, a.A2
    if connection == "metric":
        return MatricialPolynomial(0.5 * _bracket(a0, a1), _bracket(a0, a2), 0.5 * _bracket(a1, a2))
    if connection == "evaluation":
        return MatricialPolynomial(np.zeros_like(a0), _bracket(a0, a2), _bracket(a1, a2))
    raise MalformedInput(f"unknown connection {connection!r}; use 'metric' or 'evaluation'")


def _is_skew(m: np.ndarray) -> bool:
    return float(np.abs(m + m.conj().T).max()) <= SKEW_TOL * max(1.0, float(np.abs(m).max()))


def _spectral_invariants(t: np.ndarray, zetas: Sequence[complex]) -> np.ndarray:
    """tr A(ζ_s)^m for m = 1..k at each sample ζ_s."""
    a = MatricialPolynomial.from_nahm(*t)
    k = a.k
    out = np.zeros((len(zetas), k), dtype=complex)
    for s, zeta in enumerate(zetas):
        m = a.evaluate(zeta)
        power = np.eye(k, dtype=complex)
        for p in range(k):
            power = power @ m
            out[s, p] = np.trace(power)
    return out


@dataclass(frozen=True, eq=False)
class NahmTrajectory:
    times: np.ndarray          # (n,)
    T: np.ndarray              # (n, 3, k, k)
    h: float
    zetas: Tuple[complex, ...] = DEFAULT_ZETAS
    invariants: np.ndarray = field(default=None)   # (n, len(zetas), k)

    @property
    def k(self) -> int:
        return self.T.shape[-1]

    def trace_squares(self) -> np.ndarray:
        """(n, 3) array of tr T_i²."""
        return np.einsum("nijk,nikj->ni", self.T, self.T)

    def polynomial(self, idx: int) -> MatricialPolynomial:
        return MatricialPolynomial.from_nahm(*self.T[idx])

    def invariant_drift(self) -> float:
        ref = self.invariants[0]
        scale = np.maximum(1.0, np.abs(ref))
        return float((np.abs(self.invariants - ref) / scale).max())

    def skew_drift(self) -> float:
        return float(np.abs(self.T + np.conj(np.swapaxes(self.T, -1, -2))).max())


def _rk4_step(state: np.ndarray, h: float) -> np.ndarray:
    def f(s):
        return np.stack(nahm_rhs(s[0], s[1], s[2]))

    k1 = f(state)
    k2 = f(state + 0.5 * h * k1)
    k3 = f(state + 0.5 * h * k2)
    k4 = f(state + h * k3)
    nxt = state + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return 0.5 * (nxt - np.conj(np.swapaxes(nxt, -1, -2)))


def integrate_nahm(t10, t20, t30, t_end: float, h: float = settings.DEFAULT_STEP, t_start: float = 0.0,
                   zetas: Sequence[complex] = DEFAULT_ZETAS) -> NahmTrajectory:
    """Fixed-step RK4 from t_start to t_end; the last step is shortened to land on t_end."""
    state = np.stack([np.array(m, dtype=complex) for m in (t10, t20, t30)])
    if state.ndim != 3 or state.shape[1] != state.shape[2]:
        raise MalformedInput(f"initial data must be three square matrices, got shape {state.shape}")
    for i in range(3):
        if not _is_skew(state[i]):
            raise MalformedInput(f"T{i + 1}(0) is not skew-hermitian", (i,))
    if not h > 0:
        raise MalformedInput(f"step h must be positive, got {h}")
    if t_end < t_start:
        raise MalformedInput(f"t_end={t_end} precedes t_start={t_start}")

    zetas = tuple(complex(z) for z in zetas)
    limit = BLOWUP_FACTOR * max(float(np.abs(state).max()), 1.0)
    n_steps = int(np.ceil((t_end - t_start) / h - 1e-9))
    times = [t_start]
    states = [state]
    t = t_start
    for step in range(n_steps):
        dt = min(h, t_end - t)
        state = _rk4_step(state, dt)
        t = t_start + (step + 1) * h if step + 1 < n_steps else t_end
        if not np.all(np.isfinite(state)) or np.abs(state).max() > limit:
            raise BlowUp(f"‖T‖ exceeded {limit:.2e} at t={t}", (t,))
        times.append(t)
        states.append(state)
    traj_T = np.stack(states)
    invariants = np.stack([_spectral_invariants(s, zetas) for s in traj_T])
    return NahmTrajectory(times=np.array(times), T=traj_T, h=float(h), zetas=zetas, invariants=invariants)


# ---------- comparison ----------
@dataclass(frozen=True)
class FlowComparison:
    times: Tuple[float, ...]
    trace_deltas: Tuple[float, ...]       # per t, max_i |tr T_i²(ODE) − tr T_i²(alg)|
    spectral_deltas: Tuple[float, ...]    # per t, max over sample ζ of char-poly coefficient gaps
    max_delta: float
    argmax_t: float

    def as_dict(self) -> Dict:
        return {
            "max_delta": self.max_delta,
            "argmax_t": self.argmax_t,
            "rows": [{"t": t, "trace_delta": d, "spectral_delta": s}
                     for t, d, s in zip(self.times, self.trace_deltas, self.spectral_deltas)],
        }


def _grid_index(times: np.ndarray, t: float) -> int:
    idx = int(np.argmin(np.abs(times - t)))
    if abs(times[idx] - t) > GRID_TOL * max(1.0, abs(t)):
        raise GridMismatch(f"t={t} is not on the trajectory grid", (t,))
    return idx


def compare_flows(traj: NahmTrajectory, samples: Sequence[FlowSample]) -> FlowComparison:
    if not samples:
        raise GridMismatch("no samples to compare")
    times, trace_d, spectral_d = [], [], []
    traces = traj.trace_squares()
    for sample in samples:
        idx = _grid_index(traj.times, sample.t)
        ode = traj.polynomial(idx)
        if ode.k != sample.A.k:
            raise GridMismatch(f"trajectory has k={ode.k}, sample has k={sample.A.k}", (sample.t,))
        trace_d.append(float(np.abs(traces[idx] - sample.trace_squares()).max()))
        gap = max(float(np.abs(ode.charpoly(z) - sample.A.charpoly(z)).max()) for z in traj.zetas)
        spectral_d.append(gap)
        times.append(sample.t)
    worst = [max(a, b) for a, b in zip(trace_d, spectral_d)]
    arg = int(np.argmax(worst))
    return FlowComparison(times=tuple(times), trace_deltas=tuple(trace_d), spectral_deltas=tuple(spectral_d),
                          max_delta=worst[arg], argmax_t=times[arg])


def compare_trajectories(a: NahmTrajectory, b: NahmTrajectory) -> FlowComparison:
    """ODE vs ODE on a shared grid (self-comparison and step-halving checks)."""
    samples = []
    traces = a.trace_squares()
    for idx, t in enumerate(a.times):
        poly = a.polynomial(idx)
        t1, t2, t3 = (complex(v) for v in traces[idx])
        samples.append(FlowSample(t=float(t), point=None, A=poly, trT1sq=t1, trT2sq=t2, trT3sq=t3,
                                  theta=np.nan, dlog=np.nan, d2log=np.nan))
    return compare_flows(b, samples)

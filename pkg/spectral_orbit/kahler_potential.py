"""Δ, the Hitchin identity, the Kähler potential and the Eguchi–Hanson case."""
from __future__ import annotations
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.integrate import simpson

from .beauville_frames import MatricialPolynomial, polynomial_from_frame, unitary_frame
from .curve_core import CurveSpec, IntersectionTable
from .errors import DomainError, NegativePotential, NonzeroMass, NotPositive, NotReal
from .jacobian_sections import Verdict, is_definite
from .nahm_flow import flow_point, flow_trace, trace_squares
from .theta_engine import EPS_THETA, JacobianPoint, theta_flow_derivatives

IMAG_RTOL = 1e-10
MASS_TOL = 0.0
QUADRATURE_T_MAX = 20.0
QUADRATURE_POINTS = 401


@dataclass(frozen=True, eq=False)
class OrbitParameters:
    tau1: np.ndarray
    tau2: np.ndarray
    tau3: np.ndarray

    @classmethod
    def from_curve(cls, spec: CurveSpec) -> "OrbitParameters":
        z = spec.z
        return cls(tau1=np.diag(-1j * spec.x),
                   tau2=np.diag(1j * z.imag),
                   tau3=np.diag(-1j * z.real))

    def trace_squares(self) -> Tuple[float, float, float]:
        return tuple(float(np.trace(t @ t).real) for t in (self.tau1, self.tau2, self.tau3))

    def total(self) -> float:
        return float(sum(self.trace_squares()))

    def tau_zeta(self, zeta: complex) -> np.ndarray:
        """diag(η_i(ζ)) = (τ₂ + iτ₃) + 2iτ₁ζ + (τ₂ − iτ₃)ζ²."""
        poly = MatricialPolynomial.from_nahm(self.tau1, self.tau2, self.tau3)
        return poly.evaluate(zeta)


def delta(a: MatricialPolynomial) -> complex:
    return complex(np.trace(a.A0 @ a.A2 - 0.25 * (a.A1 @ a.A1)))


@dataclass(frozen=True)
class HitchinResidual:
    t: float
    res_global: complex
    res_i: Tuple[complex, complex, complex]

    def worst(self) -> float:
        return max(abs(self.res_global), *(abs(r) for r in self.res_i))

    def as_dict(self) -> Dict:
        return {
            "t": self.t,
            "res_global": [self.res_global.real, self.res_global.imag],
            "res_i": [[r.real, r.imag] for r in self.res_i],
        }


def hitchin_residual(spec: CurveSpec, table: IntersectionTable, pt: JacobianPoint, t: float,
                     eps_theta: float = EPS_THETA, poly: Optional[MatricialPolynomial] = None) -> HitchinResidual:
    _, _, d2log = theta_flow_derivatives(table, pt, t, eps_theta)
    if poly is None:
        poly = polynomial_from_frame(spec, unitary_frame(table, flow_point(table, pt, t)))
    tau = OrbitParameters.from_curve(spec)
    traces = trace_squares(poly)
    res_i = tuple(complex(tr - ti - 0.5 * d2log) for tr, ti in zip(traces, tau.trace_squares()))
    res_global = complex(delta(poly) - tau.total() - 1.5 * d2log)
    return HitchinResidual(t=float(t), res_global=res_global, res_i=res_i)


def _require_massless(spec: CurveSpec) -> None:
    massive = [i for i, x in enumerate(spec.x) if abs(x) > MASS_TOL]
    if massive:
        raise NonzeroMass(f"x_i ≠ 0 for components {massive}; the potential needs τ₁ = 0", tuple(massive))


def _require_positive(table: IntersectionTable, pt: JacobianPoint) -> None:
    report = is_definite(table, pt)
    if report.verdict is Verdict.NOT_REAL:
        raise NotReal("the point has no real representative")
    if report.verdict is not Verdict.POSITIVE:
        raise NotPositive(f"hermitian form is {report.verdict.value}", report.non_positive())


def kahler_potential(spec: CurveSpec, table: IntersectionTable, pt: JacobianPoint,
                     eps_theta: float = EPS_THETA) -> float:
    """K = ½ d/dt log θ_{1,0} at t = 0."""
    _require_massless(spec)
    _require_positive(table, pt)
    _, dlog, _ = theta_flow_derivatives(table, pt, 0.0, eps_theta)
    k_value = 0.5 * dlog
    if abs(k_value.imag) > IMAG_RTOL * abs(k_value):
        raise NotReal(f"K has imaginary part {k_value.imag:.3e} (|K| = {abs(k_value):.3e})")
    if k_value.real < 0:
        raise NegativePotential(f"K = {k_value.real:.6g} < 0 on the flow component")
    return float(k_value.real)


def kahler_potential_quadrature(spec: CurveSpec, table: IntersectionTable, pt: JacobianPoint,
                                t_max: float = QUADRATURE_T_MAX, points: int = QUADRATURE_POINTS,
                                max_workers: Optional[int] = None) -> float:
    """K = −½ ∫₀^∞ tr(T₁² + T₂² − τ₂²) dt, truncated at t_max."""
    _require_massless(spec)
    _require_positive(table, pt)
    grid = np.linspace(0.0, t_max, points)
    samples = flow_trace(spec, table, pt, grid, max_workers=max_workers)
    tau2 = OrbitParameters.from_curve(spec).trace_squares()[1]
    integrand = np.array([(s.trT1sq + s.trT2sq).real - tau2 for s in samples])
    return float(-0.5 * simpson(integrand, x=grid))


# ---------- Eguchi–Hanson ----------
def eguchi_hanson_reference(R: float, trXXstar: float) -> Tuple[float, float]:
    if not R > 0:
        raise DomainError(f"R must be positive, got {R}")
    floor = R * R / 2
    if trXXstar < floor:
        raise DomainError(f"tr XX* = {trXXstar} is below R²/2 = {floor}")
    f = -R + np.sqrt(floor + trXXstar)
    return float(f), float(f / 2)


def eguchi_hanson_theta(R: float, gamma: float, t: float) -> Tuple[float, float, float]:
    """θ_{1,0} = γe^{−2Rt} − 1 with its first two log-derivatives."""
    u = gamma * np.exp(-2 * R * t)
    theta = u - 1
    return float(theta), float(-2 * R * u / theta), float(-4 * R * R * u / theta ** 2)


def eguchi_hanson_identity_residual(R: float, f: float, trXXstar: float) -> float:
    """f² + 2Rf − tr XX* + R²/2."""
    return float(f * f + 2 * R * f - trXXstar + R * R / 2)


def centered_trxx(spec: CurveSpec, a: MatricialPolynomial) -> float:
    """tr A₀A₀* after removing the trace part (1/2)|z₁ + z₂|²."""
    if spec.k != 2:
        raise DomainError(f"the Eguchi–Hanson reference is for k=2, got k={spec.k}")
    total = complex(np.sum(spec.z))
    return float(np.trace(a.A0 @ a.A0.conj().T).real - abs(total) ** 2 / 2)


def eguchi_hanson_from_frame(spec: CurveSpec, a: MatricialPolynomial) -> Tuple[float, float]:
    """(f, K) from the frame-side tr XX* of a k=2 curve."""
    return eguchi_hanson_reference(curve_radius(spec), centered_trxx(spec, a))


def curve_radius(spec: CurveSpec) -> float:
    """R for k=2: the marker separation r₁₂."""
    if spec.k != 2:
        raise DomainError(f"the Eguchi–Hanson reference is for k=2, got k={spec.k}")
    diff = spec.markers()[0] - spec.markers()[1]
    return float(np.linalg.norm(diff))

"""Unitary frames and the matricial polynomial A(ζ) = A₀ + A₁ζ + A₂ζ².

A frame Q is a k×k matrix of polynomials (rows: components, columns:
sections).  Evaluated at a fibre it conjugates τ_ζ = diag(η_i(ζ)) into
A(ζ) = Q(ζ)⁻¹ τ_ζ Q(ζ), which is quadratic in ζ.
"""
from __future__ import annotations
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .curve_core import CurveSpec, IntersectionTable, etas, is_inf, ordered_pairs
from .errors import (
    AllColumnsVanish, FibreCollision, InconsistentFrame, MalformedInput, NotPositive,
    NotReal, OnTheta, QuadraticityFailure, SingularEvaluation,
)
from .jacobian_sections import (
    SectionFrame, Verdict, distinguished_sections, gram_matrix, is_definite,
)
from .theta_engine import JacobianPoint

COND_MAX = 1e10
QUADRATIC_RTOL = 1e-8
COLUMN_EPS = 1e-12
SPREAD_TOL = 1e-9
USABLE_FRACTION = 1e-2   # columns this far below the best one are left out of the spread
SAMPLE_STEPS = (1.0, 1j, 0.5, 0.5j, 2.0, 0.75 + 0.5j)
VALIDATION_POINTS = (0.3 + 0.7j, -0.6 + 0.2j, 0.45 - 0.35j, -0.2 - 0.9j)


@dataclass(frozen=True, eq=False)
class MatricialPolynomial:
    A0: np.ndarray
    A1: np.ndarray
    A2: np.ndarray

    def __post_init__(self):
        for name in ("A0", "A1", "A2"):
            object.__setattr__(self, name, np.array(getattr(self, name), dtype=complex))
        if not (self.A0.shape == self.A1.shape == self.A2.shape) or self.A0.ndim != 2:
            raise MalformedInput(f"coefficient shapes differ: {self.A0.shape}, {self.A1.shape}, {self.A2.shape}")

    @property
    def k(self) -> int:
        return self.A0.shape[0]

    def evaluate(self, zeta: complex) -> np.ndarray:
        return self.A0 + self.A1 * zeta + self.A2 * zeta * zeta

    def charpoly(self, zeta: complex) -> np.ndarray:
        """Coefficients of det(η − A(ζ)), highest power of η first."""
        return np.poly(self.evaluate(zeta))

    def nahm_matrices(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        t1 = self.A1 / 2j
        t2 = (self.A0 + self.A2) / 2
        t3 = (self.A0 - self.A2) / 2j
        return t1, t2, t3

    @classmethod
    def from_nahm(cls, t1, t2, t3) -> "MatricialPolynomial":
        return cls(A0=t2 + 1j * t3, A1=2j * t1, A2=t2 - 1j * t3)

    def conjugated(self, g: np.ndarray) -> "MatricialPolynomial":
        """g A g⁻¹ coefficientwise."""
        g_inv = np.linalg.inv(g)
        return MatricialPolynomial(g @ self.A0 @ g_inv, g @ self.A1 @ g_inv, g @ self.A2 @ g_inv)

    def norm(self) -> float:
        return float(max(np.abs(self.A0).max(), np.abs(self.A1).max(), np.abs(self.A2).max()))


# ---------- unitary frames ----------
def unitary_frame(table: IntersectionTable, pt: JacobianPoint) -> SectionFrame:
    report = is_definite(table, pt)
    if report.verdict is Verdict.NOT_REAL:
        raise NotReal("the point has no real representative; the hermitian form is undefined")
    if report.verdict is Verdict.ON_THETA:
        raise OnTheta("F(k−2) has a section: Λ_F degenerates at the distinguished base points")
    if report.verdict is not Verdict.POSITIVE:
        raise NotPositive(f"hermitian form is {report.verdict.value} (signs {list(report.signs)})", report.non_positive())

    frame = distinguished_sections(table, pt)
    norms = gram_matrix(table.spec, frame).diagonal().real
    bad = [l for l, n in enumerate(norms) if n <= 0]
    if bad:
        raise NotPositive(f"distinguished sections {bad} have non-positive norm", tuple(bad))
    # lead(Q_ll) is already real positive; positive scaling keeps it so
    return frame.times(np.diag(1.0 / np.sqrt(norms)))


def sigma_q(frame: SectionFrame, zeta: complex) -> np.ndarray:
    """σ(Q)(ζ) = (−1)^{k−1} ζ^{k−1} conj(Q(−1/ζ̄))ᵀ."""
    zeta = complex(zeta)
    if zeta == 0:
        # limit of the expression below: conj(lead)ᵀ
        return frame.coeffs[:, :, -1].conj().T
    k = frame.k
    return (-1) ** (k - 1) * zeta ** (k - 1) * frame.evaluate(-1.0 / np.conj(zeta)).conj().T


def unitarity_residual(spec: CurveSpec, frame: SectionFrame, zeta: complex) -> float:
    """‖σ(Q) D Q − 1‖_max at ζ."""
    return float(np.abs(gram_matrix(spec, frame, zeta).T - np.eye(frame.k)).max())


# ---------- A(ζ) ----------
def orbit_point(spec: CurveSpec, frame: SectionFrame, zeta: complex) -> np.ndarray:
    """Q(ζ)⁻¹ τ_ζ Q(ζ)."""
    if is_inf(zeta):
        raise MalformedInput("orbit_point needs a finite ζ")
    zeta = complex(zeta)
    chi = frame.evaluate(zeta)
    cond = np.linalg.cond(chi)
    if not np.isfinite(cond) or cond > COND_MAX:
        raise SingularEvaluation(f"χ({zeta}) has condition number {cond:.2e}", (zeta,))
    return np.linalg.solve(chi, etas(spec, zeta)[:, None] * chi)


def _try_orbit_point(spec, frame, zeta) -> Optional[np.ndarray]:
    try:
        return orbit_point(spec, frame, zeta)
    except (SingularEvaluation, FibreCollision):
        return None


def polynomial_from_frame(spec: CurveSpec, frame: SectionFrame) -> MatricialPolynomial:
    a0 = orbit_point(spec, frame, 0j)
    for s in SAMPLE_STEPS:
        plus = _try_orbit_point(spec, frame, s)
        minus = _try_orbit_point(spec, frame, -s)
        if plus is None or minus is None:
            continue
        poly = MatricialPolynomial(A0=a0, A1=(plus - minus) / (2 * s), A2=((plus + minus) / 2 - a0) / (s * s))
        _validate_quadratic(spec, frame, poly)
        return poly
    raise SingularEvaluation(f"no usable sample pair among ±{list(SAMPLE_STEPS)}")


def _validate_quadratic(spec: CurveSpec, frame: SectionFrame, poly: MatricialPolynomial) -> None:
    checked = 0
    scale = max(poly.norm(), 1.0)
    for zeta in VALIDATION_POINTS:
        direct = _try_orbit_point(spec, frame, zeta)
        if direct is None:
            continue
        residual = float(np.abs(direct - poly.evaluate(zeta)).max())
        if residual > QUADRATIC_RTOL * scale:
            raise QuadraticityFailure(f"A(ζ) is not quadratic at ζ={zeta}: residual {residual:.2e}", (zeta,))
        checked += 1
        if checked == 2:
            return
    raise SingularEvaluation("fewer than two validation points are usable")


# ---------- checks ----------
@dataclass(frozen=True)
class FrameReport:
    unitarity: float
    reality_A2: float
    reality_A1: float
    lower_A0: float
    upper_A2: float
    diag_A0: float
    charpoly: float
    matching: float

    def worst(self) -> float:
        return max(asdict(self).values())

    def passed(self, tol: float) -> bool:
        return self.worst() < tol

    def as_dict(self, tol: Optional[float] = None) -> Dict:
        out: Dict = dict(asdict(self))
        if tol is not None:
            out["tolerance"] = tol
            out["passed"] = self.passed(tol)
        return out


def _charpoly_residual(spec: CurveSpec, poly: MatricialPolynomial, zetas) -> float:
    worst = 0.0
    for zeta in zetas:
        expected = np.poly(etas(spec, zeta))
        got = poly.charpoly(zeta)
        worst = max(worst, float(np.abs(got - expected).max() / max(1.0, np.abs(expected).max())))
    return worst


def frame_checks(spec: CurveSpec, table: IntersectionTable, frame: SectionFrame,
                 poly: Optional[MatricialPolynomial] = None,
                 zetas: Optional[List[complex]] = None) -> FrameReport:
    if poly is None:
        poly = polynomial_from_frame(spec, frame)
    if zetas is None:
        zetas = [0.2 + 0.3j, -0.7 + 0.1j, 0.5 - 0.6j, 1.3 + 0.4j, -0.4 - 1.2j, 0.05j, 2.1 - 0.3j]
    unit = 0.0
    for zeta in [0j] + list(zetas):
        try:
            unit = max(unit, unitarity_residual(spec, frame, zeta))
        except FibreCollision:
            continue
    scale = max(poly.norm(), 1.0)
    a0, a1, a2 = poly.A0, poly.A1, poly.A2
    matching = max(s.matching_residual(table) for s in frame.sections())
    return FrameReport(
        unitarity=unit,
        reality_A2=float(np.abs(a2 + a0.conj().T).max() / scale),
        reality_A1=float(np.abs(a1 - a1.conj().T).max() / scale),
        lower_A0=float(np.abs(np.tril(a0, -1)).max() / scale),
        upper_A2=float(np.abs(np.triu(a2, 1)).max() / scale),
        diag_A0=float(np.abs(np.diag(a0) - spec.z).max() / scale),
        charpoly=_charpoly_residual(spec, poly, zetas),
        matching=matching,
    )


# ---------- frame → Jacobian ----------
def jacobian_from_frame(table: IntersectionTable, frame: SectionFrame) -> JacobianPoint:
    k = table.k
    if frame.k != k:
        raise MalformedInput(f"frame is for k={frame.k}, curve has k={k}")
    scale = float(np.abs(frame.coeffs).max())
    rho = np.ones((k, k), dtype=complex)
    for m, n in ordered_pairs(k):
        a = table.a[m, n]
        values = frame.evaluate(a)       # (component, section)
        moduli = np.abs(values[m])
        s = int(np.argmax(moduli))
        if moduli[s] <= COLUMN_EPS * scale * max(1.0, abs(a)) ** (k - 1):
            raise AllColumnsVanish(f"every column vanishes on component {m} at a[{m},{n}]", (m, n))
        rho[m, n] = values[n, s] / values[m, s]
        usable = moduli >= USABLE_FRACTION * moduli[s]
        ratios = values[n, usable] / values[m, usable]
        spread = float(np.abs(ratios - rho[m, n]).max() / abs(rho[m, n]))
        if spread > SPREAD_TOL:
            raise InconsistentFrame(f"column ratios at a[{m},{n}] disagree (spread {spread:.2e})", (m, n))
    return JacobianPoint.from_ratios(rho)

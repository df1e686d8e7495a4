"""Sections of F(k−1), the Abel map and the hermitian form.

A section of F(k−1) is a k-tuple of polynomials Q_i of degree ≤ k−1 with
Q_j(a_ij) = ρ_ij Q_i(a_ij) for every ordered pair.  Coefficients are kept
in ascending powers of ζ.  The hermitian form on sections is only defined on
a real representative of the gluing (λ_ij = conj(λ_ji)); sections built for
pairing (``distinguished_sections``) carry that representative in
``ratios``.
"""
from __future__ import annotations
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.linalg import svd

from .curve_core import (
    INF, CurvePoint, CurveSpec, IntersectionTable, Zeta, etas, intersection_matrix,
    is_inf, ordered_pairs,
)
from .errors import FibreCollision, MalformedInput, OnTheta, PointAtNode
from .theta_engine import (
    EPS_THETA, Gluing, JacobianPoint, _assemble_xi, determinant, row_scale,
)

MATCH_TOL = 1e-9
DEGREE_TOL = 1e-10
NULLITY_TOL = 1e-10
NODE_TOL = 1e-12


# ---------- containers ----------
@dataclass(frozen=True, eq=False)
class Divisor:
    n: int
    points: Tuple[Tuple[Zeta, ...], ...]

    def __post_init__(self):
        pts = tuple(tuple(INF if is_inf(p) else complex(p) for p in comp) for comp in self.points)
        for i, comp in enumerate(pts):
            if len(comp) != self.n:
                raise MalformedInput(f"component {i} carries {len(comp)} points, expected {self.n}", (i,))
        object.__setattr__(self, "points", pts)

    @property
    def k(self) -> int:
        return len(self.points)


@dataclass(frozen=True, eq=False)
class Section:
    coeffs: np.ndarray   # (k, k): component i, power n
    ratios: np.ndarray   # matching ratios of the representative

    @property
    def k(self) -> int:
        return self.coeffs.shape[0]

    def evaluate(self, zeta: Zeta) -> np.ndarray:
        if is_inf(zeta):
            return self.coeffs[:, -1].copy()
        return P.polyval(complex(zeta), self.coeffs.T)

    def matching_residual(self, table: IntersectionTable) -> float:
        worst = 0.0
        scale = float(np.abs(self.coeffs).max()) or 1.0
        for i, j in ordered_pairs(self.k):
            a = table.a[i, j]
            qi = P.polyval(a, self.coeffs[i])
            qj = P.polyval(a, self.coeffs[j])
            norm = scale * max(1.0, abs(a)) ** (self.k - 1) * max(1.0, abs(self.ratios[i, j]))
            worst = max(worst, abs(self.ratios[i, j] * qi - qj) / norm)
        return worst


@dataclass(frozen=True, eq=False)
class SectionFrame:
    coeffs: np.ndarray   # (k, k, k): component i, section l, power n
    ratios: np.ndarray

    @property
    def k(self) -> int:
        return self.coeffs.shape[0]

    def evaluate(self, zeta: Zeta) -> np.ndarray:
        """χ(ζ): rows are components, columns are sections."""
        if is_inf(zeta):
            return self.coeffs[:, :, -1].copy()
        return P.polyval(complex(zeta), np.moveaxis(self.coeffs, -1, 0))

    def section(self, l: int) -> Section:
        return Section(coeffs=self.coeffs[:, l, :].copy(), ratios=self.ratios)

    def sections(self) -> List[Section]:
        return [self.section(l) for l in range(self.k)]

    def with_coeffs(self, coeffs: np.ndarray) -> "SectionFrame":
        return SectionFrame(coeffs=np.asarray(coeffs, dtype=complex), ratios=self.ratios)

    def times(self, unitary: np.ndarray) -> "SectionFrame":
        """Right multiplication Q ↦ Q·U."""
        return self.with_coeffs(np.einsum("iln,lm->imn", self.coeffs, unitary))


@dataclass(frozen=True, eq=False)
class CocycleData:
    k: int
    coefficients: Dict[Tuple[int, int], complex] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for (n, i), value in self.coefficients.items():
            if not (1 <= i <= self.k - 1) or abs(n) > i - 1:
                raise MalformedInput(f"cocycle coefficient d[{n},{i}] is outside 0 < i <= k-1, |n| <= i-1")
            clean[(int(n), int(i))] = complex(value)
        object.__setattr__(self, "coefficients", clean)

    def get(self, n: int, i: int) -> complex:
        return self.coefficients.get((n, i), 0j)

    def is_real(self, tol: float = 1e-12) -> bool:
        """conj(d_{n,i}) = (−1)^n d_{−n,i} for all stored (n, i)."""
        for (n, i), value in self.coefficients.items():
            mirror = (-1) ** abs(n) * self.get(-n, i)
            if abs(np.conj(value) - mirror) > tol * max(1.0, abs(value)):
                return False
        return True


# ---------- Abel map ----------
def _check_off_nodes(table: IntersectionTable, i: int, zeta: Zeta, tag) -> None:
    if is_inf(zeta):
        return
    nodes = table.nodes_on(i)
    close = np.abs(nodes - zeta) <= NODE_TOL * np.maximum(1.0, np.abs(nodes))
    if np.any(close):
        raise PointAtNode(f"point {zeta} on component {i} sits on a node", tag)


def abel_map(table: IntersectionTable, divisor: Divisor) -> JacobianPoint:
    k = table.k
    if divisor.k != k:
        raise MalformedInput(f"divisor has {divisor.k} components, curve has {k}")
    for i, comp in enumerate(divisor.points):
        for m, zeta in enumerate(comp):
            _check_off_nodes(table, i, zeta, (i, m))

    def product(a: complex, comp) -> complex:
        out = 1.0 + 0j
        for zeta in comp:
            if not is_inf(zeta):
                out *= a - zeta
        return out

    rho = np.ones((k, k), dtype=complex)
    for i, j in ordered_pairs(k):
        a = table.a[i, j]
        rho[i, j] = product(a, divisor.points[j]) / product(a, divisor.points[i])
    return JacobianPoint.from_ratios(rho)


# ---------- Λ_F ----------
def _slot_factor(a: complex, u: Zeta) -> complex:
    return 1.0 if is_inf(u) else a - complex(u)


def _lambda_matrix(table: IntersectionTable, g: Gluing, u: Sequence[Zeta]) -> np.ndarray:
    lam = g.lam.copy()
    mu = g.mu.copy()
    for i, j in ordered_pairs(table.k):
        a = table.a[i, j]
        lam[i, j] *= _slot_factor(a, u[i])
        mu[i, j] *= _slot_factor(a, u[j])
    return _assemble_xi(table, lam, mu)


def lambda_F(table: IntersectionTable, g: Gluing, u: Sequence[Zeta]) -> complex:
    if len(u) != table.k:
        raise MalformedInput(f"Λ_F takes {table.k} arguments, got {len(u)}")
    return determinant(_lambda_matrix(table, g, u))


def _free_slot(u: Sequence[Optional[Zeta]], l: int, value: Zeta) -> List[Zeta]:
    out = list(u)
    out[l] = value
    return out


def lambda_section_polynomial(table: IntersectionTable, g: Gluing, l: int,
                              base: Optional[Sequence[Optional[Zeta]]] = None) -> np.ndarray:
    """Coefficients of ζ ↦ Λ_F(base with ζ in slot l); default base is (∞,…,∞, ·, 0,…,0)."""
    k = table.k
    if base is None:
        base = [INF] * l + [None] + [0j] * (k - l - 1)
    samples = np.exp(2j * np.pi * np.arange(k) / k)
    values = np.array([lambda_F(table, g, _free_slot(base, l, s)) for s in samples])
    return np.linalg.solve(np.vander(samples, k, increasing=True), values)


def _as_zeta(value, slot: int) -> Optional[Zeta]:
    if value is None:
        return None
    if isinstance(value, CurvePoint):
        if value.component != slot:
            raise MalformedInput(f"base point for slot {slot} lies on component {value.component}", (slot,))
        value = value.zeta
    return INF if is_inf(value) else complex(value)


def _shift_root(coeffs: np.ndarray, nodes: np.ndarray) -> Zeta:
    scale = np.abs(coeffs).max()
    if abs(coeffs[-1]) <= DEGREE_TOL * scale:
        return INF
    roots = P.polyroots(coeffs)
    distance = [np.min(np.abs(nodes - x)) for x in roots]
    return complex(roots[int(np.argmax(distance))])


def section_vanishing_at(table: IntersectionTable, g: Gluing, l: int, base: Sequence,
                         eps_theta: float = EPS_THETA) -> Section:
    """The section of F(k−1) vanishing at base_j for all j ≠ l."""
    k = table.k
    if len(base) != k:
        raise MalformedInput(f"base must have {k} entries, got {len(base)}")
    base = [_as_zeta(b, m) for m, b in enumerate(base)]
    for m, zeta in enumerate(base):
        if m == l:
            continue
        if zeta is None:
            raise MalformedInput(f"base slot {m} is empty", (m,))
        _check_off_nodes(table, m, zeta, (m,))

    q_l = lambda_section_polynomial(table, g, l, base)
    reference = row_scale(_lambda_matrix(table, g, _free_slot(base, l, 1.0)))
    if np.abs(q_l).max() <= eps_theta * reference:
        raise OnTheta(f"Λ_F vanishes identically in slot {l}: the base lies on Θ", (l,))

    rho = g.matching_ratios()
    root = _shift_root(q_l, table.nodes_on(l))
    shifted = _free_slot(base, l, root)
    comps = np.zeros((k, k), dtype=complex)
    comps[l] = q_l
    norm_l = np.abs(q_l).max()
    for j in range(k):
        if j == l:
            continue
        q_j = lambda_section_polynomial(table, g, j, shifted)
        norm_j = np.abs(q_j).max()
        if norm_j == 0:
            raise OnTheta(f"shifted Λ_F vanishes identically in slot {j}", (l, j))
        candidates = []
        # row (l, j): Q_j(a_lj) = ρ_lj Q_l(a_lj); row (j, l): Q_l(a_jl) = ρ_jl Q_j(a_jl)
        a = table.a[l, j]
        candidates.append((a, rho[l, j] * P.polyval(a, q_l)))
        a = table.a[j, l]
        candidates.append((a, P.polyval(a, q_l) / rho[j, l]))
        node, target = max(candidates, key=lambda c: abs(P.polyval(c[0], q_j)) / norm_j * abs(c[1]) / norm_l)
        pivot = P.polyval(node, q_j)
        if abs(pivot) <= eps_theta * norm_j * max(1.0, abs(node)) ** (k - 1):
            raise OnTheta(f"no usable node to fix the scale of component {j}", (l, j))
        comps[j] = q_j * (target / pivot)

    section = Section(coeffs=comps, ratios=rho)
    residual = section.matching_residual(table)
    if residual > MATCH_TOL:
        raise OnTheta(f"reconstructed section misses the matching conditions (residual {residual:.2e})", (l,))
    return section


# ---------- nullspace construction ----------
def matching_system(table: IntersectionTable, ratios: np.ndarray) -> np.ndarray:
    """Rows ρ_ij Q_i(a_ij) − Q_j(a_ij) = 0 acting on the stacked coefficients (i*k + n)."""
    k = table.k
    rows = np.zeros((k * (k - 1), k * k), dtype=complex)
    powers = np.arange(k)
    for r, (i, j) in enumerate(ordered_pairs(k)):
        col = table.a[i, j] ** powers
        rows[r, i * k:(i + 1) * k] = ratios[i, j] * col
        rows[r, j * k:(j + 1) * k] = -col
    return rows


def vanishing_row(k: int, component: int, zeta: Zeta) -> np.ndarray:
    row = np.zeros(k * k, dtype=complex)
    if is_inf(zeta):
        row[component * k + k - 1] = 1.0
    else:
        row[component * k:(component + 1) * k] = complex(zeta) ** np.arange(k)
    return row


def _null_vector(system: np.ndarray, tag) -> np.ndarray:
    rows = system / np.linalg.norm(system, axis=1, keepdims=True)
    _, s, vh = svd(rows)
    if s[-1] <= NULLITY_TOL * s[0]:
        raise OnTheta(f"section space has dimension > 1 (σ_min/σ_max = {s[-1] / s[0]:.2e})", tag)
    return vh[-1].conj()


def distinguished_sections(table: IntersectionTable, pt: JacobianPoint) -> SectionFrame:
    """s_l vanishing at ∞_j (j < l) and 0_j (j > l), in the real representative."""
    k = table.k
    lam = pt.real_representative()
    matching = matching_system(table, lam)
    coeffs = np.zeros((k, k, k), dtype=complex)
    for l in range(k):
        extra = [vanishing_row(k, j, INF) for j in range(l)]
        extra += [vanishing_row(k, j, 0j) for j in range(l + 1, k)]
        system = np.vstack([matching] + extra) if extra else matching
        comps = _null_vector(system, (l,)).reshape(k, k)
        lead = comps[l, k - 1]
        if abs(lead) <= DEGREE_TOL * np.abs(comps).max():
            raise OnTheta(f"distinguished section {l} has a degenerate leading term", (l,))
        coeffs[:, l, :] = comps * (abs(lead) / lead)
    return SectionFrame(coeffs=coeffs, ratios=lam)


# ---------- hermitian form ----------
def _zero_fibre_denominators(spec: CurveSpec) -> np.ndarray:
    z = spec.z
    return np.array([np.prod([z[i] - z[j] for j in range(spec.k) if j != i]) for i in range(spec.k)])


def _fibre_denominators(spec: CurveSpec, zeta: complex) -> np.ndarray:
    e = etas(spec, zeta)
    return np.array([np.prod([e[i] - e[j] for j in range(spec.k) if j != i]) for i in range(spec.k)])


def _check_fibre(spec: CurveSpec, zeta: complex) -> None:
    a = intersection_matrix(spec)
    nodes = a[~np.eye(spec.k, dtype=bool)]
    hit = np.abs(nodes - zeta) <= 1e-10 * np.maximum(1.0, np.abs(nodes))
    if np.any(hit):
        raise FibreCollision(f"ζ0 = {zeta} lies over a node; the fibre is not reduced", (zeta,))


def hermitian_pair(spec: CurveSpec, s: Section, s_prime: Section, zeta0: complex) -> complex:
    k = spec.k
    if is_inf(zeta0):
        raise MalformedInput("hermitian_pair needs a finite ζ0")
    zeta0 = complex(zeta0)
    p, r = s.coeffs, s_prime.coeffs
    if zeta0 == 0:
        return complex(np.sum(p[:, 0] * np.conj(r[:, k - 1]) / _zero_fibre_denominators(spec)))
    _check_fibre(spec, zeta0)
    pv = P.polyval(zeta0, p.T)
    rv = P.polyval(-1.0 / np.conj(zeta0), r.T)
    total = np.sum(pv * np.conj(rv) / _fibre_denominators(spec, zeta0))
    return complex((-1) ** (k - 1) * zeta0 ** (k - 1) * total)


def gram_matrix(spec: CurveSpec, frame: SectionFrame, zeta0: complex = 0j) -> np.ndarray:
    """G[l, m] = ⟨s_l, s_m⟩."""
    k = spec.k
    zeta0 = complex(zeta0)
    if zeta0 == 0:
        left = frame.coeffs[:, :, 0]
        right = frame.coeffs[:, :, k - 1]
        return left.T @ np.diag(1.0 / _zero_fibre_denominators(spec)) @ right.conj()
    _check_fibre(spec, zeta0)
    left = frame.evaluate(zeta0)
    right = frame.evaluate(-1.0 / np.conj(zeta0))
    factor = (-1) ** (k - 1) * zeta0 ** (k - 1)
    return factor * (left.T @ np.diag(1.0 / _fibre_denominators(spec, zeta0)) @ right.conj())


# ---------- definiteness ----------
class Verdict(str, Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    INDEFINITE = "indefinite"
    ON_THETA = "on_theta"
    NOT_REAL = "not_real"


@dataclass(frozen=True)
class DefiniteReport:
    verdict: Verdict
    quantities: Tuple[complex, ...] = ()
    signs: Tuple[int, ...] = ()

    def non_positive(self) -> Tuple[int, ...]:
        return tuple(l for l, s in enumerate(self.signs) if s <= 0)

    def as_dict(self) -> Dict:
        return {
            "verdict": self.verdict.value,
            "signs": list(self.signs),
            "quantities": [[q.real, q.imag] for q in self.quantities],
        }


def is_definite(table: IntersectionTable, pt: JacobianPoint) -> DefiniteReport:
    if not pt.is_real():
        return DefiniteReport(Verdict.NOT_REAL)
    spec = table.spec
    g = pt.gluing()
    denominators = _zero_fibre_denominators(spec)
    quantities = []
    for l in range(table.k):
        q = lambda_section_polynomial(table, g, l)
        scale = np.abs(q).max()
        if scale == 0 or abs(q[-1]) <= DEGREE_TOL * scale:
            return DefiniteReport(Verdict.ON_THETA, tuple(quantities))
        quantities.append(complex(q[0] * np.conj(q[-1]) / denominators[l]))
    signs = tuple(int(np.sign(q.real)) for q in quantities)
    if all(s > 0 for s in signs):
        verdict = Verdict.POSITIVE
    elif all(s < 0 for s in signs):
        verdict = Verdict.NEGATIVE
    else:
        verdict = Verdict.INDEFINITE
    return DefiniteReport(verdict, tuple(quantities), signs)


# ---------- cocycles ----------
def _component_laurent(spec: CurveSpec, m: int, c: CocycleData) -> np.ndarray:
    """Laurent coefficients of q on S_m, powers −K..K with K = 2k−3."""
    k = spec.k
    top = 2 * k - 3
    total = np.zeros(2 * top + 1, dtype=complex)
    x_m, z_m = spec.points[m]
    base = np.array([z_m, 2.0 * x_m, -np.conj(z_m)])  # η_m/ζ, powers −1..1
    power = np.array([1.0 + 0j])
    for i in range(1, k):
        power = np.convolve(power, base)                            # powers −i..i
        q_i = np.array([c.get(n, i) for n in range(-(i - 1), i)])   # powers −(i−1)..(i−1)
        term = np.convolve(power, q_i)                              # powers −(2i−1)..(2i−1)
        start = top - (2 * i - 1)
        total[start:start + len(term)] += term
    return total


def cocycle_to_point(table: IntersectionTable, c: CocycleData) -> JacobianPoint:
    spec = table.spec
    k = spec.k
    if c.k != k:
        raise MalformedInput(f"cocycle is for k={c.k}, curve has k={k}")
    top = 2 * k - 3
    plus = []
    for m in range(k):
        laurent = _component_laurent(spec, m, c)
        coeffs = laurent[top:].copy()
        coeffs[0] *= 0.5
        plus.append(coeffs)
    rho = np.ones((k, k), dtype=complex)
    for i, j in ordered_pairs(k):
        a = table.a[i, j]
        rho[i, j] = np.exp(P.polyval(a, plus[j]) - P.polyval(a, plus[i]))
    return JacobianPoint.from_ratios(rho)

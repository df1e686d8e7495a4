"""Theta function of a reducible nodal curve.

A gluing is a set of homogeneous pairs (λ_ij, μ_ij), one per ordered pair
i ≠ j, standing for the matching equations λ_ij Q_i(a_ij) + μ_ij Q_j(a_ij) = 0.
The theta function is ϑ = det Ξ, where Ξ stacks those equations for
polynomials of degree ≤ k−2.  Points of the Jacobian are matching ratios
ρ_ij modulo the rescaling action ρ_ij ↦ z_i z_j⁻¹ ρ_ij and are stored in
canonical form ρ_i0 = 1.
"""
from __future__ import annotations
import itertools
import warnings
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from .curve_core import IntersectionTable, ordered_pairs
from .errors import MalformedInput, NearTheta, NotReal, SizeLimit

EPS_THETA = 1e-12
REAL_TOL = 1e-9
EQUIV_RTOL = 1e-10
MAX_EXPANSION_K = 5

Subset = Tuple[Tuple[int, int], ...]


# ---------- gluing data ----------
@dataclass(frozen=True, eq=False)
class Gluing:
    lam: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        lam = np.array(self.lam, dtype=complex)
        mu = np.array(self.mu, dtype=complex)
        if lam.ndim != 2 or lam.shape[0] != lam.shape[1] or lam.shape != mu.shape or lam.shape[0] < 2:
            raise MalformedInput(f"gluing arrays must be matching k x k, got {lam.shape} and {mu.shape}")
        off = ~np.eye(lam.shape[0], dtype=bool)
        if np.any(lam[off] == 0) or np.any(mu[off] == 0):
            raise MalformedInput("gluing pairs must have nonzero λ and μ")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "mu", mu)

    @classmethod
    def from_matching_ratios(cls, rho) -> "Gluing":
        rho = np.array(rho, dtype=complex)
        k = rho.shape[0]
        lam = rho.copy()
        np.fill_diagonal(lam, 1.0)
        return cls(lam=lam, mu=-np.ones((k, k), dtype=complex))

    @property
    def k(self) -> int:
        return self.lam.shape[0]

    def matching_ratios(self) -> np.ndarray:
        rho = -self.lam / self.mu
        np.fill_diagonal(rho, 1.0)
        return rho

    def acted(self, z: Sequence[complex]) -> "Gluing":
        """The action (z_i z_j⁻¹ λ_ij, μ_ij)."""
        z = np.asarray(z, dtype=complex)
        return Gluing(lam=self.lam * np.outer(z, 1.0 / z), mu=self.mu)


def canonicalize(rho) -> np.ndarray:
    rho = np.array(rho, dtype=complex)
    k = rho.shape[0]
    if rho.shape != (k, k) or k < 2:
        raise MalformedInput(f"matching ratios must be a k x k array, got {rho.shape}")
    off = ~np.eye(k, dtype=bool)
    if np.any(rho[off] == 0) or not np.all(np.isfinite(rho[off])):
        raise MalformedInput("matching ratios must be finite and nonzero")
    z = np.ones(k, dtype=complex)
    z[1:] = 1.0 / rho[1:, 0]
    out = rho * np.outer(z, 1.0 / z)
    out[1:, 0] = 1.0
    np.fill_diagonal(out, 1.0)
    return out


@dataclass(frozen=True, eq=False)
class JacobianPoint:
    ratios: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "ratios", canonicalize(self.ratios))

    @classmethod
    def from_ratios(cls, rho) -> "JacobianPoint":
        return cls(ratios=rho)

    @classmethod
    def trivial(cls, k: int) -> "JacobianPoint":
        return cls(ratios=np.ones((k, k), dtype=complex))

    @property
    def k(self) -> int:
        return self.ratios.shape[0]

    def gluing(self) -> Gluing:
        return Gluing.from_matching_ratios(self.ratios)

    def equivalent(self, other: "JacobianPoint", rtol: float = EQUIV_RTOL) -> bool:
        if other.k != self.k:
            return False
        a, b = self.ratios, other.ratios
        return bool(np.all(np.abs(a - b) <= rtol * np.maximum(np.abs(a), np.abs(b))))

    def real_weights(self, tol: float = REAL_TOL) -> Optional[np.ndarray]:
        """Positive w with w_i ρ_ij = w_j conj(ρ_ji), or None if no real representative exists."""
        rho = self.ratios
        k = self.k
        w = np.ones(k)
        for i in range(1, k):
            v = rho[0, i]
            if abs(v.imag) > tol * abs(v) or v.real <= 0:
                return None
            w[i] = v.real
        for i, j in ordered_pairs(k):
            lhs, rhs = w[i] * rho[i, j], w[j] * np.conj(rho[j, i])
            if abs(lhs - rhs) > tol * max(abs(lhs), abs(rhs)):
                return None
        return w

    def is_real(self, tol: float = REAL_TOL) -> bool:
        return self.real_weights(tol) is not None

    def real_representative(self, tol: float = REAL_TOL) -> np.ndarray:
        """Matching ratios of a representative with λ_ij = conj(λ_ji); unique up to U(1)^k."""
        w = self.real_weights(tol)
        if w is None:
            raise NotReal("point has no real representative: [ρ_ij] != [conj(ρ_ji)]")
        d = np.sqrt(w)
        lam = self.ratios * np.outer(d, 1.0 / d)
        lam = 0.5 * (lam + lam.conj().T)
        np.fill_diagonal(lam, 1.0)
        return lam


# ---------- regular subsets ----------
def is_regular(subset, k: int) -> bool:
    g = nx.DiGraph()
    g.add_nodes_from(range(k))
    g.add_edges_from(subset)
    return all(g.in_degree(v) == g.out_degree(v) for v in g.nodes)


def _subset_key(subset: Subset) -> Subset:
    return tuple(sorted(subset))


def enumerate_regular_subsets(k: int) -> List[Subset]:
    if k < 2:
        raise MalformedInput(f"k must be >= 2, got {k}")
    if k > MAX_EXPANSION_K:
        raise SizeLimit(f"regular-subset enumeration is limited to k <= {MAX_EXPANSION_K}, got {k}", (k,))

    edges = list(itertools.combinations(range(k), 2))
    # the last unordered pair touching vertex v; its balance is final afterwards
    closes = {}
    for pos, (i, j) in enumerate(edges):
        closes[i] = closes[j] = pos
    closing_at = {}
    for v, pos in closes.items():
        closing_at.setdefault(pos, []).append(v)

    choices = ((), ("f",), ("b",), ("f", "b"))
    found: List[Subset] = []
    balance = [0] * k
    chosen: List[Tuple[int, int]] = []

    def walk(pos: int) -> None:
        if pos == len(edges):
            found.append(_subset_key(tuple(chosen)))
            return
        i, j = edges[pos]
        for option in choices:
            added = []
            for d in option:
                a, b = (i, j) if d == "f" else (j, i)
                balance[a] += 1
                balance[b] -= 1
                added.append((a, b))
            chosen.extend(added)
            if all(balance[v] == 0 for v in closing_at.get(pos, ())):
                walk(pos + 1)
            for a, b in added:
                balance[a] -= 1
                balance[b] += 1
            del chosen[len(chosen) - len(added):]

    walk(0)
    return sorted(found)


def regular_subsets_bruteforce(k: int) -> List[Subset]:
    """Independent check: all 2^|P| subsets filtered by in/out balance."""
    pairs = ordered_pairs(k)
    out = []
    for mask in range(1 << len(pairs)):
        subset = tuple(p for b, p in enumerate(pairs) if mask >> b & 1)
        if is_regular(subset, k):
            out.append(_subset_key(subset))
    return sorted(out)


# ---------- Ξ and its determinant ----------
def _assemble_xi(table: IntersectionTable, lam: np.ndarray, mu: np.ndarray) -> np.ndarray:
    k = table.k
    n = k - 1
    size = k * n
    xi = np.zeros((size, size), dtype=complex)
    powers = np.arange(n)
    for row, (i, j) in enumerate(ordered_pairs(k)):
        col = table.a[i, j] ** powers
        xi[row, i * n:(i + 1) * n] += lam[i, j] * col
        xi[row, j * n:(j + 1) * n] += mu[i, j] * col
    return xi


def build_xi(table: IntersectionTable, g: Gluing) -> np.ndarray:
    if g.k != table.k:
        raise MalformedInput(f"gluing is for k={g.k}, curve has k={table.k}")
    return _assemble_xi(table, g.lam, g.mu)


def row_scale(m: np.ndarray) -> float:
    """Hadamard bound: product of row norms."""
    return float(np.prod(np.linalg.norm(m, axis=1)))


def _lu(m: np.ndarray):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(m, check_finite=False)
    sign = -1.0 if np.count_nonzero(piv != np.arange(len(piv))) % 2 else 1.0
    return lu, piv, sign * np.prod(np.diag(lu))


def determinant(m: np.ndarray) -> complex:
    return complex(_lu(m)[2])


def theta_det(table: IntersectionTable, g: Gluing) -> complex:
    return determinant(build_xi(table, g))


# ---------- regular-subset expansion ----------
@dataclass(frozen=True, eq=False)
class ThetaExpansion:
    k: int
    terms: Tuple[Tuple[Subset, complex], ...]

    def _masks(self) -> np.ndarray:
        index = {p: n for n, p in enumerate(ordered_pairs(self.k))}
        masks = np.zeros((len(self.terms), len(index)), dtype=bool)
        for t, (subset, _) in enumerate(self.terms):
            masks[t, [index[p] for p in subset]] = True
        return masks

    def _term_values(self, g: Gluing) -> np.ndarray:
        pairs = ordered_pairs(self.k)
        lam = np.array([g.lam[p] for p in pairs])
        mu = np.array([g.mu[p] for p in pairs])
        coeffs = np.array([c for _, c in self.terms])
        return coeffs * np.prod(np.where(self._masks(), lam, mu), axis=1)

    def evaluate(self, g: Gluing) -> complex:
        return complex(np.sum(self._term_values(g)))

    def magnitude(self, g: Gluing) -> float:
        """Σ |term|, a cancellation-free scale for relative errors."""
        return float(np.sum(np.abs(self._term_values(g))))

    def swapped(self) -> "ThetaExpansion":
        """Same polynomial with the λ and μ slots exchanged (L ↔ complement of L)."""
        pairs = set(ordered_pairs(self.k))
        terms = tuple((_subset_key(tuple(pairs - set(s))), c) for s, c in self.terms)
        return ThetaExpansion(k=self.k, terms=tuple(sorted(terms, key=lambda t: t[0])))


def component_blocks(subset: Subset, k: int) -> List[List[Tuple[int, int]]]:
    """L_m = {(m, j) in L} ∪ {(i, m) not in L}, each in lexicographic order."""
    inside = set(subset)
    blocks = []
    for m in range(k):
        block = [p for p in ordered_pairs(k)
                 if (p[0] == m and p in inside) or (p[1] == m and p not in inside)]
        blocks.append(block)
    return blocks


def _permutation_sign(seq: Sequence[int]) -> int:
    inversions = sum(1 for a, b in itertools.combinations(seq, 2) if a > b)
    return -1 if inversions % 2 else 1


def _vandermonde(values: Sequence[complex]) -> complex:
    out = 1.0 + 0j
    for a, b in itertools.combinations(values, 2):
        out *= (b - a)
    return out


def theta_expansion(table: IntersectionTable) -> ThetaExpansion:
    k = table.k
    index = {p: n for n, p in enumerate(ordered_pairs(k))}
    terms = []
    for subset in enumerate_regular_subsets(k):
        blocks = component_blocks(subset, k)
        order = [index[p] for block in blocks for p in block]
        coeff = complex(_permutation_sign(order))
        for block in blocks:
            coeff *= _vandermonde([table.a[p] for p in block])
        terms.append((subset, coeff))
    return ThetaExpansion(k=k, terms=tuple(terms))


# ---------- θ_{p,q} on the Jacobian ----------
def theta_pq_from_ratios(table: IntersectionTable, rho, p: int, q: int) -> complex:
    """ϑ(ρ^p, −ρ^q) for any representative ρ (invariant under the action)."""
    rho = np.array(rho, dtype=complex)
    np.fill_diagonal(rho, 1.0)
    return determinant(_assemble_xi(table, rho ** p, -(rho ** q)))


def theta_pq(table: IntersectionTable, pt: JacobianPoint, p: int, q: int) -> complex:
    return theta_pq_from_ratios(table, pt.ratios, p, q)


def flowed_ratios(table: IntersectionTable, rho, t: float) -> np.ndarray:
    """ρ_ij e^{−r_ij t}."""
    return np.asarray(rho, dtype=complex) * np.exp(-table.r * t)


def theta_flow_derivatives(table: IntersectionTable, pt: JacobianPoint, t: float,
                           eps_theta: float = EPS_THETA) -> Tuple[complex, complex, complex]:
    """θ_{1,0}, d/dt log θ_{1,0} and d²/dt² log θ_{1,0} at the flowed point."""
    k = table.k
    lam = flowed_ratios(table, pt.ratios, t)
    mu = -np.ones((k, k), dtype=complex)
    zero = np.zeros((k, k), dtype=complex)
    xi = _assemble_xi(table, lam, mu)
    lu, piv, theta = _lu(xi)
    scale = row_scale(xi)
    if abs(theta) <= eps_theta * scale:
        raise NearTheta(f"θ_1,0 = {complex(theta):.3e} is within {eps_theta:g}·scale of Θ at t={t}", (t,))
    d_xi = _assemble_xi(table, lam * (-table.r), zero)
    dd_xi = _assemble_xi(table, lam * table.r ** 2, zero)
    x1 = lu_solve((lu, piv), d_xi, check_finite=False)
    x2 = lu_solve((lu, piv), dd_xi, check_finite=False)
    first = np.trace(x1)
    second = np.trace(x2) - np.trace(x1 @ x1)
    return complex(theta), complex(first), complex(second)


def theta_flow_logderiv(table: IntersectionTable, pt: JacobianPoint, t: float, order: int,
                        eps_theta: float = EPS_THETA) -> complex:
    if order not in (1, 2):
        raise MalformedInput(f"order must be 1 or 2, got {order}")
    _, first, second = theta_flow_derivatives(table, pt, t, eps_theta)
    return first if order == 1 else second

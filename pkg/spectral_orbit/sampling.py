"""Seeded random instances: curves, gluings, divisors, real and definite points.

All randomness goes through ``make_rng(seed, stream)``, a Philox generator
keyed by (seed, stream); independent streams never share state, so the
same seed reproduces the same instances regardless of evaluation order.
"""
from __future__ import annotations
from typing import Optional

import numpy as np

from .curve_core import CurveSpec, IntersectionTable, validate_curve
from .errors import MalformedInput, NumericalFailure, ValidationError
from .jacobian_sections import CocycleData, Divisor, Verdict, is_definite
from .nahm_flow import flow_point
from .theta_engine import Gluing, JacobianPoint, build_xi, row_scale, theta_pq

THETA_MARGIN = 1e-6
NODE_CLEARANCE = 1e-3


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    key = (int(seed) % 2 ** 64) + (int(stream) % 2 ** 64 << 64)
    return np.random.Generator(np.random.Philox(key=key))


def random_curve(rng: np.random.Generator, k: int, zero_x: bool = False,
                 min_separation: float = 0.3, max_tries: int = 1000) -> IntersectionTable:
    for _ in range(max_tries):
        markers = rng.uniform(-1.0, 1.0, size=(k, 3))
        if zero_x:
            markers[:, 0] = 0.0
        spec = CurveSpec.from_arrays(markers[:, 0], markers[:, 1] + 1j * markers[:, 2])
        try:
            table = validate_curve(spec)
        except ValidationError:
            continue
        off = ~np.eye(k, dtype=bool)
        if table.r[off].min() < min_separation:
            continue
        nodes = table.all_nodes()
        if np.abs(nodes).min() < 1e-3 or np.abs(nodes).max() > 1e3:
            continue
        gaps = np.abs(nodes[:, None] - nodes[None, :]) + np.eye(len(nodes))
        if gaps.min() < 1e-2:
            continue
        return table
    raise MalformedInput(f"no admissible k={k} curve after {max_tries} draws")


def random_gluing(rng: np.random.Generator, k: int) -> Gluing:
    shape = (k, k)
    lam = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    mu = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    np.fill_diagonal(lam, 1.0)
    np.fill_diagonal(mu, 1.0)
    return Gluing(lam=lam, mu=mu)


def random_real_point(rng: np.random.Generator, k: int, spread: float = 0.4) -> JacobianPoint:
    """λ_ij = exp(spread·g + iφ) above the diagonal, λ_ji = conj(λ_ij)."""
    lam = np.ones((k, k), dtype=complex)
    for i in range(k):
        for j in range(i + 1, k):
            lam[i, j] = np.exp(spread * rng.normal() + 1j * rng.uniform(-np.pi, np.pi))
            lam[j, i] = np.conj(lam[i, j])
    return JacobianPoint.from_ratios(lam)


def _theta_margin(table: IntersectionTable, pt: JacobianPoint) -> float:
    scale = row_scale(build_xi(table, pt.gluing()))
    return abs(theta_pq(table, pt, 1, 0)) / scale


def random_definite_point(rng: np.random.Generator, table: IntersectionTable, spread: float = 0.4,
                          t_step: float = 0.5, max_steps: int = 40,
                          max_tries: int = 50) -> JacobianPoint:
    """A real point flowed forward until the hermitian form is positive."""
    for _ in range(max_tries):
        pt = random_real_point(rng, table.k, spread)
        for step in range(max_steps + 1):
            moved = flow_point(table, pt, step * t_step)
            if is_definite(table, moved).verdict is Verdict.POSITIVE and _theta_margin(table, moved) > THETA_MARGIN:
                return moved
    raise NumericalFailure(f"no positive point reached within {max_steps} flow steps of {t_step}")


def random_divisor(rng: np.random.Generator, table: IntersectionTable, n: Optional[int] = None) -> Divisor:
    """Finite points of multi-degree (n, …, n), n = k−2 by default, kept away from the nodes."""
    k = table.k
    n = k - 2 if n is None else n
    points = []
    for i in range(k):
        nodes = table.nodes_on(i)
        comp = []
        while len(comp) < n:
            zeta = complex(rng.normal(), rng.normal())
            if np.abs(nodes - zeta).min() > NODE_CLEARANCE:
                comp.append(zeta)
        points.append(tuple(comp))
    return Divisor(n=n, points=tuple(points))


def random_real_cocycle(rng: np.random.Generator, k: int, scale: float = 0.3) -> CocycleData:
    """Coefficients with conj(d_{n,i}) = (−1)^n d_{−n,i}."""
    coeffs = {}
    for i in range(1, k):
        coeffs[(0, i)] = complex(scale * rng.normal())
        for n in range(1, i):
            d = complex(scale * rng.normal(), scale * rng.normal())
            coeffs[(n, i)] = d
            coeffs[(-n, i)] = (-1) ** n * np.conj(d)
    return CocycleData(k=k, coefficients=coeffs)

"""Reducible spectral curves and their intersection data.

A curve is given by k markers (x_i, z_i) with x_i real and z_i complex; its
components are the rational curves

    S_i = {(ζ, η) : η = z_i + 2 x_i ζ − z̄_i ζ²}

in the total space of O(2).  Two components meet over the antipodal pair
a_ij, a_ji = −1/conj(a_ij).  Component indices are 0-based throughout the
package; file formats and messages that mention components in the 1-based
convention say so explicitly.
"""
from __future__ import annotations
import itertools
from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np

from .errors import (
    CoincidentIntersections, CollinearPoints, DuplicateComponent,
    IntersectionAtPole, MalformedInput,
)

EPS_GEOM = 1e-9         # collinearity, relative to unit marker diameter
EPS_DISTINCT = 1e-10    # a_ij collisions, relative
A_MIN, A_MAX = 1e-8, 1e8


class Infinity:
    """The point ζ = ∞ of P¹. Use the module singleton ``INF``."""
    __slots__ = ()
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INF"

    def __reduce__(self):
        return (Infinity, ())


INF = Infinity()
Zeta = Union[complex, Infinity]


def is_inf(zeta) -> bool:
    return zeta is INF


@dataclass(frozen=True)
class CurveSpec:
    points: Tuple[Tuple[float, complex], ...]

    def __post_init__(self):
        pts = tuple((float(x), complex(z)) for x, z in self.points)
        if len(pts) < 2:
            raise MalformedInput(f"a curve needs k >= 2 components, got {len(pts)}")
        for idx, (x, z) in enumerate(pts):
            if not (np.isfinite(x) and np.isfinite(z.real) and np.isfinite(z.imag)):
                raise MalformedInput(f"marker {idx} is not finite", (idx,))
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_arrays(cls, x: Sequence[float], z: Sequence[complex]) -> "CurveSpec":
        if len(x) != len(z):
            raise MalformedInput(f"x has {len(x)} entries but z has {len(z)}")
        return cls(tuple(zip(x, z)))

    @property
    def k(self) -> int:
        return len(self.points)

    @property
    def genus(self) -> int:
        return (self.k - 1) ** 2

    @property
    def x(self) -> np.ndarray:
        return np.array([p[0] for p in self.points], dtype=float)

    @property
    def z(self) -> np.ndarray:
        return np.array([p[1] for p in self.points], dtype=complex)

    def markers(self) -> np.ndarray:
        """(k, 3) array of (x_i, Re z_i, Im z_i) in R³."""
        z = self.z
        return np.column_stack([self.x, z.real, z.imag])


@dataclass(frozen=True, eq=False)
class IntersectionTable:
    spec: CurveSpec
    a: np.ndarray   # (k, k) complex, a[i, j] = a_ij; diagonal unused
    r: np.ndarray   # (k, k) real symmetric, zero diagonal

    @property
    def k(self) -> int:
        return self.spec.k

    @property
    def pairs(self) -> List[Tuple[int, int]]:
        return ordered_pairs(self.k)

    def nodes_on(self, i: int) -> np.ndarray:
        """ζ-coordinates of the nodes lying on component i."""
        others = [j for j in range(self.k) if j != i]
        return np.array([self.a[i, j] for j in others] + [self.a[j, i] for j in others])

    def all_nodes(self) -> np.ndarray:
        return np.array([self.a[i, j] for i, j in self.pairs])


@dataclass(frozen=True)
class CurvePoint:
    component: int
    zeta: Zeta

    def eta(self, spec: CurveSpec) -> complex:
        return eta(spec, self.component, self.zeta)


def ordered_pairs(k: int) -> List[Tuple[int, int]]:
    """The index set P in lexicographic order."""
    return [(i, j) for i in range(k) for j in range(k) if i != j]


def _separations(spec: CurveSpec) -> np.ndarray:
    m = spec.markers()
    diff = m[:, None, :] - m[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def intersection_matrix(spec: CurveSpec) -> np.ndarray:
    """a_ij without validation; entries that would be 0/∞ come out as nan."""
    k = spec.k
    x, z = spec.x, spec.z
    r = _separations(spec)
    a = np.zeros((k, k), dtype=complex)
    for i, j in itertools.combinations(range(k), 2):
        # evaluate on the side with (x_i - x_j) + r_ij free of cancellation
        p, q = (i, j) if x[i] >= x[j] else (j, i)
        den = np.conj(z[p]) - np.conj(z[q])
        num = (x[p] - x[q]) + r[p, q]
        if den == 0 or num == 0:
            a[p, q] = a[q, p] = np.nan
            continue
        a[p, q] = num / den
        a[q, p] = -1.0 / np.conj(a[p, q])
    return a


def validate_curve(spec: CurveSpec) -> IntersectionTable:
    k = spec.k
    markers = spec.markers()
    r = _separations(spec)
    diameter = float(r.max())

    for i, j in itertools.combinations(range(k), 2):
        if r[i, j] <= EPS_GEOM * max(diameter, 1.0):
            raise DuplicateComponent(f"markers {i} and {j} coincide: the curve has a multiple component", (i, j))

    unit = (markers - markers.mean(axis=0)) / diameter
    for i, j, l in itertools.combinations(range(k), 3):
        area2 = np.linalg.norm(np.cross(unit[j] - unit[i], unit[l] - unit[i]))
        if area2 <= EPS_GEOM:
            raise CollinearPoints(
                f"markers {i}, {j}, {l} are collinear: the curve has a non-nodal singularity", (i, j, l))

    a = intersection_matrix(spec)
    for i, j in ordered_pairs(k):
        v = a[i, j]
        if not np.isfinite(v) or not (A_MIN <= abs(v) <= A_MAX):
            raise IntersectionAtPole(
                f"intersection a[{i},{j}] = {v} is at 0 or ∞ (|a| outside [{A_MIN:g}, {A_MAX:g}])", (i, j))

    pairs = ordered_pairs(k)
    for (p1, v1), (p2, v2) in itertools.combinations([(p, a[p]) for p in pairs], 2):
        if abs(v1 - v2) <= EPS_DISTINCT * max(1.0, abs(v1), abs(v2)):
            raise CoincidentIntersections(
                f"intersections a{list(p1)} and a{list(p2)} coincide at {v1}", (p1, p2))

    return IntersectionTable(spec=spec, a=a, r=r)


def eta(spec: CurveSpec, i: int, zeta: Zeta) -> complex:
    """η_i(ζ); at ζ = ∞ the leading coefficient −z̄_i."""
    if not 0 <= i < spec.k:
        raise MalformedInput(f"component index {i} out of range for k={spec.k}", (i,))
    x_i, z_i = spec.points[i]
    if is_inf(zeta):
        return -np.conj(z_i)
    zeta = complex(zeta)
    return z_i + 2.0 * x_i * zeta - np.conj(z_i) * zeta * zeta


def etas(spec: CurveSpec, zeta: complex) -> np.ndarray:
    """All η_i(ζ) at a finite ζ."""
    zeta = complex(zeta)
    z = spec.z
    return z + 2.0 * spec.x * zeta - np.conj(z) * zeta * zeta


def antipodal_zeta(zeta: Zeta) -> Zeta:
    if is_inf(zeta):
        return 0j
    zeta = complex(zeta)
    if zeta == 0:
        return INF
    return -1.0 / np.conj(zeta)


def antipodal(pt: CurvePoint) -> CurvePoint:
    return CurvePoint(pt.component, antipodal_zeta(pt.zeta))


def real_structure(zeta: complex, eta_value: complex) -> Tuple[complex, complex]:
    """τ on T over finite nonzero ζ: (ζ, η) ↦ (−1/ζ̄, −η̄/ζ̄²)."""
    zeta = complex(zeta)
    if zeta == 0:
        raise MalformedInput("real_structure needs ζ ≠ 0, ∞; use antipodal() for the poles")
    zb = np.conj(zeta)
    return -1.0 / zb, -np.conj(eta_value) / (zb * zb)


def rotate_markers(spec: CurveSpec, rotation: np.ndarray) -> CurveSpec:
    """Apply an SO(3) rotation to the markers (x_i, Re z_i, Im z_i)."""
    rot = np.asarray(rotation, dtype=float)
    if rot.shape != (3, 3):
        raise MalformedInput(f"rotation must be 3x3, got {rot.shape}")
    if not np.allclose(rot @ rot.T, np.eye(3), atol=1e-12) or np.linalg.det(rot) < 0:
        raise MalformedInput("rotation is not in SO(3)")
    moved = spec.markers() @ rot.T
    return CurveSpec.from_arrays(moved[:, 0], moved[:, 1] + 1j * moved[:, 2])

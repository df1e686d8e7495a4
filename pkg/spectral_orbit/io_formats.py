"""JSON and CSV codecs for the command line.

Component and pair indices in files are 1-based; everything in memory is
0-based.  Floats are written with ``repr`` (shortest round-trip text), so
identical inputs give byte-identical files.
"""
from __future__ import annotations
import csv
import json
import os
from typing import Any, Dict, IO, Iterable, List, Sequence, Union

import numpy as np

from .curve_core import INF, CurveSpec, IntersectionTable, ordered_pairs
from .errors import MalformedInput
from .jacobian_sections import CocycleData, Divisor, SectionFrame
from .theta_engine import JacobianPoint

PathOrData = Union[str, os.PathLike, Dict[str, Any]]

FLOW_CSV_HEADER = [
    "t",
    "trT1sq_re", "trT1sq_im", "trT2sq_re", "trT2sq_im", "trT3sq_re", "trT3sq_im",
    "theta_re", "theta_im", "dlog", "d2log", "delta",
]


def fmt_float(value: float) -> str:
    return repr(float(value))


def pair(value: complex) -> List[float]:
    value = complex(value)
    return [float(value.real), float(value.imag)]


def matrix_pairs(m: np.ndarray) -> List:
    return [[pair(v) for v in row] for row in np.asarray(m)]


def read_json(source: PathOrData) -> Dict[str, Any]:
    if isinstance(source, dict):
        return source
    try:
        with open(source, "r", encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError:
        raise MalformedInput(f"file not found: {source}")
    except OSError as e:
        raise MalformedInput(f"cannot read {source}: {e}")
    except json.JSONDecodeError as e:
        raise MalformedInput(f"{source} is not valid JSON: {e}")


def _complex_field(entry: Dict[str, Any], where: str) -> complex:
    try:
        return complex(float(entry.get("re", 0.0)), float(entry.get("im", 0.0)))
    except (TypeError, ValueError):
        raise MalformedInput(f"{where}: re/im must be numbers")


def _index(entry: Dict[str, Any], key: str, k: int, where: str) -> int:
    try:
        value = int(entry[key])
    except (KeyError, TypeError, ValueError):
        raise MalformedInput(f"{where}: missing or non-integer '{key}'")
    if not 1 <= value <= k:
        raise MalformedInput(f"{where}: {key}={value} outside 1..{k}")
    return value - 1


# ---------- curve ----------
def load_curve(source: PathOrData) -> CurveSpec:
    data = read_json(source)
    points = data.get("points")
    if not isinstance(points, list):
        raise MalformedInput("curve JSON needs a 'points' list")
    try:
        xs = [float(p["x"]) for p in points]
        zs = [complex(float(p["z"][0]), float(p["z"][1])) for p in points]
    except (KeyError, TypeError, ValueError, IndexError):
        raise MalformedInput("each curve point needs 'x' and 'z': [re, im]")
    if "k" in data and int(data["k"]) != len(points):
        raise MalformedInput(f"curve JSON declares k={data['k']} but lists {len(points)} points")
    return CurveSpec.from_arrays(xs, zs)


def curve_to_dict(spec: CurveSpec) -> Dict[str, Any]:
    return {"k": spec.k, "points": [{"x": x, "z": pair(z)} for x, z in spec.points]}


def table_to_dict(table: IntersectionTable) -> Dict[str, Any]:
    return {
        "k": table.k,
        "genus": table.spec.genus,
        "a": [{"i": i + 1, "j": j + 1, "re": float(table.a[i, j].real), "im": float(table.a[i, j].imag)}
              for i, j in ordered_pairs(table.k)],
        "r": [[float(v) for v in row] for row in table.r],
    }


# ---------- gluing / points ----------
def load_gluing(source: PathOrData, k: int) -> JacobianPoint:
    """Matching ratios; pairs left out of the file default to 1."""
    data = read_json(source)
    entries = data.get("ratios")
    if not isinstance(entries, list):
        raise MalformedInput("gluing JSON needs a 'ratios' list")
    rho = np.ones((k, k), dtype=complex)
    seen = set()
    for n, entry in enumerate(entries):
        where = f"ratios[{n}]"
        i, j = _index(entry, "i", k, where), _index(entry, "j", k, where)
        if i == j:
            raise MalformedInput(f"{where}: i and j must differ")
        if (i, j) in seen:
            raise MalformedInput(f"{where}: pair ({i + 1},{j + 1}) listed twice")
        seen.add((i, j))
        rho[i, j] = _complex_field(entry, where)
    return JacobianPoint.from_ratios(rho)


def point_to_dict(pt: JacobianPoint) -> Dict[str, Any]:
    return {"ratios": [{"i": i + 1, "j": j + 1, "re": float(pt.ratios[i, j].real), "im": float(pt.ratios[i, j].imag)}
                       for i, j in ordered_pairs(pt.k)]}


def _zeta_field(value, where: str):
    if isinstance(value, str):
        if value.strip().lower() == "inf":
            return INF
        raise MalformedInput(f"{where}: unknown point {value!r}")
    try:
        return complex(float(value[0]), float(value[1]))
    except (TypeError, ValueError, IndexError):
        raise MalformedInput(f"{where}: points are [re, im] or \"inf\"")


def load_divisor(source: PathOrData) -> Divisor:
    data = read_json(source)
    try:
        n = int(data["n"])
        comps = data["points"]
    except (KeyError, TypeError, ValueError):
        raise MalformedInput("divisor JSON needs 'n' and 'points'")
    points = tuple(tuple(_zeta_field(v, f"points[{i}][{m}]") for m, v in enumerate(comp))
                   for i, comp in enumerate(comps))
    return Divisor(n=n, points=points)


def load_cocycle(source: PathOrData) -> CocycleData:
    data = read_json(source)
    try:
        k = int(data["k"])
        entries = data["coefficients"]
    except (KeyError, TypeError, ValueError):
        raise MalformedInput("cocycle JSON needs 'k' and 'coefficients'")
    coeffs = {}
    for m, entry in enumerate(entries):
        where = f"coefficients[{m}]"
        try:
            key = (int(entry["n"]), int(entry["i"]))
        except (KeyError, TypeError, ValueError):
            raise MalformedInput(f"{where}: needs integer 'n' and 'i'")
        coeffs[key] = _complex_field(entry, where)
    return CocycleData(k=k, coefficients=coeffs)


# ---------- frames ----------
def polynomial_to_dict(poly) -> Dict[str, Any]:
    return {"A0": matrix_pairs(poly.A0), "A1": matrix_pairs(poly.A1), "A2": matrix_pairs(poly.A2)}


def frame_to_dict(frame: SectionFrame) -> Dict[str, Any]:
    """coefficients[i][l][n]: component i, section l, power n."""
    return {
        "k": frame.k,
        "coefficients": [[[pair(c) for c in frame.coeffs[i, l]] for l in range(frame.k)] for i in range(frame.k)],
    }


# ---------- writers ----------
def resolve_out(path: str, out_dir: str = "") -> str:
    if out_dir and not os.path.isabs(path):
        return os.path.join(out_dir, path)
    return path


def write_json(obj: Any, stream: IO[str]) -> None:
    json.dump(obj, stream, ensure_ascii=False, indent=2)
    stream.write("\n")


def write_csv(header: Sequence[str], rows: Iterable[Sequence[float]], stream: IO[str]) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt_float(v) for v in row])

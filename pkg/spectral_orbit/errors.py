"""Exception hierarchy.

Everything raised on purpose by the package derives from ``SpectralOrbitError``
(itself a ``RuntimeError``).  ``ValidationError`` covers bad input or a
precondition that does not hold; ``NumericalFailure`` covers computations that
ran into Θ, a singular evaluation or an unstable integration.  The CLI maps
the two families to exit codes 1 and 2.

Classes with ``positional = True`` carry 0-based component, pair or section
positions in ``indices``; the rest carry scalars (t, ζ, k).
"""
from __future__ import annotations
from typing import Any, Dict, Sequence


def _plain(value: Any, shift: int = 0) -> Any:
    if isinstance(value, (tuple, list)):
        return [_plain(v, shift) for v in value]
    if isinstance(value, complex):
        return [value.real, value.imag]
    if hasattr(value, "item"):
        value = value.item()
    if shift and isinstance(value, int) and not isinstance(value, bool):
        return value + shift
    return value


class SpectralOrbitError(RuntimeError):
    exit_code = 1
    positional = False

    def __init__(self, message: str, indices: Sequence[Any] = ()):
        super().__init__(message)
        self.indices = tuple(indices)

    @property
    def name(self) -> str:
        return type(self).__name__

    def to_dict(self, one_based: bool = False) -> Dict[str, Any]:
        shift = 1 if one_based and self.positional else 0
        return {"error": self.name, "message": str(self), "indices": _plain(self.indices, shift)}


class ValidationError(SpectralOrbitError):
    exit_code = 1


class NumericalFailure(SpectralOrbitError):
    exit_code = 2


# ---------- validation ----------
class MalformedInput(ValidationError):
    positional = True

class DuplicateComponent(ValidationError):
    positional = True

class CollinearPoints(ValidationError):
    positional = True

class CoincidentIntersections(ValidationError):
    positional = True

class IntersectionAtPole(ValidationError):
    positional = True

class SizeLimit(ValidationError):
    pass

class PointAtNode(ValidationError):
    positional = True

class FibreCollision(ValidationError):
    pass

class NotReal(ValidationError):
    pass

class NotPositive(ValidationError):
    positional = True

class NonzeroMass(ValidationError):
    positional = True

class DomainError(ValidationError):
    pass

class GridMismatch(ValidationError):
    pass


# ---------- numerical ----------
class NearTheta(NumericalFailure):
    pass

class OnTheta(NumericalFailure):
    positional = True

class SingularEvaluation(NumericalFailure):
    pass

class QuadraticityFailure(NumericalFailure):
    pass

class AllColumnsVanish(NumericalFailure):
    positional = True

class InconsistentFrame(NumericalFailure):
    positional = True

class BlowUp(NumericalFailure):
    pass

class NegativePotential(NumericalFailure):
    pass

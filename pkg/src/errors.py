"""Exception hierarchy shared by every service.

Errors caused by bad caller input also derive from ``ValueError`` so the CLI
and the HTTP layer can treat them uniformly as invalid parameters.
"""


class LabError(Exception):
    pass


# ─── statevec ─────────────────────────────────────────────────────────────────

class LengthMismatch(LabError, ValueError):
    pass


class NotNormalized(LabError, ValueError):
    pass


class LabelClash(LabError, ValueError):
    pass


class LayoutMismatch(LabError, ValueError):
    pass


class UnknownLabel(LabError, ValueError):
    pass


class DimensionMismatch(LabError, ValueError):
    pass


class NotIsometry(LabError, ValueError):
    pass


# ─── exchange ─────────────────────────────────────────────────────────────────

class IdenticalStates(LabError, ValueError):
    pass


class DomainError(LabError, ValueError):
    pass


class WrongInput(LabError, ValueError):
    pass


class ControlDimMismatch(LabError, ValueError):
    pass


class DimensionTooSmall(LabError, ValueError):
    pass


class NetTooLarge(LabError, ValueError):
    pass


class EmptyNet(LabError, ValueError):
    pass


# ─── game / optimizer / completeness ──────────────────────────────────────────

class MissingRegisters(LabError, ValueError):
    pass


class TooLarge(LabError, ValueError):
    pass


class UnsupportedStrategy(LabError, ValueError):
    pass


class NotUnitary(LabError, ValueError):
    pass


class NotAQubit(LabError, ValueError):
    pass


class BackendUnsupported(LabError, ValueError):
    pass


class BoundViolation(LabError, AssertionError):
    """An internal consistency check failed (bound exceeded, formula mismatch)."""

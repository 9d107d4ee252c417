"""Exception hierarchy.

Errors fall into three families that map onto command-line exit codes:
certification failures (a boundary condition or family violates a
hypothesis), numerical failures (a solver or rank decision could not be
certified), and input failures (bad meshes, files or configurations).
"""


class QDiracError(Exception):
    """Base class for all package errors."""

    exit_code = 2


class CertificationError(QDiracError):
    """A geometric hypothesis (ellipticity, self-adjointness) fails."""

    exit_code = 1


class NumericalError(QDiracError):
    """A numerical decision could not be made with the required certainty."""

    exit_code = 2


class InputError(QDiracError):
    """Malformed input: mesh, file, resolution or configuration."""

    exit_code = 3


# certification
class NotElliptic(CertificationError):
    pass


class NotSelfAdjoint(CertificationError):
    pass


class AsymmetryTooLarge(CertificationError):
    pass


# numerical
class ZeroSpinor(NumericalError):
    pass


class AllZeroSpinor(NumericalError):
    pass


class DegenerateFrame(NumericalError):
    pass


class DegenerateFace(NumericalError):
    pass


class InsufficientResolution(NumericalError):
    pass


class SolverFailure(NumericalError):
    pass


class AmbiguousRank(NumericalError):
    """No certified singular-value gap; carries the offending report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class WindowLeak(NumericalError):
    pass


class ClusterSplit(NumericalError):
    pass


class NoSymmetry(NumericalError):
    pass


class BoundaryNotPlanar(NumericalError):
    pass


class WeldFailure(NumericalError):
    pass


class RankUnstable(NumericalError):
    pass


class MismatchBeyondTolerance(NumericalError):
    pass


# input
class InvalidResolution(InputError):
    pass


class NonManifold(InputError):
    pass


class ParseError(InputError):
    pass


class NonTriangleFace(ParseError):
    pass


class MissingFrame(InputError):
    pass


class FamilyNotClosed(InputError):
    pass


class WrongMesh(InputError):
    pass


class ConfigError(InputError):
    pass

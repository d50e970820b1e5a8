"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations


class SaaError(Exception):
    """Base class for all errors raised by this package."""


class DslSyntaxError(SaaError):
    def __init__(self, message: str, line: int, col: int, source: str = ""):
        self.line = line
        self.col = col
        self.source = source
        super().__init__(f"{message} (line {line}, col {col})")


class UnknownIdentifier(DslSyntaxError):
    pass


class DomainError(SaaError):
    """Jet evaluation left the domain of an expression (division by zero, sqrt <= 0)."""

    def __init__(self, message: str, node=None, point=None):
        self.node = node
        self.point = None if point is None else tuple(float(v) for v in point)
        super().__init__(f"{message} at point {self.point}" if point is not None else message)


class UnknownPreset(SaaError):
    pass


class MissingParameter(SaaError):
    pass


class SingularDegenerate(SaaError):
    """h_c0c vanishes (within tolerance) so the singular feedback is undefined."""


class NoConvergence(SaaError):
    pass


class InvariantBlowup(SaaError):
    """Constraint drift of the singular locus exceeded the configured tolerance."""


class SingularMatrix(SaaError):
    pass


class CrossCheckFailure(SaaError):
    pass


class DegenerateFrame(SaaError):
    pass


class InconclusiveScan(SaaError):
    """The conjugate-time scan could not separate zeros of the pairing determinant from noise."""


class ConfigError(SaaError):
    pass

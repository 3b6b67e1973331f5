"""Exception hierarchy shared by all modules."""


class MaslovShootError(Exception):
    """Base class for all library errors."""


# integration / linear algebra
class NonFinite(MaslovShootError):
    pass


class StepFailure(MaslovShootError):
    pass


class NotUnitary(MaslovShootError):
    pass


class TrackingAmbiguity(MaslovShootError):
    pass


class NoBracket(MaslovShootError):
    pass


# expressions
class ExprError(MaslovShootError, ValueError):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, message, offset, expected=()):
        self.offset = offset
        self.expected = tuple(sorted(set(expected)))
        exp = ", ".join(self.expected)
        super().__init__(f"{message} at offset {offset}" + (f" (expected one of: {exp})" if exp else ""))


class UnknownIdentifier(ExprError):
    def __init__(self, name, offset=None):
        self.name = name
        self.offset = offset
        where = f" at offset {offset}" if offset is not None else ""
        super().__init__(f"unknown identifier {name!r}{where}")


class DomainError(ExprError):
    def __init__(self, message, subexpression):
        self.subexpression = subexpression
        super().__init__(f"{message} in {subexpression}")


# linear Hamiltonian machinery
class NotSplit(MaslovShootError):
    pass


class RankLoss(MaslovShootError):
    pass


class NotInvertible(MaslovShootError):
    pass


class TangentialCrossing(MaslovShootError):
    pass


class NonRegularCrossing(TangentialCrossing):
    pass


class EpsilonNotFound(MaslovShootError):
    pass


class Degenerate(MaslovShootError):
    pass


class DegenerateEndpoint(Degenerate):
    pass


# scalar Sturm theory
class BracketFailure(MaslovShootError):
    pass


class HypothesisViolated(MaslovShootError):
    pass


class AngleMismatch(MaslovShootError):
    pass


# nonlinear problem
class NoSeparation(MaslovShootError):
    def __init__(self, message, profile=None):
        self.profile = profile
        super().__init__(message)


class BoundViolated(MaslovShootError):
    pass


class ConsistencyViolation(MaslovShootError):
    pass


# shooting
class NotFound(MaslovShootError):
    def __init__(self, message, best_alpha=None, best_residual=None):
        self.best_alpha = best_alpha
        self.best_residual = best_residual
        super().__init__(message)


class CertificateMismatch(MaslovShootError):
    pass


# problem files
class ProblemFileError(MaslovShootError):
    pass


class ParseError(ProblemFileError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        loc = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + loc)


class DimensionMismatch(ProblemFileError):
    pass


class NonDiagonalAsymptote(ProblemFileError):
    pass

"""Exception hierarchy.

Every error raised on purpose by the package derives from ``MidAttrError`` so
callers (and the CLI) can catch the whole family at once. Value-type problems
also derive from ``ValueError``.
"""


class MidAttrError(Exception):
    """Base class for all package errors."""


# -- core types -------------------------------------------------------------

class ValidationError(MidAttrError, ValueError):
    """A value violates a type invariant."""


class NonPositiveStddev(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class WeightSumOutOfTolerance(ValidationError):
    pass


class NegativeWeight(ValidationError):
    pass


class EmptyMixture(ValidationError):
    pass


class WeightLengthMismatch(ValidationError):
    pass


class DuplicateLabel(ValidationError):
    pass


class UnknownLabel(MidAttrError, KeyError):
    def __str__(self):
        # KeyError quotes its argument; keep messages plain
        return str(self.args[0]) if self.args else ""


# -- transport solver ------------------------------------------------------

class LPError(MidAttrError):
    pass


class Infeasible(LPError):
    pass


class Unbounded(LPError):
    pass


# -- barycenter --------------------------------------------------------------

class CandidateCountOverflow(MidAttrError):
    pass


class InvalidPlan(MidAttrError):
    pass


class AllComponentsPruned(MidAttrError):
    pass


# -- sampling / fitting ---------------------------------------------------

class EmptySampleSet(MidAttrError, ValueError):
    pass


class TooFewPoints(MidAttrError, ValueError):
    pass


class DegenerateComponent(MidAttrError):
    pass


# -- io ----------------------------------------------------------------------

class ParseError(MidAttrError):
    pass


class UnsupportedVersion(MidAttrError):
    pass

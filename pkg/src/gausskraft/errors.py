"""Exception hierarchy shared by all gausskraft modules."""

from __future__ import annotations


class GausskraftError(Exception):
    """Base class for every error raised by the package."""


class ZeroVector(GausskraftError, ValueError):
    pass


class DegeneratePolygon(GausskraftError, ValueError):
    pass


class NonPositiveDot(GausskraftError, ValueError):
    pass


class ToleranceNotReached(GausskraftError, RuntimeError):
    pass


class HullDegenerate(GausskraftError, ValueError):
    pass


class OriginNotInterior(GausskraftError, ValueError):
    pass


class NonTangent(GausskraftError, ValueError):
    pass


class UnsupportedDimension(GausskraftError, ValueError):
    pass


class TooLarge(GausskraftError, ValueError):
    pass


class Infeasible(GausskraftError, ValueError):
    pass


class NonPositiveDensity(GausskraftError, ValueError):
    pass


class InvalidInstance(GausskraftError, ValueError):
    """Instance failed admissibility; ``report`` holds the failed checks."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report

"""Typed errors raised by gazekit operations.

All operational failures derive from :class:`GazekitError` so callers (and
the CLI) can distinguish data problems from programming bugs. Errors that
carry a payload (line number, offending value) expose it as an attribute.
"""

from __future__ import annotations


class GazekitError(Exception):
    """Base class for all data/operation errors in this package."""


# --- file format errors -------------------------------------------------


class MalformedHeader(GazekitError):
    pass


class MalformedRow(GazekitError):
    def __init__(self, line_no: int, message: str = ""):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}" if message else f"line {line_no}")


class MalformedLine(GazekitError):
    def __init__(self, line_no: int, message: str = ""):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}" if message else f"line {line_no}")


class NonIncreasingOrder(GazekitError):
    def __init__(self, line_no: int, message: str = "noun orders must be consecutive ranks 1..n"):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


class BadMagic(GazekitError):
    pass


class TruncatedPayload(GazekitError):
    pass


class UnsupportedFormat(GazekitError):
    pass


class UnknownCategory(GazekitError):
    def __init__(self, value: int):
        self.value = value
        super().__init__(f"category id {value} not present in category table")


class DuplicateImage(GazekitError):
    def __init__(self, image_id: str):
        self.image_id = image_id
        super().__init__(f"duplicate image_id {image_id!r}")


# --- numeric / analysis errors ------------------------------------------


class EmptyFixations(GazekitError):
    pass


class OutOfBounds(GazekitError):
    pass


class DimensionMismatch(GazekitError):
    pass


class EmptyList(GazekitError):
    pass


class ZeroVariance(GazekitError):
    pass


class AllPixelsFixated(GazekitError):
    pass


class EmptyPool(GazekitError):
    pass


class NotNormalized(GazekitError):
    pass


class LengthMismatch(GazekitError):
    pass


class TooFew(GazekitError):
    pass


class EmptyClass(GazekitError):
    pass


class EmptyDenominator(GazekitError):
    pass


class TooFewSubjects(GazekitError):
    pass


class MissingTranscript(GazekitError):
    def __init__(self, image_id: str, subject_id: str):
        self.image_id = image_id
        self.subject_id = subject_id
        super().__init__(f"no transcript for image {image_id!r}, subject {subject_id!r}")


class NoRegions(GazekitError):
    pass


class EmptySequence(GazekitError):
    pass


class NoWinner(GazekitError):
    pass


class EmptyFeatureSet(GazekitError):
    pass


class NonFiniteScore(GazekitError):
    pass

"""Exception hierarchy.

Every error raised by the package derives from :class:`GenostratError` and
belongs to one of four categories.  The CLI maps the category to an exit code.
"""


class GenostratError(ValueError):
    category = "data"


class ParseError(GenostratError):
    category = "parse"


class ConfigError(GenostratError):
    category = "config"


class DataError(GenostratError):
    category = "data"


class NumericError(GenostratError):
    category = "numeric"


# parsing
class MalformedPanelLine(ParseError):
    pass


class DuplicateSample(ParseError):
    pass


class MissingHeader(ParseError):
    pass


class ColumnCountMismatch(ParseError):
    pass


class BadGenotypeToken(ParseError):
    pass


class BadPosition(ParseError):
    pass


# data / contract violations
class MissingAllele(DataError):
    pass


class ZeroAlleleNumber(DataError):
    pass


class CountExceedsNumber(DataError):
    pass


class InconsistentSampleSet(DataError):
    pass


class UnknownSample(DataError):
    pass


class ClassTooSmall(DataError):
    pass


class SingleClass(DataError):
    pass


class EmptyDataset(DataError):
    pass


class EmptyGrid(ConfigError):
    pass


class ShapeMismatch(DataError):
    pass


class ValueOutOfRange(DataError):
    pass


class TooLarge(DataError):
    pass


class KTooLarge(DataError):
    pass


class NotPretrained(DataError):
    pass


class UnknownLabel(DataError):
    pass


class LengthMismatch(DataError):
    pass


class EmptyMatrix(DataError):
    pass


class TooFewPoints(DataError):
    pass


class CorruptArtifact(DataError):
    pass


class VersionMismatch(ConfigError):
    pass


# numerics
class DegenerateCluster(NumericError):
    pass


class ZeroQEntry(NumericError):
    pass


class ZeroValidationLoss(NumericError):
    pass


class MonotonicityViolation(NumericError):
    pass

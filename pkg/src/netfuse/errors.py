"""Exception types raised by netfuse.

Every validation error names the first offending entry so failures in
large inputs stay debuggable.
"""


class NetfuseError(Exception):
    """Base class for all netfuse errors."""


class ValidationError(NetfuseError, ValueError):
    """Malformed input data or matrix."""


class EmptyInput(ValidationError):
    """An operation received an empty collection where entries are required."""


class RosterMismatch(ValidationError):
    """Two objects that must share a node roster do not."""


class AsymmetricMatrix(ValidationError):
    """A matrix required to be symmetric is not, beyond tolerance."""


class NonFiniteEntry(ValidationError):
    """A matrix or vector contains NaN or infinity."""


class RangeError(ValidationError):
    """An entry lies outside its admissible interval beyond tolerance."""


class FormatError(ValidationError):
    """A serialized matrix file is malformed or fails its checksum."""


class ZeroAuthors(ValidationError):
    """A work slated for fractional author counting has no authors."""


class ZeroVector(ValidationError):
    """A vector with zero norm where a direction is required."""


class EmptyJournal(ValidationError):
    """A journal has no document vectors to take a medoid over."""


class SampleTooSmall(ValidationError):
    """Too few observations for the requested statistic."""


class DegenerateSample(ValidationError):
    """A sample with zero distance variance; correlation is undefined."""


class DegenerateConditioning(NetfuseError):
    """A conditioning matrix fully explains one argument; the partial
    statistic's denominator underflows."""


class IsolatedNode(ValidationError):
    """A node with zero total affinity cannot be row-normalized."""


class EmptyIntersection(NetfuseError):
    """Period rosters share no nodes."""


class StageError(NetfuseError):
    """A pipeline stage failed; partial outputs are kept with a .partial suffix."""

    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"stage {stage!r}: {message}")

"""Exception types shared across the package."""


class OdseError(Exception):
    """Base class for all errors raised by this package."""


class MatrixFormatError(OdseError):
    """A substitution-matrix file is malformed.

    Carries the 1-based line number of the offending line when known.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class CostModelError(OdseError):
    """A similarity matrix cannot be turned into a valid cost model."""


class SymbolError(OdseError):
    """A sequence contains a symbol outside the active alphabet."""

    def __init__(self, sequence_id, position, symbol):
        super().__init__(
            f"sequence {sequence_id!r}: symbol {symbol!r} at position "
            f"{position} is not in the alphabet"
        )
        self.sequence_id = sequence_id
        self.position = position
        self.symbol = symbol


class TrainingError(OdseError):
    """A classifier cannot be trained on the given data."""


class SynthesisError(OdseError):
    """Model synthesis failed for a specific parameter setting."""


class DatasetError(OdseError):
    """Dataset ingestion or split construction failed."""

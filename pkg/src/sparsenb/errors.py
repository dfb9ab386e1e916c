"""Exception types shared across the package."""


class SparseNBError(Exception):
    """Base class for errors raised by this package."""


class ParseError(SparseNBError):
    """Malformed input file; carries 1-based row/column position when known."""

    def __init__(self, message, row=None, column=None):
        pos = ""
        if row is not None:
            pos += f" (row {row}"
            pos += f", column {column})" if column is not None else ")"
        super().__init__(message + pos)
        self.row = row
        self.column = column


class SchemaError(SparseNBError):
    """Column declarations do not match the data."""


class ValidationError(SparseNBError):
    """Structurally valid input that violates a semantic requirement."""


def record_warning(sink, message):
    """Append *message* to *sink* if given, else emit a Python warning."""
    if sink is not None:
        sink.append(message)
    else:
        import warnings

        warnings.warn(message, stacklevel=2)

# SPDX-FileCopyrightText: 2024 ganalyzer contributors
#
# SPDX-License-Identifier: BSD-3-Clause

"""The exceptions module defines exception classes for the error conditions of the latent-space toolkit.

Every failure a caller can act on maps to one class below, so library users can catch precisely what they expect
and the command-line interface can translate each family into its own exit status.

Classes:
    GanalyzerException: The base exception class for all ganalyzer errors.
    StoreFormatError: Raised when a store, stats bundle, label or manifest file is malformed.
    BadMagic: Raised when a binary file does not start with the expected magic bytes.
    UnsupportedVersion: Raised when a binary file declares a format version this release cannot read.
    TruncatedPayload: Raised when a binary file ends before its declared payload.
    NonFiniteValue: Raised when a NaN or infinite component is encountered.
    CSVFormatError: Raised when a CSV row has the wrong arity or an unparsable number.
    DimensionMismatch: Raised when vectors, stores, statistics or scorers disagree on the latent dimension.
    ValidationError: Raised when a parameter or document violates its declared constraints.
    UnknownClass: Raised when a class id is not part of the attribute taxonomy.
    InsufficientSamples: Raised when an operation lacks the samples it needs.
    NumericalError: Raised when the eigensolver fails or a transform produces a non-finite vector.
    RemoteError: The base exception class for failures of the remote inference services.
    TransportError: Raised when a chunk request fails at transport level or with a non-2xx status.
    SchemaError: Raised when a service response violates the wire schema.
"""


class GanalyzerException(Exception):
    """Base exception class for all ganalyzer errors."""


class StoreFormatError(GanalyzerException):
    """Exception raised when a latent store, stats bundle, label table or manifest file is malformed.

    Specific malformations have their own subclasses; this class is raised directly for structural
    violations such as an oversized dimension or ids that are not strictly increasing.
    """


class BadMagic(StoreFormatError):
    """Exception raised when a binary file does not start with the expected magic bytes."""


class UnsupportedVersion(StoreFormatError):
    """Exception raised when a binary file declares a format version that cannot be read."""


class TruncatedPayload(StoreFormatError):
    """Exception raised when a binary file ends before the payload its header declares."""


class NonFiniteValue(StoreFormatError):
    """Exception raised when a NaN or infinite component is read from a file."""


class CSVFormatError(GanalyzerException):
    """Exception raised when a CSV file cannot be imported.

    The message names the 1-based row number of the offending row.
    """


class DimensionMismatch(GanalyzerException, ValueError):
    """Exception raised when two objects disagree on the latent dimension d."""


class ValidationError(GanalyzerException, ValueError):
    """Exception raised when a parameter or a parsed document violates its constraints.

    Examples are an edit gain below 1, a retention percentage outside (0, 100], a non-positive undesired
    strength, an unknown field in an edit or plan document, or duplicate plan entry names.
    """


class UnknownClass(ValidationError):
    """Exception raised when a class id is not part of the attribute taxonomy."""


class InsufficientSamples(GanalyzerException):
    """Exception raised when an operation lacks the samples it needs.

    Class statistics need at least two members; aggregations over label tables need at least one row.
    """


class NumericalError(GanalyzerException):
    """Exception raised when the eigensolver fails or a transform yields a non-finite vector."""


class RemoteError(GanalyzerException):
    """Base exception class for failures of the remote inference services."""


class TransportError(RemoteError):
    """Exception raised when a chunk request fails at transport level or keeps answering with a non-2xx status.

    Attributes:
        chunk_index: The 0-based index of the chunk whose request failed.
    """

    def __init__(self, message: str, chunk_index: int) -> None:
        super().__init__(message)
        self.chunk_index = chunk_index


class SchemaError(RemoteError):
    """Exception raised when a service response violates the wire schema.

    Attributes:
        index: The 0-based index of the offending item in the request, or None if the whole response is unusable.
    """

    def __init__(self, message: str, index: int | None = None) -> None:
        super().__init__(message)
        self.index = index

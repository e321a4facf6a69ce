# SPDX-FileCopyrightText: 2024 ganalyzer contributors
#
# SPDX-License-Identifier: BSD-3-Clause

"""The utils module provides helpers shared by the file formats, the transforms and the remote client.

Functions:
    log_response: Log the details of an HTTP response.
    frozen_array: Copy values into a read-only numpy array.
    is_batch: Check whether an array is an (n, d) matrix of latent vectors.
    as_latent_vector: Validate and convert values into a latent vector of a given dimension.
    validate_alpha: Check the edit gain constraint.
    validate_beta: Check the eigenvector retention percentage constraint.
    validate_delta: Check the undesired-mean strength constraint.
    finite_number: Read a finite number from a parsed JSON object.
    check_fields: Check the keys of a parsed JSON object.
    canonical_json: Serialize an object to deterministic compact JSON.
    atomic_write_bytes: Replace a file atomically with the given bytes.
    atomic_write_text: Replace a file atomically with the given text.
    chunked: Split a sequence into consecutive chunks.

Classes:
    ByteReader: A cursor over a binary buffer that raises TruncatedPayload instead of reading short.
"""

from __future__ import annotations

import json
import logging
import math
import os
import struct
import tempfile
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np

from ganalyzer.exceptions import DimensionMismatch, TruncatedPayload, ValidationError

if TYPE_CHECKING:
    from collections.abc import Iterator, Mapping, Sequence

    import httpx
    import numpy.typing as npt

logger = logging.getLogger(__name__)

BATCH_NDIM: int = 2
MAX_BETA: float = 100.0


def log_response(response: httpx.Response) -> None:
    """Log the details of an HTTP response.

    This function logs the HTTP method, URL, and status code of the response for debugging purposes.
    It uses the 'debug' logging level to provide detailed diagnostic information.

    Args:
        response: The response object received from an HTTP request.
    """
    logger.debug(
        "[http] Response: %s %s - Status %s", response.request.method, response.request.url, response.status_code
    )


def frozen_array(values: npt.ArrayLike, dtype: type = np.float64) -> np.ndarray:
    """Copy values into a new read-only numpy array of the given dtype."""
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


def is_batch(matrix: np.ndarray, dimension: int | None = None) -> bool:
    """Return whether matrix is an (n, d) matrix, with d equal to dimension if one is given."""
    return matrix.ndim == BATCH_NDIM and (dimension is None or matrix.shape[1] == dimension)


def as_latent_vector(values: npt.ArrayLike, dimension: int, name: str = "z") -> np.ndarray:
    """Validate and convert values into a 1-D float64 latent vector.

    Args:
        values: The vector components.
        dimension: The expected number of components.
        name: The argument name used in error messages.

    Returns:
        A float64 array of shape (dimension,).

    Raises:
        DimensionMismatch: If the vector is not 1-D or has the wrong length.
        ValidationError: If a component is NaN or infinite.
    """
    vector = np.asarray(values, dtype=np.float64)
    if vector.ndim != 1 or vector.shape[0] != dimension:
        raise DimensionMismatch("%s has shape %s, expected (%d,)" % (name, vector.shape, dimension))
    if not np.isfinite(vector).all():
        raise ValidationError("%s has non-finite components" % name)
    return vector


def validate_alpha(alpha: float) -> float:
    """Return alpha if it satisfies alpha ≥ 1.

    Raises:
        ValidationError: If alpha is below 1 or not finite.
    """
    if not math.isfinite(alpha) or alpha < 1:
        raise ValidationError("Invalid value for 'alpha': %s. alpha must be ≥ 1." % alpha)
    return float(alpha)


def validate_beta(beta: float) -> float:
    """Return beta if it lies in (0, 100].

    Raises:
        ValidationError: If beta is outside (0, 100].
    """
    if not 0 < beta <= MAX_BETA:
        raise ValidationError("Invalid value for 'beta': %s. beta must be in (0, 100]." % beta)
    return float(beta)


def validate_delta(delta: float) -> float:
    """Return delta if it is positive and finite.

    Raises:
        ValidationError: If delta is not a positive finite number.
    """
    if not math.isfinite(delta) or delta <= 0:
        raise ValidationError("Invalid value for 'delta': %s. delta must be > 0." % delta)
    return float(delta)


def finite_number(data: Mapping[str, Any], key: str, where: str) -> float:
    """Return data[key] as a float.

    Raises:
        ValidationError: If the value is a boolean, not a number, or not finite.
    """
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ValidationError("%s: %r must be a finite number, got %r" % (where, key, value))
    return float(value)


def check_fields(data: Any, allowed: frozenset[str], required: frozenset[str], where: str) -> None:
    """Check that a parsed JSON value is an object with only allowed and all required keys.

    Raises:
        ValidationError: If data is not an object, has unknown keys, or lacks required keys.
    """
    if not isinstance(data, dict):
        raise ValidationError("%s must be a JSON object" % where)
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ValidationError("%s: unknown fields %s" % (where, unknown))
    missing = sorted(required - set(data))
    if missing:
        raise ValidationError("%s: missing fields %s" % (where, missing))


def canonical_json(obj: Any) -> str:
    """Serialize an object to compact JSON with sorted keys and without NaN or infinity."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False)


def atomic_write_bytes(path: str | os.PathLike[str], data: bytes) -> None:
    """Replace the file at path with data.

    The bytes are written to a temporary file in the target directory which is then renamed over the target,
    so readers see either the old or the new content.
    """
    target = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp", dir=target.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, target)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    logger.debug("Wrote %d bytes to %s", len(data), target)


def atomic_write_text(path: str | os.PathLike[str], text: str) -> None:
    """Replace the file at path with UTF-8 encoded text."""
    atomic_write_bytes(path, text.encode("utf-8"))


def chunked(items: Sequence[Any], size: int) -> Iterator[Sequence[Any]]:
    """Yield consecutive slices of at most size items."""
    if size < 1:
        raise ValidationError("Invalid chunk size: %s. Chunk size must be ≥ 1." % size)
    for start in range(0, len(items), size):
        yield items[start : start + size]


class ByteReader:
    """A cursor over a binary buffer.

    Every read checks the remaining length first and raises TruncatedPayload when the buffer ends early,
    so callers never allocate from a corrupted length field.

    Args:
        data: The buffer to read.
        what: A description of the file used in error messages.
    """

    def __init__(self, data: bytes, what: str) -> None:
        self.data = data
        self.what = what
        self.offset = 0

    @property
    def remaining(self) -> int:
        """Return the number of unread bytes."""
        return len(self.data) - self.offset

    def take(self, size: int) -> bytes:
        """Read exactly size bytes."""
        if size > self.remaining:
            raise TruncatedPayload(
                "Truncated payload in %s: needed %d bytes at offset %d, %d available"
                % (self.what, size, self.offset, self.remaining)
            )
        chunk = self.data[self.offset : self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt: str) -> tuple[Any, ...]:
        """Read and unpack a little-endian struct format."""
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def float64s(self, count: int) -> np.ndarray:
        """Read count little-endian float64 values."""
        raw = self.take(8 * count)
        if not count:
            return np.empty(0, dtype=np.float64)
        return np.frombuffer(raw, dtype="<f8").astype(np.float64)

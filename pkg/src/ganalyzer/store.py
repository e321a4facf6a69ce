# SPDX-FileCopyrightText: 2024 ganalyzer contributors
#
# SPDX-License-Identifier: BSD-3-Clause

"""The store module reads and writes latent stores in the binary "GNLZ" format and as CSV.

Binary layout, all integers and floats little-endian:

    magic "GNLZ" | version u32 (=1) | d u32 | count u64
    count × (id u64, d × f64)
    manifest length u32 | manifest UTF-8 JSON

Functions:
    write_store: Write a store atomically in the binary format.
    read_store: Read and validate a binary store file.
    import_csv: Build a store from a CSV file.
    export_csv: Write a store as CSV with full round-trip precision.
    sample_store: Draw a seeded standard-normal store.
    is_binary_store: Check whether a file starts with the store magic.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import struct
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np

from ganalyzer.exceptions import (
    BadMagic,
    CSVFormatError,
    NonFiniteValue,
    StoreFormatError,
    UnsupportedVersion,
    ValidationError,
)
from ganalyzer.models import MAX_DIMENSION, LatentStore
from ganalyzer.utils import ByteReader, atomic_write_bytes, atomic_write_text, canonical_json

if TYPE_CHECKING:
    import os

logger = logging.getLogger(__name__)

MAGIC: bytes = b"GNLZ"
VERSION: int = 1
HEADER = struct.Struct("<4sIIQ")


def _record_dtype(dimension: int) -> np.dtype:
    return np.dtype([("id", "<u8"), ("vector", "<f8", (dimension,))])


def encode_store(store: LatentStore) -> bytes:
    """Return the binary representation of a store."""
    records = np.empty(store.count, dtype=_record_dtype(store.dimension))
    records["id"] = store.ids
    records["vector"] = store.vectors
    manifest = canonical_json(store.manifest).encode("utf-8")
    return b"".join(
        (
            HEADER.pack(MAGIC, VERSION, store.dimension, store.count),
            records.tobytes(),
            struct.pack("<I", len(manifest)),
            manifest,
        )
    )


def write_store(path: str | os.PathLike[str], store: LatentStore) -> None:
    """Write a store to path, replacing any existing file atomically.

    Args:
        path: The target file.
        store: The store to write.
    """
    atomic_write_bytes(path, encode_store(store))
    logger.info("Wrote store with %d records (d=%d) to %s", store.count, store.dimension, path)


def decode_store(data: bytes, what: str = "store") -> LatentStore:
    """Parse the binary representation of a store.

    Raises:
        BadMagic: If the data does not start with "GNLZ".
        UnsupportedVersion: If the format version is not 1.
        TruncatedPayload: If the data ends before the declared records or manifest.
        NonFiniteValue: If a vector component is NaN or infinite.
        StoreFormatError: For trailing bytes after the manifest or any other structural violation.
    """
    reader = ByteReader(data, what)
    if data[:4] != MAGIC:
        raise BadMagic("Bad magic in %s: expected %r, got %r" % (what, MAGIC, data[:4]))
    _, version, dimension, count = reader.unpack(HEADER.format)
    if version != VERSION:
        raise UnsupportedVersion("Unsupported %s version %d (supported: %d)" % (what, version, VERSION))
    if not 1 <= dimension <= MAX_DIMENSION:
        raise StoreFormatError("Invalid dimension %d in %s (must be in [1, %d])" % (dimension, what, MAX_DIMENSION))
    dtype = _record_dtype(dimension)
    payload = reader.take(count * dtype.itemsize)
    records = np.frombuffer(payload, dtype=dtype) if count else np.empty(0, dtype=dtype)
    (manifest_size,) = reader.unpack("<I")
    raw_manifest = reader.take(manifest_size)
    if reader.remaining:
        raise StoreFormatError("Trailing %d bytes in %s" % (reader.remaining, what))
    try:
        manifest = json.loads(raw_manifest.decode("utf-8")) if manifest_size else {}
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise StoreFormatError("Invalid manifest in %s: %s" % (what, exc)) from exc
    if not isinstance(manifest, dict):
        raise StoreFormatError("Invalid manifest in %s: expected a JSON object" % what)
    vectors = records["vector"].astype(np.float64).reshape(count, dimension)
    if not np.isfinite(vectors).all():
        row = int(np.flatnonzero(~np.isfinite(vectors).all(axis=1))[0])
        raise NonFiniteValue("Non-finite value in record %d of %s" % (row, what))
    try:
        return LatentStore(dimension, records["id"].astype(np.uint64), vectors, manifest)
    except ValidationError as exc:
        raise StoreFormatError("Invalid %s: %s" % (what, exc)) from exc


def read_store(path: str | os.PathLike[str]) -> LatentStore:
    """Read a store written by write_store.

    Args:
        path: The store file.

    Returns:
        The validated store.
    """
    store = decode_store(Path(path).read_bytes(), what=str(path))
    logger.info("Read store with %d records (d=%d) from %s", store.count, store.dimension, path)
    return store


def is_binary_store(path: str | os.PathLike[str]) -> bool:
    """Return True if the file starts with the binary store magic."""
    with Path(path).open("rb") as fh:
        return fh.read(len(MAGIC)) == MAGIC


def _parse_float(field: str, row_number: int) -> float:
    try:
        value = float(field)
    except ValueError:
        raise CSVFormatError("Row %d: unparsable number %r" % (row_number, field)) from None
    if not np.isfinite(value):
        raise CSVFormatError("Row %d: non-finite number %r" % (row_number, field))
    return value


def _parse_id(field: str, row_number: int) -> int:
    try:
        value = int(field)
    except ValueError:
        raise CSVFormatError("Row %d: unparsable id %r" % (row_number, field)) from None
    if not 0 <= value < 2**64:
        raise CSVFormatError("Row %d: id %d out of the unsigned 64-bit range" % (row_number, value))
    return value


def _is_header(row: list[str]) -> bool:
    for field in row:
        try:
            float(field)
        except ValueError:
            return True
    return False


def import_csv(path: str | os.PathLike[str], dimension: int) -> LatentStore:
    """Build a store from a CSV file with one vector per row.

    A first row containing a non-numeric field is a header. If the header's first column is "id", every row
    carries its id in front of the d components; otherwise ids 0..n-1 are assigned in row order.

    Args:
        path: The CSV file.
        dimension: The expected number of components per row.

    Returns:
        A store whose manifest records the source file.

    Raises:
        CSVFormatError: If a row has the wrong arity, an unparsable number, or a duplicate id.
    """
    if not 1 <= dimension <= MAX_DIMENSION:
        raise ValidationError("Invalid dimension: %s. Dimension must be in [1, %d]." % (dimension, MAX_DIMENSION))
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row]
    has_ids = False
    start = 0
    if rows and _is_header(rows[0]):
        has_ids = rows[0][0].strip().lower() == "id"
        start = 1
    width = dimension + int(has_ids)
    ids: list[int] = []
    vectors: list[list[float]] = []
    for row_number, row in enumerate(rows[start:], start=start + 1):
        if len(row) != width:
            raise CSVFormatError("Row %d: expected %d fields, got %d" % (row_number, width, len(row)))
        if has_ids:
            ids.append(_parse_id(row[0], row_number))
        vectors.append([_parse_float(field, row_number) for field in row[int(has_ids) :]])
    if not has_ids:
        ids = list(range(len(vectors)))
    order = sorted(range(len(ids)), key=ids.__getitem__)
    for previous, current in zip(order, order[1:]):
        if ids[previous] == ids[current]:
            raise CSVFormatError("Row %d: duplicate id %d" % (current + start + 1, ids[current]))
    manifest: dict[str, Any] = {"source": "csv:%s" % Path(path).name}
    store = LatentStore(
        dimension,
        np.array([ids[i] for i in order], dtype=np.uint64),
        np.array([vectors[i] for i in order], dtype=np.float64).reshape(len(order), dimension),
        manifest,
    )
    logger.info("Imported %d rows (d=%d) from %s", store.count, dimension, path)
    return store


def export_csv(store: LatentStore, path: str | os.PathLike[str]) -> None:
    """Write a store as CSV with a header "id,c0,...,c{d-1}".

    Components are written with the shortest representation that parses back to the same float64.
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(["id", *(f"c{i}" for i in range(store.dimension))])
    for record_id, vector in store:
        writer.writerow([record_id, *(repr(float(value)) for value in vector)])
    atomic_write_text(path, buffer.getvalue())
    logger.info("Exported %d records to %s", store.count, path)


def sample_store(seed: int, dimension: int, count: int, source: str = "sample") -> LatentStore:
    """Draw count vectors from N(0, I_d) with a seeded generator.

    Args:
        seed: The seed of the generator.
        dimension: The latent dimension d.
        count: The number of vectors.
        source: A description recorded in the manifest.

    Returns:
        A store with ids 0..count-1.
    """
    if count < 0:
        raise ValidationError("Invalid count: %s. Count must be ≥ 0." % count)
    rng = np.random.default_rng(seed)
    vectors = rng.standard_normal((count, dimension))
    manifest = {"seed": seed, "source": source, "space": "z"}
    return LatentStore(dimension, np.arange(count, dtype=np.uint64), vectors, manifest)

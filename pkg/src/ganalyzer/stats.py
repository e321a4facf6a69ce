# SPDX-FileCopyrightText: 2024 ganalyzer contributors
#
# SPDX-License-Identifier: BSD-3-Clause

"""The stats module fits per-class eigen-statistics and maps vectors into and out of a class eigenbasis.

A class is summarized by its mean m, the eigenvalues λ and the eigenvectors V of its sample covariance.
A vector z has coordinates b = Vᵀ(z − m) in that basis; clamping limits each b_i to ±3√λ_i and
reconstruction maps coefficients back to m + V·b.

Stats bundle layout, all integers and floats little-endian:

    magic "GNST" | version u32 (=1) | class-id length u32 | class-id UTF-8
    k u64 | d u32 | t u32 | m (d × f64) | λ (t × f64) | V column-major (d·t × f64)

Functions:
    compute_class_stats: Fit the statistics of a set of store records.
    fit_registry: Fit every class of a label table.
    project_b: Coordinates of a vector in a class eigenbasis.
    clamp_b: Limit coordinates to ±3√λ.
    reconstruct: Map coordinates back to the latent space.
    truncate_stats: Keep the leading eigenvectors for a retention percentage.
    write_stats: Write a stats bundle.
    read_stats: Read a stats bundle.
"""

from __future__ import annotations

import logging
import math
import struct
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from ganalyzer.exceptions import (
    BadMagic,
    DimensionMismatch,
    InsufficientSamples,
    NonFiniteValue,
    NumericalError,
    StoreFormatError,
    UnsupportedVersion,
    ValidationError,
)
from ganalyzer.models import MAX_DIMENSION, MIN_CLASS_SAMPLES, BVector, ClassStats, TruncatedStats
from ganalyzer.scoring import select_class
from ganalyzer.taxonomy import TAXONOMY
from ganalyzer.utils import ByteReader, as_latent_vector, atomic_write_bytes, validate_beta

if TYPE_CHECKING:
    import os
    from collections.abc import Iterable

    from ganalyzer.models import LabelTable, LatentStore, LatentVector

logger = logging.getLogger(__name__)

RANK_EPSILON: float = 1e-10
CLAMP_SIGMAS: float = 3.0

MAGIC: bytes = b"GNST"
VERSION: int = 1


def _sign_normalize(eigenvectors: np.ndarray) -> np.ndarray:
    """Flip every column so its largest-magnitude component is positive; the first such component decides ties."""
    if eigenvectors.shape[1] == 0:
        return eigenvectors
    pivots = np.abs(eigenvectors).argmax(axis=0)
    signs = np.where(eigenvectors[pivots, np.arange(eigenvectors.shape[1])] < 0, -1.0, 1.0)
    return eigenvectors * signs


def compute_class_stats(store: LatentStore, ids: Iterable[int], class_id: str = "unnamed") -> ClassStats:
    """Fit mean, eigenvalues and eigenvectors of the records with the given ids.

    The ids are sorted before anything is accumulated, so any ordering of the same set gives identical results.
    The mean is summed exactly per coordinate. The covariance uses the divisor k − 1. Eigenvalues below
    1e-10·λ_max, and any beyond index k − 1, are dropped together with their eigenvectors.

    Args:
        store: The store holding the vectors.
        ids: The ids of the class members.
        class_id: The class recorded in the statistics.

    Returns:
        The fitted statistics.

    Raises:
        InsufficientSamples: If fewer than 2 ids are given.
        ValidationError: If an id is not in the store.
        NumericalError: If the eigensolver fails.
    """
    members = sorted(set(ids))
    k = len(members)
    if k < MIN_CLASS_SAMPLES:
        raise InsufficientSamples("Class %r has %d samples; statistics need at least 2" % (class_id, k))
    samples = store.rows(members)
    mean = np.array([math.fsum(column) for column in samples.T.tolist()]) / k
    centered = samples - mean
    covariance = centered.T @ centered / (k - 1)
    covariance = (covariance + covariance.T) / 2
    try:
        eigenvalues, eigenvectors = np.linalg.eigh(covariance)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("Eigendecomposition failed for class %r: %s" % (class_id, exc)) from exc
    if not (np.isfinite(eigenvalues).all() and np.isfinite(eigenvectors).all()):
        raise NumericalError("Eigendecomposition of class %r produced non-finite values" % class_id)
    eigenvalues = np.clip(eigenvalues[::-1], 0.0, None)
    eigenvectors = eigenvectors[:, ::-1]
    largest = eigenvalues[0]
    t = int(np.count_nonzero(eigenvalues > RANK_EPSILON * largest)) if largest > 0 else 0
    t = min(t, k - 1)
    stats = ClassStats(
        class_id=class_id,
        k=k,
        mean=mean,
        eigenvalues=eigenvalues[:t],
        eigenvectors=_sign_normalize(np.ascontiguousarray(eigenvectors[:, :t])),
    )
    logger.info("Fitted %r: k=%d d=%d t=%d", class_id, k, stats.dimension, t)
    return stats


def fit_registry(
    store: LatentStore, table: LabelTable, classes: Iterable[str] | None = None
) -> dict[str, ClassStats]:
    """Fit the statistics of several classes.

    Args:
        store: The store holding the vectors.
        table: The labels selecting each class's members.
        classes: The classes to fit. If None, every taxonomy class with at least 2 members is fitted and
            smaller classes are skipped with a warning.

    Returns:
        A registry mapping class ids to statistics, in taxonomy order.

    Raises:
        InsufficientSamples: If an explicitly requested class has fewer than 2 members.
    """
    requested = classes is not None
    registry = {}
    for class_id in classes if classes is not None else TAXONOMY.class_names:
        members = select_class(table, class_id)
        if len(members) < MIN_CLASS_SAMPLES and not requested:
            logger.warning("Skipping class %r: only %d members", class_id, len(members))
            continue
        registry[class_id] = compute_class_stats(store, members, class_id)
    return registry


def project_b(stats: ClassStats, z: LatentVector) -> BVector:
    """Return the coordinates b = Vᵀ(z − m) of z in the class eigenbasis.

    Raises:
        DimensionMismatch: If z does not have the statistics' dimension.
    """
    vector = as_latent_vector(z, stats.dimension)
    return BVector(stats.eigenvectors.T @ (vector - stats.mean), clamped=False)


def clamp_b(stats: ClassStats, b: BVector) -> BVector:
    """Limit every coefficient b_i to [−3√λ_i, +3√λ_i].

    Raises:
        DimensionMismatch: If b does not have t coefficients.
    """
    if len(b) != stats.t:
        raise DimensionMismatch("b has %d coefficients, statistics have t=%d" % (len(b), stats.t))
    bound = CLAMP_SIGMAS * np.sqrt(stats.eigenvalues)
    return BVector(np.clip(b.coefficients, -bound, bound), clamped=True)


def reconstruct(stats: ClassStats, b: BVector) -> LatentVector:
    """Return m + V·b.

    Raises:
        DimensionMismatch: If b does not have t coefficients.
    """
    if len(b) != stats.t:
        raise DimensionMismatch("b has %d coefficients, statistics have t=%d" % (len(b), stats.t))
    return stats.mean + stats.eigenvectors @ b.coefficients


def retained_count(t: int, beta: float) -> int:
    """Return t′ = clamp(ceil(beta·t/100), 1, t)."""
    return min(max(math.ceil(beta * t / 100), 1), t)


def truncate_stats(stats: ClassStats, beta: float) -> TruncatedStats:
    """Keep the leading eigenvectors selected by a retention percentage.

    Args:
        stats: The full statistics.
        beta: The percentage of eigenvectors to keep, in (0, 100].

    Returns:
        The truncated statistics with t′ = clamp(ceil(beta·t/100), 1, t).

    Raises:
        ValidationError: If beta is outside (0, 100] or the statistics have t = 0.
    """
    validate_beta(beta)
    if stats.t == 0:
        raise ValidationError("Cannot truncate statistics of class %r: t = 0" % stats.class_id)
    return TruncatedStats(source=stats, beta=float(beta), t_prime=retained_count(stats.t, beta))


def encode_stats(stats: ClassStats) -> bytes:
    """Return the bundle representation of class statistics."""
    class_id = stats.class_id.encode("utf-8")
    return b"".join(
        (
            struct.pack("<4sII", MAGIC, VERSION, len(class_id)),
            class_id,
            struct.pack("<QII", stats.k, stats.dimension, stats.t),
            stats.mean.astype("<f8").tobytes(),
            stats.eigenvalues.astype("<f8").tobytes(),
            stats.eigenvectors.astype("<f8").tobytes(order="F"),
        )
    )


def write_stats(path: str | os.PathLike[str], stats: ClassStats) -> None:
    """Write class statistics to path, replacing any existing file atomically."""
    atomic_write_bytes(path, encode_stats(stats))
    logger.info("Wrote statistics of %r to %s", stats.class_id, path)


def decode_stats(data: bytes, what: str = "stats bundle") -> ClassStats:
    """Parse the bundle representation of class statistics.

    Raises:
        BadMagic: If the data does not start with "GNST".
        UnsupportedVersion: If the format version is not 1.
        TruncatedPayload: If the data ends early.
        NonFiniteValue: If a stored value is NaN or infinite.
        StoreFormatError: For any other structural violation.
    """
    if data[:4] != MAGIC:
        raise BadMagic("Bad magic in %s: expected %r, got %r" % (what, MAGIC, data[:4]))
    reader = ByteReader(data, what)
    _, version, name_size = reader.unpack("<4sII")
    if version != VERSION:
        raise UnsupportedVersion("Unsupported %s version %d (supported: %d)" % (what, version, VERSION))
    try:
        class_id = reader.take(name_size).decode("utf-8")
    except UnicodeDecodeError as exc:
        raise StoreFormatError("Invalid class id in %s: %s" % (what, exc)) from exc
    k, dimension, t = reader.unpack("<QII")
    if not 1 <= dimension <= MAX_DIMENSION or t > dimension:
        raise StoreFormatError("Invalid shape in %s: d=%d t=%d" % (what, dimension, t))
    mean = reader.float64s(dimension)
    eigenvalues = reader.float64s(t)
    eigenvectors = reader.float64s(dimension * t).reshape((dimension, t), order="F")
    if reader.remaining:
        raise StoreFormatError("Trailing %d bytes in %s" % (reader.remaining, what))
    if not (np.isfinite(mean).all() and np.isfinite(eigenvalues).all() and np.isfinite(eigenvectors).all()):
        raise NonFiniteValue("Non-finite value in %s" % what)
    try:
        return ClassStats(class_id, k, mean, eigenvalues, eigenvectors)
    except (ValidationError, DimensionMismatch) as exc:
        raise StoreFormatError("Invalid %s: %s" % (what, exc)) from exc


def read_stats(path: str | os.PathLike[str]) -> ClassStats:
    """Read class statistics written by write_stats."""
    stats = decode_stats(Path(path).read_bytes(), what=str(path))
    logger.info(
        "Read statistics of %r (k=%d d=%d t=%d) from %s", stats.class_id, stats.k, stats.dimension, stats.t, path
    )
    return stats

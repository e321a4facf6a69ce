# SPDX-FileCopyrightText: 2024 ganalyzer contributors
#
# SPDX-License-Identifier: BSD-3-Clause

"""The scoring module assigns attribute probabilities and hard labels to latent vectors.

Scores come from a scorer: either a deterministic synthetic world, where every class has a unit direction and each
group is a softmax over (w_c·z + bias_c)/τ, or a remote classifier service (see `ganalyzer.client.RemoteScorer`).

Classes:
    Scorer: The protocol both scorers implement.
    SyntheticWorld: A linear-softmax stand-in for pretrained attribute classifiers.

Functions:
    make_synthetic_world: Build a world from a seeded standard-normal stream.
    plant_entanglement: Tilt one class direction toward another.
    score_synthetic: Score one vector.
    score_batch: Score the rows of a matrix.
    hard_label: Per-group argmax with lowest-index tie-break.
    label_matrix: Hard labels of a probability matrix, vectorized.
    label_store: Label every record of a store.
    select_class: Ids whose hard label is a given class.
    write_labels: Write a label table as JSON Lines.
    read_labels: Read a label table from JSON Lines.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import TYPE_CHECKING, Protocol

import numpy as np

from ganalyzer.exceptions import DimensionMismatch, StoreFormatError, ValidationError
from ganalyzer.models import AttributeProbabilities, HardLabelSet, LabelRow, LabelTable
from ganalyzer.taxonomy import TAXONOMY
from ganalyzer.utils import as_latent_vector, atomic_write_text, frozen_array, is_batch

if TYPE_CHECKING:
    import os
    from collections.abc import Mapping

    import numpy.typing as npt

    from ganalyzer.exceptions import GanalyzerException
    from ganalyzer.models import LatentStore, LatentVector

logger = logging.getLogger(__name__)

NORM_TOLERANCE: float = 1e-9
MIN_WORLD_DIMENSION: int = 2


class Scorer(Protocol):
    """Anything that scores the rows of an (n, d) matrix.

    A scorer returns one entry per row: the probabilities, or the error that prevented scoring that row.
    """

    @property
    def dimension(self) -> int:
        """Return the latent dimension the scorer accepts."""
        ...

    def score(self, vectors: np.ndarray) -> list[AttributeProbabilities | GanalyzerException]:
        """Score the rows of an (n, d) matrix."""
        ...


@dataclass(frozen=True, eq=False)
class SyntheticWorld:
    """A linear-softmax world with one unit direction per class.

    Attributes:
        seed: The seed the directions were drawn from.
        temperature: The softmax temperature τ > 0.
        directions: A (10, d) matrix; row c is the unit direction w_c in taxonomy order.
        biases: Per-class logit offsets in taxonomy order.
    """

    seed: int
    temperature: float
    directions: np.ndarray
    biases: np.ndarray

    def __post_init__(self) -> None:
        directions = np.asarray(self.directions, dtype=np.float64)
        shape = directions.shape
        if not is_batch(directions) or shape[0] != len(TAXONOMY) or shape[1] < MIN_WORLD_DIMENSION:
            raise ValidationError(
                "Directions must have shape (%d, d) with d ≥ %d" % (len(TAXONOMY), MIN_WORLD_DIMENSION)
            )
        norms = np.linalg.norm(directions, axis=1)
        if np.abs(norms - 1.0).max() > NORM_TOLERANCE:
            raise ValidationError("Class directions must have unit norm within %g" % NORM_TOLERANCE)
        if not self.temperature > 0 or not math.isfinite(self.temperature):
            raise ValidationError(
                "Invalid value for 'temperature': %s. Temperature must be positive." % self.temperature
            )
        biases = np.asarray(self.biases, dtype=np.float64)
        if biases.shape != (len(TAXONOMY),) or not np.isfinite(biases).all():
            raise ValidationError("Biases must be %d finite values" % len(TAXONOMY))
        object.__setattr__(self, "temperature", float(self.temperature))
        object.__setattr__(self, "directions", frozen_array(directions))
        object.__setattr__(self, "biases", frozen_array(biases))

    @property
    def dimension(self) -> int:
        """Return the latent dimension d."""
        return int(self.directions.shape[1])

    def direction(self, class_id: str) -> np.ndarray:
        """Return the unit direction of a class."""
        return self.directions[TAXONOMY.index(class_id)]

    def logits(self, vectors: np.ndarray) -> np.ndarray:
        """Return the (n, 10) matrix (w_c·z + bias_c)/τ.

        Each row is computed independently of the others, so scoring a row alone or inside a batch
        yields identical bits.
        """
        return (np.einsum("nd,cd->nc", vectors, self.directions) + self.biases) / self.temperature

    def probabilities(self, vectors: npt.ArrayLike) -> np.ndarray:
        """Return the (n, 10) matrix of per-group softmax probabilities.

        Raises:
            DimensionMismatch: If vectors is not an (n, d) matrix.
        """
        matrix = np.asarray(vectors, dtype=np.float64)
        if not is_batch(matrix, self.dimension):
            raise DimensionMismatch("Vectors have shape %s, expected (n, %d)" % (matrix.shape, self.dimension))
        logits = self.logits(matrix)
        out = np.empty_like(logits)
        for part in TAXONOMY.slices.values():
            group = logits[:, part]
            exp = np.exp(group - group.max(axis=1, keepdims=True))
            out[:, part] = exp / exp.sum(axis=1, keepdims=True)
        return out

    def score(self, vectors: np.ndarray) -> list[AttributeProbabilities | GanalyzerException]:
        """Score the rows of an (n, d) matrix."""
        return list(score_batch(self, vectors))

    def __repr__(self) -> str:
        return f"<SyntheticWorld seed={self.seed} d={self.dimension} τ={self.temperature}>"


def make_synthetic_world(
    seed: int,
    dimension: int,
    temperature: float = 1.0,
    biases: Mapping[str, float] | None = None,
    orthogonal: bool = False,
) -> SyntheticWorld:
    """Build a synthetic world whose directions are drawn from a seeded standard-normal stream.

    Args:
        seed: The 64-bit seed of the stream.
        dimension: The latent dimension d, at least 2.
        temperature: The softmax temperature τ.
        biases: Optional per-class logit offsets; classes not named get 0.
        orthogonal: Orthonormalize the ten directions (requires d ≥ 10).

    Returns:
        The world; identical arguments always yield identical directions.

    Raises:
        ValidationError: If d < 2, or orthogonal is requested with d < 10.
    """
    if dimension < MIN_WORLD_DIMENSION:
        raise ValidationError(
            "Invalid dimension: %s. A synthetic world needs d ≥ %d." % (dimension, MIN_WORLD_DIMENSION)
        )
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((len(TAXONOMY), dimension))
    if orthogonal:
        if dimension < len(TAXONOMY):
            raise ValidationError("Orthogonal directions need d ≥ %d, got %d" % (len(TAXONOMY), dimension))
        q, r = np.linalg.qr(raw.T)
        directions = (q * np.sign(np.diag(r))).T
    else:
        directions = raw / np.linalg.norm(raw, axis=1, keepdims=True)
    offsets = np.zeros(len(TAXONOMY))
    for class_id, value in (biases or {}).items():
        offsets[TAXONOMY.index(class_id)] = value
    world = SyntheticWorld(seed=seed, temperature=temperature, directions=directions, biases=offsets)
    logger.debug("Created %r", world)
    return world


def plant_entanglement(world: SyntheticWorld, desired: str, undesired: str, share: float) -> SyntheticWorld:
    """Return a world whose desired direction shares a component with the undesired direction.

    The new desired direction is share·w_u + sqrt(1 − share²)·u, where u is the unit part of the old
    desired direction orthogonal to w_u.

    Raises:
        ValidationError: If share is outside [0, 1) or both classes are the same.
    """
    if desired == undesired:
        raise ValidationError("Cannot entangle class %r with itself" % desired)
    if not 0 <= share < 1:
        raise ValidationError("Invalid value for 'share': %s. Share must be in [0, 1)." % share)
    w_u = world.direction(undesired)
    w_d = world.direction(desired)
    orthogonal = w_d - (w_d @ w_u) * w_u
    orthogonal = orthogonal / np.linalg.norm(orthogonal)
    planted = share * w_u + math.sqrt(1.0 - share * share) * orthogonal
    directions = np.array(world.directions)
    directions[TAXONOMY.index(desired)] = planted / np.linalg.norm(planted)
    return replace(world, directions=directions)


def score_batch(world: SyntheticWorld, vectors: npt.ArrayLike) -> list[AttributeProbabilities]:
    """Score the rows of an (n, d) matrix; row i equals score_synthetic(world, vectors[i])."""
    return [AttributeProbabilities.from_vector(row) for row in world.probabilities(vectors)]


def score_synthetic(world: SyntheticWorld, z: LatentVector) -> AttributeProbabilities:
    """Score one latent vector.

    Raises:
        DimensionMismatch: If z does not have the world's dimension.
    """
    return score_batch(world, as_latent_vector(z, world.dimension)[np.newaxis, :])[0]


def hard_label(probs: AttributeProbabilities) -> HardLabelSet:
    """Return the per-group argmax; ties go to the lowest class index."""
    return HardLabelSet(**{group: int(np.argmax(probs.group(group))) for group in TAXONOMY.group_names})


def label_matrix(probabilities: np.ndarray) -> np.ndarray:
    """Return the (n, 4) group-local hard label indices of an (n, 10) probability matrix."""
    return np.stack([probabilities[:, part].argmax(axis=1) for part in TAXONOMY.slices.values()], axis=1)


def label_store(store: LatentStore, scorer: Scorer) -> LabelTable:
    """Label every record of a store.

    Rows the scorer fails on are logged and collected in the table's failures; the other rows are labeled.

    Raises:
        DimensionMismatch: If the scorer's dimension differs from the store's.
    """
    if scorer.dimension != store.dimension:
        raise DimensionMismatch("Scorer has d=%d, store has d=%d" % (scorer.dimension, store.dimension))
    results = scorer.score(store.vectors)
    rows = []
    failures = []
    for record_id, result in zip(store.ids.tolist(), results):
        if isinstance(result, AttributeProbabilities):
            rows.append(LabelRow(record_id, result, hard_label(result)))
        else:
            logger.warning("Could not label id %d: %s", record_id, result)
            failures.append(record_id)
    logger.info("Labeled %d of %d records", len(rows), store.count)
    return LabelTable(tuple(rows), tuple(failures))


def select_class(table: LabelTable, class_id: str) -> frozenset[int]:
    """Return the ids whose hard label for the class's group is the class.

    Raises:
        UnknownClass: If the class is not part of the taxonomy.
    """
    group = TAXONOMY.group_of(class_id)
    local = TAXONOMY.local_index(class_id)
    return frozenset(row.id for row in table if getattr(row.labels, group) == local)


def write_labels(table: LabelTable, path: str | os.PathLike[str]) -> None:
    """Write a label table as JSON Lines, one object per row in id order."""
    lines = [
        json.dumps({"id": row.id, "probs": row.probs.to_dict(), "labels": row.labels.names()}, ensure_ascii=False)
        for row in table
    ]
    atomic_write_text(path, "".join(line + "\n" for line in lines))
    logger.info("Wrote %d label rows to %s", len(table), path)


def read_labels(path: str | os.PathLike[str]) -> LabelTable:
    """Read a label table written by write_labels.

    Raises:
        StoreFormatError: If a line is not a valid label object.
    """
    rows = []
    with Path(path).open(encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
                if not isinstance(data, dict) or set(data) != {"id", "probs", "labels"}:
                    raise ValidationError("expected an object with keys id, probs, labels")
                if not isinstance(data["id"], int) or isinstance(data["id"], bool) or data["id"] < 0:
                    raise ValidationError("id must be an unsigned integer")
                rows.append(
                    LabelRow(
                        data["id"],
                        AttributeProbabilities.from_dict(data["probs"]),
                        HardLabelSet.from_names(data["labels"]),
                    )
                )
            except (json.JSONDecodeError, ValidationError) as exc:
                raise StoreFormatError("Invalid label file %s, line %d: %s" % (path, line_number, exc)) from exc
    try:
        return LabelTable(tuple(rows))
    except ValidationError as exc:
        raise StoreFormatError("Invalid label file %s: %s" % (path, exc)) from exc

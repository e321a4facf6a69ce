# SPDX-FileCopyrightText: 2024 ganalyzer contributors
#
# SPDX-License-Identifier: BSD-3-Clause

"""The evaluation module measures how well a transformation changes an attribute and how much it preserves.

Classes:
    ScoreShift: The per-sample change of one class probability.
    SweepPoint: The measurements of one parameter value of a sweep.

Functions:
    flip_rate: Fraction of samples whose hard label becomes the target.
    transition_rates: Where the samples of one class end up.
    identity_score: Mean cosine similarity of paired vectors.
    score_shift: Change of a class probability between two vector sets.
    sweep_alpha: Evaluate edit over a grid of alphas.
    sweep_beta: Evaluate feature synthesis over a grid of betas.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any

import numpy as np

from ganalyzer.exceptions import DimensionMismatch, ValidationError
from ganalyzer.scoring import label_matrix
from ganalyzer.taxonomy import TAXONOMY
from ganalyzer.transform import edit, feature_synth
from ganalyzer.utils import is_batch

if TYPE_CHECKING:
    from collections.abc import Callable, Iterable

    import numpy.typing as npt

    from ganalyzer.models import ClassStats, LabelTable
    from ganalyzer.scoring import SyntheticWorld

logger = logging.getLogger(__name__)

SHIFT_BINS: int = 20


def _paired_labels(before: LabelTable, after: LabelTable, group: str) -> tuple[np.ndarray, np.ndarray]:
    if before.ids != after.ids:
        raise ValidationError("Label tables must cover the same ids")
    return before.label_indices(group), after.label_indices(group)


def _flip_rate(before: np.ndarray, after: np.ndarray, target: int, source: int | None = None) -> tuple[float, int]:
    population = before != target if source is None else before == source
    n = int(np.count_nonzero(population))
    if n == 0:
        return 0.0, 0
    return float(np.count_nonzero(after[population] == target)) / n, n


def _source_index(target: str, source: str | None) -> int | None:
    if source is None:
        return None
    if TAXONOMY.group_of(source) != TAXONOMY.group_of(target):
        raise ValidationError("Classes %r and %r belong to different groups" % (source, target))
    if source == target:
        raise ValidationError("Source and target are both %r" % target)
    return TAXONOMY.local_index(source)


def flip_rate(before: LabelTable, after: LabelTable, target: str, source: str | None = None) -> float:
    """Return the fraction of samples not labeled target before that are labeled target after.

    Args:
        before: The labels of the inputs.
        after: The labels of the outputs, keyed by the same ids.
        target: The class the transformation aims for.
        source: Restrict the population to samples labeled source before.

    Returns:
        The flip rate; 0.0 if the population is empty.

    Raises:
        UnknownClass: If a class is not part of the taxonomy.
        ValidationError: If source and target are in different groups or the tables cover different ids.
    """
    group = TAXONOMY.group_of(target)
    source_index = _source_index(target, source)
    labels_before, labels_after = _paired_labels(before, after, group)
    rate, n = _flip_rate(labels_before, labels_after, TAXONOMY.local_index(target), source_index)
    logger.debug("Flip rate to %r from %s: %.4f over %d samples", target, source or "any", rate, n)
    return rate


def transition_rates(before: LabelTable, after: LabelTable, source: str) -> dict[str, float]:
    """Return, for the samples labeled source before, the fraction labeled with each class of its group after.

    The fractions sum to 1 unless no sample was labeled source before, in which case all are 0.
    """
    group = TAXONOMY.group_of(source)
    labels_before, labels_after = _paired_labels(before, after, group)
    moved = labels_after[labels_before == TAXONOMY.local_index(source)]
    classes = TAXONOMY.classes(group)
    if not moved.size:
        return dict.fromkeys(classes, 0.0)
    counts = np.bincount(moved, minlength=len(classes))
    return {class_id: float(count) / moved.size for class_id, count in zip(classes, counts.tolist())}


def identity_score(before: npt.ArrayLike, after: npt.ArrayLike) -> float:
    """Return the mean cosine similarity between paired rows of two (n, d) matrices.

    Raises:
        DimensionMismatch: If the matrices differ in shape.
        ValidationError: If a row is the zero vector or the matrices are empty.
    """
    first = np.asarray(before, dtype=np.float64)
    second = np.asarray(after, dtype=np.float64)
    if first.shape != second.shape or not is_batch(first):
        raise DimensionMismatch("Cannot pair matrices of shapes %s and %s" % (first.shape, second.shape))
    if not first.shape[0]:
        raise ValidationError("Cannot compute an identity score of zero samples")
    norms = np.linalg.norm(first, axis=1) * np.linalg.norm(second, axis=1)
    if not norms.all():
        raise ValidationError("Cosine similarity is undefined for zero vectors")
    return float(np.mean(np.einsum("nd,nd->n", first, second) / norms))


@dataclass(frozen=True)
class ScoreShift:
    """The change of one class probability between paired inputs and outputs.

    Attributes:
        class_id: The measured class.
        mean: The mean change.
        edges: The bin edges, spanning [−1, 1].
        counts: The number of samples per bin.
    """

    class_id: str
    mean: float
    edges: tuple[float, ...]
    counts: tuple[int, ...]

    def to_dict(self) -> dict[str, Any]:
        """Return the JSON representation."""
        return {"class": self.class_id, "mean": self.mean, "edges": list(self.edges), "counts": list(self.counts)}


def score_shift(
    world: SyntheticWorld, before: npt.ArrayLike, after: npt.ArrayLike, target: str, bins: int = SHIFT_BINS
) -> ScoreShift:
    """Return how the probability of a class changes from before to after, per sample.

    Raises:
        DimensionMismatch: If the matrices differ in shape.
    """
    first = np.asarray(before, dtype=np.float64)
    second = np.asarray(after, dtype=np.float64)
    if first.shape != second.shape:
        raise DimensionMismatch("Cannot pair matrices of shapes %s and %s" % (first.shape, second.shape))
    column = TAXONOMY.index(target)
    delta = world.probabilities(second)[:, column] - world.probabilities(first)[:, column]
    counts, edges = np.histogram(delta, bins=bins, range=(-1.0, 1.0))
    return ScoreShift(
        class_id=target,
        mean=float(delta.mean()) if delta.size else 0.0,
        edges=tuple(edges.tolist()),
        counts=tuple(counts.tolist()),
    )


@dataclass(frozen=True)
class SweepPoint:
    """The measurements of one parameter value.

    Attributes:
        parameter: The alpha or beta value.
        flip_rate: The fraction of samples not labeled target before whose outputs are labeled target.
        identity_score: The mean cosine similarity of inputs and outputs.
        mean_probability: The mean target probability over all outputs.
        n: The size of the flip-rate population.
    """

    parameter: float
    flip_rate: float
    identity_score: float
    mean_probability: float
    n: int

    def to_dict(self) -> dict[str, Any]:
        """Return the JSON representation."""
        return {
            "parameter": self.parameter,
            "flip_rate": self.flip_rate,
            "identity_score": self.identity_score,
            "mean_probability": self.mean_probability,
            "n": self.n,
        }


def _sweep(
    world: SyntheticWorld,
    vectors: npt.ArrayLike,
    target: str,
    parameters: Iterable[float],
    transform: Callable[[np.ndarray, float], np.ndarray],
) -> list[SweepPoint]:
    inputs = np.asarray(vectors, dtype=np.float64)
    if not is_batch(inputs, world.dimension):
        raise DimensionMismatch("Sweep inputs have shape %s, world has d=%d" % (inputs.shape, world.dimension))
    group_column = TAXONOMY.group_names.index(TAXONOMY.group_of(target))
    local = TAXONOMY.local_index(target)
    column = TAXONOMY.index(target)
    labels_before = label_matrix(world.probabilities(inputs))[:, group_column]
    points = []
    for parameter in parameters:
        outputs = np.array([transform(z, parameter) for z in inputs]).reshape(inputs.shape)
        probabilities = world.probabilities(outputs)
        rate, n = _flip_rate(labels_before, label_matrix(probabilities)[:, group_column], local)
        point = SweepPoint(
            parameter=float(parameter),
            flip_rate=rate,
            identity_score=identity_score(inputs, outputs),
            mean_probability=float(probabilities[:, column].mean()),
            n=n,
        )
        logger.info("Sweep %s=%s: flip rate %.4f, identity %.4f", target, parameter, rate, point.identity_score)
        points.append(point)
    return points


def sweep_alpha(
    world: SyntheticWorld,
    vectors: npt.ArrayLike,
    stats: ClassStats,
    alphas: Iterable[float],
    target: str | None = None,
) -> list[SweepPoint]:
    """Evaluate edit toward a class for every alpha of a grid.

    Args:
        world: The scorer of inputs and outputs.
        vectors: The (n, d) input vectors.
        stats: The statistics of the edited class.
        alphas: The alpha values, each at least 1.
        target: The class whose flip rate is measured; defaults to the statistics' class.

    Returns:
        One point per alpha, in grid order.
    """
    return _sweep(world, vectors, target or stats.class_id, alphas, lambda z, alpha: edit(z, stats, alpha))


def sweep_beta(
    world: SyntheticWorld,
    vectors: npt.ArrayLike,
    stats: ClassStats,
    betas: Iterable[float],
    target: str | None = None,
) -> list[SweepPoint]:
    """Evaluate feature synthesis toward a class for every beta of a grid.

    Returns:
        One point per beta, in grid order.
    """
    return _sweep(world, vectors, target or stats.class_id, betas, lambda z, beta: feature_synth(z, stats, beta))

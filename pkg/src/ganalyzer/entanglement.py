# SPDX-FileCopyrightText: 2024 ganalyzer contributors
#
# SPDX-License-Identifier: BSD-3-Clause

"""The entanglement module quantifies how attribute classes co-occur and how a transformation shifts them.

Classes:
    MeanProbe: The scores of a class mean and the off-group classes it over-expresses.

Functions:
    co_occurrence: Joint frequencies of hard labels.
    entanglement_degree: The difference of two co-occurrence matrices.
    group_histogram: Class fractions within one group.
    mean_probe: Score a class mean and flag entanglement suspects.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from ganalyzer.exceptions import DimensionMismatch, GanalyzerException, InsufficientSamples, ValidationError
from ganalyzer.models import CoOccurrenceMatrix, EntanglementDegree
from ganalyzer.taxonomy import TAXONOMY

if TYPE_CHECKING:
    from ganalyzer.models import AttributeProbabilities, ClassStats, LabelTable
    from ganalyzer.scoring import Scorer

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD: float = 0.5


def co_occurrence(labels: LabelTable) -> CoOccurrenceMatrix:
    """Return M with M[a][b] the fraction of samples labeled with both a and b.

    Raises:
        InsufficientSamples: If the table is empty.
    """
    n = len(labels)
    if n == 0:
        raise InsufficientSamples("Cannot compute co-occurrence of an empty label table")
    indicators = labels.one_hot()
    counts = indicators.T @ indicators
    return CoOccurrenceMatrix(classes=TAXONOMY.class_names, matrix=counts / n, n=n)


def entanglement_degree(before: CoOccurrenceMatrix, after: CoOccurrenceMatrix) -> EntanglementDegree:
    """Return D = M_after − M_before, entrywise.

    Raises:
        ValidationError: If the matrices are labeled with different classes.
    """
    if before.classes != after.classes:
        raise ValidationError(
            "Co-occurrence matrices use different taxonomies: %s vs %s" % (before.classes, after.classes)
        )
    return EntanglementDegree(classes=before.classes, matrix=after.matrix - before.matrix)


def group_histogram(labels: LabelTable, group: str) -> dict[str, float]:
    """Return the fraction of samples holding each class of a group.

    Raises:
        ValidationError: If the group does not exist.
        InsufficientSamples: If the table is empty.
    """
    classes = TAXONOMY.classes(group)
    n = len(labels)
    if n == 0:
        raise InsufficientSamples("Cannot compute a histogram of an empty label table")
    counts = np.bincount(labels.label_indices(group), minlength=len(classes)).astype(np.float64)
    return dict(zip(classes, (counts / n).tolist()))


@dataclass(frozen=True)
class MeanProbe:
    """The scores of a class mean.

    Attributes:
        class_id: The probed class.
        probabilities: The scores of the class mean vector.
        threshold: The probability above which an off-group class is flagged.
        suspects: Off-group classes scoring above the threshold, in taxonomy order.
    """

    class_id: str
    probabilities: AttributeProbabilities
    threshold: float
    suspects: tuple[str, ...]


def mean_probe(stats: ClassStats, scorer: Scorer, threshold: float = DEFAULT_THRESHOLD) -> MeanProbe:
    """Score the mean vector of a class and flag the off-group classes it over-expresses.

    Args:
        stats: The statistics of the probed class.
        scorer: The scorer applied to the mean.
        threshold: Classes of other groups scoring strictly above this probability are suspects.

    Raises:
        DimensionMismatch: If the scorer's dimension differs from the statistics'.
    """
    if scorer.dimension != stats.dimension:
        raise DimensionMismatch("Scorer has d=%d, statistics have d=%d" % (scorer.dimension, stats.dimension))
    (result,) = scorer.score(stats.mean[np.newaxis, :])
    if isinstance(result, GanalyzerException):
        raise result
    own_group = TAXONOMY.group_of(stats.class_id) if stats.class_id in TAXONOMY else None
    vector = result.as_vector()
    suspects = tuple(
        class_id
        for class_id in TAXONOMY.class_names
        if TAXONOMY.group_of(class_id) != own_group and vector[TAXONOMY.index(class_id)] > threshold
    )
    if suspects:
        logger.info("Mean of %r over-expresses %s", stats.class_id, list(suspects))
    return MeanProbe(class_id=stats.class_id, probabilities=result, threshold=threshold, suspects=suspects)

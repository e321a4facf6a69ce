# SPDX-FileCopyrightText: 2024 ganalyzer contributors
#
# SPDX-License-Identifier: BSD-3-Clause

"""The transform module implements attribute editing, feature-based synthesis and their multi-class variants.

Every transform has the shape `mean term + basis · b̃`, where b̃ are the clamped coordinates of the input in the
eigenbasis of a base class. The modes differ in the mean term (α·m, a weighted sum of class means, minus
undesired means) and in how many leading eigenvectors the basis keeps. All of them go through `_combine`, so the
documented reductions (a single-term multi_edit is an edit, an empty undesired list is a plain edit) hold bitwise.

Functions:
    edit: z_id = α·m + V·b̃.
    feature_synth: z_fb = m + Ṽ·b̃[:t′].
    psi: The pair (feature_synth, edit).
    multi_edit: Σ γ_i·m_i + V_base·b̃.
    multi_feature: Σ w_i·m_i − Σ δ_j·m_j + Ṽ_base·b̃[:t′].
    disentangled_edit: α·m − Σ δ_j·m_j + V·b̃.
    load_spec: Parse and validate an edit specification.
    apply_spec: Dispatch an edit specification on one vector.
    transform_store: Apply an edit specification to every record of a store.
"""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np

from ganalyzer.exceptions import DimensionMismatch, NumericalError, ValidationError
from ganalyzer.models import ClassStats, EditSpec, EditTerm, LatentStore, LatentVector, UndesiredTerm
from ganalyzer.stats import clamp_b, project_b, truncate_stats
from ganalyzer.utils import as_latent_vector, check_fields, finite_number, validate_alpha, validate_delta

if TYPE_CHECKING:
    from collections.abc import Mapping, Sequence

logger = logging.getLogger(__name__)

SPEC_FIELDS: frozenset[str] = frozenset({"mode", "base", "alpha", "beta", "terms", "undesired"})
TERM_FIELDS: frozenset[str] = frozenset({"class", "weight"})
UNDESIRED_FIELDS: frozenset[str] = frozenset({"class", "delta"})

UndesiredMean = ClassStats | LatentVector


def _check_dimensions(base: ClassStats, others: Sequence[ClassStats]) -> None:
    for stats in others:
        if stats.dimension != base.dimension:
            raise DimensionMismatch(
                "Statistics of %r have d=%d, base %r has d=%d"
                % (stats.class_id, stats.dimension, base.class_id, base.dimension)
            )


def _clamped_coefficients(stats: ClassStats, z: LatentVector) -> np.ndarray:
    return clamp_b(stats, project_b(stats, z)).coefficients


def _weighted_means(terms: Sequence[tuple[ClassStats, float]]) -> np.ndarray:
    """Return Σ weight·m in ascending class-id order; the first product seeds the sum."""
    ordered = sorted(terms, key=lambda term: term[0].class_id)
    stats, weight = ordered[0]
    total = weight * stats.mean
    for stats, weight in ordered[1:]:
        total = total + weight * stats.mean
    return total


def _mean_of(item: UndesiredMean, dimension: int) -> np.ndarray:
    if isinstance(item, ClassStats):
        if item.dimension != dimension:
            raise DimensionMismatch("Undesired statistics have d=%d, expected %d" % (item.dimension, dimension))
        return item.mean
    return as_latent_vector(item, dimension, name="undesired mean")


def _subtract_undesired(
    total: np.ndarray, undesired: Sequence[tuple[UndesiredMean, float]], dimension: int
) -> np.ndarray:
    for item, delta in undesired:
        total = total - validate_delta(delta) * _mean_of(item, dimension)
    return total


def _combine(mean_term: np.ndarray, basis: np.ndarray, coefficients: np.ndarray) -> LatentVector:
    out = mean_term + basis @ coefficients
    if not np.isfinite(out).all():
        raise NumericalError("Transform produced a non-finite vector")
    return out


def edit(z: LatentVector, stats: ClassStats, alpha: float) -> LatentVector:
    """Edit a vector toward a class: α·m + V·b̃.

    Args:
        z: The input vector.
        stats: The class statistics.
        alpha: The mean gain, at least 1.

    Raises:
        DimensionMismatch: If z does not have the statistics' dimension.
        ValidationError: If alpha < 1.
    """
    alpha = validate_alpha(alpha)
    return _combine(alpha * stats.mean, stats.eigenvectors, _clamped_coefficients(stats, z))


def feature_synth(z: LatentVector, stats: ClassStats, beta: float) -> LatentVector:
    """Synthesize a class member from a vector: m + Ṽ·b̃[:t′].

    Args:
        z: The input vector.
        stats: The class statistics.
        beta: The percentage of leading eigenvectors kept, in (0, 100].

    Raises:
        DimensionMismatch: If z does not have the statistics' dimension.
        ValidationError: If beta is outside (0, 100].
    """
    truncated = truncate_stats(stats, beta)
    coefficients = _clamped_coefficients(stats, z)[: truncated.t_prime]
    return _combine(stats.mean, truncated.eigenvectors, coefficients)


def psi(z: LatentVector, stats: ClassStats, alpha: float, beta: float) -> tuple[LatentVector, LatentVector]:
    """Return the pair (feature_synth(z, stats, beta), edit(z, stats, alpha))."""
    return feature_synth(z, stats, beta), edit(z, stats, alpha)


def multi_edit(z: LatentVector, base: ClassStats, terms: Sequence[tuple[ClassStats, float]]) -> LatentVector:
    """Edit a vector toward several classes: Σ γ_i·m_i + V_base·b̃, with b̃ taken against the base class.

    The sum runs in ascending class-id order, so any permutation of terms gives the same result.

    Raises:
        ValidationError: If terms is empty.
        DimensionMismatch: If any statistics or z disagree on the dimension.
    """
    if not terms:
        raise ValidationError("multi_edit needs at least one term")
    _check_dimensions(base, [stats for stats, _ in terms])
    coefficients = _clamped_coefficients(base, z)
    return _combine(_weighted_means(terms), base.eigenvectors, coefficients)


def multi_feature(
    z: LatentVector,
    base: ClassStats,
    beta: float,
    terms: Sequence[tuple[ClassStats, float]],
    undesired: Sequence[tuple[UndesiredMean, float]] = (),
) -> LatentVector:
    """Synthesize a vector with several classes: Σ w_i·m_i − Σ δ_j·m_j + Ṽ_base·b̃[:t′].

    Args:
        z: The input vector.
        base: The class whose eigenbasis is used.
        beta: The percentage of the base's leading eigenvectors kept.
        terms: (statistics, weight) pairs; summed in ascending class-id order.
        undesired: Optional (statistics or mean vector, delta) pairs subtracted in the given order.

    Raises:
        ValidationError: If terms is empty, beta is out of range or a delta is not positive.
        DimensionMismatch: If any statistics or z disagree on the dimension.
    """
    if not terms:
        raise ValidationError("multi_feature needs at least one term")
    _check_dimensions(base, [stats for stats, _ in terms])
    truncated = truncate_stats(base, beta)
    coefficients = _clamped_coefficients(base, z)[: truncated.t_prime]
    mean_term = _subtract_undesired(_weighted_means(terms), undesired, base.dimension)
    return _combine(mean_term, truncated.eigenvectors, coefficients)


def disentangled_edit(
    z: LatentVector, desired: ClassStats, alpha: float, undesired: Sequence[tuple[UndesiredMean, float]]
) -> LatentVector:
    """Edit toward a class while suppressing others: α·m_D − Σ δ_j·m_j + V_D·b̃.

    Args:
        z: The input vector.
        desired: The statistics of the desired class.
        alpha: The mean gain, at least 1.
        undesired: (statistics or mean vector, delta) pairs subtracted in the given order.

    Raises:
        ValidationError: If alpha < 1 or a delta is not positive.
        DimensionMismatch: If any mean or z disagree on the dimension.
    """
    alpha = validate_alpha(alpha)
    coefficients = _clamped_coefficients(desired, z)
    mean_term = _subtract_undesired(alpha * desired.mean, undesired, desired.dimension)
    return _combine(mean_term, desired.eigenvectors, coefficients)


def spec_from_dict(data: Mapping[str, Any]) -> EditSpec:
    """Build an edit specification from its JSON representation.

    Raises:
        ValidationError: On unknown or missing fields and on parameter violations.
        UnknownClass: If a class id is not part of the taxonomy.
    """
    check_fields(data, SPEC_FIELDS, frozenset({"mode", "base"}), "Edit spec")
    terms = []
    for index, term in enumerate(data.get("terms", [])):
        where = "Edit spec term %d" % index
        check_fields(term, TERM_FIELDS, TERM_FIELDS, where)
        terms.append(EditTerm(term["class"], finite_number(term, "weight", where)))
    undesired = []
    for index, term in enumerate(data.get("undesired", [])):
        where = "Edit spec undesired term %d" % index
        check_fields(term, UNDESIRED_FIELDS, UNDESIRED_FIELDS, where)
        undesired.append(UndesiredTerm(term["class"], finite_number(term, "delta", where)))
    parameters = {key: finite_number(data, key, "Edit spec") for key in ("alpha", "beta") if key in data}
    return EditSpec(
        mode=data["mode"], base=data["base"], terms=tuple(terms), undesired=tuple(undesired), **parameters
    )


def load_spec(source: str | os.PathLike[str] | Mapping[str, Any]) -> EditSpec:
    """Load an edit specification from a JSON file or an already parsed mapping.

    Raises:
        ValidationError: If the document is not valid JSON or violates the schema.
    """
    if isinstance(source, (str, os.PathLike)):
        try:
            data = json.loads(Path(source).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ValidationError("Edit spec %s is not valid JSON: %s" % (source, exc)) from exc
    else:
        data = dict(source)
    spec = spec_from_dict(data)
    logger.debug("Loaded edit spec %s", spec)
    return spec


def _lookup(registry: Mapping[str, ClassStats], class_id: str) -> ClassStats:
    try:
        return registry[class_id]
    except KeyError:
        raise ValidationError("No statistics for class %r" % class_id) from None


def apply_spec(
    spec: EditSpec, z: LatentVector, registry: Mapping[str, ClassStats]
) -> LatentVector | tuple[LatentVector, LatentVector]:
    """Apply an edit specification to one vector.

    Args:
        spec: The transformation to apply.
        z: The input vector.
        registry: Class statistics by class id; must cover every class the spec references.

    Returns:
        The transformed vector, or the pair (z_fb, z_id) for mode "psi".

    Raises:
        ValidationError: If the registry lacks a referenced class.
    """
    base = _lookup(registry, spec.base)
    terms = [(_lookup(registry, term.class_id), term.weight) for term in spec.terms]
    undesired = [(_lookup(registry, term.class_id), term.delta) for term in spec.undesired]
    if spec.mode == "edit":
        return edit(z, base, spec.alpha)
    if spec.mode == "feature":
        return feature_synth(z, base, spec.beta)
    if spec.mode == "psi":
        return psi(z, base, spec.alpha, spec.beta)
    if spec.mode == "multi-edit":
        return multi_edit(z, base, terms)
    if spec.mode == "multi-feature":
        return multi_feature(z, base, spec.beta, terms, undesired)
    return disentangled_edit(z, base, spec.alpha, undesired)


def transform_store(
    spec: EditSpec, store: LatentStore, registry: Mapping[str, ClassStats], threads: int | None = None
) -> LatentStore | tuple[LatentStore, LatentStore]:
    """Apply an edit specification to every record of a store.

    Records are transformed concurrently and reassembled in id order, so the result does not depend on the
    number of threads.

    Args:
        spec: The transformation to apply.
        store: The input store.
        registry: Class statistics by class id.
        threads: The number of worker threads; defaults to the number of available cores.

    Returns:
        The transformed store with the input's ids, or the pair (z_fb store, z_id store) for mode "psi".
    """
    for class_id in sorted(spec.classes()):
        stats = _lookup(registry, class_id)
        if stats.dimension != store.dimension:
            raise DimensionMismatch(
                "Statistics of %r have d=%d, store has d=%d" % (class_id, stats.dimension, store.dimension)
            )
    with ThreadPoolExecutor(max_workers=threads or os.cpu_count() or 1) as executor:
        outputs = list(executor.map(lambda z: apply_spec(spec, z, registry), store.vectors))
    manifest = {"source": store.manifest, "transform": spec.to_dict()}
    logger.info("Applied %s transform to %d records", spec.mode, store.count)
    if spec.mode == "psi":
        fb_vectors = np.array([pair[0] for pair in outputs]).reshape(store.count, store.dimension)
        id_vectors = np.array([pair[1] for pair in outputs]).reshape(store.count, store.dimension)
        return (
            LatentStore(store.dimension, store.ids, fb_vectors, {**manifest, "output": "feature"}),
            LatentStore(store.dimension, store.ids, id_vectors, {**manifest, "output": "edit"}),
        )
    vectors = np.array(outputs).reshape(store.count, store.dimension)
    return LatentStore(store.dimension, store.ids, vectors, manifest)

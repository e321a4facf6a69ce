# SPDX-FileCopyrightText: 2024 ganalyzer contributors
#
# SPDX-License-Identifier: BSD-3-Clause

"""The planner module generates attribute-balanced sets of latent vectors and reports how balanced a label table is.

A plan lists attribute combinations. Each entry draws its vectors from its own seeded Gaussian stream and pushes
them toward the combination with multi-attribute feature synthesis, so adding an entry never changes the vectors
of the others.

Plan JSON:

    {"seed": 7, "dimension": 512, "entries": [{"name": "angry-black-woman", "base": "angry", "beta": 25,
     "count": 2000, "terms": [{"class": "angry", "weight": 1.0}, ...]}]}

Classes:
    ManifestRecord: The provenance of one generated vector.
    BalanceReport: Histograms, co-occurrence and sparsity of a label table.

Functions:
    plan_from_dict: Build a plan from its JSON representation.
    load_plan: Load a plan from a JSON file.
    plan_to_dict: The JSON representation of a plan.
    default_plan: The shipped 23-combination plan.
    execute_plan: Generate the vectors of a plan.
    write_manifest: Write provenance records as JSON Lines.
    read_manifest: Read provenance records.
    balance_report: Summarize how balanced a label table is.
"""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np

from ganalyzer.entanglement import co_occurrence, group_histogram
from ganalyzer.exceptions import (
    DimensionMismatch,
    InsufficientSamples,
    StoreFormatError,
    UnknownClass,
    ValidationError,
)
from ganalyzer.models import DatasetPlan, EditTerm, LatentStore, PlanEntry
from ganalyzer.taxonomy import TAXONOMY
from ganalyzer.transform import multi_feature
from ganalyzer.utils import atomic_write_text, canonical_json, check_fields, finite_number

if TYPE_CHECKING:
    from collections.abc import Iterable, Mapping

    from ganalyzer.models import ClassStats, CoOccurrenceMatrix, LabelTable

logger = logging.getLogger(__name__)

PLAN_FIELDS: frozenset[str] = frozenset({"seed", "dimension", "entries"})
ENTRY_FIELDS: frozenset[str] = frozenset({"name", "base", "beta", "count", "terms"})
TERM_FIELDS: frozenset[str] = frozenset({"class", "weight"})
MANIFEST_FIELDS: frozenset[str] = frozenset({"id", "entry", "draw"})

SPARSE_CELL: float = 0.01

# Each name lists its classes; the first one is the base.
DEFAULT_COMBINATIONS: tuple[str, ...] = (
    "angry-black-woman",
    "angry-black-man",
    "angry-others-woman",
    "angry-others-man",
    "neutral-black-woman",
    "neutral-black-man",
    "neutral-others-woman",
    "neutral-others-man",
    "happy-black-woman",
    "happy-black-man",
    "happy-others-woman",
    "happy-others-man",
    "angry-white-woman",
    "angry-white-man",
    "neutral-white-woman",
    "neutral-white-man",
    "old-black-woman",
    "old-black-man",
    "old-others-woman",
    "old-others-man",
    "old-white-woman",
    "old-angry-woman",
    "old-neutral-man",
)


def _integer(data: Mapping[str, Any], key: str, where: str) -> int:
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError("%s: %r must be an integer, got %r" % (where, key, value))
    return value


def _entry_from_dict(data: Any, index: int) -> PlanEntry:
    where = "Plan entry %d" % index
    check_fields(data, ENTRY_FIELDS, frozenset({"name", "base", "terms"}), where)
    if not isinstance(data["name"], str):
        raise ValidationError("%s: 'name' must be a string" % where)
    if not isinstance(data["terms"], list):
        raise ValidationError("%s: 'terms' must be a list" % where)
    terms = []
    for term in data["terms"]:
        check_fields(term, TERM_FIELDS, TERM_FIELDS, where)
        try:
            terms.append(EditTerm(term["class"], finite_number(term, "weight", where)))
        except UnknownClass:
            raise UnknownClass("Entry %r references unknown class %r" % (data["name"], term["class"])) from None
    return PlanEntry(
        name=data["name"],
        base=data["base"],
        beta=finite_number(data, "beta", where) if "beta" in data else 25.0,
        terms=tuple(terms),
        count=_integer(data, "count", where) if "count" in data else 2000,
    )


def plan_from_dict(data: Any) -> DatasetPlan:
    """Build a dataset plan from its JSON representation.

    Raises:
        ValidationError: On schema violations or duplicate entry names.
        UnknownClass: If an entry references a class outside the taxonomy.
    """
    check_fields(data, PLAN_FIELDS, PLAN_FIELDS, "Plan")
    if not isinstance(data["entries"], list):
        raise ValidationError("Plan: 'entries' must be a list")
    return DatasetPlan(
        seed=_integer(data, "seed", "Plan"),
        dimension=_integer(data, "dimension", "Plan"),
        entries=tuple(_entry_from_dict(entry, index) for index, entry in enumerate(data["entries"])),
    )


def load_plan(path: str | os.PathLike[str]) -> DatasetPlan:
    """Load a dataset plan from a JSON file.

    Raises:
        ValidationError: If the file is not valid JSON or violates the plan schema.
    """
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError("Plan %s is not valid JSON: %s" % (path, exc)) from exc
    plan = plan_from_dict(data)
    logger.info("Loaded plan with %d entries (%d vectors) from %s", len(plan.entries), plan.total, path)
    return plan


def plan_to_dict(plan: DatasetPlan) -> dict[str, Any]:
    """Return the JSON representation of a plan."""
    return {
        "seed": plan.seed,
        "dimension": plan.dimension,
        "entries": [
            {
                "name": entry.name,
                "base": entry.base,
                "beta": entry.beta,
                "count": entry.count,
                "terms": [{"class": term.class_id, "weight": term.weight} for term in entry.terms],
            }
            for entry in plan.entries
        ],
    }


def default_plan(seed: int, dimension: int, count: int = 2000) -> DatasetPlan:
    """Return the 23-combination plan with unit weights and beta 25.

    The combinations favour the attributes a face generator rarely produces: non-happy expressions,
    non-white races and old age.
    """
    entries = []
    for name in DEFAULT_COMBINATIONS:
        classes = name.split("-")
        entries.append(
            PlanEntry(
                name=name,
                base=classes[0],
                beta=25.0,
                terms=tuple(EditTerm(class_id, 1.0) for class_id in classes),
                count=count,
            )
        )
    return DatasetPlan(seed=seed, dimension=dimension, entries=tuple(entries))


@dataclass(frozen=True)
class ManifestRecord:
    """The provenance of one generated vector: the entry that produced it and its draw index."""

    id: int
    entry: str
    draw: int


def _draw_entry(plan: DatasetPlan, index: int, registry: Mapping[str, ClassStats]) -> np.ndarray:
    entry = plan.entries[index]
    rng = np.random.default_rng(np.random.SeedSequence((plan.seed, index)))
    draws = rng.standard_normal((entry.count, plan.dimension))
    base = registry[entry.base]
    terms = [(registry[term.class_id], term.weight) for term in entry.terms]
    logger.debug("Generating %d vectors for entry %r", entry.count, entry.name)
    return np.array([multi_feature(z, base, entry.beta, terms) for z in draws])


def execute_plan(
    plan: DatasetPlan, registry: Mapping[str, ClassStats], threads: int | None = None
) -> tuple[LatentStore, list[ManifestRecord]]:
    """Generate the vectors of a plan.

    Entry i draws its vectors from the Gaussian stream seeded with (plan seed, i) and transforms them with
    multi-attribute feature synthesis. Entries run concurrently; the output is ordered by entry and draw
    index, so it does not depend on the number of threads.

    Args:
        plan: The plan to execute.
        registry: Class statistics by class id; must cover every class the plan references.
        threads: The number of worker threads; defaults to the number of available cores.

    Returns:
        The generated store with ids 0..total−1 and one manifest record per id.

    Raises:
        ValidationError: If the registry lacks a referenced class.
        DimensionMismatch: If a class's statistics do not have the plan's dimension.
    """
    for class_id in sorted(plan.classes()):
        if class_id not in registry:
            raise ValidationError("No statistics for class %r" % class_id)
        if registry[class_id].dimension != plan.dimension:
            raise DimensionMismatch(
                "Statistics of %r have d=%d, plan has d=%d" % (class_id, registry[class_id].dimension, plan.dimension)
            )
    with ThreadPoolExecutor(max_workers=threads or os.cpu_count() or 1) as executor:
        blocks = list(executor.map(lambda index: _draw_entry(plan, index, registry), range(len(plan.entries))))
    provenance = [(entry.name, draw) for entry in plan.entries for draw in range(entry.count)]
    records = [ManifestRecord(id=index, entry=name, draw=draw) for index, (name, draw) in enumerate(provenance)]
    store = LatentStore(
        dimension=plan.dimension,
        ids=np.arange(plan.total, dtype=np.uint64),
        vectors=np.concatenate(blocks).reshape(plan.total, plan.dimension),
        manifest={"source": "plan", "seed": plan.seed, "entries": [entry.name for entry in plan.entries]},
    )
    logger.info("Executed plan: %d entries, %d vectors", len(plan.entries), plan.total)
    return store, records


def write_manifest(records: Iterable[ManifestRecord], path: str | os.PathLike[str]) -> None:
    """Write provenance records as JSON Lines in the given order."""
    lines = [canonical_json({"id": record.id, "entry": record.entry, "draw": record.draw}) + "\n" for record in records]
    atomic_write_text(path, "".join(lines))
    logger.info("Wrote %d manifest records to %s", len(lines), path)


def read_manifest(path: str | os.PathLike[str]) -> list[ManifestRecord]:
    """Read provenance records written by write_manifest.

    Raises:
        StoreFormatError: If a line is not a valid manifest record.
    """
    records = []
    with Path(path).open(encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
                check_fields(data, MANIFEST_FIELDS, MANIFEST_FIELDS, "Manifest record")
                records.append(
                    ManifestRecord(
                        id=_integer(data, "id", "Manifest record"),
                        entry=str(data["entry"]),
                        draw=_integer(data, "draw", "Manifest record"),
                    )
                )
            except (json.JSONDecodeError, ValidationError) as exc:
                raise StoreFormatError(
                    "Invalid manifest record on line %d of %s: %s" % (line_number, path, exc)
                ) from exc
    return records


@dataclass(frozen=True)
class BalanceReport:
    """How balanced a label table is.

    Attributes:
        n: The number of labeled samples.
        histograms: The class fractions of every group.
        co_occurrence: The joint label frequencies.
        sparsity: The fraction of cross-group cells of the co-occurrence matrix below 1%.
    """

    n: int
    histograms: dict[str, dict[str, float]]
    co_occurrence: CoOccurrenceMatrix
    sparsity: float

    def to_dict(self) -> dict[str, Any]:
        """Return the JSON representation used by report files."""
        return {
            "n": self.n,
            "classes": list(self.co_occurrence.classes),
            "matrix": self.co_occurrence.matrix.tolist(),
            "histograms": self.histograms,
            "sparsity": self.sparsity,
        }


def _cross_group_mask() -> np.ndarray:
    groups = np.array([TAXONOMY.group_of(class_id) for class_id in TAXONOMY.class_names])
    return groups[:, np.newaxis] != groups[np.newaxis, :]


def balance_report(labels: LabelTable) -> BalanceReport:
    """Summarize how balanced a label table is.

    The sparsity score counts the ordered cells (a, b) with a and b in different groups whose joint frequency
    is below 1%, divided by the number of such cells.

    Raises:
        InsufficientSamples: If the table is empty.
    """
    if not len(labels):
        raise InsufficientSamples("Cannot report on an empty label table")
    matrix = co_occurrence(labels)
    mask = _cross_group_mask()
    sparse = int(np.count_nonzero(matrix.matrix[mask] < SPARSE_CELL))
    return BalanceReport(
        n=len(labels),
        histograms={group: group_histogram(labels, group) for group in TAXONOMY.group_names},
        co_occurrence=matrix,
        sparsity=sparse / int(np.count_nonzero(mask)),
    )

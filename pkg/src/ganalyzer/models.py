# SPDX-FileCopyrightText: 2024 ganalyzer contributors
#
# SPDX-License-Identifier: BSD-3-Clause

"""The models module defines the data structures shared by all parts of the toolkit.

Each class validates its invariants on construction and freezes the numpy arrays it holds, so instances can be
shared between threads without copying.

Classes:
    LatentStore: An id-ordered collection of latent vectors plus a metadata manifest.
    AttributeProbabilities: Per-group class probabilities of one sample.
    HardLabelSet: One class index per attribute group.
    LabelRow: The probabilities and hard labels of one store record.
    LabelTable: Label rows ordered by id, plus the ids that could not be labeled.
    ClassStats: Mean, eigenvalues and eigenvectors of one attribute class.
    BVector: Coordinates of a centered latent vector in a class eigenbasis.
    TruncatedStats: Class statistics restricted to their leading eigenvectors.
    EditTerm: A (class, weight) pair of a multi-attribute transform.
    UndesiredTerm: A (class, delta) pair subtracted by disentangled transforms.
    EditSpec: A declarative description of one transformation.
    PlanEntry: One attribute combination of a dataset plan.
    DatasetPlan: A seeded list of plan entries.
    CoOccurrenceMatrix: Joint frequencies of hard labels over a sample set.
    EntanglementDegree: The difference of two co-occurrence matrices.
    ServiceEndpoint: Connection settings of a remote inference service.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

import numpy as np
import numpy.typing as npt

from ganalyzer.exceptions import DimensionMismatch, UnknownClass, ValidationError
from ganalyzer.taxonomy import TAXONOMY
from ganalyzer.utils import frozen_array, validate_alpha, validate_beta, validate_delta

if TYPE_CHECKING:
    from collections.abc import Iterator, Mapping

LatentVector = npt.NDArray[np.float64]

MAX_DIMENSION: int = 65536
MAX_SEED: int = 2**64 - 1
PROBABILITY_TOLERANCE: float = 1e-6
ORTHONORMALITY_TOLERANCE: float = 1e-8
MIN_CLASS_SAMPLES: int = 2

MODES: tuple[str, ...] = ("edit", "feature", "psi", "multi-edit", "multi-feature", "disentangled-edit")
ALPHA_MODES: frozenset[str] = frozenset({"edit", "psi", "disentangled-edit"})
BETA_MODES: frozenset[str] = frozenset({"feature", "psi", "multi-feature"})
TERM_MODES: frozenset[str] = frozenset({"multi-edit", "multi-feature"})
UNDESIRED_MODES: frozenset[str] = frozenset({"disentangled-edit", "multi-feature"})


def _check_dimension(dimension: int) -> None:
    if not 1 <= dimension <= MAX_DIMENSION:
        raise ValidationError("Invalid dimension: %s. Dimension must be in [1, %d]." % (dimension, MAX_DIMENSION))


@dataclass(frozen=True, eq=False)
class LatentStore:
    """An id-ordered collection of latent vectors sharing one dimension.

    The store is agnostic of the latent space its vectors live in; producers declare provenance
    (creation seed, source, space) in the manifest.

    Attributes:
        dimension: The latent dimension d.
        ids: Unsigned 64-bit record ids, unique and strictly increasing.
        vectors: A (count, d) float64 matrix with one finite row per id.
        manifest: JSON-serializable metadata.
    """

    dimension: int
    ids: np.ndarray
    vectors: np.ndarray
    manifest: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        _check_dimension(self.dimension)
        ids = np.asarray(self.ids)
        if ids.size == 0:
            ids = np.empty(0, dtype=np.uint64)
        elif ids.dtype.kind not in "iu" or ids.ndim != 1:
            raise ValidationError("Store ids must be a 1-D sequence of unsigned integers")
        elif ids.dtype.kind == "i" and (ids < 0).any():
            raise ValidationError("Store ids must be non-negative")
        ids = ids.astype(np.uint64)
        vectors = np.asarray(self.vectors, dtype=np.float64)
        if vectors.size == 0 and ids.size == 0:
            vectors = vectors.reshape(0, self.dimension)
        if vectors.shape != (ids.size, self.dimension):
            raise DimensionMismatch(
                "Store vectors have shape %s, expected (%d, %d)" % (vectors.shape, ids.size, self.dimension)
            )
        if ids.size > 1 and not (ids[1:] > ids[:-1]).all():
            raise ValidationError("Store ids must be unique and strictly increasing")
        if not np.isfinite(vectors).all():
            bad = int(ids[np.flatnonzero(~np.isfinite(vectors).all(axis=1))[0]])
            raise ValidationError("Record %d has non-finite components" % bad)
        object.__setattr__(self, "ids", frozen_array(ids, np.uint64))
        object.__setattr__(self, "vectors", frozen_array(vectors))
        object.__setattr__(self, "manifest", dict(self.manifest))

    @property
    def count(self) -> int:
        """Return the number of records."""
        return int(self.ids.size)

    def __len__(self) -> int:
        return self.count

    def __iter__(self) -> Iterator[tuple[int, LatentVector]]:
        for record_id, vector in zip(self.ids, self.vectors):
            yield int(record_id), vector

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LatentStore):
            return NotImplemented
        return (
            self.dimension == other.dimension
            and np.array_equal(self.ids, other.ids)
            and np.array_equal(self.vectors, other.vectors)
            and self.manifest == other.manifest
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"<LatentStore d={self.dimension} count={self.count}>"

    def positions(self, ids: npt.ArrayLike) -> np.ndarray:
        """Return the row positions of the given ids.

        Raises:
            ValidationError: If an id is not in the store.
        """
        wanted = np.asarray(ids, dtype=np.uint64).reshape(-1)
        positions = np.searchsorted(self.ids, wanted)
        found = positions < self.count
        found[found] = self.ids[positions[found]] == wanted[found]
        if not found.all():
            raise ValidationError("Id %d is not in the store" % int(wanted[np.flatnonzero(~found)[0]]))
        return positions

    def rows(self, ids: npt.ArrayLike) -> np.ndarray:
        """Return the vectors of the given ids as a new (len(ids), d) matrix."""
        return self.vectors[self.positions(ids)]


@dataclass(frozen=True, eq=False)
class AttributeProbabilities:
    """Per-group class probabilities of one sample.

    Attributes:
        gender: Probabilities of (woman, man).
        age: Probabilities of (young, old).
        emotion: Probabilities of (happy, neutral, angry).
        race: Probabilities of (black, white, others).
    """

    gender: np.ndarray
    age: np.ndarray
    emotion: np.ndarray
    race: np.ndarray

    def __post_init__(self) -> None:
        for group in TAXONOMY.group_names:
            values = np.asarray(getattr(self, group), dtype=np.float64)
            size = len(TAXONOMY.classes(group))
            if values.shape != (size,):
                raise ValidationError(
                    "%s probabilities must have %d entries, got shape %s" % (group, size, values.shape)
                )
            if not np.isfinite(values).all() or (values < 0).any() or (values > 1).any():
                raise ValidationError("%s probabilities must lie in [0, 1]: %s" % (group, values.tolist()))
            total = math.fsum(values.tolist())
            if abs(total - 1.0) > PROBABILITY_TOLERANCE:
                raise ValidationError(
                    "%s probabilities sum to %r, expected 1 within %g" % (group, total, PROBABILITY_TOLERANCE)
                )
            object.__setattr__(self, group, frozen_array(values))

    @classmethod
    def from_vector(cls, values: npt.ArrayLike) -> AttributeProbabilities:
        """Build probabilities from a concatenated 10-entry vector in taxonomy order."""
        vector = np.asarray(values, dtype=np.float64)
        if vector.shape != (len(TAXONOMY),):
            raise ValidationError(
                "Probability vector must have %d entries, got shape %s" % (len(TAXONOMY), vector.shape)
            )
        return cls(**{group: vector[part] for group, part in TAXONOMY.slices.items()})

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> AttributeProbabilities:
        """Build probabilities from the wire representation {"gender": [...], "age": [...], ...}.

        Raises:
            ValidationError: If a group is missing, unknown, or violates the probability constraints.
        """
        if not isinstance(data, dict):
            raise ValidationError("Probabilities must be a JSON object, got %s" % type(data).__name__)
        if set(data) != set(TAXONOMY.group_names):
            raise ValidationError(
                "Probabilities must have exactly the groups %s, got %s" % (list(TAXONOMY.group_names), sorted(data))
            )
        try:
            return cls(**{group: np.asarray(data[group], dtype=np.float64) for group in TAXONOMY.group_names})
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError("Probabilities must be arrays of numbers: %s" % exc) from exc

    def group(self, name: str) -> np.ndarray:
        """Return the probabilities of one group."""
        TAXONOMY.classes(name)
        return getattr(self, name)

    def as_vector(self) -> np.ndarray:
        """Return the concatenated 10-entry vector in taxonomy order."""
        return np.concatenate([getattr(self, group) for group in TAXONOMY.group_names])

    def probability(self, class_id: str) -> float:
        """Return the probability of one class."""
        return float(self.as_vector()[TAXONOMY.index(class_id)])

    def to_dict(self) -> dict[str, list[float]]:
        """Return the wire representation."""
        return {group: getattr(self, group).tolist() for group in TAXONOMY.group_names}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AttributeProbabilities):
            return NotImplemented
        return all(np.array_equal(getattr(self, g), getattr(other, g)) for g in TAXONOMY.group_names)

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class HardLabelSet:
    """One class index per attribute group, local to the group.

    Attributes:
        gender: Index into (woman, man).
        age: Index into (young, old).
        emotion: Index into (happy, neutral, angry).
        race: Index into (black, white, others).
    """

    gender: int
    age: int
    emotion: int
    race: int

    def __post_init__(self) -> None:
        for group in TAXONOMY.group_names:
            index = getattr(self, group)
            size = len(TAXONOMY.classes(group))
            if not 0 <= index < size:
                raise ValidationError("Invalid %s label index: %s. Must be in [0, %d)." % (group, index, size))
            object.__setattr__(self, group, int(index))

    @classmethod
    def from_names(cls, names: Mapping[str, str]) -> HardLabelSet:
        """Build a label set from {"gender": "woman", ...}.

        Raises:
            UnknownClass: If a name is not a class of its group.
        """
        if not isinstance(names, dict) or set(names) != set(TAXONOMY.group_names):
            raise ValidationError("Labels must have exactly the groups %s" % list(TAXONOMY.group_names))
        indices = {}
        for group in TAXONOMY.group_names:
            classes = TAXONOMY.classes(group)
            if names[group] not in classes:
                raise UnknownClass("Unknown %s class: %r" % (group, names[group]))
            indices[group] = classes.index(names[group])
        return cls(**indices)

    def name(self, group: str) -> str:
        """Return the class name held for one group."""
        return TAXONOMY.classes(group)[getattr(self, group)]

    def names(self) -> dict[str, str]:
        """Return {group: class name} in taxonomy order."""
        return {group: self.name(group) for group in TAXONOMY.group_names}

    def classes(self) -> tuple[str, ...]:
        """Return the four held class names in taxonomy order."""
        return tuple(self.names().values())


@dataclass(frozen=True)
class LabelRow:
    """The probabilities and hard labels of one store record."""

    id: int
    probs: AttributeProbabilities
    labels: HardLabelSet


@dataclass(frozen=True)
class LabelTable:
    """Label rows ordered by id.

    Attributes:
        rows: The labeled records, sorted by id on construction.
        failures: Ids that could not be labeled, sorted.
    """

    rows: tuple[LabelRow, ...] = ()
    failures: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        rows = tuple(sorted(self.rows, key=lambda row: row.id))
        ids = [row.id for row in rows]
        if len(set(ids)) != len(ids):
            raise ValidationError("Label table ids must be unique")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "failures", tuple(sorted(int(i) for i in self.failures)))

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self) -> Iterator[LabelRow]:
        return iter(self.rows)

    def __repr__(self) -> str:
        return f"<LabelTable rows={len(self.rows)} failures={len(self.failures)}>"

    @property
    def ids(self) -> tuple[int, ...]:
        """Return the labeled ids in ascending order."""
        return tuple(row.id for row in self.rows)

    def label_indices(self, group: str) -> np.ndarray:
        """Return the group-local class index of every row."""
        TAXONOMY.classes(group)
        return np.array([getattr(row.labels, group) for row in self.rows], dtype=np.intp)

    def one_hot(self) -> np.ndarray:
        """Return an (n, 10) float64 indicator matrix of the held classes."""
        matrix = np.zeros((len(self.rows), len(TAXONOMY)), dtype=np.float64)
        for group, part in TAXONOMY.slices.items():
            matrix[np.arange(len(self.rows)), part.start + self.label_indices(group)] = 1.0
        return matrix


@dataclass(frozen=True, eq=False)
class ClassStats:
    """Eigen-statistics of the latent vectors carrying one class label.

    Attributes:
        class_id: The class the statistics were fitted for.
        k: The number of samples.
        mean: The element-wise mean vector m of length d.
        eigenvalues: The variances λ_1 ≥ ... ≥ λ_t ≥ 0 along the retained eigenvectors.
        eigenvectors: A (d, t) matrix V with orthonormal columns.
    """

    class_id: str
    k: int
    mean: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self) -> None:
        if not isinstance(self.class_id, str) or not self.class_id:
            raise ValidationError("Class id must be a non-empty string")
        if self.k < MIN_CLASS_SAMPLES:
            raise ValidationError("Invalid sample count: %s. Class statistics need k ≥ 2." % self.k)
        mean = np.asarray(self.mean, dtype=np.float64)
        if mean.ndim != 1:
            raise DimensionMismatch("Mean must be a vector, got shape %s" % (mean.shape,))
        _check_dimension(mean.shape[0])
        d = mean.shape[0]
        eigenvalues = np.asarray(self.eigenvalues, dtype=np.float64).reshape(-1)
        t = eigenvalues.shape[0]
        eigenvectors = np.asarray(self.eigenvectors, dtype=np.float64)
        if t == 0 and eigenvectors.size == 0:
            eigenvectors = eigenvectors.reshape(d, 0)
        if eigenvectors.shape != (d, t):
            raise DimensionMismatch("Eigenvectors have shape %s, expected (%d, %d)" % (eigenvectors.shape, d, t))
        if t > min(d, self.k - 1):
            raise ValidationError("Rank %d exceeds min(d, k - 1) = %d" % (t, min(d, self.k - 1)))
        if not (np.isfinite(mean).all() and np.isfinite(eigenvalues).all() and np.isfinite(eigenvectors).all()):
            raise ValidationError("Class statistics contain non-finite values")
        if (eigenvalues < 0).any() or (np.diff(eigenvalues) > 0).any():
            raise ValidationError("Eigenvalues must be non-negative and sorted non-increasing")
        if t and np.abs(eigenvectors.T @ eigenvectors - np.eye(t)).max() > ORTHONORMALITY_TOLERANCE:
            raise ValidationError("Eigenvectors are not orthonormal within %g" % ORTHONORMALITY_TOLERANCE)
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "mean", frozen_array(mean))
        object.__setattr__(self, "eigenvalues", frozen_array(eigenvalues))
        object.__setattr__(self, "eigenvectors", frozen_array(eigenvectors))

    @property
    def dimension(self) -> int:
        """Return the latent dimension d."""
        return int(self.mean.shape[0])

    @property
    def t(self) -> int:
        """Return the number of retained eigenvectors."""
        return int(self.eigenvalues.shape[0])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ClassStats):
            return NotImplemented
        return (
            self.class_id == other.class_id
            and self.k == other.k
            and np.array_equal(self.mean, other.mean)
            and np.array_equal(self.eigenvalues, other.eigenvalues)
            and np.array_equal(self.eigenvectors, other.eigenvectors)
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"<ClassStats {self.class_id} k={self.k} d={self.dimension} t={self.t}>"


@dataclass(frozen=True, eq=False)
class BVector:
    """Coordinates of a centered latent vector in a class eigenbasis.

    Attributes:
        coefficients: The t coefficients b_1..b_t.
        clamped: Whether every coefficient was limited to ±3√λ_i.
    """

    coefficients: np.ndarray
    clamped: bool = False

    def __post_init__(self) -> None:
        coefficients = np.asarray(self.coefficients, dtype=np.float64)
        if coefficients.ndim != 1:
            raise DimensionMismatch("Coefficients must be a vector, got shape %s" % (coefficients.shape,))
        object.__setattr__(self, "coefficients", frozen_array(coefficients))

    def __len__(self) -> int:
        return int(self.coefficients.shape[0])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BVector):
            return NotImplemented
        return self.clamped == other.clamped and np.array_equal(self.coefficients, other.coefficients)

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class TruncatedStats:
    """Class statistics restricted to their leading t′ eigenvectors.

    Attributes:
        source: The full class statistics.
        beta: The retention percentage in (0, 100].
        t_prime: The number of retained leading eigenvectors.
    """

    source: ClassStats
    beta: float
    t_prime: int

    def __post_init__(self) -> None:
        validate_beta(self.beta)
        if not 1 <= self.t_prime <= self.source.t:
            raise ValidationError("Invalid t′: %s. Must be in [1, %d]." % (self.t_prime, self.source.t))

    @property
    def eigenvectors(self) -> np.ndarray:
        """Return the (d, t′) leading columns of the source eigenvectors."""
        return self.source.eigenvectors[:, : self.t_prime]


@dataclass(frozen=True)
class EditTerm:
    """A class mean and its weight in a multi-attribute transform."""

    class_id: str
    weight: float

    def __post_init__(self) -> None:
        TAXONOMY.index(self.class_id)
        if not math.isfinite(self.weight):
            raise ValidationError("Invalid weight for %s: %s. Weight must be finite." % (self.class_id, self.weight))
        object.__setattr__(self, "weight", float(self.weight))


@dataclass(frozen=True)
class UndesiredTerm:
    """A class mean subtracted with strength delta by disentangled transforms."""

    class_id: str
    delta: float

    def __post_init__(self) -> None:
        TAXONOMY.index(self.class_id)
        object.__setattr__(self, "delta", validate_delta(self.delta))


@dataclass(frozen=True)
class EditSpec:
    """A declarative description of one transformation.

    Attributes:
        mode: One of "edit", "feature", "psi", "multi-edit", "multi-feature", "disentangled-edit".
        base: The class whose eigenbasis the input is projected on.
        alpha: The mean gain of the edit modes, at least 1.
        beta: The eigenvector retention percentage of the feature modes, in (0, 100].
        terms: The weighted class means of the multi modes.
        undesired: The class means subtracted by the disentangled modes.
    """

    mode: str
    base: str
    alpha: float = 1.0
    beta: float = 100.0
    terms: tuple[EditTerm, ...] = ()
    undesired: tuple[UndesiredTerm, ...] = ()

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValidationError("Invalid mode: %r. Must be one of %s." % (self.mode, list(MODES)))
        TAXONOMY.index(self.base)
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "undesired", tuple(self.undesired))
        if self.mode in ALPHA_MODES:
            object.__setattr__(self, "alpha", validate_alpha(self.alpha))
        if self.mode in BETA_MODES:
            object.__setattr__(self, "beta", validate_beta(self.beta))
        if self.mode in TERM_MODES and not self.terms:
            raise ValidationError("Mode %s needs at least one term" % self.mode)
        if self.mode not in TERM_MODES and self.terms:
            raise ValidationError("Mode %s does not accept terms" % self.mode)
        if self.mode not in UNDESIRED_MODES and self.undesired:
            raise ValidationError("Mode %s does not accept undesired terms" % self.mode)

    def classes(self) -> set[str]:
        """Return every class whose statistics the transform needs."""
        return {self.base} | {term.class_id for term in self.terms} | {term.class_id for term in self.undesired}

    def to_dict(self) -> dict[str, Any]:
        """Return the JSON representation, omitting parameters the mode ignores."""
        data: dict[str, Any] = {"mode": self.mode, "base": self.base}
        if self.mode in ALPHA_MODES:
            data["alpha"] = self.alpha
        if self.mode in BETA_MODES:
            data["beta"] = self.beta
        if self.terms:
            data["terms"] = [{"class": term.class_id, "weight": term.weight} for term in self.terms]
        if self.undesired:
            data["undesired"] = [{"class": term.class_id, "delta": term.delta} for term in self.undesired]
        return data


@dataclass(frozen=True)
class PlanEntry:
    """One attribute combination of a dataset plan.

    Attributes:
        name: A unique entry name such as "angry-black-woman".
        base: The class whose eigenbasis the drawn vectors are projected on.
        beta: The eigenvector retention percentage.
        terms: The weighted class means combined by the transform.
        count: The number of vectors to generate.
    """

    name: str
    base: str
    beta: float = 25.0
    terms: tuple[EditTerm, ...] = ()
    count: int = 2000

    def __post_init__(self) -> None:
        if not self.name:
            raise ValidationError("Plan entry names must be non-empty")
        try:
            TAXONOMY.index(self.base)
        except UnknownClass:
            raise UnknownClass("Entry %r references unknown class %r" % (self.name, self.base)) from None
        object.__setattr__(self, "beta", validate_beta(self.beta))
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.terms:
            raise ValidationError("Entry %r needs at least one term" % self.name)
        if self.count < 1:
            raise ValidationError("Invalid count for entry %r: %s. Count must be ≥ 1." % (self.name, self.count))

    def classes(self) -> set[str]:
        """Return every class the entry references."""
        return {self.base} | {term.class_id for term in self.terms}


@dataclass(frozen=True)
class DatasetPlan:
    """A seeded list of plan entries over one latent dimension.

    Attributes:
        seed: The global 64-bit seed; entry i draws from the stream (seed, i).
        dimension: The latent dimension d.
        entries: The plan entries in execution order.
    """

    seed: int
    dimension: int
    entries: tuple[PlanEntry, ...]

    def __post_init__(self) -> None:
        if not 0 <= self.seed <= MAX_SEED:
            raise ValidationError("Invalid seed: %s. Seed must be an unsigned 64-bit integer." % self.seed)
        _check_dimension(self.dimension)
        object.__setattr__(self, "entries", tuple(self.entries))
        if not self.entries:
            raise ValidationError("A plan needs at least one entry")
        names = [entry.name for entry in self.entries]
        duplicates = sorted({name for name in names if names.count(name) > 1})
        if duplicates:
            raise ValidationError("Duplicate entry names: %s" % duplicates)

    @property
    def total(self) -> int:
        """Return the number of vectors the plan generates."""
        return sum(entry.count for entry in self.entries)

    def classes(self) -> set[str]:
        """Return every class any entry references."""
        return set().union(*(entry.classes() for entry in self.entries))


def _check_square(classes: tuple[str, ...], matrix: np.ndarray, name: str) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.shape != (len(classes), len(classes)):
        raise DimensionMismatch("%s has shape %s, expected %d×%d" % (name, matrix.shape, len(classes), len(classes)))
    if not np.array_equal(matrix, matrix.T):
        raise ValidationError("%s must be symmetric" % name)
    return matrix


@dataclass(frozen=True, eq=False)
class CoOccurrenceMatrix:
    """Joint frequencies of hard labels.

    Attributes:
        classes: The class names labelling rows and columns.
        matrix: M[a][b] is the fraction of samples labeled with both a and b.
        n: The number of samples.
    """

    classes: tuple[str, ...]
    matrix: np.ndarray
    n: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "classes", tuple(self.classes))
        matrix = _check_square(self.classes, self.matrix, "Co-occurrence matrix")
        if (matrix < 0).any() or (matrix > 1).any():
            raise ValidationError("Co-occurrence entries must lie in [0, 1]")
        object.__setattr__(self, "matrix", frozen_array(matrix))

    def cell(self, a: str, b: str) -> float:
        """Return M[a][b]."""
        return float(self.matrix[self.classes.index(a), self.classes.index(b)])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CoOccurrenceMatrix):
            return NotImplemented
        return self.classes == other.classes and self.n == other.n and np.array_equal(self.matrix, other.matrix)

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class EntanglementDegree:
    """The entrywise difference M_after − M_before of two co-occurrence matrices.

    Positive cells show direct entanglement, negative cells reverse entanglement.
    """

    classes: tuple[str, ...]
    matrix: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "classes", tuple(self.classes))
        matrix = _check_square(self.classes, self.matrix, "Entanglement degree")
        object.__setattr__(self, "matrix", frozen_array(matrix))

    def cell(self, a: str, b: str) -> float:
        """Return D[a][b]."""
        return float(self.matrix[self.classes.index(a), self.classes.index(b)])


@dataclass(frozen=True)
class ServiceEndpoint:
    """Connection settings of a remote inference service.

    Attributes:
        base_url: The service root; paths such as /score are appended.
        timeout: The timeout (in seconds) for HTTP requests.
        max_batch_size: The maximum number of items per request; longer inputs are chunked.
        retries: The maximum number of retries of one chunk.
        retry_status_codes: The HTTP status codes on which a chunk is retried.
        default_retry_after: The wait time (in seconds) between retries if no 'retry-after' header is present.
        max_in_flight: The maximum number of concurrent chunk requests.
    """

    base_url: str
    timeout: float = 60
    max_batch_size: int = 64
    retries: int = 0
    retry_status_codes: tuple[int, ...] = (500, 502, 503, 504)
    default_retry_after: float = 1
    max_in_flight: int = 4

    def __post_init__(self) -> None:
        if not self.base_url:
            raise ValidationError("Invalid value for 'base_url': the endpoint URL must be non-empty.")
        object.__setattr__(self, "base_url", self.base_url.rstrip("/"))
        if self.timeout <= 0:
            raise ValidationError(
                "Invalid value for 'timeout': %s. Timeout must be positive int or float." % self.timeout
            )
        if self.max_batch_size < 1:
            raise ValidationError(
                "Invalid value for 'max_batch_size': %s. Batch size must be ≥ 1." % self.max_batch_size
            )
        if self.retries < 0:
            raise ValidationError("Invalid value for 'retries': %s. Retries must be ≥ 0." % self.retries)
        if self.default_retry_after < 0:
            raise ValidationError(
                "Invalid value for 'default_retry_after': %s. default_retry_after must be non-negative int or float."
                % self.default_retry_after
            )
        if self.max_in_flight < 1:
            raise ValidationError(
                "Invalid value for 'max_in_flight': %s. max_in_flight must be ≥ 1." % self.max_in_flight
            )
        object.__setattr__(self, "retry_status_codes", tuple(self.retry_status_codes))

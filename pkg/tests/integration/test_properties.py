# SPDX-FileCopyrightText: 2024 ganalyzer contributors
#
# SPDX-License-Identifier: BSD-3-Clause

from __future__ import annotations

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from ganalyzer.entanglement import co_occurrence, entanglement_degree, group_histogram
from ganalyzer.models import AttributeProbabilities, BVector, ClassStats, HardLabelSet, LabelRow, LabelTable
from ganalyzer.stats import clamp_b
from ganalyzer.taxonomy import TAXONOMY

GROUP_SIZES = tuple(len(TAXONOMY.classes(group)) for group in TAXONOMY.group_names)


def diagonal_stats(eigenvalues: np.ndarray) -> ClassStats:
    t = len(eigenvalues)
    ordered = np.sort(eigenvalues)[::-1]
    return ClassStats("angry", t + 1, np.zeros(t), ordered, np.eye(t))


def table_from_indices(indices: np.ndarray) -> LabelTable:
    """Build a table from an (n, 4) matrix of group-local label indices."""
    rows = []
    for row_id, local in enumerate(indices.tolist()):
        labels = HardLabelSet(*local)
        vector = np.zeros(len(TAXONOMY))
        vector[[TAXONOMY.index(class_id) for class_id in labels.classes()]] = 1.0
        rows.append(LabelRow(row_id, AttributeProbabilities.from_vector(vector), labels))
    return LabelTable(tuple(rows))


def brute_force_counts(indices: np.ndarray) -> np.ndarray:
    counts = np.zeros((len(TAXONOMY), len(TAXONOMY)))
    offsets = np.cumsum((0, *GROUP_SIZES[:-1]))
    for local in indices.tolist():
        held = [offset + index for offset, index in zip(offsets.tolist(), local)]
        for a in held:
            for b in held:
                counts[a, b] += 1
    return counts


def random_indices(rng: np.random.Generator, n: int) -> np.ndarray:
    return np.stack([rng.integers(0, size, n) for size in GROUP_SIZES], axis=1)


def test_clamp_law_seeded_batch() -> None:
    rng = np.random.default_rng(2024)
    cases = 0
    for _ in range(100):
        stats = diagonal_stats(rng.exponential(2.0, rng.integers(1, 9)))
        bound = 3.0 * np.sqrt(stats.eigenvalues)
        for b in rng.normal(0.0, 5.0, (100, stats.t)):
            clamped = clamp_b(stats, BVector(b))
            assert (np.abs(clamped.coefficients) <= bound).all()
            assert clamp_b(stats, clamped) == clamped
            cases += 1
    assert cases == 10_000


@settings(max_examples=200, deadline=None)
@given(
    data=st.lists(
        st.tuples(st.floats(0.0, 1e6, allow_nan=False), st.floats(-1e7, 1e7, allow_nan=False)),
        min_size=1,
        max_size=8,
    )
)
def test_clamp_law(data: list[tuple[float, float]]) -> None:
    stats = diagonal_stats(np.array([eigenvalue for eigenvalue, _ in data]))
    b = BVector([coefficient for _, coefficient in data])
    clamped = clamp_b(stats, b)
    assert (np.abs(clamped.coefficients) <= 3.0 * np.sqrt(stats.eigenvalues)).all()
    assert clamp_b(stats, clamped).coefficients.tolist() == clamped.coefficients.tolist()
    unclamped = np.abs(b.coefficients) <= 3.0 * np.sqrt(stats.eigenvalues)
    assert (clamped.coefficients[unclamped] == b.coefficients[unclamped]).all()


def test_co_occurrence_matches_brute_force() -> None:
    rng = np.random.default_rng(10)
    for _ in range(100):
        n = int(rng.integers(1, 51))
        before_indices, after_indices = random_indices(rng, n), random_indices(rng, n)
        before = co_occurrence(table_from_indices(before_indices))
        after = co_occurrence(table_from_indices(after_indices))
        expected_before = brute_force_counts(before_indices) / n
        expected_after = brute_force_counts(after_indices) / n
        assert np.array_equal(before.matrix, expected_before)
        assert before.n == n
        assert np.array_equal(entanglement_degree(before, after).matrix, expected_after - expected_before)


@settings(max_examples=50, deadline=None)
@given(
    st.lists(
        st.tuples(*(st.integers(0, size - 1) for size in GROUP_SIZES)),
        min_size=1,
        max_size=30,
    )
)
def test_co_occurrence_invariants(labels: list[tuple[int, int, int, int]]) -> None:
    table = table_from_indices(np.array(labels))
    matrix = co_occurrence(table).matrix
    assert np.array_equal(matrix, matrix.T)
    for group, part in TAXONOMY.slices.items():
        block = matrix[part, part]
        np.testing.assert_array_equal(np.diag(block), list(group_histogram(table, group).values()))
        assert np.count_nonzero(block - np.diag(np.diag(block))) == 0
        assert abs(block.sum() - 1.0) <= 1e-12
    assert np.array_equal(entanglement_degree(co_occurrence(table), co_occurrence(table)).matrix, np.zeros_like(matrix))

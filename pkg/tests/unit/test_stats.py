# SPDX-FileCopyrightText: 2024 ganalyzer contributors
#
# SPDX-License-Identifier: BSD-3-Clause

from __future__ import annotations

import logging
import math
import struct
from typing import TYPE_CHECKING

import numpy as np
import pytest

from ganalyzer.exceptions import (
    BadMagic,
    DimensionMismatch,
    InsufficientSamples,
    NonFiniteValue,
    TruncatedPayload,
    UnsupportedVersion,
    ValidationError,
)
from ganalyzer.models import BVector, ClassStats, LatentStore
from ganalyzer.scoring import label_store, select_class
from ganalyzer.stats import (
    clamp_b,
    compute_class_stats,
    encode_stats,
    fit_registry,
    project_b,
    read_stats,
    reconstruct,
    retained_count,
    truncate_stats,
    write_stats,
)
from ganalyzer.store import sample_store
from ganalyzer.taxonomy import TAXONOMY

if TYPE_CHECKING:
    from collections.abc import Callable
    from pathlib import Path

    from ganalyzer.scoring import SyntheticWorld


@pytest.fixture()
def hand_store() -> LatentStore:
    return LatentStore(2, [0, 1, 2], [[1.0, 0.0], [-1.0, 0.0], [0.0, 0.0]])


def test_compute_class_stats_hand(hand_store: LatentStore) -> None:
    stats = compute_class_stats(hand_store, {0, 1, 2}, "angry")
    np.testing.assert_array_equal(stats.mean, [0.0, 0.0])
    np.testing.assert_array_equal(stats.eigenvalues, [1.0])
    np.testing.assert_array_equal(np.abs(stats.eigenvectors), [[1.0], [0.0]])
    assert stats.eigenvectors[0, 0] == 1.0
    assert stats.k == 3
    assert stats.t == 1


def test_compute_class_stats_identical_samples() -> None:
    store = LatentStore(3, [0, 1, 2], [[1.0, 2.0, 3.0]] * 3)
    stats = compute_class_stats(store, [0, 1, 2])
    assert stats.t == 0
    np.testing.assert_array_equal(stats.mean, [1.0, 2.0, 3.0])


def test_compute_class_stats_needs_two_samples(hand_store: LatentStore) -> None:
    with pytest.raises(InsufficientSamples, match="at least 2"):
        compute_class_stats(hand_store, [1], "angry")


def test_compute_class_stats_unknown_id(hand_store: LatentStore) -> None:
    with pytest.raises(ValidationError, match="Id 7"):
        compute_class_stats(hand_store, [0, 7])


def test_compute_class_stats_standard_normal() -> None:
    store = sample_store(21, 32, 10_000)
    stats = compute_class_stats(store, store.ids.tolist())
    assert stats.t == 32
    assert np.all((stats.eigenvalues >= 0.85) & (stats.eigenvalues <= 1.15))


def test_compute_class_stats_order_independent() -> None:
    store = sample_store(22, 6, 40)
    ids = store.ids.tolist()
    forward = compute_class_stats(store, ids)
    backward = compute_class_stats(store, ids[::-1])
    np.testing.assert_array_equal(forward.mean, backward.mean)
    np.testing.assert_allclose(forward.eigenvalues, backward.eigenvalues, atol=1e-12)
    np.testing.assert_allclose(forward.eigenvectors, backward.eigenvectors, atol=1e-12)


def test_compute_class_stats_sign_convention() -> None:
    stats = compute_class_stats(sample_store(23, 5, 30), range(30))
    pivots = np.abs(stats.eigenvectors).argmax(axis=0)
    assert np.all(stats.eigenvectors[pivots, np.arange(stats.t)] > 0)


def test_compute_class_stats_rank_deficient() -> None:
    stats = compute_class_stats(sample_store(24, 10, 4), range(4))
    assert stats.t == 3


def test_fit_registry_skips_small_classes(
    reference_world: SyntheticWorld, caplog: pytest.LogCaptureFixture
) -> None:
    store = sample_store(25, 32, 30)
    table = label_store(store, reference_world)
    with caplog.at_level(logging.WARNING, logger="ganalyzer"):
        registry = fit_registry(store, table)
    members = {class_id: select_class(table, class_id) for class_id in TAXONOMY.class_names}
    assert list(registry) == [class_id for class_id, ids in members.items() if len(ids) >= 2]
    for class_id, stats in registry.items():
        assert stats.k == len(members[class_id])
    skipped = [class_id for class_id, ids in members.items() if len(ids) < 2]
    assert len(caplog.records) == len(skipped)


def test_fit_registry_explicit_class_too_small(hand_world: SyntheticWorld) -> None:
    store = LatentStore(2, [0, 1], [[1.0, 0.0], [2.0, 0.0]])
    table = label_store(store, hand_world)
    with pytest.raises(InsufficientSamples):
        fit_registry(store, table, ["angry"])


def test_project_b(make_stats: Callable[..., ClassStats]) -> None:
    stats = make_stats((0.0, 0.0), (4.0, 4.0))
    assert project_b(stats, np.array([2.0, -1.0])).coefficients.tolist() == [2.0, -1.0]
    assert project_b(stats, stats.mean).coefficients.tolist() == [0.0, 0.0]
    assert not project_b(stats, np.zeros(2)).clamped


def test_project_b_diagonal_basis() -> None:
    vector = np.array([[1.0], [1.0]]) / math.sqrt(2)
    stats = ClassStats("angry", 2, [0.0, 0.0], [1.0], vector)
    assert project_b(stats, np.array([1.0, 1.0])).coefficients[0] == pytest.approx(math.sqrt(2), abs=1e-15)


def test_project_b_dimension_mismatch(make_stats: Callable[..., ClassStats]) -> None:
    with pytest.raises(DimensionMismatch):
        project_b(make_stats((0.0, 0.0)), np.zeros(3))


def test_clamp_b(make_stats: Callable[..., ClassStats]) -> None:
    stats = make_stats((0.0, 0.0), (1.0, 0.25))
    clamped = clamp_b(stats, BVector([-1.0, 2.0]))
    assert clamped.coefficients.tolist() == [-1.0, 1.5]
    assert clamped.clamped
    assert clamp_b(stats, BVector([0.5, 0.5])).coefficients.tolist() == [0.5, 0.5]


def test_clamp_b_zero_variance() -> None:
    stats = ClassStats("angry", 3, [0.0, 0.0], [1.0, 0.0], np.eye(2))
    assert clamp_b(stats, BVector([5.0, 5.0])).coefficients.tolist() == [3.0, 0.0]


def test_clamp_b_length_mismatch(make_stats: Callable[..., ClassStats]) -> None:
    with pytest.raises(DimensionMismatch, match="b has 1 coefficients"):
        clamp_b(make_stats((0.0, 0.0)), BVector([1.0]))


def test_reconstruct(make_stats: Callable[..., ClassStats]) -> None:
    stats = make_stats((0.0, 0.0), (4.0, 4.0))
    assert reconstruct(stats, BVector([1.5, -1.0])).tolist() == [1.5, -1.0]
    np.testing.assert_array_equal(reconstruct(stats, BVector([0.0, 0.0])), stats.mean)
    with pytest.raises(DimensionMismatch):
        reconstruct(stats, BVector([1.0]))


def test_reconstruct_inverts_projection() -> None:
    store = sample_store(26, 8, 200)
    stats = compute_class_stats(store, range(200))
    z = store.vectors[0] * 0.1
    again = reconstruct(stats, project_b(stats, z))
    assert np.linalg.norm(again - z) <= 1e-9 * np.linalg.norm(z)


@pytest.mark.parametrize(("t", "beta", "expected"), [(10, 25, 3), (10, 100, 10), (4, 1, 1), (7, 50, 4)])
def test_retained_count(t: int, beta: float, expected: int) -> None:
    assert retained_count(t, beta) == expected


def test_truncate_stats() -> None:
    stats = compute_class_stats(sample_store(27, 10, 50), range(50))
    truncated = truncate_stats(stats, 25)
    assert truncated.t_prime == 3
    np.testing.assert_array_equal(truncated.eigenvectors, stats.eigenvectors[:, :3])
    np.testing.assert_array_equal(truncate_stats(stats, 100).eigenvectors, stats.eigenvectors)


def test_truncate_stats_rejects(make_stats: Callable[..., ClassStats]) -> None:
    with pytest.raises(ValidationError, match="beta must be in"):
        truncate_stats(make_stats((0.0, 0.0)), 0)
    zero = ClassStats("angry", 3, [0.0, 0.0], [], np.empty((2, 0)))
    with pytest.raises(ValidationError, match="t = 0"):
        truncate_stats(zero, 50)


def test_write_read_stats(tmp_path: Path) -> None:
    stats = compute_class_stats(sample_store(28, 6, 20), range(20), "old")
    path = tmp_path / "old.stats"
    write_stats(path, stats)
    assert path.read_bytes()[:4] == b"GNST"
    assert read_stats(path) == stats


def test_read_stats_errors(tmp_path: Path, make_stats: Callable[..., ClassStats]) -> None:
    data = encode_stats(make_stats((0.0, 0.0)))
    path = tmp_path / "x.stats"
    path.write_bytes(b"GNLZ" + data[4:])
    with pytest.raises(BadMagic):
        read_stats(path)
    path.write_bytes(data[:4] + struct.pack("<I", 9) + data[8:])
    with pytest.raises(UnsupportedVersion):
        read_stats(path)
    path.write_bytes(data[:-3])
    with pytest.raises(TruncatedPayload):
        read_stats(path)
    class_id_size = len(b"angry")
    mean_offset = 12 + class_id_size + 16
    path.write_bytes(data[:mean_offset] + struct.pack("<d", float("inf")) + data[mean_offset + 8 :])
    with pytest.raises(NonFiniteValue):
        read_stats(path)

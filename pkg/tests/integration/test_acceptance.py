# SPDX-FileCopyrightText: 2024 ganalyzer contributors
#
# SPDX-License-Identifier: BSD-3-Clause

"""Synthetic-world runs checking the trends the editing and balancing tools are built for."""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np
import pytest

from ganalyzer import make_synthetic_world
from ganalyzer.entanglement import co_occurrence, entanglement_degree, group_histogram
from ganalyzer.evaluation import sweep_alpha, sweep_beta
from ganalyzer.models import DatasetPlan, EditTerm, LatentStore, PlanEntry
from ganalyzer.planner import execute_plan
from ganalyzer.scoring import label_store, plant_entanglement, select_class
from ganalyzer.stats import compute_class_stats, fit_registry, project_b
from ganalyzer.store import sample_store
from ganalyzer.taxonomy import TAXONOMY
from ganalyzer.transform import disentangled_edit, edit

if TYPE_CHECKING:
    from ganalyzer.models import ClassStats, EntanglementDegree
    from ganalyzer.scoring import SyntheticWorld

pytestmark = pytest.mark.slow

ALPHAS = (1.0, 1.5, 2.0, 2.5, 3.0)
BETAS = (25.0, 35.0, 50.0, 100.0)


@pytest.fixture(scope="module")
def training_store() -> LatentStore:
    return sample_store(8, 32, 20_000)


@pytest.fixture(scope="module")
def man_stats(training_store: LatentStore, reference_world: SyntheticWorld) -> ClassStats:
    table = label_store(training_store, reference_world)
    return compute_class_stats(training_store, select_class(table, "man"), "man")


@pytest.fixture(scope="module")
def inputs() -> np.ndarray:
    return sample_store(9, 32, 2_000).vectors


def test_edit_with_unit_alpha_reproduces_input() -> None:
    store = sample_store(5, 32, 5_000)
    stats = compute_class_stats(store, range(5_000), "young")
    assert stats.t == 32
    bound = 3.0 * np.sqrt(stats.eigenvalues)
    checked = 0
    for z in sample_store(6, 32, 1_000).vectors:
        if (np.abs(project_b(stats, z).coefficients) > bound).any():
            continue
        assert np.linalg.norm(edit(z, stats, 1.0) - z) <= 1e-9 * np.linalg.norm(z)
        checked += 1
    assert checked > 800


def test_eigen_fidelity(
    training_store: LatentStore, man_stats: ClassStats, reference_world: SyntheticWorld
) -> None:
    vectors = man_stats.eigenvectors
    assert np.abs(vectors.T @ vectors - np.eye(man_stats.t)).max() <= 1e-8
    assert man_stats.t == 32
    members = sorted(select_class(label_store(training_store, reference_world), "man"))
    covariance = np.cov(training_store.rows(members), rowvar=False)
    rebuilt = vectors @ np.diag(man_stats.eigenvalues) @ vectors.T
    assert np.abs(rebuilt - covariance).max() <= 1e-6 * max(1.0, np.abs(covariance).max())


def test_alpha_trend(reference_world: SyntheticWorld, man_stats: ClassStats, inputs: np.ndarray) -> None:
    points = sweep_alpha(reference_world, inputs, man_stats, ALPHAS)
    flips = [point.flip_rate for point in points]
    identity = [point.identity_score for point in points]
    probability = [point.mean_probability for point in points]
    assert flips == sorted(flips)
    assert flips[-1] >= 0.9
    assert all(later <= earlier for earlier, later in zip(identity, identity[1:]))
    assert all(later > earlier for earlier, later in zip(probability, probability[1:]))


def test_beta_trend(reference_world: SyntheticWorld, man_stats: ClassStats, inputs: np.ndarray) -> None:
    points = sweep_beta(reference_world, inputs, man_stats, BETAS)
    probability = [point.mean_probability for point in points]
    flips = [point.flip_rate for point in points]
    assert all(later <= earlier + 1e-3 for earlier, later in zip(probability, probability[1:]))
    assert all(rate >= 0.99 for rate in flips[:3])
    assert flips[3] < flips[2]


def test_disentangled_edit_reduces_entanglement() -> None:
    world = plant_entanglement(make_synthetic_world(7, 32, orthogonal=True), "angry", "man", 0.6)
    training = sample_store(21, 32, 10_000)
    registry = fit_registry(training, label_store(training, world), ["angry", "man"])
    angry, man = registry["angry"], registry["man"]
    store = sample_store(22, 32, 10_000)
    before = co_occurrence(label_store(store, world))

    def degree(vectors: list[np.ndarray]) -> EntanglementDegree:
        edited = LatentStore(store.dimension, store.ids, np.array(vectors), {"source": "edit"})
        return entanglement_degree(before, co_occurrence(label_store(edited, world)))

    plain = degree([edit(z, angry, 2.0) for z in store.vectors])
    disentangled = degree([disentangled_edit(z, angry, 2.0, [(man, 0.5)]) for z in store.vectors])
    assert plain.cell("man", "man") > 0
    assert abs(disentangled.cell("man", "man")) <= 0.5 * abs(plain.cell("man", "man"))
    # (angry, man) also rises with angry itself
    assert plain.cell("angry", "man") > 0
    assert abs(disentangled.cell("angry", "man")) <= 0.75 * abs(plain.cell("angry", "man"))


def test_plan_rebalances_rarest_class() -> None:
    world = make_synthetic_world(7, 32, biases={"angry": -1.5})
    baseline_store = sample_store(31, 32, 20_000)
    baseline = label_store(baseline_store, world)
    fractions = {
        class_id: fraction
        for group in TAXONOMY.group_names
        for class_id, fraction in group_histogram(baseline, group).items()
    }
    assert min(fractions, key=fractions.__getitem__) == "angry"
    registry = fit_registry(baseline_store, baseline, ["angry", "woman", "man", "young", "old"])
    entries = tuple(
        PlanEntry(
            name=f"angry-{other}",
            base="angry",
            beta=25.0,
            terms=(EditTerm("angry", 1.0), EditTerm(other, 1.0)),
            count=500,
        )
        for other in ("woman", "man", "young", "old")
    )
    store, _ = execute_plan(DatasetPlan(seed=3, dimension=32, entries=entries), registry)
    rebalanced = group_histogram(label_store(store, world), "emotion")["angry"]
    assert rebalanced >= 3 * fractions["angry"]


def test_plan_entry_hits_its_class(reference_world: SyntheticWorld, training_store: LatentStore) -> None:
    registry = fit_registry(training_store, label_store(training_store, reference_world), ["angry", "woman"])
    entry = PlanEntry(
        name="angry-woman", base="angry", beta=25.0, terms=(EditTerm("angry", 1.0), EditTerm("woman", 1.0)), count=500
    )
    store, _ = execute_plan(DatasetPlan(seed=4, dimension=32, entries=(entry,)), registry)
    assert group_histogram(label_store(store, reference_world), "emotion")["angry"] >= 0.8

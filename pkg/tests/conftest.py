# SPDX-FileCopyrightText: 2024 ganalyzer contributors
#
# SPDX-License-Identifier: BSD-3-Clause

from __future__ import annotations

import logging
from typing import TYPE_CHECKING

import numpy as np
import pytest

from ganalyzer import ClassStats, InferenceClient, ServiceEndpoint, SyntheticWorld, make_synthetic_world
from ganalyzer.models import AttributeProbabilities, HardLabelSet, LabelRow, LabelTable
from ganalyzer.mock import MockInferenceService
from ganalyzer.taxonomy import TAXONOMY

if TYPE_CHECKING:
    from collections.abc import Callable, Iterator

    from respx.router import MockRouter

BASE_URL = "http://inference.test"
HAND_DIRECTIONS = {
    "woman": (1.0, 0.0),
    "man": (-1.0, 0.0),
    "young": (0.0, 1.0),
    "old": (0.0, -1.0),
    "happy": (1.0, 0.0),
    "neutral": (0.0, 1.0),
    "angry": (-1.0, 0.0),
    "black": (1.0, 0.0),
    "white": (0.0, 1.0),
    "others": (0.0, -1.0),
}


def hand_stats(mean: tuple[float, float], eigenvalues: tuple[float, float] = (100.0, 100.0), k: int = 3) -> ClassStats:
    """Return d=2 statistics with the identity as eigenbasis."""
    return ClassStats(
        class_id="angry", k=k, mean=np.array(mean), eigenvalues=np.array(eigenvalues), eigenvectors=np.eye(2)
    )


def label_table(*rows: tuple[str, str, str, str]) -> LabelTable:
    """Return a table with one-hot probabilities for rows of (gender, age, emotion, race) names."""
    built = []
    for index, names in enumerate(rows):
        vector = np.zeros(len(TAXONOMY))
        vector[[TAXONOMY.index(class_id) for class_id in names]] = 1.0
        labels = HardLabelSet.from_names(dict(zip(TAXONOMY.group_names, names)))
        built.append(LabelRow(index, AttributeProbabilities.from_vector(vector), labels))
    return LabelTable(tuple(built))


@pytest.fixture(autouse=True)
def _restore_package_logger() -> Iterator[None]:
    package_logger = logging.getLogger("ganalyzer")
    level, handlers = package_logger.level, list(package_logger.handlers)
    yield
    package_logger.setLevel(level)
    package_logger.handlers[:] = handlers


@pytest.fixture()
def make_stats() -> Callable[..., ClassStats]:
    return hand_stats


@pytest.fixture()
def make_table() -> Callable[..., LabelTable]:
    return label_table


@pytest.fixture()
def hand_world() -> SyntheticWorld:
    directions = np.array([HAND_DIRECTIONS[class_id] for class_id in TAXONOMY.class_names])
    return SyntheticWorld(seed=0, temperature=1.0, directions=directions, biases=np.zeros(len(TAXONOMY)))


@pytest.fixture(scope="session")
def reference_world() -> SyntheticWorld:
    return make_synthetic_world(7, 32)


@pytest.fixture()
def service() -> MockInferenceService:
    return MockInferenceService(make_synthetic_world(7, 8))


@pytest.fixture()
def endpoint() -> ServiceEndpoint:
    return ServiceEndpoint(BASE_URL, max_batch_size=2, default_retry_after=0)


@pytest.fixture()
def client(endpoint: ServiceEndpoint) -> InferenceClient:
    return InferenceClient(endpoint)


@pytest.fixture()
def mocked_service(service: MockInferenceService, respx_mock: MockRouter) -> MockInferenceService:
    respx_mock.route(host="inference.test").mock(side_effect=service.handle)
    return service

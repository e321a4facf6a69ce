# SPDX-FileCopyrightText: 2024 ganalyzer contributors
#
# SPDX-License-Identifier: BSD-3-Clause

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np
from click.testing import CliRunner

from ganalyzer import InferenceClient, ServiceEndpoint, make_synthetic_world
from ganalyzer.cli import main
from ganalyzer.client import RemoteScorer
from ganalyzer.entanglement import mean_probe
from ganalyzer.mock import MockInferenceService
from ganalyzer.scoring import label_store, read_labels, select_class
from ganalyzer.stats import compute_class_stats
from ganalyzer.store import sample_store

if TYPE_CHECKING:
    from pathlib import Path

    from pytest_mock import MockerFixture
    from respx.router import MockRouter

BASE_URL = "http://inference.test"


def test_label_through_flaky_service(tmp_path: Path, respx_mock: MockRouter, mocker: MockerFixture) -> None:
    mocker.patch("time.sleep")
    service = MockInferenceService(make_synthetic_world(3, 6), fail_chunks={1: 2, 4: 1})
    respx_mock.route(host="inference.test").mock(side_effect=service.handle)
    runner = CliRunner()
    store, remote, local = tmp_path / "z.bin", tmp_path / "remote.jsonl", tmp_path / "local.jsonl"
    sample = ["sample", "--seed", "1", "--dimension", "6", "--count", "50", "--out", str(store)]
    assert runner.invoke(main, sample).exit_code == 0
    args = ["label", str(store), "--endpoint", BASE_URL, "--batch-size", "8", "--retries", "2", "--out", str(remote)]
    result = runner.invoke(main, args)
    assert result.exit_code == 0, result.output
    assert service.executions == 7
    assert service.requests == 10
    assert runner.invoke(main, ["label", str(store), "--seed", "3", "--out", str(local)]).exit_code == 0
    remote_rows, local_rows = read_labels(remote).rows, read_labels(local).rows
    assert [row.labels for row in remote_rows] == [row.labels for row in local_rows]
    for remote_row, local_row in zip(remote_rows, local_rows):
        np.testing.assert_allclose(remote_row.probs.as_vector(), local_row.probs.as_vector(), atol=1e-12)


def test_label_with_exhausted_retries(tmp_path: Path, respx_mock: MockRouter, mocker: MockerFixture) -> None:
    mocker.patch("time.sleep")
    service = MockInferenceService(make_synthetic_world(3, 6), fail_chunks={0: 5})
    respx_mock.route(host="inference.test").mock(side_effect=service.handle)
    store = sample_store(1, 6, 20)
    endpoint = ServiceEndpoint(BASE_URL, max_batch_size=8, retries=1)
    with InferenceClient(endpoint) as client:
        table = label_store(store, RemoteScorer(client, 6))
    assert table.failures == tuple(range(8))
    assert table.ids == tuple(range(8, 20))


def test_images_round_trip(mocked_service: MockInferenceService) -> None:
    vectors = sample_store(2, 8, 9).vectors
    with InferenceClient(ServiceEndpoint(BASE_URL, max_batch_size=4)) as client:
        refs = client.generate_images(vectors)
        classified = client.classify_images(refs)
        scored = client.score_vectors(vectors)
    for left, right in zip(classified, scored):
        np.testing.assert_array_equal(left.as_vector(), right.as_vector())
    assert mocked_service.requests == 9


def test_mean_probe_remote_matches_local(mocked_service: MockInferenceService) -> None:
    world = mocked_service.world
    store = sample_store(5, 8, 400)
    stats = compute_class_stats(store, select_class(label_store(store, world), "angry"), "angry")
    with InferenceClient(ServiceEndpoint(BASE_URL)) as client:
        remote = mean_probe(stats, RemoteScorer(client, 8), threshold=0.4)
    local = mean_probe(stats, world, threshold=0.4)
    assert remote.suspects == local.suspects
    np.testing.assert_allclose(remote.probabilities.as_vector(), local.probabilities.as_vector(), atol=1e-12)

# SPDX-FileCopyrightText: 2024 ganalyzer contributors
#
# SPDX-License-Identifier: BSD-3-Clause

from __future__ import annotations

from typing import TYPE_CHECKING, Any

import httpx
import numpy as np
import pytest

from ganalyzer import InferenceClient, make_synthetic_world
from ganalyzer.exceptions import SchemaError, TransportError
from ganalyzer.iterator import ItemIterator, ResponseIterator
from ganalyzer.mock import MockInferenceService
from ganalyzer.response import InferenceResponse

if TYPE_CHECKING:
    from collections.abc import Sequence

    from respx.router import MockRouter

VECTORS = [np.full(8, value) for value in (0.5, -0.25, 1.0, 0.0, 2.0)]


def encode(chunk: Sequence[np.ndarray]) -> dict[str, Any]:
    return {"vectors": [vector.tolist() for vector in chunk]}


def test_iterator_repr(client: InferenceClient) -> None:
    iterator = ResponseIterator(client, "/score", VECTORS, encode)
    assert repr(iterator) == "<ResponseIterator /score chunks=3>"
    assert [len(chunk) for chunk in iterator.chunks] == [2, 2, 1]


def test_response_iterator(client: InferenceClient, mocked_service: MockInferenceService) -> None:
    responses = list(ResponseIterator(client, "/score", VECTORS, encode))
    assert all(isinstance(response, InferenceResponse) for response in responses)
    assert [response.chunk_index for response in responses] == [0, 1, 2]
    assert [len(response.payload["probs"]) for response in responses] == [2, 2, 1]
    assert mocked_service.executions == 3


def test_response_iterator_yields_failed_chunks(client: InferenceClient, respx_mock: MockRouter) -> None:
    service = MockInferenceService(make_synthetic_world(7, 8), fail_chunks={1: 1})
    respx_mock.route(host="inference.test").mock(side_effect=service.handle)
    responses = list(ResponseIterator(client, "/score", VECTORS, encode))
    assert isinstance(responses[0], InferenceResponse)
    assert isinstance(responses[1], TransportError)
    assert responses[1].chunk_index == 1
    assert isinstance(responses[2], InferenceResponse)


def test_response_iterator_empty(client: InferenceClient) -> None:
    assert list(ResponseIterator(client, "/score", [], encode)) == []


def test_item_iterator_keeps_input_order(client: InferenceClient, mocked_service: MockInferenceService) -> None:
    refs = list(ItemIterator(client, "/generate", VECTORS, encode, "refs"))
    single = [list(ItemIterator(client, "/generate", [vector], encode, "refs"))[0] for vector in VECTORS]
    assert refs == single
    assert len(set(refs)) == 5


def test_item_iterator_wrong_arity(client: InferenceClient, respx_mock: MockRouter) -> None:
    respx_mock.post("http://inference.test/generate").mock(return_value=httpx.Response(200, json={"refs": ["a"]}))
    with pytest.raises(SchemaError, match="Chunk 0: expected 2 refs, got 1"):
        list(ItemIterator(client, "/generate", VECTORS, encode, "refs"))


def test_item_iterator_missing_field(client: InferenceClient, respx_mock: MockRouter) -> None:
    respx_mock.post("http://inference.test/generate").mock(return_value=httpx.Response(200, json={"images": []}))
    with pytest.raises(SchemaError, match="no list field 'refs'"):
        list(ItemIterator(client, "/generate", VECTORS[:1], encode, "refs"))


def test_item_iterator_raises_transport_error(client: InferenceClient, respx_mock: MockRouter) -> None:
    respx_mock.post("http://inference.test/generate").mock(return_value=httpx.Response(500))
    with pytest.raises(TransportError, match="HTTP 500"):
        list(ItemIterator(client, "/generate", VECTORS, encode, "refs"))

# SPDX-FileCopyrightText: 2024 ganalyzer contributors
#
# SPDX-License-Identifier: BSD-3-Clause

from __future__ import annotations

import io
import json
from typing import TYPE_CHECKING, Any

import httpx
import numpy as np
import pytest

from ganalyzer.mock import MALFORMED_SCALE, MockInferenceService, serve

if TYPE_CHECKING:
    from pytest_mock import MockerFixture

    from ganalyzer.scoring import SyntheticWorld

VECTORS = [[0.1 * i for i in range(8)], [-0.2] * 8]


def _post(path: str, body: Any, chunk_index: int = 0, request_id: str | None = None) -> httpx.Request:
    headers = {"x-chunk-index": str(chunk_index)}
    if request_id is not None:
        headers["x-request-id"] = request_id
    content = body if isinstance(body, bytes) else json.dumps(body).encode()
    return httpx.Request("POST", f"http://mock{path}", headers=headers, content=content)


def test_score(service: MockInferenceService) -> None:
    response = service.handle(_post("/score", {"vectors": VECTORS}))
    assert response.status_code == 200
    probs = response.json()["probs"]
    assert len(probs) == 2
    expected = service.world.probabilities(np.array(VECTORS))
    np.testing.assert_allclose(probs[1]["gender"], expected[1, :2], atol=1e-15)
    assert service.executions == 1


def test_generate_then_classify(service: MockInferenceService) -> None:
    refs = service.handle(_post("/generate", {"vectors": VECTORS})).json()["refs"]
    assert all(ref.startswith("img-") and len(ref) == 20 for ref in refs)
    classified = service.handle(_post("/classify", {"refs": refs[::-1]})).json()["probs"]
    scored = service.handle(_post("/score", {"vectors": VECTORS[::-1]})).json()["probs"]
    assert classified == scored


@pytest.mark.parametrize(
    ("request_", "status"),
    [
        (httpx.Request("POST", "http://mock/render", content=b"{}"), 404),
        (httpx.Request("GET", "http://mock/score"), 405),
        (httpx.Request("POST", "http://mock/score", headers={"x-chunk-index": "first"}, content=b"{}"), 400),
        (_post("/score", b"{not json"), 400),
        (_post("/score", [1, 2]), 400),
        (_post("/score", {"vectors": [[1.0, 2.0]]}), 400),
        (_post("/score", {"vectors": "none"}), 400),
        (_post("/classify", {"refs": ["img-unknown"]}), 400),
    ],
)
def test_rejects(service: MockInferenceService, request_: httpx.Request, status: int) -> None:
    response = service.handle(request_)
    assert response.status_code == status
    assert "error" in response.json()


def test_repeated_request_id_is_answered_from_cache(service: MockInferenceService) -> None:
    first = service.handle(_post("/score", {"vectors": VECTORS}, request_id="abc"))
    second = service.handle(_post("/score", {"vectors": VECTORS[:1]}, request_id="abc"))
    assert first.json() == second.json()
    assert service.requests == 2
    assert service.executions == 1


def test_injected_failures(reference_world: SyntheticWorld) -> None:
    service = MockInferenceService(reference_world, fail_chunks={2: 2}, fail_status=502)
    body = {"vectors": [[0.0] * 32]}
    assert service.handle(_post("/score", body, chunk_index=0)).status_code == 200
    assert [service.handle(_post("/score", body, chunk_index=2)).status_code for _ in range(3)] == [502, 502, 200]
    assert service.executions == 2


def test_malformed_rows(reference_world: SyntheticWorld) -> None:
    service = MockInferenceService(reference_world, malformed=[(0, 1)])
    probs = service.handle(_post("/score", {"vectors": [[0.0] * 32] * 2})).json()["probs"]
    assert sum(probs[0]["gender"]) == pytest.approx(1.0)
    assert sum(probs[1]["gender"]) == pytest.approx(MALFORMED_SCALE)


def test_wsgi_app(service: MockInferenceService, mocker: MockerFixture) -> None:
    body = json.dumps({"vectors": VECTORS}).encode()
    environ = {
        "REQUEST_METHOD": "POST",
        "PATH_INFO": "/score",
        "CONTENT_LENGTH": str(len(body)),
        "HTTP_X_CHUNK_INDEX": "0",
        "wsgi.input": io.BytesIO(body),
    }
    start_response = mocker.Mock()
    chunks = service.wsgi_app(environ, start_response)
    status, headers = start_response.call_args.args
    assert status == "200 OK"
    assert ("Content-Type", "application/json") in headers
    assert len(json.loads(b"".join(chunks))["probs"]) == 2


def test_serve_stops_on_interrupt(service: MockInferenceService, mocker: MockerFixture) -> None:
    make_server = mocker.patch("ganalyzer.mock.make_server")
    server = make_server.return_value.__enter__.return_value
    server.serve_forever.side_effect = KeyboardInterrupt
    serve(service, "127.0.0.1", 9999)
    make_server.assert_called_once_with("127.0.0.1", 9999, service.wsgi_app)
    server.serve_forever.assert_called_once_with()

# SPDX-FileCopyrightText: 2024 ganalyzer contributors
#
# SPDX-License-Identifier: BSD-3-Clause

"""The mock module implements the inference service endpoints in-process on top of a synthetic world.

The same request handler serves two transports: `MockInferenceService.handle` takes and returns `httpx` objects,
which lets tests route a client's traffic to it, and `MockInferenceService.wsgi_app` exposes it as a WSGI
application for `ganalyzer serve-mock`.

Requests are idempotent per "x-request-id": a request id seen before is answered from a cache without executing
the request again. Faults can be injected per chunk, using the "x-chunk-index" header the client sends.

Classes:
    MockInferenceService: The /score, /generate and /classify endpoints over a SyntheticWorld.

Functions:
    serve: Serve a mock service over HTTP until interrupted.
"""

from __future__ import annotations

import hashlib
import json
import logging
import threading
from typing import TYPE_CHECKING, Any
from wsgiref.simple_server import make_server

import httpx
import numpy as np

from ganalyzer.models import AttributeProbabilities

if TYPE_CHECKING:
    from collections.abc import Callable, Iterable, Mapping

    from ganalyzer.scoring import SyntheticWorld

logger = logging.getLogger(__name__)

REF_PREFIX = "img-"
MALFORMED_SCALE = 0.8


class BadRequest(Exception):
    """A request the mock rejects with status 400."""


class MockInferenceService:
    """An in-process inference service over a synthetic world.

    Args:
        world: The world scoring the vectors.
        fail_chunks: Chunk index → number of times requests for that chunk fail before succeeding.
        fail_status: The HTTP status of injected failures.
        malformed: (chunk index, row) pairs whose gender probabilities are scaled to sum to 0.8.

    Attributes:
        executions: The number of requests that were executed, cache hits and injected failures excluded.
        requests: The number of requests received.
    """

    def __init__(
        self,
        world: SyntheticWorld,
        fail_chunks: Mapping[int, int] | None = None,
        fail_status: int = 503,
        malformed: Iterable[tuple[int, int]] = (),
    ) -> None:
        self.world = world
        self.fail_status = fail_status
        self.malformed = frozenset(malformed)
        self.executions = 0
        self.requests = 0
        self._failures_left = dict(fail_chunks or {})
        self._cache: dict[str, tuple[int, dict[str, Any]]] = {}
        self._images: dict[str, np.ndarray] = {}
        self._lock = threading.Lock()
        self._routes: dict[str, Callable[[dict[str, Any], int], dict[str, Any]]] = {
            "/score": self._score,
            "/generate": self._generate,
            "/classify": self._classify,
        }

    def __repr__(self) -> str:
        return f"<MockInferenceService {self.world!r}>"

    def handle(self, request: httpx.Request) -> httpx.Response:
        """Answer one request."""
        with self._lock:
            self.requests += 1
            status, body = self._dispatch(request)
        return httpx.Response(status, json=body)

    def _dispatch(self, request: httpx.Request) -> tuple[int, dict[str, Any]]:
        route = self._routes.get(request.url.path)
        if route is None:
            return 404, {"error": "Not found: %s" % request.url.path}
        if request.method != "POST":
            return 405, {"error": "Method %s not allowed" % request.method}
        try:
            chunk_index = int(request.headers.get("x-chunk-index", "-1"))
        except ValueError:
            return 400, {"error": "x-chunk-index must be an integer"}
        if self._failures_left.get(chunk_index, 0) > 0:
            self._failures_left[chunk_index] -= 1
            logger.debug("Injected HTTP %d on chunk %d", self.fail_status, chunk_index)
            return self.fail_status, {"error": "injected failure"}
        request_id = request.headers.get("x-request-id")
        if request_id is not None and request_id in self._cache:
            logger.debug("Answering repeated request %s from cache", request_id)
            return self._cache[request_id]
        try:
            payload = json.loads(request.content)
            if not isinstance(payload, dict):
                raise BadRequest("request body must be a JSON object")
            result = 200, route(payload, chunk_index)
        except (json.JSONDecodeError, UnicodeDecodeError, BadRequest) as exc:
            result = 400, {"error": str(exc)}
        self.executions += 1
        if request_id is not None:
            self._cache[request_id] = result
        return result

    def _vectors(self, payload: dict[str, Any]) -> np.ndarray:
        vectors = payload.get("vectors")
        if not isinstance(vectors, list):
            raise BadRequest("'vectors' must be a list")
        try:
            matrix = np.array(vectors, dtype=np.float64).reshape(len(vectors), -1) if vectors else None
        except (TypeError, ValueError) as exc:
            raise BadRequest("'vectors' must be a list of number lists: %s" % exc) from exc
        if matrix is None:
            return np.empty((0, self.world.dimension))
        if matrix.shape[1] != self.world.dimension or not np.isfinite(matrix).all():
            raise BadRequest("vectors must be finite and have %d components" % self.world.dimension)
        return matrix

    def _probabilities(self, matrix: np.ndarray, chunk_index: int) -> list[dict[str, list[float]]]:
        rows = []
        for row, values in enumerate(self.world.probabilities(matrix)):
            probs = AttributeProbabilities.from_vector(values).to_dict()
            if (chunk_index, row) in self.malformed:
                probs["gender"] = [value * MALFORMED_SCALE for value in probs["gender"]]
            rows.append(probs)
        return rows

    def _score(self, payload: dict[str, Any], chunk_index: int) -> dict[str, Any]:
        return {"probs": self._probabilities(self._vectors(payload), chunk_index)}

    def _generate(self, payload: dict[str, Any], chunk_index: int) -> dict[str, Any]:
        refs = []
        for vector in self._vectors(payload):
            ref = REF_PREFIX + hashlib.sha256(vector.astype("<f8").tobytes()).hexdigest()[:16]
            self._images[ref] = vector
            refs.append(ref)
        return {"refs": refs}

    def _classify(self, payload: dict[str, Any], chunk_index: int) -> dict[str, Any]:
        refs = payload.get("refs")
        if not isinstance(refs, list):
            raise BadRequest("'refs' must be a list")
        unknown = [ref for ref in refs if ref not in self._images]
        if unknown:
            raise BadRequest("Unknown image references: %s" % unknown)
        matrix = np.array([self._images[ref] for ref in refs]).reshape(len(refs), self.world.dimension)
        return {"probs": self._probabilities(matrix, chunk_index)}

    def wsgi_app(self, environ: dict[str, Any], start_response: Callable[..., Any]) -> list[bytes]:
        """Serve the endpoints as a WSGI application."""
        length = int(environ.get("CONTENT_LENGTH") or 0)
        headers = {
            key[5:].replace("_", "-").lower(): value for key, value in environ.items() if key.startswith("HTTP_")
        }
        request = httpx.Request(
            environ["REQUEST_METHOD"],
            "http://mock" + environ.get("PATH_INFO", "/"),
            headers=headers,
            content=environ["wsgi.input"].read(length),
        )
        response = self.handle(request)
        start_response(
            "%d %s" % (response.status_code, response.reason_phrase),
            [("Content-Type", "application/json"), ("Content-Length", str(len(response.content)))],
        )
        return [response.content]


def serve(service: MockInferenceService, host: str = "127.0.0.1", port: int = 8765) -> None:
    """Serve a mock service over HTTP until interrupted."""
    with make_server(host, port, service.wsgi_app) as server:
        logger.warning("Serving %r on http://%s:%d", service, host, port)
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            logger.warning("Stopped serving")

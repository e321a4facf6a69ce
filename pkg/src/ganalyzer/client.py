# SPDX-FileCopyrightText: 2024 ganalyzer contributors
#
# SPDX-License-Identifier: BSD-3-Clause

"""The client module talks to remote inference services: a generator rendering latent vectors and a classifier.

Requests are chunked by the endpoint's batch size. Every chunk carries a fresh "x-request-id" header that is
kept across its retries, so a service can recognize a retried chunk and answer it without executing it twice.

Wire schema, JSON in UTF-8:

    POST /score     {"vectors": [[f64, ...], ...]}  ->  {"probs": [{"gender": [..], "age": [..], ...}, ...]}
    POST /generate  {"vectors": [[f64, ...], ...]}  ->  {"refs": ["...", ...]}
    POST /classify  {"refs": ["...", ...]}          ->  {"probs": [...]}

Classes:
    InferenceClient: An HTTP client for the inference endpoints.
    RemoteScorer: A scorer backed by the /score endpoint.

Functions:
    generate_images: Render latent vectors to image references.
    classify_images: Score image references.
    score_vectors: Score latent vectors, collecting row-level errors.
"""

from __future__ import annotations

import logging
import threading
import time
import uuid
from typing import TYPE_CHECKING, Any

import httpx
import numpy as np

from ganalyzer.__about__ import __version__
from ganalyzer.exceptions import DimensionMismatch, SchemaError, TransportError, ValidationError
from ganalyzer.iterator import ItemIterator, ResponseIterator
from ganalyzer.models import AttributeProbabilities, ServiceEndpoint
from ganalyzer.response import InferenceResponse
from ganalyzer.utils import is_batch, log_response

if TYPE_CHECKING:
    from collections.abc import Sequence
    from types import TracebackType

    import numpy.typing as npt

    from ganalyzer.exceptions import GanalyzerException

logger = logging.getLogger(__name__)

USER_AGENT: str = f"ganalyzer/{__version__}"


def _rows(vectors: npt.ArrayLike) -> list[np.ndarray]:
    matrix = np.asarray(vectors, dtype=np.float64)
    if matrix.size == 0:
        return []
    if not is_batch(matrix):
        raise DimensionMismatch("Expected an (n, d) matrix of vectors, got shape %s" % (matrix.shape,))
    return list(matrix)


def _encode_vectors(chunk: Sequence[np.ndarray]) -> dict[str, Any]:
    return {"vectors": [np.asarray(vector, dtype=np.float64).tolist() for vector in chunk]}


def _encode_refs(chunk: Sequence[str]) -> dict[str, Any]:
    return {"refs": list(chunk)}


def _probabilities(data: Any, index: int) -> AttributeProbabilities:
    try:
        return AttributeProbabilities.from_dict(data)
    except ValidationError as exc:
        raise SchemaError("Item %d: %s" % (index, exc), index) from exc


class InferenceClient:
    """A client for the generator and classifier endpoints of an inference service.

    The client is shareable between threads. At most `max_in_flight` chunk requests of one call run at a time,
    and results are reassembled in input order.

    Args:
        endpoint: The service settings, or a base URL to use with the default settings.

    Examples:
        >>> with InferenceClient("http://localhost:8765") as client:
        >>>     refs = client.generate_images(vectors)
        >>>     probs = client.classify_images(refs)
    """

    def __init__(self, endpoint: ServiceEndpoint | str) -> None:
        self.endpoint = endpoint if isinstance(endpoint, ServiceEndpoint) else ServiceEndpoint(endpoint)
        self._client: httpx.Client | None = None
        self._lock = threading.Lock()

    @property
    def client(self) -> httpx.Client:
        """Provide a reusable HTTP client instance for making requests.

        A new `httpx.Client` is created on first use and whenever the previous one was closed.

        Returns:
            A reusable HTTP client instance for making HTTP requests.
        """
        with self._lock:
            if self._client is None or self._client.is_closed:
                headers = {"Accept": "application/json", "user-agent": USER_AGENT}
                self._client = httpx.Client(
                    base_url=self.endpoint.base_url,
                    headers=headers,
                    timeout=self.endpoint.timeout,
                    event_hooks={"response": [log_response]},
                )
            return self._client

    def close(self) -> None:
        """Close the internal HTTP client if it exists and is open."""
        if self._client and not self._client.is_closed:
            self._client.close()

    def __enter__(self) -> InferenceClient:
        return self

    def __exit__(
        self, exc_type: type[BaseException] | None, exc_val: type[BaseException] | None, exc_tb: TracebackType | None
    ) -> None:
        self.close()

    def __repr__(self) -> str:
        return f"<InferenceClient {self.endpoint.base_url}>"

    def post(self, path: str, body: dict[str, Any], chunk_index: int) -> InferenceResponse:
        """Post one chunk, retrying on transport failures and on the configured status codes.

        All attempts share one request id.

        Args:
            path: The service path, such as "/score".
            body: The JSON request body.
            chunk_index: The position of the chunk, sent as the "x-chunk-index" header and cited in errors.

        Returns:
            The successful response.

        Raises:
            TransportError: If the last attempt failed at transport level or with a non-2xx status.
        """
        headers = {"x-request-id": str(uuid.uuid4()), "x-chunk-index": str(chunk_index)}
        result = self._request(path, body, headers)
        for _ in range(self.endpoint.retries):
            if self._should_retry(result):
                retry_after = self.get_retry_after(result)
                reason = "HTTP %d" % result.status_code if isinstance(result, httpx.Response) else repr(result)
                logger.warning("%s on chunk %d! Retrying after %s seconds...", reason, chunk_index, retry_after)
                time.sleep(retry_after)
                result = self._request(path, body, headers)
        if isinstance(result, httpx.TransportError):
            raise TransportError("Chunk %d: request to %s failed: %s" % (chunk_index, path, result), chunk_index)
        if not result.is_success:
            raise TransportError("Chunk %d: HTTP %d from %s" % (chunk_index, result.status_code, path), chunk_index)
        return InferenceResponse(result, path, chunk_index)

    def _request(
        self, path: str, body: dict[str, Any], headers: dict[str, str]
    ) -> httpx.Response | httpx.TransportError:
        """Send one POST request; transport failures are returned instead of raised."""
        try:
            return self.client.post(path, json=body, headers=headers)
        except httpx.TransportError as exc:
            return exc

    def _should_retry(self, result: httpx.Response | httpx.TransportError) -> bool:
        if isinstance(result, httpx.TransportError):
            return True
        return httpx.codes.is_error(result.status_code) and result.status_code in self.endpoint.retry_status_codes

    def get_retry_after(self, result: httpx.Response | httpx.TransportError) -> int | float:
        """Determine the time to wait before retrying a request.

        A 503 response may carry a 'retry-after' header with the number of seconds to wait. Every other
        outcome, including an unparsable header, waits the endpoint's default time.

        Args:
            result: The response or transport error of the previous attempt.

        Returns:
            The number of seconds to wait before retrying the request.
        """
        if isinstance(result, httpx.Response) and result.status_code == httpx.codes.SERVICE_UNAVAILABLE:
            try:
                return int(result.headers.get("retry-after"))
            except (TypeError, ValueError):
                return self.endpoint.default_retry_after
        return self.endpoint.default_retry_after

    def generate_images(self, vectors: npt.ArrayLike) -> list[str]:
        """Render latent vectors to image references.

        Args:
            vectors: An (n, d) matrix or a sequence of vectors.

        Returns:
            One opaque reference per vector, in input order.

        Raises:
            TransportError: If a chunk fails after all retries; no partial result is returned.
            SchemaError: If a response lacks references, has the wrong arity, or a reference is not a string.
        """
        rows = _rows(vectors)
        refs = list(ItemIterator(self, "/generate", rows, _encode_vectors, "refs"))
        for index, ref in enumerate(refs):
            if not isinstance(ref, str):
                raise SchemaError("Item %d: image reference must be a string, got %r" % (index, ref), index)
        logger.info("Generated %d images", len(refs))
        return refs

    def classify_images(self, refs: Sequence[str]) -> list[AttributeProbabilities]:
        """Score image references.

        Returns:
            The probabilities of every reference, in input order.

        Raises:
            TransportError: If a chunk fails after all retries; no partial result is returned.
            SchemaError: If a response has the wrong arity or an invalid probability group; the message names
                the index of the offending item.
        """
        items = list(ItemIterator(self, "/classify", list(refs), _encode_refs, "probs"))
        probabilities = [_probabilities(item, index) for index, item in enumerate(items)]
        logger.info("Classified %d images", len(probabilities))
        return probabilities

    def score_vectors(self, vectors: npt.ArrayLike) -> list[AttributeProbabilities | GanalyzerException]:
        """Score latent vectors with the /score endpoint.

        Failures do not abort the call: every row of a failed chunk gets its TransportError, every row of a
        response with the wrong shape gets a SchemaError, and an invalid item gets a SchemaError naming its index.

        Returns:
            One entry per vector, in input order: the probabilities or the error of that row.
        """
        rows = _rows(vectors)
        results: list[AttributeProbabilities | GanalyzerException] = []
        iterator = ResponseIterator(self, "/score", rows, _encode_vectors)
        for response, chunk in zip(iterator, iterator.chunks):
            start = len(results)
            if isinstance(response, TransportError):
                results.extend([response] * len(chunk))
                continue
            try:
                items = response.payload.get("probs")
                if not isinstance(items, list) or len(items) != len(chunk):
                    raise SchemaError("Chunk %d: expected %d probs" % (response.chunk_index, len(chunk)))
            except SchemaError as exc:
                logger.warning("%s", exc)
                results.extend([exc] * len(chunk))
                continue
            for offset, item in enumerate(items):
                try:
                    results.append(_probabilities(item, start + offset))
                except SchemaError as exc:
                    results.append(exc)
        return results


class RemoteScorer:
    """A scorer backed by the /score endpoint of an inference service.

    Args:
        client: The client used for the requests.
        dimension: The latent dimension the service expects.
    """

    def __init__(self, client: InferenceClient, dimension: int) -> None:
        self.client = client
        self._dimension = dimension

    @property
    def dimension(self) -> int:
        """Return the latent dimension the service expects."""
        return self._dimension

    def score(self, vectors: np.ndarray) -> list[AttributeProbabilities | GanalyzerException]:
        """Score the rows of an (n, d) matrix remotely.

        Raises:
            DimensionMismatch: If the rows do not have the scorer's dimension.
        """
        matrix = np.asarray(vectors, dtype=np.float64)
        if not is_batch(matrix, self.dimension):
            raise DimensionMismatch("Vectors have shape %s, scorer has d=%d" % (matrix.shape, self.dimension))
        return self.client.score_vectors(matrix)

    def __repr__(self) -> str:
        return f"<RemoteScorer {self.client.endpoint.base_url} d={self.dimension}>"


def generate_images(endpoint: ServiceEndpoint | str, vectors: npt.ArrayLike) -> list[str]:
    """Render latent vectors to image references with a short-lived client."""
    with InferenceClient(endpoint) as client:
        return client.generate_images(vectors)


def classify_images(endpoint: ServiceEndpoint | str, refs: Sequence[str]) -> list[AttributeProbabilities]:
    """Score image references with a short-lived client."""
    with InferenceClient(endpoint) as client:
        return client.classify_images(refs)


def score_vectors(
    endpoint: ServiceEndpoint | str, vectors: npt.ArrayLike
) -> list[AttributeProbabilities | GanalyzerException]:
    """Score latent vectors with a short-lived client."""
    with InferenceClient(endpoint) as client:
        return client.score_vectors(vectors)

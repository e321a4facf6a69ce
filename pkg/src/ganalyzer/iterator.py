# SPDX-FileCopyrightText: 2024 ganalyzer contributors
#
# SPDX-License-Identifier: BSD-3-Clause

"""The iterator module provides classes for iterating over chunked requests to an inference service.

Inputs longer than the endpoint's batch size are split into chunks. Chunks are posted concurrently, at most
`max_in_flight` at a time, and their responses are yielded in chunk order, so the output order always equals
the input order.

Classes:
    BaseChunkIterator: An abstract base class for iterators over chunked service requests.
    ResponseIterator: Iterates over the chunk responses.
    ItemIterator: Iterates over the items of a response field, checking that every chunk returns one per input.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from typing import TYPE_CHECKING, Any, TypeVar

from ganalyzer.exceptions import SchemaError, TransportError
from ganalyzer.utils import chunked

if TYPE_CHECKING:
    from collections.abc import Callable, Iterator, Sequence

    from ganalyzer.client import InferenceClient
    from ganalyzer.response import InferenceResponse

logger = logging.getLogger(__name__)

_T = TypeVar("_T")


class BaseChunkIterator(ABC):
    """An abstract base class for iterators over chunked requests.

    Args:
        client: The client posting the chunks.
        path: The service path, such as "/score".
        items: The inputs to send.
        encode: Builds the JSON request body of one chunk.

    Attributes:
        chunks: The inputs split by the endpoint's batch size.
    """

    def __init__(
        self,
        client: InferenceClient,
        path: str,
        items: Sequence[Any],
        encode: Callable[[Sequence[Any]], dict[str, Any]],
    ) -> None:
        self.client = client
        self.path = path
        self.encode = encode
        self.chunks = list(chunked(items, client.endpoint.max_batch_size))

    @abstractmethod
    def __iter__(self) -> Iterator[Any]:
        pass

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__} {self.path} chunks={len(self.chunks)}>"

    def _results(self, send: Callable[[str, dict[str, Any], int], _T]) -> Iterator[_T]:
        """Send every chunk and yield the results in chunk order.

        If a send raises, the pending chunks are cancelled and the exception propagates.

        Args:
            send: Posts the body of one chunk; called with the path, the body and the chunk index.
        """
        if not self.chunks:
            return
        with ThreadPoolExecutor(max_workers=self.client.endpoint.max_in_flight) as executor:
            futures = [
                executor.submit(send, self.path, self.encode(chunk), index) for index, chunk in enumerate(self.chunks)
            ]
            try:
                for future in futures:
                    yield future.result()
            finally:
                for future in futures:
                    future.cancel()


class ResponseIterator(BaseChunkIterator):
    """An iterator over the responses of all chunks.

    A failed chunk yields its TransportError instead of a response, so callers can mark that chunk's inputs as
    failed and keep the others.
    """

    def __iter__(self) -> Iterator[InferenceResponse | TransportError]:
        yield from self._results(self._post_or_error)

    def _post_or_error(self, path: str, body: dict[str, Any], index: int) -> InferenceResponse | TransportError:
        try:
            return self.client.post(path, body, index)
        except TransportError as exc:
            logger.warning("%s", exc)
            return exc


class ItemIterator(BaseChunkIterator):
    """An iterator over the items of one field of every chunk response.

    Args:
        client: The client posting the chunks.
        path: The service path.
        items: The inputs to send.
        encode: Builds the JSON request body of one chunk.
        field: The response field holding one item per input.
    """

    def __init__(
        self,
        client: InferenceClient,
        path: str,
        items: Sequence[Any],
        encode: Callable[[Sequence[Any]], dict[str, Any]],
        field: str,
    ) -> None:
        super().__init__(client, path, items, encode)
        self.field = field

    def __iter__(self) -> Iterator[Any]:
        """Yield the items of every response in input order.

        Raises:
            TransportError: If a chunk fails after all retries.
            SchemaError: If a response lacks the field or returns the wrong number of items.
        """
        for response, chunk in zip(self._results(self.client.post), self.chunks):
            values = response.payload.get(self.field)
            if not isinstance(values, list):
                raise SchemaError("Chunk %d: response has no list field %r" % (response.chunk_index, self.field))
            if len(values) != len(chunk):
                raise SchemaError(
                    "Chunk %d: expected %d %s, got %d" % (response.chunk_index, len(chunk), self.field, len(values))
                )
            yield from values

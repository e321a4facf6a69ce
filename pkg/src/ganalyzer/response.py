# SPDX-FileCopyrightText: 2024 ganalyzer contributors
#
# SPDX-License-Identifier: BSD-3-Clause

"""The response module wraps the HTTP response of one chunk request to an inference service.

Classes:
    InferenceResponse: A chunk response with access to its raw text and its parsed JSON payload.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any

from ganalyzer.exceptions import SchemaError

if TYPE_CHECKING:
    from httpx import Response


@dataclass
class InferenceResponse:
    """Represents the response of an inference service to one chunk request.

    Attributes:
        http_response: The original HTTP response.
        path: The service path the chunk was posted to, such as "/score".
        chunk_index: The position of the chunk in the request sequence.
    """

    http_response: Response
    path: str
    chunk_index: int

    @property
    def raw(self) -> str:
        """Return the raw text of the response as a unicode string."""
        return self.http_response.text

    @property
    def payload(self) -> dict[str, Any]:
        """Parse the response body as a JSON object.

        Raises:
            SchemaError: If the body is not a JSON object.
        """
        try:
            data = json.loads(self.http_response.content)
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise SchemaError("Chunk %d: response of %s is not valid JSON" % (self.chunk_index, self.path)) from exc
        if not isinstance(data, dict):
            raise SchemaError("Chunk %d: response of %s is not a JSON object" % (self.chunk_index, self.path))
        return data

    def __str__(self) -> str:
        return f"<InferenceResponse {self.path} chunk={self.chunk_index}>"

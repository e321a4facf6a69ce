# SPDX-FileCopyrightText: 2024 ganalyzer contributors
#
# SPDX-License-Identifier: BSD-3-Clause

from __future__ import annotations

import logging
from typing import TYPE_CHECKING

import httpx
import numpy as np
import pytest

from ganalyzer.exceptions import DimensionMismatch, TruncatedPayload, ValidationError
from ganalyzer.utils import (
    ByteReader,
    as_latent_vector,
    atomic_write_text,
    canonical_json,
    check_fields,
    chunked,
    finite_number,
    is_batch,
    log_response,
    validate_alpha,
    validate_beta,
    validate_delta,
)

if TYPE_CHECKING:
    from pathlib import Path


def test_log_response(caplog: pytest.LogCaptureFixture) -> None:
    request = httpx.Request("POST", "http://inference.test/score")
    response = httpx.Response(status_code=200, request=request)
    with caplog.at_level(logging.DEBUG, logger="ganalyzer"):
        log_response(response)
    expected = "[http] Response: POST http://inference.test/score - Status 200"
    assert expected in caplog.text


def test_as_latent_vector() -> None:
    vector = as_latent_vector([1, 2], 2)
    assert vector.dtype == np.float64
    with pytest.raises(DimensionMismatch, match="z has shape \\(3,\\), expected \\(2,\\)"):
        as_latent_vector([1, 2, 3], 2)
    with pytest.raises(ValidationError, match="non-finite"):
        as_latent_vector([np.inf, 0], 2)


def test_is_batch() -> None:
    assert is_batch(np.zeros((3, 2)))
    assert is_batch(np.zeros((0, 4)), 4)
    assert not is_batch(np.zeros((3, 2)), 4)
    assert not is_batch(np.zeros(2))
    assert not is_batch(np.zeros(2), 2)
    assert not is_batch(np.zeros((1, 2, 2)))


@pytest.mark.parametrize("alpha", [0.5, 0.999, float("nan"), float("inf")])
def test_validate_alpha_rejects(alpha: float) -> None:
    with pytest.raises(ValidationError, match="alpha must be ≥ 1"):
        validate_alpha(alpha)


@pytest.mark.parametrize("beta", [0, -1, 100.5])
def test_validate_beta_rejects(beta: float) -> None:
    with pytest.raises(ValidationError, match="beta must be in \\(0, 100\\]"):
        validate_beta(beta)


def test_validate_accepts_bounds() -> None:
    assert validate_alpha(1) == 1.0
    assert validate_beta(100) == 100.0
    assert validate_delta(0.5) == 0.5


def test_finite_number() -> None:
    assert finite_number({"alpha": 2}, "alpha", "Spec") == 2.0
    for value in (True, "2", float("nan")):
        with pytest.raises(ValidationError, match="'alpha' must be a finite number"):
            finite_number({"alpha": value}, "alpha", "Spec")


def test_check_fields() -> None:
    allowed = frozenset({"a", "b"})
    check_fields({"a": 1}, allowed, frozenset({"a"}), "Doc")
    with pytest.raises(ValidationError, match="Doc must be a JSON object"):
        check_fields([], allowed, frozenset(), "Doc")
    with pytest.raises(ValidationError, match="unknown fields \\['c'\\]"):
        check_fields({"a": 1, "c": 2}, allowed, frozenset(), "Doc")
    with pytest.raises(ValidationError, match="missing fields \\['b'\\]"):
        check_fields({"a": 1}, allowed, allowed, "Doc")


def test_canonical_json() -> None:
    assert canonical_json({"b": 1, "a": [0.1, "ä"]}) == '{"a":[0.1,"ä"],"b":1}'
    with pytest.raises(ValueError, match="Out of range float"):
        canonical_json({"x": float("nan")})


def test_atomic_write_text(tmp_path: Path) -> None:
    target = tmp_path / "out.txt"
    atomic_write_text(target, "first")
    atomic_write_text(target, "second")
    assert target.read_text(encoding="utf-8") == "second"
    assert [path.name for path in tmp_path.iterdir()] == ["out.txt"]


def test_chunked() -> None:
    assert list(chunked([1, 2, 3], 2)) == [[1, 2], [3]]
    assert list(chunked([], 2)) == []
    with pytest.raises(ValidationError, match="Chunk size must be ≥ 1"):
        list(chunked([1], 0))


def test_byte_reader_truncation() -> None:
    reader = ByteReader(b"\x01\x00\x00\x00", "test buffer")
    assert reader.unpack("<I") == (1,)
    assert reader.remaining == 0
    with pytest.raises(TruncatedPayload, match="test buffer"):
        reader.float64s(1)

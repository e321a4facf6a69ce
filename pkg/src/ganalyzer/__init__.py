# SPDX-FileCopyrightText: 2024 ganalyzer contributors
#
# SPDX-License-Identifier: BSD-3-Clause

"""ganalyzer: Analyze and manipulate the latent space of a generative model with per-class eigen-statistics."""

from ganalyzer.client import InferenceClient, RemoteScorer
from ganalyzer.exceptions import (
    CSVFormatError,
    DimensionMismatch,
    GanalyzerException,
    InsufficientSamples,
    NumericalError,
    RemoteError,
    SchemaError,
    StoreFormatError,
    TransportError,
    UnknownClass,
    ValidationError,
)
from ganalyzer.models import (
    AttributeProbabilities,
    ClassStats,
    DatasetPlan,
    EditSpec,
    LabelTable,
    LatentStore,
    ServiceEndpoint,
)
from ganalyzer.scoring import SyntheticWorld, make_synthetic_world
from ganalyzer.taxonomy import TAXONOMY

__all__ = [
    "TAXONOMY",
    "AttributeProbabilities",
    "CSVFormatError",
    "ClassStats",
    "DatasetPlan",
    "DimensionMismatch",
    "EditSpec",
    "GanalyzerException",
    "InferenceClient",
    "InsufficientSamples",
    "LabelTable",
    "LatentStore",
    "NumericalError",
    "RemoteError",
    "RemoteScorer",
    "SchemaError",
    "ServiceEndpoint",
    "StoreFormatError",
    "SyntheticWorld",
    "TransportError",
    "UnknownClass",
    "ValidationError",
    "make_synthetic_world",
]

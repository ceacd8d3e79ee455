# Copyright 2026 The semhyper authors
# Licensed under the MIT license

import hashlib
import json
import math
from typing import Any, Optional, Union

import numpy as np

from .types import FloatArray, Real

# independent random streams derived from a scenario seed
OUTCOME_STREAM = 1
PROBE_STREAM = 2


def make_rng(seed: int, *streams: int) -> np.random.Generator:
    """
    Build a generator for ``seed``, optionally split into a named sub-stream.

    Identical arguments always produce identical draws, so every random quantity in a
    run is reproducible from the scenario seed alone.
    """
    return np.random.default_rng([int(seed), *streams])


def as_real(value: Union[Real, np.floating[Any]]) -> Real:
    """
    Return a plain float for zero-dimensional results, the array otherwise.
    """
    array = np.asarray(value, dtype=np.float64)
    if array.ndim == 0:
        return float(array)
    return array


def format_float(value: Optional[float]) -> str:
    """
    Render a CSV cell. Missing values are empty, infinities spelled out.
    """
    if value is None:
        return ""
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.12g}"


def config_hash(scenario_text: str, **settings: Any) -> str:
    """
    Short, stable digest of a serialized scenario plus run settings.
    """
    digest = hashlib.sha256()
    digest.update(scenario_text.encode("utf-8"))
    digest.update(json.dumps(settings, sort_keys=True, default=str).encode("utf-8"))
    return digest.hexdigest()[:16]


def l1_distance(a: FloatArray, b: FloatArray) -> float:
    return float(np.abs(np.asarray(a) - np.asarray(b)).sum())

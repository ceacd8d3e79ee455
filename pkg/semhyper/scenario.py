# Copyright 2026 The semhyper authors
# Licensed under the MIT license

"""
Scenario generation and validation.
"""

import logging
import math
from dataclasses import fields, replace
from typing import Any, List, Tuple

import numpy as np

from .types import ChannelSet, ConceptSet, ConfigError, Scenario, TaskSpec

LOG = logging.getLogger(__name__)

DEFAULTS = dict(
    bit_alphabet_max=8,
    bit_budget=6.0,
    bandwidth=1.0,
    noise_density=0.1,
    alpha1=0.2,
    alpha2=0.8,
    tau_max=1.0,
    drop_penalty=1.0,
    reasoning_failure_penalty=2.0,
    rate_distortion_scale=2.0,
    accept_threshold=0.25,
    cc_capacity=2e9,
    learning_rate=0.05,
)
LOCAL_CAPACITY = 5e8
COMPUTE_COST_RANGE = (1e8, 4e8)
NOISE_VARIANCE_RANGE = (0.5, 1.5)
RELIABILITY_RANGE = (0.6, 0.99)
CHANNEL_GAIN_STD = 1.0
RX_POWER = 0.2
GENERATED_FIELDS = {
    "num_tx",
    "num_rx",
    "concepts_per_tx",
    "rng_seed",
    "concepts",
    "tasks",
    "channels",
}


def relevance_profile(decay: float, count: int) -> np.ndarray:
    return np.power(float(decay), np.arange(count, dtype=np.float64))


def generate_scenario(
    seed: int,
    shape: Tuple[int, int, int] = (2, 2, 4),
    decay: float = 0.5,
    **overrides: Any,
) -> Scenario:
    """
    Draw a random scenario, deterministic in ``(seed, shape, decay)``.

    Concept means are uniform on ``[0, 10]`` with unit variance. Every receiver sees
    the exponential relevance profile ``decay ** i`` over a seeded permutation of each
    transmitter's concepts. Keyword overrides replace scalar scenario fields.
    """
    if not (0 < decay <= 1) or math.isnan(decay):
        raise ConfigError(f"decay must be in (0, 1], got {decay}")
    num_tx, num_rx, num_concepts = shape
    if min(shape) < 1:
        raise ConfigError(f"counts must be at least 1, got {shape}")
    if seed < 0:
        raise ConfigError(f"seed must be non-negative, got {seed}")

    rng = np.random.default_rng(seed)
    means = rng.uniform(0.0, 10.0, size=(num_tx, num_concepts))
    variances = np.ones((num_tx, num_concepts))

    profile = relevance_profile(decay, num_concepts)
    relevance = np.empty((num_rx, num_tx, num_concepts))
    for j in range(num_rx):
        for k in range(num_tx):
            relevance[j, k] = profile[rng.permutation(num_concepts)]

    compute_cost = rng.uniform(*COMPUTE_COST_RANGE, size=(num_rx, num_tx, num_concepts))
    noise_variance = rng.uniform(*NOISE_VARIANCE_RANGE, size=(num_tx, num_rx))
    reliability = rng.uniform(*RELIABILITY_RANGE, size=(num_tx, num_rx))

    scalars = {**DEFAULTS}
    known = {f.name for f in fields(Scenario)} - GENERATED_FIELDS
    unknown = sorted(set(overrides) - known)
    if unknown:
        raise ConfigError(f"unknown scenario fields: {unknown!r}")
    scalars.update(overrides)
    cc_capacity = float(scalars["cc_capacity"])

    scenario = Scenario(
        num_tx=num_tx,
        num_rx=num_rx,
        concepts_per_tx=num_concepts,
        rng_seed=seed,
        concepts=ConceptSet(means=means, variances=variances),
        tasks=TaskSpec(
            relevance=relevance,
            compute_cost=compute_cost,
            local_capacity=np.full(num_rx, LOCAL_CAPACITY),
            cc_share=np.full(num_rx, cc_capacity / num_rx),
        ),
        channels=ChannelSet(
            noise_variance=noise_variance,
            decode_reliability=reliability,
            channel_gain_std=np.full(num_rx, CHANNEL_GAIN_STD),
            power=np.full(num_rx, RX_POWER),
        ),
        **scalars,
    )
    LOG.debug("generated scenario seed=%d shape=%r decay=%g", seed, shape, decay)
    return scenario


def rescale_relevance(scenario: Scenario, decay: float) -> Scenario:
    """
    Replace every relevance row with the profile for ``decay``, keeping each row's
    ranking of concepts.
    """
    if not (0 < decay <= 1):
        raise ConfigError(f"decay must be in (0, 1], got {decay}")
    relevance = scenario.tasks.relevance
    order = np.argsort(-relevance, axis=-1, kind="stable")
    ranks = np.argsort(order, axis=-1, kind="stable")
    tasks = replace(
        scenario.tasks, relevance=np.power(float(decay), ranks.astype(np.float64))
    )
    return replace(scenario, tasks=tasks)


def _positive(diagnostics: List[str], name: str, value: float) -> None:
    if not value > 0:
        diagnostics.append(f"{name} must be positive, got {value}")


def _shape(diagnostics: List[str], name: str, array: np.ndarray, shape: Any) -> bool:
    if array.shape != tuple(shape):
        diagnostics.append(f"{name} has shape {array.shape}, expected {tuple(shape)}")
        return False
    return True


def validate(scenario: Scenario) -> List[str]:
    """
    List every violated scenario invariant; an empty list means valid.
    """
    s = scenario
    diagnostics: List[str] = []

    for name in ("num_tx", "num_rx", "concepts_per_tx", "bit_alphabet_max"):
        if getattr(s, name) < 1:
            diagnostics.append(f"{name} must be at least 1, got {getattr(s, name)}")
    if s.outcome_samples < 1:
        diagnostics.append(
            f"outcome_samples must be at least 1, got {s.outcome_samples}"
        )

    for name in ("alpha1", "alpha2"):
        value = getattr(s, name)
        if not 0 <= value <= 1:
            diagnostics.append(f"{name} must be in [0, 1], got {value}")
    if abs(s.alpha1 + s.alpha2 - 1) > 1e-9:
        diagnostics.append(f"alpha sum ≠ 1 ({s.alpha1} + {s.alpha2})")

    for name in (
        "bit_budget",
        "bandwidth",
        "noise_density",
        "tau_max",
        "drop_penalty",
        "reasoning_failure_penalty",
        "rate_distortion_scale",
        "accept_threshold",
        "cc_capacity",
    ):
        _positive(diagnostics, name, getattr(s, name))
    for name in ("bisection_tol", "fixedpoint_tol", "fd_step", "dual_step"):
        _positive(diagnostics, f"solver.{name}", getattr(s.solver, name))
    if s.solver.max_iters < 1:
        diagnostics.append(
            f"solver.max_iters must be at least 1, got {s.solver.max_iters}"
        )
    if not 0 < s.solver.damping <= 1:
        diagnostics.append(f"solver.damping must be in (0, 1], got {s.solver.damping}")
    if not 0 < s.solver.split_grid <= 1:
        diagnostics.append(
            f"solver.split_grid must be in (0, 1], got {s.solver.split_grid}"
        )
    if s.learning_rate < 0:
        diagnostics.append(f"learning_rate must be non-negative, got {s.learning_rate}")
    if s.kappa_local < 0 or s.kappa_cc < 0:
        diagnostics.append("reasoning distortion multipliers must be non-negative")
    if not 0 <= s.initial_relevance <= 1:
        diagnostics.append(
            f"initial_relevance must be in [0, 1], got {s.initial_relevance}"
        )
    if not 0 <= s.rng_seed < 2**64:
        diagnostics.append(
            f"rng_seed must be an unsigned 64-bit integer, got {s.rng_seed}"
        )

    K, J, D = s.num_tx, s.num_rx, s.concepts_per_tx
    concepts, tasks, channels = s.concepts, s.tasks, s.channels

    if _shape(diagnostics, "concepts.means", concepts.means, (K, D)) and not np.all(
        np.isfinite(concepts.means)
    ):
        diagnostics.append("concept means must be finite")
    if _shape(diagnostics, "concepts.variances", concepts.variances, (K, D)):
        if not np.all(concepts.variances > 0):
            diagnostics.append("concept variances must be positive")

    if _shape(diagnostics, "tasks.relevance", tasks.relevance, (J, K, D)):
        if not np.all((tasks.relevance >= 0) & (tasks.relevance <= 1)):
            diagnostics.append("relevance weights must be in [0, 1]")
    if _shape(diagnostics, "tasks.compute_cost", tasks.compute_cost, (J, K, D)):
        if not np.all(tasks.compute_cost > 0):
            diagnostics.append("compute costs must be positive")
    if _shape(diagnostics, "tasks.local_capacity", tasks.local_capacity, (J,)):
        if not np.all(tasks.local_capacity > 0):
            diagnostics.append("local capacities must be positive")
    if _shape(diagnostics, "tasks.cc_share", tasks.cc_share, (J,)):
        if not np.all(tasks.cc_share > 0):
            diagnostics.append("CC shares must be positive")
        elif tasks.cc_share.sum() > s.cc_capacity * (1 + 1e-12):
            total = tasks.cc_share.sum()
            diagnostics.append(
                f"CC share oversubscribed ({total:g} > {s.cc_capacity:g})"
            )

    if _shape(diagnostics, "channels.noise_variance", channels.noise_variance, (K, J)):
        if not np.all(channels.noise_variance > 0):
            diagnostics.append("link noise variances must be positive")
    if _shape(
        diagnostics, "channels.decode_reliability", channels.decode_reliability, (K, J)
    ):
        p = channels.decode_reliability
        if not np.all((p > 0) & (p <= 1)):
            diagnostics.append("decode reliabilities must be in (0, 1]")
    if _shape(
        diagnostics, "channels.channel_gain_std", channels.channel_gain_std, (J,)
    ):
        if not np.all(channels.channel_gain_std > 0):
            diagnostics.append("channel gain deviations must be positive")
    if _shape(diagnostics, "channels.power", channels.power, (J,)):
        if not np.all(channels.power >= 0):
            diagnostics.append("transmit powers must be non-negative")

    return diagnostics

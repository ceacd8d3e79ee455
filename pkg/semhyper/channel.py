# Copyright 2026 The semhyper authors
# Licensed under the MIT license

"""
Link rate, rate-distortion and deadline formulas.

Every function accepts numpy arrays as well as scalars and broadcasts its arguments.
"""

import math
from typing import Tuple, Union

import numpy as np
import numpy.typing as npt

from .types import (
    BetaTerms,
    BoolArray,
    ConfigError,
    DomainError,
    FloatArray,
    NumericError,
    Real,
    Scenario,
)
from .util import as_real

ArrayLike = Union[Real, npt.ArrayLike]


def _finite(name: str, *values: ArrayLike) -> None:
    for value in values:
        if not np.all(np.isfinite(np.asarray(value, dtype=np.float64))):
            raise NumericError(f"{name}: non-finite input")


def link_rate(
    gain: ArrayLike, power: ArrayLike, bandwidth: ArrayLike, noise_density: ArrayLike
) -> Real:
    """
    Rate of the receiver to cloud link in bits per second.
    """
    _finite("link_rate", gain, power, bandwidth, noise_density)
    b = np.asarray(bandwidth, dtype=np.float64)
    snr = np.asarray(gain, dtype=np.float64) * np.asarray(power) / (
        np.asarray(noise_density) * b
    )
    return as_real(b * np.log2(1.0 + snr))


def nominal_rate(scenario: Scenario, rx: int) -> float:
    """
    Cloud link rate at a channel gain of one standard deviation.
    """
    channels = scenario.channels
    return float(
        link_rate(
            channels.channel_gain_std[rx],
            channels.power[rx],
            scenario.bandwidth,
            scenario.noise_density,
        )
    )


def gaussian_distortion(
    source_variance: ArrayLike, weighted_bits: ArrayLike, scale: ArrayLike
) -> Real:
    """
    Minimum squared error of a Gaussian source coded with ``weighted_bits``.
    """
    _finite("gaussian_distortion", source_variance, weighted_bits, scale)
    exponent = -2.0 * np.asarray(weighted_bits, dtype=np.float64) / np.asarray(scale)
    return as_real(np.asarray(source_variance, dtype=np.float64) * np.exp2(exponent))


def error_variance(scenario: Scenario) -> FloatArray:
    """
    Unit-rate error variance of every concept on every link, indexed ``[j, k, r]``.

    Combines the concept's source variance with the link's noise variance.
    """
    source = scenario.concepts.variances[np.newaxis, :, :]
    link = scenario.channels.noise_variance.T[:, :, np.newaxis]
    result: FloatArray = source * link
    return result


def link_error_variance(
    scenario: Scenario, tx: int, rx: int, weighted_bits: ArrayLike
) -> Real:
    """
    Reconstruction error variance of every concept of ``tx`` received by ``rx``.
    """
    variance = error_variance(scenario)[rx, tx]
    return gaussian_distortion(
        variance, weighted_bits, scenario.rate_distortion_scale
    )


def beta_terms(
    pi_local: ArrayLike,
    pi_cloud: ArrayLike,
    reliability: ArrayLike,
    relevance: ArrayLike,
    expected_bits: ArrayLike,
    compute_cost: ArrayLike,
    local_capacity: ArrayLike,
    cc_share: ArrayLike,
) -> BetaTerms:
    """
    Compute-delay and upload-bit components of a link.

    Per-concept arguments carry the concepts on their last axis; link probabilities
    and reliability broadcast against the remaining axes.
    """
    local_capacity = np.asarray(local_capacity, dtype=np.float64)
    cc_share = np.asarray(cc_share, dtype=np.float64)
    if np.any(local_capacity <= 0) or np.any(cc_share <= 0):
        raise ConfigError("local capacity and CC share must be positive")

    p = np.asarray(reliability, dtype=np.float64)
    p1 = np.asarray(pi_local, dtype=np.float64)
    p2 = np.asarray(pi_cloud, dtype=np.float64)
    cost = np.asarray(compute_cost, dtype=np.float64).sum(axis=-1)
    upload = (
        np.asarray(relevance, dtype=np.float64) * np.asarray(expected_bits)
    ).sum(axis=-1)

    beta2 = p * p2 * upload
    beta1 = p * p1 * cost / local_capacity + p * p2 * cost / cc_share
    return BetaTerms(beta1=as_real(beta1), beta2=as_real(beta2))


def _x(
    beta2: FloatArray, slack: FloatArray, scenario: Scenario, rx: int
) -> Tuple[FloatArray, FloatArray]:
    channels = scenario.channels
    b = scenario.bandwidth
    received = channels.power[rx] * channels.channel_gain_std[rx]
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        scale = scenario.noise_density * b / received
        growth = np.exp2(beta2 / (b * slack))
        x = scale * (growth - 1.0)
        dx = scale * math.log(2) * growth * beta2 / (b * slack**2)
    x = np.where(beta2 == 0, 0.0, x)
    dx = np.where(beta2 == 0, 0.0, dx)
    return x, dx


def reasoning_success_bound(beta: BetaTerms, scenario: Scenario, rx: int) -> Real:
    """
    Upper bound on the probability that reasoning meets the deadline.

    Returns zero wherever the compute delay alone reaches the deadline.
    """
    beta1 = np.asarray(beta.beta1, dtype=np.float64)
    beta2 = np.asarray(beta.beta2, dtype=np.float64)
    slack = scenario.tau_max - beta1
    safe = np.where(slack > 0, slack, 1.0)
    x, _ = _x(beta2, safe, scenario, rx)
    with np.errstate(over="ignore", invalid="ignore"):
        bound = np.minimum(1.0, np.exp(-0.5 * x * x))
    bound = np.where(slack > 0, np.nan_to_num(bound, nan=0.0), 0.0)
    return as_real(bound)


def x_taylor(
    beta: BetaTerms, expansion_point: ArrayLike, scenario: Scenario, rx: int
) -> Tuple[Real, Real]:
    """
    Value and slope of the deadline variable ``x`` in ``beta1`` at ``expansion_point``.
    """
    point = np.asarray(expansion_point, dtype=np.float64)
    slack = scenario.tau_max - point
    if np.any(slack <= 0):
        raise DomainError("expansion point must lie before the deadline")
    beta2 = np.broadcast_to(np.asarray(beta.beta2, dtype=np.float64), slack.shape)
    x, dx = _x(beta2, slack, scenario, rx)
    return as_real(x), as_real(dx)


def sample_link(
    concept: ArrayLike,
    reliability: ArrayLike,
    variance: ArrayLike,
    weighted_bits: ArrayLike,
    scale: float,
    rng: np.random.Generator,
) -> Tuple[BoolArray, FloatArray]:
    """
    Draw decode flags and reconstructed values for concepts sent over a link.
    """
    concept = np.asarray(concept, dtype=np.float64)
    shape = np.broadcast_shapes(
        concept.shape,
        np.shape(reliability),
        np.shape(variance),
        np.shape(weighted_bits),
    )
    decoded = rng.random(shape) < np.asarray(reliability)
    spread = np.sqrt(np.asarray(gaussian_distortion(variance, weighted_bits, scale)))
    estimate = concept + rng.standard_normal(shape) * spread
    return decoded, np.asarray(estimate, dtype=np.float64)


def delay_success_frequency(
    beta: BetaTerms, scenario: Scenario, rx: int, rng: np.random.Generator, n: int
) -> float:
    """
    Monte-Carlo frequency of meeting the deadline over random cloud channel gains.
    """
    beta1 = float(beta.beta1)  # type: ignore[arg-type]
    beta2 = float(beta.beta2)  # type: ignore[arg-type]
    if beta1 >= scenario.tau_max:
        return 0.0
    channels = scenario.channels
    gain = np.abs(rng.normal(0.0, channels.channel_gain_std[rx], size=n))
    rate = np.asarray(
        link_rate(gain, channels.power[rx], scenario.bandwidth, scenario.noise_density)
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        delay = beta1 + np.where(beta2 == 0, 0.0, beta2 / rate)
    return float(np.mean(delay <= scenario.tau_max))

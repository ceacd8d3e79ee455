# Copyright 2026 The semhyper authors
# Licensed under the MIT license

"""
Utility and cost functionals of transmitters and receivers.

Every functional takes an optional ``relevance`` tensor, indexed ``[j, k, r]``, that
replaces the scenario's true relevance. The same code therefore scores the true game
and any player's perceived version of it.
"""

import logging
from typing import Optional

import numpy as np

from .channel import (
    ArrayLike,
    beta_terms,
    error_variance,
    gaussian_distortion,
    nominal_rate,
    reasoning_success_bound,
)
from .types import (
    Action,
    DomainError,
    FloatArray,
    InfeasibleOffloadError,
    Real,
    RxStrategy,
    Scenario,
    TxStrategy,
    UtilityReport,
)
from .util import as_real

LOG = logging.getLogger(__name__)


def _relevance(scenario: Scenario, relevance: Optional[FloatArray]) -> FloatArray:
    if relevance is None:
        return scenario.tasks.relevance
    return np.asarray(relevance, dtype=np.float64)


def weighted_surprise(
    tx: int,
    accept: ArrayLike,
    scenario: Scenario,
    relevance: Optional[FloatArray] = None,
) -> Real:
    """
    Surprise of ``tx`` given acceptance weights per receiver on the last axis.

    ``accept`` may hold probabilities or realized accept indicators. Links that are
    never accepted, or carry no relevance, contribute nothing.
    """
    weights = _relevance(scenario, relevance)[:, tx, :].sum(axis=-1)
    accept = np.asarray(accept, dtype=np.float64)
    with np.errstate(divide="ignore"):
        info = -np.log(scenario.channels.decode_reliability[tx])
    active = (accept > 0) & (weights > 0)
    with np.errstate(invalid="ignore"):
        terms = np.where(active, accept * weights * info, 0.0)
    return as_real(terms.sum(axis=-1))


def semantic_surprise(
    tx: int,
    rx_strategy: RxStrategy,
    scenario: Scenario,
    relevance: Optional[FloatArray] = None,
) -> float:
    """
    How surprising the concepts of ``tx`` are to the receivers that accept them.

    Returns ``inf`` when an accepted link never decodes.
    """
    accept = rx_strategy.probs[:, tx, Action.accept]
    return float(weighted_surprise(tx, accept, scenario, relevance))


def link_utilities(
    rx: int,
    expected_bits: ArrayLike,
    accept: ArrayLike,
    pi_local: ArrayLike,
    pi_cloud: ArrayLike,
    scenario: Scenario,
    relevance: Optional[FloatArray] = None,
    tx: Optional[int] = None,
) -> Real:
    """
    Per-link term of the receiver utility, vectorized over candidate reasoning masses.

    Without ``tx``, per-transmitter arguments carry transmitters on their last axis
    and the result is indexed by transmitter. With ``tx``, only that link is scored
    and ``pi_local``/``pi_cloud`` may have any shape.
    """
    w = _relevance(scenario, relevance)[rx]
    m = np.asarray(expected_bits, dtype=np.float64)
    variance = error_variance(scenario)[rx]
    reliability = scenario.channels.decode_reliability[:, rx]
    cost = scenario.tasks.compute_cost[rx]
    if tx is not None:
        w, m, variance = w[tx], m[tx], variance[tx]
        reliability, cost = reliability[tx], cost[tx]

    distortion = gaussian_distortion(variance, w * m, scenario.rate_distortion_scale)
    received = (w * distortion).sum(axis=-1)
    dropped = w.sum(axis=-1) * scenario.drop_penalty

    p0 = np.asarray(accept, dtype=np.float64)
    p1 = np.asarray(pi_local, dtype=np.float64)
    p2 = np.asarray(pi_cloud, dtype=np.float64)
    p3 = np.clip(1.0 - p0 - p1 - p2, 0.0, None)
    quality = (
        p0 * received
        + p1 * scenario.kappa_local * received
        + p2 * scenario.kappa_cc * received
        + p3 * dropped
    )

    beta = beta_terms(
        p1,
        p2,
        reliability,
        w,
        m,
        cost,
        scenario.tasks.local_capacity[rx],
        scenario.tasks.cc_share[rx],
    )
    success = np.asarray(reasoning_success_bound(beta, scenario, rx))
    utility = success * quality + (1.0 - success) * scenario.reasoning_failure_penalty
    return as_real(utility)


def reconstruction_quality(
    tx: int,
    rx: int,
    tx_strategy: TxStrategy,
    rx_strategy: RxStrategy,
    scenario: Scenario,
    relevance: Optional[FloatArray] = None,
) -> float:
    """
    Expected relevance-weighted squared error of link ``(tx, rx)`` over the four
    receiver actions.
    """
    w = _relevance(scenario, relevance)[rx, tx]
    m = tx_strategy.expected_bits[tx]
    variance = error_variance(scenario)[rx, tx]
    distortion = gaussian_distortion(variance, w * m, scenario.rate_distortion_scale)
    received = float(np.sum(w * distortion))
    p0, p1, p2, p3 = rx_strategy.probs[rx, tx]
    return float(
        p0 * received
        + p1 * scenario.kappa_local * received
        + p2 * scenario.kappa_cc * received
        + p3 * float(w.sum()) * scenario.drop_penalty
    )


def expected_delay(
    tx: int,
    rx: int,
    tx_strategy: TxStrategy,
    rx_strategy: RxStrategy,
    scenario: Scenario,
    relevance: Optional[FloatArray] = None,
) -> float:
    """
    Expected reasoning delay of link ``(tx, rx)`` at the nominal cloud link rate.
    """
    w = _relevance(scenario, relevance)[rx, tx]
    m = tx_strategy.expected_bits[tx]
    _, p1, p2, _ = rx_strategy.probs[rx, tx]
    beta = beta_terms(
        p1,
        p2,
        scenario.channels.decode_reliability[tx, rx],
        w,
        m,
        scenario.tasks.compute_cost[rx, tx],
        scenario.tasks.local_capacity[rx],
        scenario.tasks.cc_share[rx],
    )
    beta1 = float(beta.beta1)  # type: ignore[arg-type]
    beta2 = float(beta.beta2)  # type: ignore[arg-type]
    if p2 <= 0:
        return beta1
    rate = nominal_rate(scenario, rx)
    if rate <= 0:
        raise InfeasibleOffloadError(f"rx{rx} offloads with a zero-rate cloud link")
    return beta1 + beta2 / rate


def tx_utility(
    tx: int,
    tx_strategy: TxStrategy,
    rx_strategy: RxStrategy,
    scenario: Scenario,
    relevance: Optional[FloatArray] = None,
) -> float:
    """
    Cost of transmitter ``tx``: average relevance-weighted bits plus surprise.
    """
    w = _relevance(scenario, relevance)[:, tx, :]
    bits = float(np.sum(w * tx_strategy.expected_bits[tx])) / scenario.num_rx
    surprise = semantic_surprise(tx, rx_strategy, scenario, relevance)
    if scenario.alpha2 == 0:
        return scenario.alpha1 * bits
    return scenario.alpha1 * bits + scenario.alpha2 * surprise


def rx_utility(
    rx: int,
    tx_strategy: TxStrategy,
    rx_strategy: RxStrategy,
    scenario: Scenario,
    relevance: Optional[FloatArray] = None,
) -> float:
    """
    Cost of receiver ``rx``: reconstruction quality when reasoning meets the
    deadline, the failure penalty otherwise, summed over incoming links.
    """
    probs = rx_strategy.probs[rx]
    values = link_utilities(
        rx,
        tx_strategy.expected_bits,
        probs[:, 0],
        probs[:, 1],
        probs[:, 2],
        scenario,
        relevance,
    )
    return float(np.sum(values))


def qote(utility: float) -> float:
    """
    Quality of task experience, the inverse of the receiver cost.
    """
    if not utility > 0:
        raise DomainError(f"QoTE needs a positive receiver cost, got {utility}")
    return 1.0 / utility


def evaluate(
    tx_strategy: TxStrategy,
    rx_strategy: RxStrategy,
    scenario: Scenario,
    relevance: Optional[FloatArray] = None,
) -> UtilityReport:
    """
    Score a full strategy profile.

    Per-link matrices are indexed ``[j, k]``. A zero receiver cost reports an
    infinite QoTE, and an infeasible offload an infinite delay.
    """
    K, J = scenario.num_tx, scenario.num_rx
    surprise = np.array(
        [semantic_surprise(k, rx_strategy, scenario, relevance) for k in range(K)]
    )
    tx_values = np.array(
        [tx_utility(k, tx_strategy, rx_strategy, scenario, relevance) for k in range(K)]
    )
    rx_values = np.array(
        [rx_utility(j, tx_strategy, rx_strategy, scenario, relevance) for j in range(J)]
    )
    with np.errstate(divide="ignore"):
        qotes = np.where(rx_values > 0, 1.0 / rx_values, np.inf)

    recon = np.empty((J, K))
    delays = np.empty((J, K))
    for j in range(J):
        for k in range(K):
            recon[j, k] = reconstruction_quality(
                k, j, tx_strategy, rx_strategy, scenario, relevance
            )
            try:
                delays[j, k] = expected_delay(
                    k, j, tx_strategy, rx_strategy, scenario, relevance
                )
            except InfeasibleOffloadError:
                LOG.debug("rx%d offloads tx%d over a zero-rate link", j, k)
                delays[j, k] = np.inf

    return UtilityReport(
        tx_utilities=tx_values,
        rx_utilities=rx_values,
        qote=qotes,
        surprise=surprise,
        surprise_unbounded=np.isinf(surprise),
        expected_bits=tx_strategy.expected_bits.sum(axis=-1),
        recon_quality=recon,
        delays=delays,
    )

# Copyright 2026 The semhyper authors
# Licensed under the MIT license

"""
Transmitter best response: bit allocation under a shared network bit budget.

Each transmitter minimizes a Lagrangian over the expected bits ``m`` of every concept,

    f(m) = sum_j (alpha1 / J + lam) * w * m
           + alpha2 * w * s2 / (2 ln 2 * q) * 2 ** (-2 w m / T)

with ``w`` the perceived relevance, ``s2`` the link error variance and ``q`` the
probability that the perceived receiver does not drop the link. The multiplier
``lam`` is a network price shared by every transmitter. It is found by bisection on
the budget, with the bits each transmitter answers metered on the true relevance.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from .channel import ArrayLike, error_variance
from .types import (
    Action,
    BoolArray,
    FloatArray,
    LeaderSolution,
    PerceptionState,
    Scenario,
    SolverError,
    TxStrategy,
)

LOG = logging.getLogger(__name__)

LAMBDA_CEILING = 1e12
ROOT_XTOL = 1e-12


@dataclass
class LagrangianTerms:
    """
    Coefficients of one transmitter's Lagrangian as seen by one perceiver.
    """

    relevance: FloatArray  # [j, r]
    keep: FloatArray  # [j]
    variance: FloatArray  # [j, r]

    @property
    def active(self) -> BoolArray:
        result: BoolArray = (self.relevance > 0) & (self.keep[:, np.newaxis] > 0)
        return result


def lagrangian_terms(
    tx: int, perceiver: int, perception: PerceptionState, scenario: Scenario
) -> LagrangianTerms:
    """
    Terms for transmitter ``tx`` under the beliefs of transmitter ``perceiver``.
    """
    relevance = perception.relevance_by_tx[perceiver][:, tx, :]
    drop = perception.rx_by_tx[perceiver][:, tx, Action.drop]
    keep = scenario.channels.decode_reliability[tx] * np.clip(1.0 - drop, 0.0, 1.0)
    variance = error_variance(scenario)[:, tx, :]
    return LagrangianTerms(relevance=relevance, keep=keep, variance=variance)


def _reliability_coefficient(terms: LagrangianTerms, scenario: Scenario) -> FloatArray:
    active = terms.active
    keep = np.where(terms.keep > 0, terms.keep, 1.0)[:, np.newaxis]
    coef = (
        scenario.alpha2
        * terms.relevance
        * terms.variance
        / (2.0 * math.log(2) * keep)
    )
    result: FloatArray = np.where(active, coef, 0.0)
    return result


def lagrangian(
    bits: ArrayLike, lam: float, terms: LagrangianTerms, scenario: Scenario
) -> FloatArray:
    """
    Lagrangian value per concept at expected bits ``bits[..., r]``.
    """
    m = np.asarray(bits, dtype=np.float64)[..., np.newaxis, :]
    w = terms.relevance
    price = scenario.alpha1 / scenario.num_rx + lam
    decay = np.exp2(-2.0 * w * m / scenario.rate_distortion_scale)
    value = price * w * m + _reliability_coefficient(terms, scenario) * decay
    result: FloatArray = value.sum(axis=-2)
    return result


def lagrangian_gradient(
    bits: ArrayLike, lam: float, terms: LagrangianTerms, scenario: Scenario
) -> FloatArray:
    """
    Derivative of :func:`lagrangian` in the expected bits of each concept.
    """
    m = np.asarray(bits, dtype=np.float64)[..., np.newaxis, :]
    w = terms.relevance
    T = scenario.rate_distortion_scale
    price = scenario.alpha1 / scenario.num_rx + lam
    decay = np.exp2(-2.0 * w * m / T)
    slope = _reliability_coefficient(terms, scenario) * 2.0 * math.log(2) * w / T
    result: FloatArray = (price * w - slope * decay).sum(axis=-2)
    return result


def closed_form_bits(
    lam: float, terms: LagrangianTerms, scenario: Scenario
) -> FloatArray:
    """
    Stationary expected bits per receiver and concept, indexed ``[j, r]``.

    Receivers that contribute no reliability term get zero bits. The values are
    unclipped and may be negative or infinite.
    """
    w = terms.relevance
    T = scenario.rate_distortion_scale
    price = scenario.alpha1 / scenario.num_rx + lam
    keep = terms.keep[:, np.newaxis]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        level = (
            -np.log2(price * T / (scenario.alpha2 * terms.variance))
            - np.log2(keep)
            + np.log2(w)
        )
        bits = T / (2.0 * w) * level
    result: FloatArray = np.where(terms.active, bits, 0.0)
    return result


def closed_form_pi(
    tx: int,
    concept: int,
    bit_value: int,
    lam: float,
    perception: PerceptionState,
    scenario: Scenario,
) -> float:
    """
    Unnormalized mass the stationary allocation puts on ``bit_value``.

    The stationary expected bits divided by the bit value, averaged over the
    perceived receivers. A concept that no receiver needs is a point mass on zero
    bits.
    """
    terms = lagrangian_terms(tx, tx, perception, scenario)
    active = terms.active[:, concept]
    if bit_value == 0:
        return float(np.mean(~active))
    bits = closed_form_bits(lam, terms, scenario)[:, concept]
    return float(np.mean(bits / bit_value))


def normalize_strategy(raw: ArrayLike) -> FloatArray:
    """
    Turn raw masses over bit values into a categorical distribution.

    Negative values clip to zero, ``-inf`` counts as zero, and ``+inf`` entries
    share all the mass. A vector with no mass left becomes a point mass on zero
    bits.
    """
    values = np.array(raw, dtype=np.float64)
    values[np.isneginf(values)] = 0.0
    if not np.any(np.isfinite(values)) and not np.any(np.isposinf(values)):
        raise SolverError("no finite mass in raw strategy")
    if np.any(np.isposinf(values)):
        values = np.isposinf(values).astype(np.float64)
    values = np.clip(np.nan_to_num(values, nan=0.0), 0.0, None)
    total = values.sum()
    if total <= 0:
        values = np.zeros_like(values)
        values[0] = 1.0
        return values
    result: FloatArray = values / total
    return result


def realize_bits(target: float, bit_alphabet_max: int) -> FloatArray:
    """
    Mixed strategy on the two bit values around ``target`` with mean ``target``.
    """
    target = float(np.clip(target, 0.0, bit_alphabet_max))
    lo, hi = math.floor(target), math.ceil(target)
    raw = np.zeros(bit_alphabet_max + 1)
    if lo == hi:
        raw[lo] = 1.0
    else:
        raw[lo] = hi - target
        raw[hi] = target - lo
    return normalize_strategy(raw)


def optimal_bits(lam: float, terms: LagrangianTerms, scenario: Scenario) -> FloatArray:
    """
    Minimizer of the Lagrangian over ``[0, A_max]`` for every concept.
    """
    top = float(scenario.bit_alphabet_max)
    num_concepts = terms.relevance.shape[-1]
    lo = lagrangian_gradient(np.zeros(num_concepts), lam, terms, scenario)
    hi = lagrangian_gradient(np.full(num_concepts, top), lam, terms, scenario)
    closed = closed_form_bits(lam, terms, scenario)

    bits = np.zeros(num_concepts)
    for r in range(num_concepts):
        if lo[r] >= 0:
            continue
        if hi[r] <= 0:
            bits[r] = top
            continue
        if np.count_nonzero(terms.relevance[:, r]) == 1 and terms.active[:, r].any():
            bits[r] = float(np.clip(closed[:, r].sum(), 0.0, top))
            continue

        def slope(m: float, r: int = r) -> float:
            point = np.zeros(num_concepts)
            point[r] = m
            return float(lagrangian_gradient(point, lam, terms, scenario)[r])

        bits[r] = brentq(slope, 0.0, top, xtol=ROOT_XTOL)
    return bits


def _own_bits(
    lam: float, perception: PerceptionState, scenario: Scenario
) -> List[FloatArray]:
    return [
        optimal_bits(lam, lagrangian_terms(k, k, perception, scenario), scenario)
        for k in range(scenario.num_tx)
    ]


def network_usage(bits: Sequence[FloatArray], scenario: Scenario) -> float:
    """
    Relevance-weighted bits the network carries for expected bits ``bits[k][r]``,
    metered with the true relevance and averaged over receivers.
    """
    w = scenario.tasks.relevance
    return sum(
        float(np.sum(w[:, k, :] * np.asarray(b))) for k, b in enumerate(bits)
    ) / scenario.num_rx


def _budget_usage(lam: float, perception: PerceptionState, scenario: Scenario) -> float:
    return network_usage(_own_bits(lam, perception, scenario), scenario)


def network_lambda(
    perception: PerceptionState, scenario: Scenario
) -> Tuple[float, float, bool]:
    """
    Budget multiplier shared by every transmitter.

    Each transmitter answers the price with its own best response; the network
    meters the result on the true relevance. Returns the multiplier, the metered
    usage and whether the budget could be met.
    """
    budget = scenario.bit_budget
    tol = scenario.solver.bisection_tol

    def usage(lam: float) -> float:
        return _budget_usage(lam, perception, scenario)

    used = usage(0.0)
    if used <= budget:
        return 0.0, used, True

    lo, hi = 0.0, 1.0
    while usage(hi) > budget and hi < LAMBDA_CEILING:
        lo, hi = hi, hi * 2.0
    used = usage(hi)
    if used > budget:
        LOG.warning("bit budget infeasible at lambda=%g", hi)
        return hi, used, False

    for _ in range(scenario.solver.max_iters):
        if budget - used <= tol or hi - lo <= tol * max(1.0, hi):
            break
        mid = 0.5 * (lo + hi)
        mid_used = usage(mid)
        if mid_used > budget:
            lo = mid
        else:
            hi, used = mid, mid_used
    LOG.debug("lambda=%g slack=%g", hi, budget - used)
    return hi, used, True


def _leader_solution(
    tx: int,
    lam: float,
    used: float,
    feasible: bool,
    perception: PerceptionState,
    scenario: Scenario,
) -> LeaderSolution:
    terms = lagrangian_terms(tx, tx, perception, scenario)
    if feasible:
        target = optimal_bits(lam, terms, scenario)
    else:
        target = np.zeros(scenario.concepts_per_tx)
        used = 0.0
    raw = closed_form_bits(lam, terms, scenario)
    with np.errstate(invalid="ignore"):
        raw_bits = raw.mean(axis=0)
    probs = np.stack(
        [realize_bits(m, scenario.bit_alphabet_max) for m in target], axis=0
    )

    solution = LeaderSolution(
        tx=tx,
        probs=probs,
        target_bits=target,
        raw_bits=raw_bits,
        lam=lam,
        stationarity_residual=0.0,
        budget_slack=scenario.bit_budget - used,
        feasible=feasible,
    )
    solution.stationarity_residual = stationarity_residual(
        solution, perception, scenario
    )
    return solution


def bisect_lambda(
    tx: int, perception: PerceptionState, scenario: Scenario
) -> LeaderSolution:
    """
    Best response of transmitter ``tx`` at the shared budget multiplier.

    When the budget cannot be met, every transmitter falls back to zero bits.
    """
    lam, used, feasible = network_lambda(perception, scenario)
    return _leader_solution(tx, lam, used, feasible, perception, scenario)


def solve_leaders(
    perception: PerceptionState, scenario: Scenario
) -> List[LeaderSolution]:
    lam, used, feasible = network_lambda(perception, scenario)
    return [
        _leader_solution(k, lam, used, feasible, perception, scenario)
        for k in range(scenario.num_tx)
    ]


def stationarity_gradient(
    tx: int,
    probs: FloatArray,
    lam: float,
    perception: PerceptionState,
    scenario: Scenario,
) -> FloatArray:
    """
    Lagrangian slope per concept at the expected bits of ``probs[r, a]``.
    """
    bits = probs @ scenario.bit_values
    terms = lagrangian_terms(tx, tx, perception, scenario)
    return lagrangian_gradient(bits, lam, terms, scenario)


def stationarity_residual(
    solution: LeaderSolution, perception: PerceptionState, scenario: Scenario
) -> float:
    """
    Largest derivative of the Lagrangian in any single bit-value mass.
    """
    slope = stationarity_gradient(
        solution.tx, solution.probs, solution.lam, perception, scenario
    )
    per_mass = np.abs(slope[:, np.newaxis] * scenario.bit_values[np.newaxis, :])
    return float(per_mass.max())


def leader_objective(
    tx: int,
    strategy: TxStrategy,
    perception: PerceptionState,
    scenario: Scenario,
    lam: float,
) -> float:
    """
    Lagrangian of ``tx`` at its allocation in ``strategy``, summed over concepts.
    """
    terms = lagrangian_terms(tx, tx, perception, scenario)
    bits = strategy.expected_bits[tx]
    return float(lagrangian(bits, lam, terms, scenario).sum())

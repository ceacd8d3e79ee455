# Copyright 2026 The semhyper authors
# Licensed under the MIT license

"""
Receiver best response.

Each incoming link first gets its accept probability from the squared-error
threshold. The remaining mass is split between local and cloud reasoning by a
damped fixed point on the linearized deadline bound, safeguarded by a grid search,
and whatever is left is dropped. Dual prices on the two compute constraints are
raised until the whole strategy fits both.
"""

import logging
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, minimize
from scipy.stats import chi2

from .channel import (
    ArrayLike,
    beta_terms,
    link_error_variance,
    x_taylor,
)
from .types import (
    AcceptRule,
    Action,
    FloatArray,
    FollowerSolution,
    PerceptionState,
    Scenario,
    SimplexError,
    TxStrategy,
)
from .utilities import link_utilities

LOG = logging.getLogger(__name__)

SIMPLEX_TOL = 1e-9
POLISH_FTOL = 1e-12


def accept_probability(
    tx: int,
    rx: int,
    tx_strategy: TxStrategy,
    scenario: Scenario,
    relevance: Optional[FloatArray] = None,
) -> float:
    """
    Probability that ``rx`` accepts the concepts of ``tx`` as decoded.

    The per-concept chance that the squared reconstruction error meets the
    threshold is averaged with relevance weights, then scaled by the decode
    reliability of the link.
    """
    if relevance is None:
        relevance = scenario.tasks.relevance
    w = np.asarray(relevance)[rx, tx]
    m = tx_strategy.expected_bits[tx]
    variance = np.asarray(link_error_variance(scenario, tx, rx, w * m))
    within = chi2.cdf(scenario.accept_threshold / variance, df=1)
    if scenario.accept_rule is AcceptRule.literal:
        within = 1.0 - within
    if w.sum() > 0:
        share = float(np.sum(w * within) / w.sum())
    else:
        share = float(np.mean(within))
    return float(scenario.channels.decode_reliability[tx, rx]) * share


def drop_probability(partial: ArrayLike) -> float:
    """
    Mass left for dropping a link after accept, local and cloud masses.
    """
    total = float(np.sum(partial))
    if total > 1.0 + SIMPLEX_TOL:
        raise SimplexError(f"partial masses sum to {total}")
    return max(0.0, 1.0 - total)


def perceived_cc_load(
    rx: int, perception: PerceptionState, scenario: Scenario
) -> float:
    """
    Cloud cycles the other receivers are believed to claim, as seen by ``rx``.
    """
    beliefs = perception.rx_by_rx[rx]
    totals = scenario.tasks.compute_cost.sum(axis=-1)
    load = beliefs[:, :, Action.cloud] * totals
    return float(load.sum() - load[rx].sum())


def link_caps(
    rx: int, tx: int, other_cc_load: float, scenario: Scenario
) -> Tuple[float, float]:
    """
    Largest local and cloud masses link ``(tx, rx)`` could carry on its own.
    """
    total = float(scenario.tasks.compute_cost[rx, tx].sum())
    local = float(scenario.tasks.local_capacity[rx]) / total
    room = max(0.0, scenario.cc_capacity - other_cc_load)
    return local, room / total


def split_grid(available: float, resolution: float) -> FloatArray:
    """
    Every ``(local, cloud)`` pair on the resolution grid that fits in ``available``.
    """
    steps = int(np.floor(available / resolution + 1e-9))
    values = np.arange(steps + 1) * resolution
    local, cloud = np.meshgrid(values, values, indexing="ij")
    pairs = np.stack([local.ravel(), cloud.ravel()], axis=-1)
    result: FloatArray = pairs[pairs.sum(axis=-1) <= available + 1e-12]
    return result


def clip_split(phi: ArrayLike, available: float) -> FloatArray:
    """
    Fit raw local and cloud masses into the mass left after acceptance.
    """
    phi = np.asarray(phi, dtype=np.float64)
    infinite = np.isposinf(phi)
    if infinite.all():
        return np.full(2, available / 2.0)
    if infinite.any():
        return np.where(infinite, available, 0.0)
    phi = np.clip(np.nan_to_num(phi, nan=0.0, neginf=0.0), 0.0, None)
    total = phi.sum()
    if total > available:
        phi = phi * (available / total)
    result: FloatArray = phi
    return result


def reasoning_map(
    rx: int,
    tx: int,
    split: ArrayLike,
    bits: FloatArray,
    gamma: ArrayLike,
    scenario: Scenario,
) -> FloatArray:
    """
    Stationary local and cloud masses of link ``(tx, rx)``, with the deadline
    bound linearized at the compute delay of ``split``.
    """
    tasks = scenario.tasks
    w = tasks.relevance[rx, tx]
    m = bits[tx]
    cost = tasks.compute_cost[rx, tx]
    total = float(cost.sum())
    reliability = float(scenario.channels.decode_reliability[tx, rx])
    local_cap = float(tasks.local_capacity[rx])
    share = float(tasks.cc_share[rx])

    split = np.asarray(split, dtype=np.float64)
    beta = beta_terms(split[0], split[1], reliability, w, m, cost, local_cap, share)
    beta1 = float(beta.beta1)  # type: ignore[arg-type]
    if beta1 >= scenario.tau_max:
        return np.zeros(2)

    x, dx = x_taylor(beta, beta1, scenario, rx)
    distortion = link_error_variance(scenario, tx, rx, w * m)
    received = reliability * float(np.sum(w * distortion))
    delay_weight = reliability * total / np.array([local_cap, share])
    capacity = np.array([local_cap, scenario.cc_capacity])
    success = float(np.exp(-0.5 * float(x) ** 2))

    with np.errstate(divide="ignore", invalid="ignore"):
        phi = (success * received + np.asarray(gamma) * total / capacity) / (
            float(dx) * float(x) * success * delay_weight * received
        )
    result: FloatArray = np.where(np.isnan(phi), 0.0, phi)
    return result


def penalized_link_utility(
    rx: int,
    tx: int,
    local: ArrayLike,
    cloud: ArrayLike,
    bits: FloatArray,
    accept: float,
    gamma: ArrayLike,
    scenario: Scenario,
) -> FloatArray:
    """
    Link utility plus the dual price of the compute it claims.
    """
    total = float(scenario.tasks.compute_cost[rx, tx].sum())
    gamma = np.asarray(gamma, dtype=np.float64)
    utility = link_utilities(rx, bits, accept, local, cloud, scenario, tx=tx)
    penalty = (
        gamma[0] * np.asarray(local) * total / scenario.tasks.local_capacity[rx]
        + gamma[1] * np.asarray(cloud) * total / scenario.cc_capacity
    )
    result: FloatArray = np.asarray(utility) + penalty
    return result


def _grid_search(
    rx: int,
    tx: int,
    start: FloatArray,
    bits: FloatArray,
    accept: float,
    gamma: FloatArray,
    other_cc_load: float,
    scenario: Scenario,
) -> FloatArray:
    available = max(0.0, 1.0 - accept)
    resolution = scenario.solver.split_grid
    cap_local, cap_cloud = link_caps(rx, tx, other_cc_load, scenario)
    caps = np.array([cap_local, cap_cloud])

    def score(points: FloatArray) -> FloatArray:
        return penalized_link_utility(
            rx, tx, points[:, 0], points[:, 1], bits, accept, gamma, scenario
        )

    grid = split_grid(available, resolution)
    grid = grid[np.all(grid <= caps + 1e-12, axis=-1)]
    candidates = np.concatenate([np.minimum(start, caps)[np.newaxis, :], grid])
    best = candidates[int(np.argmin(score(candidates)))]

    offsets = np.arange(-10, 11) * (resolution / 10.0)
    local, cloud = np.meshgrid(best[0] + offsets, best[1] + offsets, indexing="ij")
    fine = np.stack([local.ravel(), cloud.ravel()], axis=-1)
    keep = (
        np.all(fine >= 0, axis=-1)
        & (fine.sum(axis=-1) <= available + 1e-12)
        & np.all(fine <= caps + 1e-12, axis=-1)
    )
    fine = np.concatenate([best[np.newaxis, :], fine[keep]])
    result: FloatArray = fine[int(np.argmin(score(fine)))]
    return result


def _solve_split(
    rx: int,
    tx_strategy: TxStrategy,
    scenario: Scenario,
    accept: FloatArray,
    other_cc_load: float,
    gamma: FloatArray,
) -> FollowerSolution:
    settings = scenario.solver
    bits = tx_strategy.expected_bits
    probs = np.zeros((scenario.num_tx, 4))
    iterations = 0
    worst = 0.0
    converged = True

    for k in range(scenario.num_tx):
        available = max(0.0, 1.0 - float(accept[k]))
        split = np.full(2, available / 3.0)
        best, best_residual = split, np.inf
        for step in range(1, settings.max_iters + 1):
            phi = clip_split(
                reasoning_map(rx, k, split, bits, gamma[k], scenario), available
            )
            update = (1.0 - settings.damping) * split + settings.damping * phi
            residual = float(np.max(np.abs(update - split)))
            split = update
            if residual < best_residual:
                best, best_residual = split, residual
            if residual <= settings.fixedpoint_tol:
                break
        iterations = max(iterations, step)
        worst = max(worst, best_residual)
        if best_residual > settings.fixedpoint_tol:
            converged = False
            LOG.debug("rx%d/tx%d: fixed point residual %g", rx, k, best_residual)

        split = _grid_search(
            rx, k, best, bits, float(accept[k]), gamma[k], other_cc_load, scenario
        )
        probs[k, Action.accept] = accept[k]
        probs[k, 1:3] = split
        probs[k, Action.drop] = drop_probability(probs[k, :3])

    return FollowerSolution(
        rx=rx,
        probs=probs,
        gamma=gamma.copy(),
        accept=np.asarray(accept, dtype=np.float64).copy(),
        bits=bits.copy(),
        other_cc_load=other_cc_load,
        fixed_point_iterations=iterations,
        residual=worst,
        converged=converged,
    )


def _accepts(rx: int, tx_strategy: TxStrategy, scenario: Scenario) -> FloatArray:
    return np.array(
        [
            accept_probability(k, rx, tx_strategy, scenario)
            for k in range(scenario.num_tx)
        ]
    )


def reasoning_split_fixed_point(
    rx: int,
    perception: PerceptionState,
    tx_strategy: TxStrategy,
    scenario: Scenario,
    gamma: Optional[FloatArray] = None,
) -> FollowerSolution:
    """
    Local and cloud reasoning masses of ``rx`` for fixed accept probabilities,
    with the cloud load of other receivers taken from the perception of ``rx``.
    """
    if gamma is None:
        gamma = np.zeros((scenario.num_tx, 2))
    return _solve_split(
        rx,
        tx_strategy,
        scenario,
        _accepts(rx, tx_strategy, scenario),
        perceived_cc_load(rx, perception, scenario),
        gamma,
    )


def constraint_violations(
    rx: int, probs: FloatArray, other_cc_load: float, scenario: Scenario
) -> Tuple[float, float]:
    """
    Relative excess of the local and cloud compute claims; positive when violated.
    """
    totals = scenario.tasks.compute_cost[rx].sum(axis=-1)
    local_cap = float(scenario.tasks.local_capacity[rx])
    local = float(np.sum(probs[:, Action.local] * totals))
    cloud = other_cc_load + float(np.sum(probs[:, Action.cloud] * totals))
    return (
        (local - local_cap) / local_cap,
        (cloud - scenario.cc_capacity) / scenario.cc_capacity,
    )


def project_constraints(
    rx: int, probs: FloatArray, other_cc_load: float, scenario: Scenario
) -> FloatArray:
    """
    Scale reasoning masses down until both compute constraints hold; the removed
    mass is dropped.
    """
    probs = probs.copy()
    totals = scenario.tasks.compute_cost[rx].sum(axis=-1)
    local_cap = float(scenario.tasks.local_capacity[rx])
    local = float(np.sum(probs[:, Action.local] * totals))
    if local > local_cap:
        probs[:, Action.local] *= local_cap / local
    room = max(0.0, scenario.cc_capacity - other_cc_load)
    cloud = float(np.sum(probs[:, Action.cloud] * totals))
    if cloud > room:
        probs[:, Action.cloud] *= room / cloud
    probs[:, Action.drop] = np.clip(1.0 - probs[:, :3].sum(axis=-1), 0.0, 1.0)
    return probs


def _complementary(
    gamma: FloatArray, violations: Tuple[float, float], tol: float
) -> bool:
    """
    Both constraints hold and neither price sits on a slack constraint.
    """
    prices = gamma.max(axis=0)
    return max(violations) <= tol and all(
        abs(price * excess) <= tol for price, excess in zip(prices, violations)
    )


def own_cost(
    rx: int, probs: FloatArray, bits: FloatArray, scenario: Scenario
) -> float:
    """
    Receiver cost of the strategy rows ``probs[k, a]`` against expected bits ``bits``.
    """
    utility = link_utilities(
        rx,
        bits,
        probs[:, Action.accept],
        probs[:, Action.local],
        probs[:, Action.cloud],
        scenario,
    )
    return float(np.sum(utility))


def polish_split(
    rx: int,
    probs: FloatArray,
    bits: FloatArray,
    other_cc_load: float,
    scenario: Scenario,
) -> FloatArray:
    """
    Refine the reasoning masses of every link on the receiver's own cost under both
    compute constraints, keeping the accept masses fixed.

    The refinement is kept only when it is no worse than the feasible start.
    """
    K = scenario.num_tx
    accept = probs[:, Action.accept]
    available = np.clip(1.0 - accept, 0.0, 1.0)
    totals = scenario.tasks.compute_cost[rx].sum(axis=-1)
    local_cap = float(scenario.tasks.local_capacity[rx])
    room = max(0.0, scenario.cc_capacity - other_cc_load)
    start = project_constraints(rx, probs, other_cc_load, scenario)
    # links with nothing left after acceptance stay out of the search
    free = np.repeat(available[:, np.newaxis] > SIMPLEX_TOL, 2, axis=1)
    if not free.any():
        return start

    def assemble(values: FloatArray) -> FloatArray:
        split = np.zeros((K, 2))
        split[free] = values
        candidate = probs.copy()
        for k in range(K):
            candidate[k, 1:3] = clip_split(split[k], available[k])
        return project_constraints(rx, candidate, other_cc_load, scenario)

    def cost(values: FloatArray) -> float:
        return own_cost(rx, assemble(values), bits, scenario)

    x0 = start[:, 1:3][free]
    columns = np.argwhere(free)

    rows = np.zeros((K + 2, len(columns)))
    for i, (k, d) in enumerate(columns):
        rows[k, i] = 1.0
        if d == 0:
            rows[K, i] = totals[k] / local_cap
        else:
            rows[K + 1, i] = totals[k] / scenario.cc_capacity
    upper = np.concatenate([available, [1.0, room / scenario.cc_capacity]])
    used = rows.any(axis=1)
    result = minimize(
        cost,
        x0,
        method="SLSQP",
        bounds=Bounds(np.zeros(len(columns)), available[columns[:, 0]]),
        constraints=[LinearConstraint(rows[used], -np.inf, upper[used])],
        options={"maxiter": scenario.solver.max_iters, "ftol": POLISH_FTOL},
    )
    polished = assemble(np.clip(result.x, 0.0, None))
    if cost(polished[:, 1:3][free]) <= cost(x0):
        return polished
    LOG.debug("rx%d: split refinement rejected (%s)", rx, result.message)
    return start


def enforce_compute_constraints(
    rx: int,
    solution: FollowerSolution,
    tx_strategy: TxStrategy,
    scenario: Scenario,
) -> FollowerSolution:
    """
    Projected dual ascent on the two compute constraints.

    Prices rise on a violated constraint and fall on a slack one, re-solving the
    split after every update, until the split is feasible and complementary slack.
    Any excess left is projected away and the split refined on the receiver's own
    cost. A constraint left slack carries no price.
    """
    settings = scenario.solver
    bits = tx_strategy.expected_bits
    gamma = solution.gamma.copy()
    unpriced = solution.probs
    for _ in range(settings.max_iters):
        violations = constraint_violations(
            rx, solution.probs, solution.other_cc_load, scenario
        )
        if _complementary(gamma, violations, settings.fixedpoint_tol):
            break
        gamma = np.maximum(0.0, gamma + settings.dual_step * np.array(violations))
        solution = _solve_split(
            rx, tx_strategy, scenario, solution.accept, solution.other_cc_load, gamma
        )
    else:
        LOG.debug("rx%d: dual ascent stopped at max_iters", rx)

    other = solution.other_cc_load
    # the unpriced split is a second start for the refinement
    starts = (solution.probs, unpriced)
    probs = min(
        (polish_split(rx, start, bits, other, scenario) for start in starts),
        key=lambda candidate: own_cost(rx, candidate, bits, scenario),
    )
    local, cloud = constraint_violations(rx, probs, other, scenario)
    tol = settings.fixedpoint_tol
    gamma[:, 0] = np.where(local < -tol, 0.0, gamma[:, 0])
    gamma[:, 1] = np.where(cloud < -tol, 0.0, gamma[:, 1])
    solution.probs = probs
    solution.gamma = gamma
    solution.constraint_violations = (max(0.0, local), max(0.0, cloud))
    return solution


def best_response(
    rx: int,
    tx_strategy: TxStrategy,
    scenario: Scenario,
    other_cc_load: float = 0.0,
    reasoning: bool = True,
) -> FollowerSolution:
    """
    Full strategy of receiver ``rx`` against the transmitted allocations.

    Without reasoning, every link is either accepted or dropped.
    """
    accept = _accepts(rx, tx_strategy, scenario)
    gamma = np.zeros((scenario.num_tx, 2))
    if not reasoning:
        probs = np.zeros((scenario.num_tx, 4))
        probs[:, Action.accept] = accept
        probs[:, Action.drop] = 1.0 - accept
        return FollowerSolution(
            rx=rx,
            probs=probs,
            gamma=gamma,
            accept=accept,
            bits=tx_strategy.expected_bits.copy(),
            other_cc_load=other_cc_load,
            reasoning=False,
        )
    solution = _solve_split(rx, tx_strategy, scenario, accept, other_cc_load, gamma)
    return enforce_compute_constraints(rx, solution, tx_strategy, scenario)

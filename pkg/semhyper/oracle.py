# Copyright 2026 The semhyper authors
# Licensed under the MIT license

"""
Exhaustive search for single-link instances.

The leader grid is scored with the same Lagrangian the solver minimizes, at a given
multiplier and under given beliefs, so the solver and the oracle rank allocations
by one objective. The follower then searches its split grid against the winner.
"""

import logging
from typing import Optional

import numpy as np

from .follower import accept_probability, link_caps, split_grid
from .hypergame import perception_from_truth, uniform_rx, uniform_tx
from .leader import lagrangian, lagrangian_terms, realize_bits
from .types import OracleRefused, OracleResult, PerceptionState, Scenario, TxStrategy
from .utilities import link_utilities

LOG = logging.getLogger(__name__)

MAX_CONCEPTS = 2
MAX_BITS = 4
MIN_RESOLUTION = 0.01
BUDGET_TOL = 1e-9
TIE_TOL = 1e-12
CAP_TOL = 1e-12
RELATIVE_SLACK = 0.05
ABSOLUTE_SLACK = 1e-9


def within_tolerance(solver: float, oracle: float) -> bool:
    """
    True when a solver cost is no more than 5% above the oracle's.
    """
    return solver <= oracle + RELATIVE_SLACK * abs(oracle) + ABSOLUTE_SLACK


def brute_force_oracle(
    scenario: Scenario,
    grid_resolution: float = MIN_RESOLUTION,
    perception: Optional[PerceptionState] = None,
    lam: float = 0.0,
) -> OracleResult:
    """
    Search every budget-feasible leader allocation on the grid, then the follower's
    best split against the winner.

    Leader points are ranked by the Lagrangian at multiplier ``lam`` under
    ``perception``, which defaults to the truth at uniform strategies. Ties go to
    the allocation with the fewest total bits, then to the lowest bit index.
    """
    if (
        scenario.num_tx != 1
        or scenario.num_rx != 1
        or scenario.concepts_per_tx > MAX_CONCEPTS
        or scenario.bit_alphabet_max > MAX_BITS
        or grid_resolution < MIN_RESOLUTION
    ):
        raise OracleRefused(
            "oracle needs 1 TX, 1 RX, at most "
            f"{MAX_CONCEPTS} concepts, at most {MAX_BITS} bits "
            f"and a grid of at least {MIN_RESOLUTION}"
        )
    if perception is None:
        perception = perception_from_truth(
            uniform_tx(scenario), uniform_rx(scenario), scenario
        )

    D = scenario.concepts_per_tx
    steps = int(round(scenario.bit_alphabet_max / grid_resolution))
    values = np.linspace(0.0, scenario.bit_alphabet_max, steps + 1)
    grids = np.meshgrid(*([values] * D), indexing="ij")
    bits = np.stack([g.ravel() for g in grids], axis=-1)

    usage = bits @ scenario.tasks.relevance[0, 0]
    feasible = usage <= scenario.bit_budget + BUDGET_TOL
    feasible_points = int(feasible.sum())
    LOG.debug("oracle: %d of %d leader points feasible", feasible_points, len(bits))
    bits = bits[feasible]

    terms = lagrangian_terms(0, 0, perception, scenario)
    cost = lagrangian(bits, lam, terms, scenario).sum(axis=-1)
    tied = np.flatnonzero(cost <= cost.min() + TIE_TOL)
    choice = tied[int(np.argmin(bits[tied].sum(axis=-1)))]
    chosen = bits[choice]

    strategy = TxStrategy(
        np.stack([realize_bits(m, scenario.bit_alphabet_max) for m in chosen])[
            np.newaxis
        ]
    )
    accepted = accept_probability(0, 0, strategy, scenario)
    available = max(0.0, 1.0 - accepted)
    cap_local, cap_cloud = link_caps(0, 0, 0.0, scenario)
    splits = split_grid(available, grid_resolution)
    within_caps = (splits[:, 0] <= cap_local + CAP_TOL) & (
        splits[:, 1] <= cap_cloud + CAP_TOL
    )
    splits = splits[within_caps]
    scores = np.asarray(
        link_utilities(
            0,
            strategy.expected_bits,
            accepted,
            splits[:, 0],
            splits[:, 1],
            scenario,
            tx=0,
        )
    )
    pick = int(np.argmin(scores))
    local, cloud = splits[pick]
    rx_probs = np.array(
        [accepted, local, cloud, max(0.0, 1.0 - accepted - local - cloud)]
    )

    return OracleResult(
        bits=chosen,
        rx_probs=rx_probs,
        tx_utility=float(cost[choice]),
        rx_utility=float(scores[pick]),
        feasible_points=feasible_points,
    )

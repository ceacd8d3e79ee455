# Copyright 2026 The semhyper authors
# Licensed under the MIT license

"""
Reference schemes run through the same round loop as the hypergame.
"""

import logging
from typing import Optional, Union

from .hypergame import (
    check_local_hse,
    initial_state,
    pair_name,
    play,
    relevance_blind_perception,
)
from .types import (
    BaselineResult,
    PerceptionMode,
    PerceptionState,
    PlayResult,
    Scenario,
    Scheme,
)
from .utilities import evaluate

LOG = logging.getLogger(__name__)

DEFAULT_ROUNDS = 200
DEFAULT_PROBES = 256


def scheme_result(
    scheme: Scheme, played: PlayResult, scenario: Scenario
) -> BaselineResult:
    state = played.state
    report = evaluate(state.tx, state.rx, scenario)
    return BaselineResult(
        scheme=scheme,
        tx=state.tx,
        rx=state.rx,
        report=report,
        bits_total=float(report.expected_bits.sum()),
        qote=report.qote,
        rounds=played.rounds,
        converged=played.converged,
        records=played.records,
        pairs=played.pairs,
        lambdas=state.lambdas.copy(),
        misperception={
            pair_name(pair): values[-1]
            for pair, values in state.misperception_trace.items()
            if values
        },
    )


def solve_complete_information(
    scenario: Scenario, max_rounds: int = DEFAULT_ROUNDS
) -> BaselineResult:
    """
    Every player knows the true game: beliefs are pinned to the truth before each
    phase of every round.
    """
    played = play(scenario, PerceptionMode.truth, max_rounds)
    return scheme_result(Scheme.complete, played, scenario)


def solve_naive_msse(
    scenario: Scenario,
    fixed_perception: Optional[Union[PerceptionState, PerceptionMode]] = None,
    max_rounds: int = DEFAULT_ROUNDS,
) -> BaselineResult:
    """
    Play with beliefs that never change.

    By default transmitters believe every concept fully relevant. Passing
    :attr:`PerceptionMode.truth` pins beliefs to the truth instead, which is the
    complete-information scheme.
    """
    if fixed_perception is PerceptionMode.truth:
        played = play(scenario, PerceptionMode.truth, max_rounds)
    else:
        perception = (
            fixed_perception
            if isinstance(fixed_perception, PerceptionState)
            else relevance_blind_perception(scenario)
        )
        state = initial_state(scenario, perception)
        played = play(scenario, PerceptionMode.fixed, max_rounds, initial=state)
    return scheme_result(Scheme.naive, played, scenario)


def solve_classical_no_reasoning(
    scenario: Scenario, max_rounds: int = DEFAULT_ROUNDS
) -> BaselineResult:
    """
    Complete information, but receivers can only accept or drop a link.
    """
    played = play(scenario, PerceptionMode.truth, max_rounds, reasoning=False)
    return scheme_result(Scheme.classical, played, scenario)


def solve_hypergame(
    scenario: Scenario,
    max_rounds: int = DEFAULT_ROUNDS,
    probe_count: int = DEFAULT_PROBES,
) -> BaselineResult:
    """
    Swap learning from the default beliefs, certified with a local HSE check.
    """
    played = play(scenario, PerceptionMode.learned, max_rounds)
    result = scheme_result(Scheme.hypergame, played, scenario)
    result.hse = check_local_hse(played.state, scenario, probe_count)
    return result


def solve_scheme(
    scheme: Scheme, scenario: Scenario, max_rounds: int = DEFAULT_ROUNDS
) -> BaselineResult:
    LOG.debug("solving %s for seed %d", scheme.value, scenario.rng_seed)
    if scheme is Scheme.hypergame:
        return solve_hypergame(scenario, max_rounds)
    if scheme is Scheme.naive:
        return solve_naive_msse(scenario, max_rounds=max_rounds)
    if scheme is Scheme.complete:
        return solve_complete_information(scenario, max_rounds)
    if scheme is Scheme.classical:
        return solve_classical_no_reasoning(scenario, max_rounds)
    raise ValueError(f"{scheme!r} is not a supported scheme")

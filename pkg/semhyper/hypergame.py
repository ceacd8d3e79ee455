# Copyright 2026 The semhyper authors
# Licensed under the MIT license

"""
The second-level hypergame: perceptions, outcomes, misperception and swap learning.

Every player holds beliefs about every other player. A transmitter believes the
strategies of all players and the relevance tensor; a receiver believes strategies
only. Rounds alternate a leader solve, a follower solve, a shared outcome sample and,
when learning, gradient steps on the misperception of every ordered pair.
"""

import logging
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.special import softmax

from .channel import error_variance, link_rate, sample_link
from .follower import best_response, perceived_cc_load, project_constraints
from .leader import leader_objective, solve_leaders
from .types import (
    Action,
    FloatArray,
    HseReport,
    HypergameState,
    IntArray,
    Outcome,
    Pair,
    PairRecord,
    PerceptionMode,
    PerceptionState,
    Player,
    PlayResult,
    Role,
    RoundRecord,
    RxStrategy,
    Scenario,
    SemhyperError,
    Snapshot,
    SolverError,
    TxStrategy,
    UpdateMode,
)
from .util import make_rng, OUTCOME_STREAM, PROBE_STREAM
from .utilities import (
    evaluate,
    link_utilities,
    rx_utility,
    tx_utility,
    weighted_surprise,
)

LOG = logging.getLogger(__name__)

CHANGE_TOL = 1e-9
CONVERGENCE_TOL = 1e-6
SETTLE_TOL = 1e-8
HSE_GAP_TOL = 1e-4
LOGIT_FLOOR = 1e-12
BACKTRACK_STEPS = 20
LOCAL_MIX = 0.01


def uniform_tx(scenario: Scenario) -> TxStrategy:
    shape = (scenario.num_tx, scenario.concepts_per_tx, scenario.bit_alphabet_max + 1)
    return TxStrategy(np.full(shape, 1.0 / shape[-1]))


def uniform_rx(scenario: Scenario) -> RxStrategy:
    J, K = scenario.num_rx, scenario.num_tx
    return RxStrategy(np.full((J, K, 4), 0.25), np.zeros((J, K, 2)))


def initial_perception(
    scenario: Scenario, relevance: Optional[float] = None
) -> PerceptionState:
    """
    Uniform beliefs about every strategy and a flat belief about relevance.
    """
    K, J = scenario.num_tx, scenario.num_rx
    if relevance is None:
        relevance = scenario.initial_relevance
    tx = uniform_tx(scenario).probs
    rx = uniform_rx(scenario).probs
    return PerceptionState(
        tx_by_tx=np.broadcast_to(tx, (K, *tx.shape)).copy(),
        rx_by_tx=np.broadcast_to(rx, (K, *rx.shape)).copy(),
        relevance_by_tx=np.full(
            (K, J, K, scenario.concepts_per_tx), float(relevance)
        ),
        tx_by_rx=np.broadcast_to(tx, (J, *tx.shape)).copy(),
        rx_by_rx=np.broadcast_to(rx, (J, *rx.shape)).copy(),
    )


def relevance_blind_perception(scenario: Scenario) -> PerceptionState:
    """
    Initial beliefs of a transmitter that treats every concept as fully relevant.
    """
    return initial_perception(scenario, relevance=1.0)


def perception_from_truth(
    tx: TxStrategy, rx: RxStrategy, scenario: Scenario
) -> PerceptionState:
    K, J = scenario.num_tx, scenario.num_rx
    relevance = scenario.tasks.relevance
    return PerceptionState(
        tx_by_tx=np.broadcast_to(tx.probs, (K, *tx.probs.shape)).copy(),
        rx_by_tx=np.broadcast_to(rx.probs, (K, *rx.probs.shape)).copy(),
        relevance_by_tx=np.broadcast_to(relevance, (K, *relevance.shape)).copy(),
        tx_by_rx=np.broadcast_to(tx.probs, (J, *tx.probs.shape)).copy(),
        rx_by_rx=np.broadcast_to(rx.probs, (J, *rx.probs.shape)).copy(),
    )


def initial_state(
    scenario: Scenario, perception: Optional[PerceptionState] = None
) -> HypergameState:
    """
    Uniform strategies for every player, with ``perception`` or the default beliefs.
    """
    return HypergameState(
        tx=uniform_tx(scenario),
        rx=uniform_rx(scenario),
        perceptions=(
            perception.copy() if perception else initial_perception(scenario)
        ),
        lambdas=np.zeros(scenario.num_tx),
    )


def pin_to_truth(state: HypergameState, scenario: Scenario) -> None:
    state.perceptions = perception_from_truth(state.tx, state.rx, scenario)


def ordered_pairs(scenario: Scenario) -> List[Pair]:
    """
    Every ``(perceived, perceiver)`` pair, perceivers in player order.
    """
    players = scenario.players
    return [(b, a) for a in players for b in players if b != a]


def pair_name(pair: Pair) -> str:
    perceived, perceiver = pair
    return f"{perceived} by {perceiver}"


def _inverse_cdf(uniforms: FloatArray, probs: FloatArray) -> IntArray:
    cdf = np.cumsum(probs, axis=-1)
    index = np.sum(uniforms[..., np.newaxis] >= cdf, axis=-1)
    result: IntArray = np.minimum(index, probs.shape[-1] - 1)
    return result


def sample_outcomes(
    state: HypergameState, scenario: Scenario, rng: np.random.Generator, n: int
) -> List[Outcome]:
    """
    Draw ``n`` realized rounds of the current true strategies.
    """
    tasks, channels = scenario.tasks, scenario.channels
    shape = (n, scenario.num_tx, scenario.concepts_per_tx)
    bits = _inverse_cdf(rng.random(shape), state.tx.probs).astype(np.int64)

    concept = scenario.concepts.means[np.newaxis, np.newaxis, :, :]
    reliability = channels.decode_reliability.T[np.newaxis, :, :, np.newaxis]
    weighted = tasks.relevance[np.newaxis] * bits[:, np.newaxis, :, :]
    decoded, estimates = sample_link(
        concept,
        reliability,
        error_variance(scenario)[np.newaxis],
        weighted,
        scenario.rate_distortion_scale,
        rng,
    )
    errors = (estimates - concept) ** 2

    actions = _inverse_cdf(
        rng.random((n, scenario.num_rx, scenario.num_tx)), state.rx.probs
    ).astype(np.int64)

    gain = np.abs(
        rng.normal(0.0, channels.channel_gain_std, size=(n, scenario.num_rx))
    )
    rate = np.asarray(
        link_rate(gain, channels.power, scenario.bandwidth, scenario.noise_density)
    )[:, :, np.newaxis]
    local_cap = tasks.local_capacity[np.newaxis, :, np.newaxis]
    share = tasks.cc_share[np.newaxis, :, np.newaxis]
    cost = tasks.compute_cost[np.newaxis]
    local_delay = np.sum(decoded * cost, axis=-1) / local_cap
    upload = np.sum(decoded * weighted, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        upload_delay = np.where(upload > 0, upload / rate, 0.0)
    cloud_delay = upload_delay + np.sum(decoded * cost, axis=-1) / share
    delays = np.where(
        actions == Action.local,
        local_delay,
        np.where(actions == Action.cloud, cloud_delay, 0.0),
    )

    return [
        Outcome(
            bits=bits[i],
            decoded=decoded[i],
            estimates=estimates[i],
            errors=errors[i],
            actions=actions[i],
            delays=delays[i],
        )
        for i in range(n)
    ]


def perceived_game(
    pair: Pair, state: HypergameState, scenario: Scenario
) -> Tuple[FloatArray, FloatArray]:
    """
    Strategy and relevance of the perceived player as the perceiver believes them.
    """
    perceived, perceiver = pair
    p = state.perceptions
    if perceiver.role is Role.tx:
        k = perceiver.index
        if perceived.role is Role.tx:
            return (
                p.tx_by_tx[k, perceived.index],
                p.relevance_by_tx[k][:, perceived.index, :],
            )
        return p.rx_by_tx[k, perceived.index], p.relevance_by_tx[k][perceived.index]
    j = perceiver.index
    if perceived.role is Role.tx:
        return (
            p.tx_by_rx[j, perceived.index],
            scenario.tasks.relevance[:, perceived.index, :],
        )
    return p.rx_by_rx[j, perceived.index], scenario.tasks.relevance[perceived.index]


def true_game(
    player: Player, state: HypergameState, scenario: Scenario
) -> Tuple[FloatArray, FloatArray]:
    if player.role is Role.tx:
        return (
            state.tx.probs[player.index],
            scenario.tasks.relevance[:, player.index, :],
        )
    return state.rx.probs[player.index], scenario.tasks.relevance[player.index]


def outcome_utilities(
    player: Player,
    strategy: FloatArray,
    relevance: FloatArray,
    outcomes: List[Outcome],
    scenario: Scenario,
) -> FloatArray:
    """
    Utility of ``player`` on every outcome, with its own strategy and relevance
    taken from one version of the game.
    """
    full = scenario.tasks.relevance.copy()
    if player.role is Role.tx:
        k = player.index
        full[:, k, :] = relevance
        bits = float(np.sum(relevance * (strategy @ scenario.bit_values)))
        accepted = np.stack(
            [o.actions[:, k] == Action.accept for o in outcomes]
        ).astype(float)
        surprise = np.asarray(weighted_surprise(k, accepted, scenario, full))
        if scenario.alpha2 == 0:
            surprise = np.zeros_like(surprise)
        result: FloatArray = (
            scenario.alpha1 * bits / scenario.num_rx + scenario.alpha2 * surprise
        )
        return result

    j = player.index
    full[j] = relevance
    realized = np.stack([o.bits for o in outcomes]).astype(np.float64)
    values = link_utilities(
        j, realized, strategy[:, 0], strategy[:, 1], strategy[:, 2], scenario, full
    )
    result = np.asarray(values).sum(axis=-1)
    return result


def misperception(
    pair: Pair, outcomes: List[Outcome], state: HypergameState, scenario: Scenario
) -> float:
    """
    Summed absolute gap between the perceived player's utility in its true game and
    in the perceiver's version of it, over ``outcomes``.
    """
    perceived, _ = pair
    truth = outcome_utilities(
        perceived, *true_game(perceived, state, scenario), outcomes, scenario
    )
    belief = outcome_utilities(
        perceived, *perceived_game(pair, state, scenario), outcomes, scenario
    )
    with np.errstate(invalid="ignore"):
        gap = np.abs(truth - belief)
    # both infinite with the same sign is no disagreement
    gap = np.where(np.isnan(gap), 0.0, gap)
    return float(gap.sum())


def own_objective(
    player: Player, state: HypergameState, scenario: Scenario
) -> float:
    """
    Cost of ``player`` in its own subjective game.
    """
    if player.role is Role.tx:
        k = player.index
        beliefs = RxStrategy(state.perceptions.rx_by_tx[k], state.rx.gamma)
        return tx_utility(
            k, state.tx, beliefs, scenario, state.perceptions.relevance_by_tx[k]
        )
    return rx_utility(player.index, state.tx, state.rx, scenario)


def take_snapshot(state: HypergameState, scenario: Scenario) -> Snapshot:
    snapshot = Snapshot(
        tx_probs=state.tx.probs.copy(),
        rx_probs=state.rx.probs.copy(),
        objectives={p: own_objective(p, state, scenario) for p in scenario.players},
    )
    state.snapshots.append(snapshot)
    return snapshot


def _player_change(player: Player, before: Snapshot, after: Snapshot) -> float:
    if player.role is Role.tx:
        old, new = before.tx_probs[player.index], after.tx_probs[player.index]
    else:
        old, new = before.rx_probs[player.index], after.rx_probs[player.index]
    return float(np.max(np.abs(new - old)))


def detect_swap_trigger(
    state: HypergameState, scenario: Scenario
) -> Dict[Pair, bool]:
    """
    Flag every pair whose perceived player moved to a no-worse outcome while the
    perceiver stood still, over the snapshot transitions of the latest round.
    """
    pairs = ordered_pairs(scenario)
    fired = {pair: False for pair in pairs}
    snapshots = state.snapshots[-3:]
    for before, after in zip(snapshots, snapshots[1:]):
        for pair in pairs:
            perceived, perceiver = pair
            if (
                _player_change(perceived, before, after) > CHANGE_TOL
                and _player_change(perceiver, before, after) <= CHANGE_TOL
                and after.objectives[perceived]
                <= before.objectives[perceived] + CHANGE_TOL
            ):
                fired[pair] = True
    return fired


def _with_parameters(
    pair: Pair,
    state: HypergameState,
    logits: FloatArray,
    relevance: Optional[FloatArray],
) -> PerceptionState:
    perceived, perceiver = pair
    beliefs = state.perceptions.copy()
    strategy = softmax(logits, axis=-1)
    a, b = perceiver.index, perceived.index
    if perceiver.role is Role.tx:
        if perceived.role is Role.tx:
            beliefs.tx_by_tx[a, b] = strategy
            beliefs.relevance_by_tx[a][:, b, :] = relevance
        else:
            beliefs.rx_by_tx[a, b] = strategy
            beliefs.relevance_by_tx[a][b] = relevance
    elif perceived.role is Role.tx:
        beliefs.tx_by_rx[a, b] = strategy
    else:
        beliefs.rx_by_rx[a, b] = strategy
    return beliefs


def swap_learning_step(
    pair: Pair, state: HypergameState, outcomes: List[Outcome], scenario: Scenario
) -> PerceptionState:
    """
    One projected gradient step on the misperception of ``pair``.

    The perceived strategy is parameterized by logits and the perceived relevance
    by its raw entries, clipped to ``[0, 1]``. The step is halved until the
    misperception strictly decreases on the same outcomes; otherwise the beliefs
    are returned unchanged.
    """
    _, perceiver = pair
    strategy, relevance = perceived_game(pair, state, scenario)
    logits = np.log(np.clip(strategy, LOGIT_FLOOR, None))
    learn_relevance = perceiver.role is Role.tx
    theta = np.concatenate(
        [logits.ravel(), relevance.ravel() if learn_relevance else np.empty(0)]
    )
    split = logits.size

    def unpack(values: FloatArray) -> PerceptionState:
        new_logits = values[:split].reshape(logits.shape)
        new_relevance = (
            np.clip(values[split:].reshape(relevance.shape), 0.0, 1.0)
            if learn_relevance
            else None
        )
        return _with_parameters(pair, state, new_logits, new_relevance)

    def objective(values: FloatArray) -> float:
        trial = HypergameState(
            tx=state.tx,
            rx=state.rx,
            perceptions=unpack(values),
            lambdas=state.lambdas,
        )
        return misperception(pair, outcomes, trial, scenario)

    current = misperception(pair, outcomes, state, scenario)
    if current <= 1e-12 or scenario.learning_rate == 0:
        return state.perceptions

    h = scenario.solver.fd_step
    gradient = np.empty_like(theta)
    for i in range(theta.size):
        step = np.zeros_like(theta)
        step[i] = h
        gradient[i] = (objective(theta + step) - objective(theta - step)) / (2 * h)
    if not np.all(np.isfinite(gradient)):
        LOG.warning(
            "%s: non-finite misperception gradient, step skipped", pair_name(pair)
        )
        return state.perceptions

    eta = scenario.learning_rate
    for _ in range(BACKTRACK_STEPS + 1):
        candidate = theta - eta * gradient
        if objective(candidate) < current:
            return unpack(candidate)
        eta /= 2.0
    LOG.debug("%s: no descent step found", pair_name(pair))
    return state.perceptions


def pairwise_updates(
    state: HypergameState,
    outcomes: List[Outcome],
    scenario: Scenario,
    force: bool = False,
) -> HypergameState:
    """
    Apply a swap learning step to every triggered pair, in pair order.
    """
    if force:
        fired = {pair: True for pair in ordered_pairs(scenario)}
    else:
        fired = detect_swap_trigger(state, scenario)
    for pair in ordered_pairs(scenario):
        if not fired[pair]:
            continue
        updated = swap_learning_step(pair, state, outcomes, scenario)
        if updated is not state.perceptions:
            state.perceptions = updated
            state.updates += 1
    return state


def _records(
    number: int,
    state: HypergameState,
    scenario: Scenario,
    mis: Dict[Pair, float],
) -> List[RoundRecord]:
    report = evaluate(state.tx, state.rx, scenario)
    records = []
    for player in scenario.players:
        felt = sum(value for (_, a), value in mis.items() if a == player)
        if player.role is Role.tx:
            k = player.index
            records.append(
                RoundRecord(
                    round=number,
                    player=player,
                    utility=float(report.tx_utilities[k]),
                    bits=float(report.expected_bits[k]),
                    surprise=float(report.surprise[k]),
                    misperception=felt,
                )
            )
        else:
            j = player.index
            records.append(
                RoundRecord(
                    round=number,
                    player=player,
                    utility=float(report.rx_utilities[j]),
                    qote=float(report.qote[j]),
                    delay=float(np.mean(report.delays[j])),
                    misperception=felt,
                )
            )
    return records


def _lead(
    state: HypergameState, scenario: Scenario
) -> Tuple[TxStrategy, FloatArray]:
    leaders = solve_leaders(state.perceptions, scenario)
    return (
        TxStrategy(np.stack([s.probs for s in leaders])),
        np.array([s.lam for s in leaders]),
    )


def _follow(
    tx: TxStrategy, state: HypergameState, scenario: Scenario, reasoning: bool
) -> RxStrategy:
    followers = [
        best_response(
            j,
            tx,
            scenario,
            perceived_cc_load(j, state.perceptions, scenario),
            reasoning=reasoning,
        )
        for j in range(scenario.num_rx)
    ]
    return RxStrategy(
        np.stack([s.probs for s in followers]),
        np.stack([s.gamma for s in followers]),
    )


def settle(
    state: HypergameState, scenario: Scenario, reasoning: bool, step: float
) -> float:
    """
    Damped alternation of leader and follower solves with beliefs pinned to the
    truth, until the strategies answer themselves or stop moving.

    Leaders take their solve in full, so every allocation meets the budget; the
    followers move by ``step`` toward their answer to it. The step halves whenever
    the residual grows, and the step reached is returned for the next call.
    """
    last = np.inf
    for _ in range(scenario.solver.max_iters):
        pin_to_truth(state, scenario)
        tx, lambdas = _lead(state, scenario)
        rx = _follow(tx, state, scenario, reasoning)
        residual = max(
            float(np.max(np.abs(tx.probs - state.tx.probs))),
            float(np.max(np.abs(rx.probs - state.rx.probs))),
        )
        state.lambdas = lambdas
        if residual <= SETTLE_TOL:
            state.tx, state.rx = tx, rx
            break
        if residual > last:
            step /= 2.0
        last = residual
        state.tx = tx
        state.rx = RxStrategy(
            (1.0 - step) * state.rx.probs + step * rx.probs,
            (1.0 - step) * state.rx.gamma + step * rx.gamma,
        )
        if step * residual <= SETTLE_TOL:
            break
    else:
        LOG.debug("settle stopped at max_iters, residual %g, step %g", last, step)
    return step


def play(
    scenario: Scenario,
    mode: PerceptionMode = PerceptionMode.learned,
    max_rounds: int = 200,
    initial: Optional[HypergameState] = None,
    reasoning: bool = True,
) -> PlayResult:
    """
    Alternate leader solves, follower solves and outcome sampling until strategies
    and misperceptions settle, or for ``max_rounds`` rounds.

    ``mode`` decides what happens to beliefs: learned by swap learning, held fixed,
    or pinned to the current truth. With beliefs pinned, every round runs the damped
    alternation of :func:`settle`, so a round that reaches the fixed point is
    repeated unchanged by the next.
    """
    state = initial or initial_state(scenario)
    records: List[RoundRecord] = []
    pair_records: List[PairRecord] = []
    converged = False
    if max_rounds <= 0:
        return PlayResult(state=state, records=records, converged=False, rounds=0)

    pairs = ordered_pairs(scenario)
    previous: Optional[Dict[Pair, float]] = None
    truth = mode is PerceptionMode.truth
    step = scenario.solver.damping
    if truth:
        pin_to_truth(state, scenario)
    take_snapshot(state, scenario)

    for number in range(1, max_rounds + 1):
        before_tx, before_rx = state.tx.probs.copy(), state.rx.probs.copy()
        try:
            if truth:
                step = settle(state, scenario, reasoning, step)
                take_snapshot(state, scenario)
            else:
                state.tx, state.lambdas = _lead(state, scenario)
                take_snapshot(state, scenario)
                state.rx = _follow(state.tx, state, scenario, reasoning)
            take_snapshot(state, scenario)

            if truth:
                pin_to_truth(state, scenario)
            rng = make_rng(scenario.rng_seed, OUTCOME_STREAM)
            outcomes = sample_outcomes(state, scenario, rng, scenario.outcome_samples)
            state.outcome_history.append(outcomes)
            if mode is PerceptionMode.learned:
                pairwise_updates(
                    state,
                    outcomes,
                    scenario,
                    force=scenario.update_mode is UpdateMode.always,
                )
            current = {
                pair: misperception(pair, outcomes, state, scenario) for pair in pairs
            }
        except SemhyperError as e:
            raise SolverError(f"round {number}: {e}") from e

        for pair, value in current.items():
            state.misperception_trace.setdefault(pair, []).append(value)
        state.iteration = number
        state.strategy_change = max(
            float(np.max(np.abs(state.tx.probs - before_tx))),
            float(np.max(np.abs(state.rx.probs - before_rx))),
        )
        if previous is None:
            drift = np.inf
        else:
            drift = max(
                (abs(current[p] - previous[p]) for p in pairs), default=0.0
            )
        previous = current
        records.extend(_records(number, state, scenario, current))
        pair_records.extend(
            PairRecord(number, perceived, perceiver, current[(perceived, perceiver)])
            for perceived, perceiver in pairs
        )
        LOG.debug(
            "round %d: strategy change %g, misperception drift %g",
            number,
            state.strategy_change,
            drift,
        )
        if state.strategy_change <= CONVERGENCE_TOL and drift <= CONVERGENCE_TOL:
            converged = True
            break

    return PlayResult(
        state=state,
        records=records,
        converged=converged,
        rounds=state.iteration,
        pairs=pair_records,
    )


def run_hypergame(scenario: Scenario, max_rounds: int = 200) -> PlayResult:
    """
    Play the hypergame with swap learning from the default initial beliefs.
    """
    return play(scenario, PerceptionMode.learned, max_rounds)


def _tx_gap(
    k: int,
    state: HypergameState,
    scenario: Scenario,
    rng: np.random.Generator,
    probe_count: int,
) -> float:
    lam = float(state.lambdas[k])
    current = leader_objective(k, state.tx, state.perceptions, scenario, lam)
    shape = state.tx.probs[k].shape
    best = current
    for i in range(probe_count):
        draw = rng.dirichlet(np.ones(shape[-1]), size=shape[0])
        mix = 1.0 if i % 2 == 0 else LOCAL_MIX
        probe = state.tx.copy()
        probe.probs[k] = (1.0 - mix) * state.tx.probs[k] + mix * draw
        best = min(
            best, leader_objective(k, probe, state.perceptions, scenario, lam)
        )
    return max(0.0, current - best)


def _rx_gap(
    j: int,
    state: HypergameState,
    scenario: Scenario,
    rng: np.random.Generator,
    probe_count: int,
) -> float:
    current = rx_utility(j, state.tx, state.rx, scenario)
    other = perceived_cc_load(j, state.perceptions, scenario)
    accept = state.rx.probs[j, :, Action.accept]
    available = (1.0 - accept)[:, np.newaxis]
    best = current
    for i in range(probe_count):
        draw = np.zeros((scenario.num_tx, 4))
        draw[:, 0] = accept
        draw[:, 1:] = rng.dirichlet(np.ones(3), size=scenario.num_tx) * available
        mix = 1.0 if i % 2 == 0 else LOCAL_MIX
        row = (1.0 - mix) * state.rx.probs[j] + mix * draw
        probe = state.rx.copy()
        probe.probs[j] = project_constraints(j, row, other, scenario)
        best = min(best, rx_utility(j, state.tx, probe, scenario))
    return max(0.0, current - best)


def check_local_hse(
    state: HypergameState, scenario: Scenario, probe_count: int = 256
) -> HseReport:
    """
    Probe random feasible deviations of every player inside its own game and report
    the largest improvement found.
    """
    misperception_final = {
        pair_name(pair): values[-1]
        for pair, values in state.misperception_trace.items()
        if values
    }
    if probe_count <= 0:
        return HseReport(
            converged=True,
            strategy_change_norm=state.strategy_change,
            gaps={str(p): 0.0 for p in scenario.players},
            misperception_final=misperception_final,
            vacuous=True,
        )

    rng = make_rng(scenario.rng_seed, PROBE_STREAM)
    gaps: Dict[str, float] = {}
    for player in scenario.players:
        if player.role is Role.tx:
            gap = _tx_gap(player.index, state, scenario, rng, probe_count)
        else:
            gap = _rx_gap(player.index, state, scenario, rng, probe_count)
        gaps[str(player)] = gap
    return HseReport(
        converged=all(gap <= HSE_GAP_TOL for gap in gaps.values()),
        strategy_change_norm=state.strategy_change,
        gaps=gaps,
        misperception_final=misperception_final,
    )

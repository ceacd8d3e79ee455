# Copyright 2026 The semhyper authors
# Licensed under the MIT license

import csv
import json
import logging
import math
from dataclasses import replace
from functools import partial
from itertools import chain
from pathlib import Path
from typing import (
    Any,
    Dict,
    Generator,
    Iterable,
    List,
    Mapping,
    Optional,
    Sequence,
    Tuple,
)

import numpy as np
from trailrunner import Trailrunner

from .baselines import (
    scheme_result,
    solve_complete_information,
    solve_hypergame,
    solve_scheme,
)
from .config import dump_scenario, load_scenario, save_scenario
from .hypergame import (
    initial_perception,
    initial_state,
    perception_from_truth,
    play,
)
from .leader import leader_objective
from .oracle import brute_force_oracle, within_tolerance
from .scenario import generate_scenario, rescale_relevance, validate
from .types import (
    BaselineResult,
    ConfigError,
    ExperimentConfig,
    PerceptionMode,
    Scenario,
    SchemaError,
    Scheme,
    SeedResult,
)
from .util import config_hash, format_float, l1_distance

LOG = logging.getLogger(__name__)

TRACE_COLUMNS = [
    "scheme",
    "seed",
    "config_hash",
    "round",
    "player",
    "role",
    "perceiver",
    "utility",
    "qote",
    "bits",
    "surprise",
    "delay",
    "misperception",
]
SWEEP_COLUMNS = [
    "scheme",
    "seed",
    "config_hash",
    "sweep",
    "x",
    "bits",
    "qote",
    "utility",
]
PERCEPTION_MIX = [0.0, 0.25, 0.5, 0.75, 1.0]
RELEVANCE_DECAY = [0.3, 0.5, 0.7, 0.9]
QOTE_TOLERANCE = 0.02
BUDGET_STEPS = 12
ORACLE_SHAPE = (1, 1, 2)
ORACLE_BITS = 4
ORDER_SLACK = 1e-6
PAIR_ROLE = "pair"


def scenario_paths(config: ExperimentConfig) -> List[Tuple[int, Path]]:
    """
    Write one scenario file per seed under ``OUT/scenarios`` and return their paths.

    A scenario file is re-seeded for every seed; a generator draws a fresh scenario
    from each seed with its shape and decay.
    """
    base: Optional[Scenario] = None
    if config.scenario_path is not None:
        base = load_scenario(config.scenario_path)

    paths = []
    for seed in config.seeds:
        if base is not None:
            scenario = replace(base, rng_seed=seed)
        else:
            assert config.generate is not None
            scenario = generate_scenario(
                seed, config.generate.shape, config.generate.decay
            )
        diagnostics = validate(scenario)
        if diagnostics:
            raise ConfigError(f"seed {seed}: " + "; ".join(diagnostics))
        path = config.out / "scenarios" / f"seed-{seed}.toml"
        save_scenario(scenario, path)
        paths.append((seed, path))
    return paths


def trace_rows(
    result: BaselineResult, seed: int, digest: str
) -> List[Dict[str, Any]]:
    """
    One row per round and player, then one row per round and ordered pair.

    Player rows carry the misperception summed over the pairs the player
    perceives. Pair rows have role ``pair``, name the perceived player under
    ``player`` and the perceiver under ``perceiver``, and leave the utility
    columns empty.
    """
    rows = []
    for record in result.records:
        rows.append(
            {
                "scheme": result.scheme.value,
                "seed": seed,
                "config_hash": digest,
                "round": record.round,
                "player": str(record.player),
                "role": record.player.role.value,
                "perceiver": None,
                "utility": record.utility,
                "qote": record.qote,
                "bits": record.bits,
                "surprise": record.surprise,
                "delay": record.delay,
                "misperception": record.misperception,
            }
        )
    for pair in result.pairs:
        rows.append(
            {
                **dict.fromkeys(TRACE_COLUMNS),
                "scheme": result.scheme.value,
                "seed": seed,
                "config_hash": digest,
                "round": pair.round,
                "player": str(pair.perceived),
                "role": PAIR_ROLE,
                "perceiver": str(pair.perceiver),
                "misperception": pair.misperception,
            }
        )
    return rows


def _sweep_row(
    sweep: str, x: float, result: BaselineResult, seed: int, digest: str
) -> Dict[str, Any]:
    return {
        "scheme": result.scheme.value,
        "seed": seed,
        "config_hash": digest,
        "sweep": sweep,
        "x": x,
        "bits": result.bits_total,
        "qote": float(np.mean(result.report.qote)),
        "utility": float(np.mean(result.report.rx_utilities)),
    }


def perception_sweep(
    scenario: Scenario, rounds: int, seed: int, digest: str
) -> List[Dict[str, Any]]:
    """
    Hypergame bits against the distance of the initial relevance belief from truth.

    Beliefs are mixed from the true relevance towards all-ones.
    """
    truth = scenario.tasks.relevance
    rows = []
    for mix in PERCEPTION_MIX:
        believed = (1.0 - mix) * truth + mix * np.ones_like(truth)
        perception = initial_perception(scenario)
        perception.relevance_by_tx[:] = believed
        state = initial_state(scenario, perception)
        played = play(scenario, PerceptionMode.learned, rounds, initial=state)
        result = scheme_result(Scheme.hypergame, played, scenario)
        rows.append(
            _sweep_row("perception", l1_distance(believed, truth), result, seed, digest)
        )
    return rows


def relevance_sweep(
    scenario: Scenario, rounds: int, seed: int, digest: str
) -> List[Dict[str, Any]]:
    """
    Hypergame bits against the relevance decay, at the QoTE of the
    complete-information solution of the unscaled scenario.

    The bit budget is bisected until QoTE is within 2% of that target.
    """
    target = float(np.mean(solve_complete_information(scenario, rounds).qote))
    rows = []
    for decay in RELEVANCE_DECAY:
        scaled = rescale_relevance(scenario, decay)

        def attempt(budget: float) -> BaselineResult:
            return solve_hypergame(
                replace(scaled, bit_budget=budget), rounds, probe_count=0
            )

        def miss(result: BaselineResult) -> float:
            return float(np.mean(result.qote)) - target

        lo_budget, hi_budget = scenario.bit_budget / 8.0, scenario.bit_budget * 4.0
        lo, hi = attempt(lo_budget), attempt(hi_budget)
        chosen = lo if abs(miss(lo)) <= abs(miss(hi)) else hi
        if not math.isfinite(target) or miss(lo) >= 0 or miss(hi) <= 0:
            LOG.warning(
                "seed %d decay %g: QoTE target %g out of reach, using nearest budget",
                seed,
                decay,
                target,
            )
        else:
            for _ in range(BUDGET_STEPS):
                if abs(miss(chosen)) <= QOTE_TOLERANCE * abs(target):
                    break
                mid_budget = 0.5 * (lo_budget + hi_budget)
                chosen = attempt(mid_budget)
                if miss(chosen) < 0:
                    lo_budget = mid_budget
                else:
                    hi_budget = mid_budget
        rows.append(_sweep_row("relevance", decay, chosen, seed, digest))
    return rows


def oracle_check(seed: int, rounds: int) -> Dict[str, Any]:
    """
    Compare the solver against exhaustive search on a tiny fixture drawn from
    ``seed``.
    """
    tiny = generate_scenario(seed, ORACLE_SHAPE, bit_alphabet_max=ORACLE_BITS)
    solved = solve_complete_information(tiny, rounds)
    perception = perception_from_truth(solved.tx, solved.rx, tiny)
    lam = float(solved.lambdas[0]) if solved.lambdas is not None else 0.0
    oracle = brute_force_oracle(tiny, perception=perception, lam=lam)
    tx_solver = leader_objective(0, solved.tx, perception, tiny, lam)
    rx_solver = float(solved.report.rx_utilities[0])
    return {
        "seed": seed,
        "oracle_tx_utility": oracle.tx_utility,
        "solver_tx_utility": tx_solver,
        "oracle_rx_utility": oracle.rx_utility,
        "solver_rx_utility": rx_solver,
        "feasible_points": oracle.feasible_points,
        "within": within_tolerance(tx_solver, oracle.tx_utility)
        and within_tolerance(rx_solver, oracle.rx_utility),
    }


def run_seed(
    path: Path,
    *,
    seed: int,
    schemes: Sequence[Scheme],
    rounds: int,
    sweeps: Sequence[str] = (),
    oracle: bool = False,
) -> SeedResult:
    """
    Run every scheme, sweep and oracle check for one scenario file.

    Errors are caught and attached to :attr:`SeedResult.error`; callers must check
    results for errors and surface them.
    """
    result = SeedResult(seed=seed)
    try:
        scenario = load_scenario(path)
        result.config_hash = config_hash(
            dump_scenario(scenario),
            schemes=[s.value for s in schemes],
            rounds=rounds,
            sweeps=list(sweeps),
        )
        for scheme in schemes:
            solved = solve_scheme(scheme, scenario, rounds)
            result.trace.extend(trace_rows(solved, seed, result.config_hash))
            result.converged[scheme.value] = solved.converged
            if solved.hse is not None:
                result.hse[scheme.value] = {
                    "converged": solved.hse.converged,
                    "gaps": solved.hse.gaps,
                    "strategy_change_norm": solved.hse.strategy_change_norm,
                    "misperception_final": solved.hse.misperception_final,
                }
        if "perception" in sweeps:
            result.sweep.extend(
                perception_sweep(scenario, rounds, seed, result.config_hash)
            )
        if "relevance" in sweeps:
            result.sweep.extend(
                relevance_sweep(scenario, rounds, seed, result.config_hash)
            )
        if oracle:
            result.oracle = oracle_check(seed, rounds)
    except Exception as e:
        LOG.debug("seed %d failed", seed, exc_info=True)
        result.error = e
    return result


def run_seeds(
    items: Sequence[Tuple[int, Path]],
    config: ExperimentConfig,
) -> Generator[SeedResult, None, None]:
    """
    Run :func:`run_seed` for every scenario file, using a process pool when there is
    more than one.
    """
    runner = (
        Trailrunner()
        if config.concurrency is None
        else Trailrunner(concurrency=config.concurrency)
    )
    seeds = {path: seed for seed, path in items}
    fn = partial(
        _run_seed_file,
        seeds=seeds,
        schemes=list(config.schemes),
        rounds=config.rounds,
        sweeps=list(config.sweeps),
        oracle=config.oracle,
    )

    # skip the process pool for a single seed
    gen = (path for _, path in items)
    try:
        first = next(gen)
    except StopIteration:
        return
    try:
        second = next(gen)
    except StopIteration:
        yield fn(first)
        return

    for _, result in runner.run_iter(chain([first, second], gen), fn):
        yield result


def _run_seed_file(
    path: Path,
    *,
    seeds: Mapping[Path, int],
    schemes: Sequence[Scheme],
    rounds: int,
    sweeps: Sequence[str],
    oracle: bool,
) -> SeedResult:
    return run_seed(
        path,
        seed=seeds[path],
        schemes=schemes,
        rounds=rounds,
        sweeps=sweeps,
        oracle=oracle,
    )


def _finite(value: Optional[float]) -> Optional[float]:
    if value is None or not math.isfinite(value):
        return None
    return float(value)


def _stats(values: Sequence[float]) -> Dict[str, Optional[float]]:
    array = np.asarray(values, dtype=np.float64)
    return {
        "mean": _finite(float(np.mean(array))),
        "p5": _finite(float(np.percentile(array, 5))),
        "p50": _finite(float(np.percentile(array, 50))),
        "p95": _finite(float(np.percentile(array, 95))),
    }


def _cell(value: Any) -> float:
    if value is None or value == "":
        return math.nan
    return float(value)


def final_values(rows: Iterable[Mapping[str, Any]]) -> Dict[str, Dict[int, Any]]:
    """
    Final-round utility, QoTE, bits and round count per scheme and seed.

    Utility and QoTE average the receivers; bits add up the transmitters.
    """
    last: Dict[Tuple[str, int], int] = {}
    collected = []
    for row in rows:
        if list(row.keys()) != TRACE_COLUMNS:
            raise SchemaError(f"trace row has columns {list(row.keys())!r}")
        key = (str(row["scheme"]), int(row["seed"]))
        last[key] = max(last.get(key, 0), int(row["round"]))
        collected.append(row)

    finals: Dict[str, Dict[int, Any]] = {}
    grouped: Dict[Tuple[str, int], Dict[str, List[float]]] = {}
    for row in collected:
        key = (str(row["scheme"]), int(row["seed"]))
        if int(row["round"]) != last[key]:
            continue
        values = grouped.setdefault(key, {"utility": [], "qote": [], "bits": []})
        if row["role"] == "rx":
            values["utility"].append(_cell(row["utility"]))
            values["qote"].append(_cell(row["qote"]))
        elif row["role"] == "tx":
            values["bits"].append(_cell(row["bits"]))
    for (scheme, seed), values in grouped.items():
        finals.setdefault(scheme, {})[seed] = {
            "utility": float(np.mean(values["utility"])) if values["utility"] else 0.0,
            "qote": float(np.mean(values["qote"])) if values["qote"] else 0.0,
            "bits": float(np.sum(values["bits"])),
            "rounds": last[(scheme, seed)],
        }
    return finals


def summarize(
    rows: Iterable[Mapping[str, Any]],
    converged: Optional[Mapping[Tuple[str, int], bool]] = None,
) -> Dict[str, Any]:
    """
    Per-scheme statistics of final values over seeds, plus gap closure and the
    ordering rates between schemes.
    """
    finals = final_values(rows)
    schemes: Dict[str, Any] = {}
    for scheme, seeds in sorted(finals.items()):
        entries = [seeds[s] for s in sorted(seeds)]
        summary: Dict[str, Any] = {
            "seeds": len(entries),
            "utility": _stats([e["utility"] for e in entries]),
            "qote": _stats([e["qote"] for e in entries]),
            "bits": _stats([e["bits"] for e in entries]),
            "rounds": float(np.mean([e["rounds"] for e in entries])),
        }
        if converged is not None:
            flags = [converged.get((scheme, s), False) for s in sorted(seeds)]
            summary["convergence_rate"] = float(np.mean(flags))
        schemes[scheme] = summary

    gap_closure: Dict[str, float] = {}
    naive = finals.get(Scheme.naive.value)
    complete = finals.get(Scheme.complete.value)
    if naive and complete:
        lo = float(np.mean([v["utility"] for v in complete.values()]))
        hi = float(np.mean([v["utility"] for v in naive.values()]))
        for scheme, seeds in sorted(finals.items()):
            value = float(np.mean([v["utility"] for v in seeds.values()]))
            gap_closure[scheme] = 1.0 if hi == lo else (hi - value) / (hi - lo)

    return {
        "schemes": schemes,
        "gap_closure": gap_closure,
        "rates": _rates(finals),
    }


def _rates(finals: Mapping[str, Mapping[int, Any]]) -> Dict[str, Optional[float]]:
    rates: Dict[str, Optional[float]] = {}
    hyper = finals.get(Scheme.hypergame.value, {})
    naive = finals.get(Scheme.naive.value, {})
    complete = finals.get(Scheme.complete.value, {})
    classical = finals.get(Scheme.classical.value, {})

    shared = sorted(set(hyper) & set(naive) & set(complete))
    if shared:
        rates["utility_ordering"] = float(
            np.mean(
                [
                    complete[s]["utility"] <= hyper[s]["utility"] + ORDER_SLACK
                    and hyper[s]["utility"] <= naive[s]["utility"] + ORDER_SLACK
                    for s in shared
                ]
            )
        )
    shared = sorted(set(hyper) & set(naive))
    if shared:
        rates["strict_improvement"] = float(
            np.mean(
                [
                    hyper[s]["utility"] < naive[s]["utility"] - ORDER_SLACK
                    for s in shared
                ]
            )
        )
    shared = sorted(set(hyper) & set(classical))
    if shared:
        rates["bits_ordering"] = float(
            np.mean([hyper[s]["bits"] <= classical[s]["bits"] for s in shared])
        )
        reductions = [
            100.0 * (classical[s]["bits"] - hyper[s]["bits"]) / classical[s]["bits"]
            for s in shared
            if classical[s]["bits"] > 0
        ]
        rates["bit_reduction_percent"] = (
            float(np.mean(reductions)) if reductions else None
        )
    return rates


def _format_cell(value: Any) -> str:
    if value is None or isinstance(value, float):
        return format_float(value)
    return str(value)


def write_csv(
    path: Path, columns: Sequence[str], rows: Iterable[Mapping[str, Any]]
) -> None:
    with path.open("w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_cell(row[c]) for c in columns])


def run_experiment(config: ExperimentConfig) -> int:
    """
    Run every seed of an experiment and write ``trace.csv``, ``sweep.csv`` and
    ``summary.json`` to the output directory.

    Returns the exit status: 0 on success, 2 when every seed failed. Invalid
    scenarios raise :exc:`ConfigError` before any seed runs.
    """
    config.out.mkdir(parents=True, exist_ok=True)
    items = scenario_paths(config)

    results = sorted(run_seeds(items, config), key=lambda r: r.seed)

    trace: List[Dict[str, Any]] = []
    sweep: List[Dict[str, Any]] = []
    converged: Dict[Tuple[str, int], bool] = {}
    failures = []
    for result in results:
        if result.error is not None:
            lines = str(result.error).splitlines()
            message = lines[0] if lines else repr(result.error)
            LOG.error("seed %d failed: %s", result.seed, message)
            failures.append({"seed": result.seed, "error": message})
            continue
        trace.extend(result.trace)
        sweep.extend(result.sweep)
        for scheme, flag in result.converged.items():
            converged[(scheme, result.seed)] = flag

    write_csv(config.out / "trace.csv", TRACE_COLUMNS, trace)
    write_csv(config.out / "sweep.csv", SWEEP_COLUMNS, sweep)

    summary = summarize(trace, converged)
    summary["failures"] = failures
    summary["hse"] = {
        str(r.seed): r.hse for r in results if r.error is None and r.hse
    }
    if config.oracle:
        summary["oracle"] = [r.oracle for r in results if r.oracle is not None]
    (config.out / "summary.json").write_text(
        json.dumps(_clean(summary), indent=2, sort_keys=True) + "\n"
    )

    if len(failures) == len(results):
        return 2
    return 0


def _clean(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, float):
        return _finite(value)
    return value


# Copyright 2026 The semhyper authors
# Licensed under the MIT license

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from tempfile import TemporaryDirectory
from typing import Any, Dict, Optional
from unittest import TestCase
from unittest.mock import Mock, patch

import trailrunner

from semhyper.config import load_scenario, save_scenario
from semhyper.core import (
    oracle_check,
    PAIR_ROLE,
    perception_sweep,
    PERCEPTION_MIX,
    RELEVANCE_DECAY,
    relevance_sweep,
    run_experiment,
    run_seed,
    scenario_paths,
    summarize,
    SWEEP_COLUMNS,
    TRACE_COLUMNS,
    write_csv,
)
from semhyper.types import (
    ConfigError,
    ExperimentConfig,
    GenerateSpec,
    SchemaError,
    Scheme,
    SolverError,
)

from .scenario import tiny_scenario


def trace_row(
    scheme: str,
    seed: int,
    number: int,
    player: str,
    utility: float,
    qote: Optional[float] = None,
    bits: Optional[float] = None,
) -> Dict[str, Any]:
    role = "tx" if player.startswith("tx") else "rx"
    values = [scheme, seed, "0123456789abcdef", number, player, role, None, utility]
    values += [qote, bits, None, None, 0.0]
    return dict(zip(TRACE_COLUMNS, values))


def final_rows(scheme: str, seed: int, utility: float, bits: float, number: int = 1):
    return [
        trace_row(scheme, seed, number, "tx0", 0.1, bits=bits),
        trace_row(scheme, seed, number, "rx0", utility, qote=1 / utility),
    ]


@patch.object(trailrunner.core.Trailrunner, "DEFAULT_EXECUTOR", ThreadPoolExecutor)
class CoreTest(TestCase):
    maxDiff = None

    def setUp(self) -> None:
        self._td = TemporaryDirectory()
        self.addCleanup(self._td.cleanup)
        self.td = Path(self._td.name).resolve()

        self.scenario = tiny_scenario()
        self.scenario_path = self.td / "tiny.toml"
        save_scenario(self.scenario, self.scenario_path)

    def config(self, name: str = "out", **kwargs: Any) -> ExperimentConfig:
        kwargs.setdefault("schemes", [Scheme.complete, Scheme.naive])
        kwargs.setdefault("seeds", [1, 2])
        kwargs.setdefault("rounds", 1)
        if "generate" not in kwargs:
            kwargs.setdefault("scenario_path", self.scenario_path)
        return ExperimentConfig(out=self.td / name, **kwargs)

    def test_summarize(self) -> None:
        rows = []
        for seed in (1, 2):
            rows += final_rows("complete", seed, 1.0, 3.0)
            rows += final_rows("naive", seed, 3.0, 5.0)
            rows += final_rows("classical", seed, 2.5, 4.0)
            rows += final_rows("hypergame", seed, 4.0, 6.0, number=1)
            rows += final_rows("hypergame", seed, 2.0, 2.0, number=2)
        converged = {("hypergame", 1): True, ("hypergame", 2): False}

        summary = summarize(rows, converged)
        hyper = summary["schemes"]["hypergame"]
        self.assertEqual(2, hyper["seeds"])
        self.assertEqual(2.0, hyper["rounds"])
        self.assertEqual(
            {"mean": 2.0, "p5": 2.0, "p50": 2.0, "p95": 2.0}, hyper["utility"]
        )
        self.assertEqual(0.5, hyper["qote"]["mean"])
        self.assertEqual(2.0, hyper["bits"]["mean"])
        self.assertEqual(0.5, hyper["convergence_rate"])
        self.assertEqual(0.0, summary["schemes"]["naive"]["convergence_rate"])
        self.assertEqual(1.0, summary["schemes"]["complete"]["rounds"])

        self.assertEqual(
            {"classical": 0.25, "complete": 1.0, "hypergame": 0.5, "naive": 0.0},
            summary["gap_closure"],
        )
        self.assertEqual(
            {
                "bit_reduction_percent": 50.0,
                "bits_ordering": 1.0,
                "strict_improvement": 1.0,
                "utility_ordering": 1.0,
            },
            summary["rates"],
        )

    def test_summarize_single_trace(self) -> None:
        rows = final_rows("hypergame", 4, 0.8, 3.5)
        summary = summarize(rows)
        hyper = summary["schemes"]["hypergame"]
        for key in ("mean", "p5", "p50", "p95"):
            self.assertAlmostEqual(0.8, hyper["utility"][key])
            self.assertAlmostEqual(1.25, hyper["qote"][key])
            self.assertAlmostEqual(3.5, hyper["bits"][key])
        self.assertNotIn("convergence_rate", hyper)
        self.assertEqual({}, summary["gap_closure"])
        self.assertEqual({}, summary["rates"])

        pair = {
            **trace_row("hypergame", 4, 1, "tx0", 0.0),
            "role": PAIR_ROLE,
            "perceiver": "rx0",
            "utility": None,
            "misperception": 0.3,
        }
        self.assertEqual(summary, summarize(rows + [pair]))

    def test_summarize_csv_rows(self) -> None:
        path = self.td / "trace.csv"
        rows = final_rows("complete", 1, 1.0, 3.0) + final_rows("naive", 1, 2.0, 1.0)
        write_csv(path, TRACE_COLUMNS, rows)
        with path.open(newline="") as f:
            loaded = list(csv.DictReader(f))
        self.assertEqual(summarize(rows), summarize(loaded))

    def test_summarize_schema(self) -> None:
        row = trace_row("hypergame", 1, 1, "rx0", 1.0)
        del row["misperception"]
        with self.assertRaises(SchemaError):
            summarize([row])
        with self.assertRaises(SchemaError):
            summarize([{**trace_row("hypergame", 1, 1, "rx0", 1.0), "extra": 1}])

    def test_write_csv(self) -> None:
        path = self.td / "sweep.csv"
        rows = [
            {
                "scheme": "hypergame",
                "seed": 3,
                "config_hash": "abc",
                "sweep": "perception",
                "x": 0.5,
                "bits": float("inf"),
                "qote": None,
                "utility": 1 / 3,
            }
        ]
        write_csv(path, SWEEP_COLUMNS, rows)
        self.assertEqual(
            "scheme,seed,config_hash,sweep,x,bits,qote,utility\n"
            "hypergame,3,abc,perception,0.5,inf,,0.333333333333\n",
            path.read_text(),
        )

        write_csv(path, SWEEP_COLUMNS, [])
        self.assertEqual(",".join(SWEEP_COLUMNS) + "\n", path.read_text())

    def test_scenario_paths(self) -> None:
        with self.subTest("scenario file"):
            config = self.config(seeds=[3, 5])
            paths = scenario_paths(config)
            self.assertEqual([3, 5], [seed for seed, _ in paths])
            for seed, path in paths:
                self.assertEqual(f"seed-{seed}.toml", path.name)
                loaded = load_scenario(path)
                self.assertEqual(seed, loaded.rng_seed)
                self.assertEqual(self.scenario.solver, loaded.solver)

        with self.subTest("generated"):
            config = self.config(
                "generated",
                generate=GenerateSpec(seed=0, shape=(1, 2, 3), decay=0.7),
                seeds=[8],
            )
            ((seed, path),) = scenario_paths(config)
            loaded = load_scenario(path)
            self.assertEqual(8, loaded.rng_seed)
            self.assertEqual(2, loaded.num_rx)
            self.assertEqual(3, loaded.concepts_per_tx)

        with self.subTest("invalid scenario"):
            save_scenario(replace(self.scenario, alpha1=0.5), self.scenario_path)
            with self.assertRaisesRegex(ConfigError, "alpha sum"):
                scenario_paths(self.config("invalid"))

    def test_run_seed(self) -> None:
        result = run_seed(
            self.scenario_path,
            seed=0,
            schemes=[Scheme.hypergame, Scheme.classical],
            rounds=2,
        )
        self.assertIsNone(result.error)
        self.assertEqual(16, len(result.config_hash))
        self.assertEqual({"hypergame", "classical"}, set(result.converged))
        self.assertEqual({"hypergame"}, set(result.hse))
        self.assertEqual([], result.sweep)
        self.assertIsNone(result.oracle)
        for row in result.trace:
            self.assertEqual(TRACE_COLUMNS, list(row))
            self.assertEqual(result.config_hash, row["config_hash"])
        self.assertEqual(
            {"hypergame", "classical"}, {row["scheme"] for row in result.trace}
        )

        other = run_seed(
            self.scenario_path, seed=0, schemes=[Scheme.hypergame], rounds=2
        )
        self.assertNotEqual(result.config_hash, other.config_hash)

    @patch("semhyper.core.solve_scheme")
    def test_run_seed_error(self, solve_mock: Mock) -> None:
        solve_mock.side_effect = SolverError("round 1: no usable strategy")
        result = run_seed(self.scenario_path, seed=4, schemes=[Scheme.naive], rounds=1)
        self.assertEqual(4, result.seed)
        self.assertIsInstance(result.error, SolverError)
        self.assertEqual([], result.trace)

        result = run_seed(self.td / "missing.toml", seed=4, schemes=[], rounds=1)
        self.assertIsInstance(result.error, ConfigError)

    def test_sweeps(self) -> None:
        with self.subTest("perception"):
            rows = perception_sweep(self.scenario, 1, 0, "hash")
            self.assertEqual(len(PERCEPTION_MIX), len(rows))
            self.assertEqual(0.0, rows[0]["x"])
            xs = [row["x"] for row in rows]
            self.assertEqual(sorted(xs), xs)
            for row in rows:
                self.assertEqual(SWEEP_COLUMNS, list(row))
                self.assertEqual("perception", row["sweep"])
                self.assertEqual("hypergame", row["scheme"])
                self.assertGreaterEqual(row["bits"], 0.0)

        with self.subTest("relevance"):
            rows = relevance_sweep(self.scenario, 1, 0, "hash")
            self.assertEqual(RELEVANCE_DECAY, [row["x"] for row in rows])
            for row in rows:
                self.assertEqual("relevance", row["sweep"])
                self.assertGreaterEqual(row["bits"], 0.0)

    def test_oracle_check(self) -> None:
        check = oracle_check(0, rounds=1)
        self.assertEqual(0, check["seed"])
        self.assertTrue(check["within"])
        self.assertLessEqual(
            check["solver_tx_utility"], 1.05 * check["oracle_tx_utility"] + 1e-9
        )
        self.assertLessEqual(
            check["solver_rx_utility"], 1.05 * check["oracle_rx_utility"] + 1e-9
        )
        self.assertGreater(check["feasible_points"], 0)

    def test_run_experiment(self) -> None:
        status = run_experiment(self.config("a"))
        self.assertEqual(0, status)
        out = self.td / "a"
        for name in ("trace.csv", "sweep.csv", "summary.json"):
            self.assertTrue((out / name).is_file(), name)
        self.assertTrue((out / "scenarios" / "seed-1.toml").is_file())

        with (out / "trace.csv").open(newline="") as f:
            rows = list(csv.DictReader(f))
        self.assertEqual(TRACE_COLUMNS, list(rows[0]))
        self.assertEqual(16, len(rows))
        self.assertEqual(["1"] * 8 + ["2"] * 8, [row["seed"] for row in rows])
        pairs = [row for row in rows if row["role"] == PAIR_ROLE]
        self.assertEqual(8, len(pairs))
        self.assertEqual(
            {("rx0", "tx0"), ("tx0", "rx0")},
            {(row["player"], row["perceiver"]) for row in pairs},
        )
        for row in pairs:
            self.assertEqual("", row["utility"])
            self.assertGreaterEqual(float(row["misperception"]), 0.0)
        self.assertEqual(
            ",".join(SWEEP_COLUMNS) + "\n", (out / "sweep.csv").read_text()
        )

        summary = json.loads((out / "summary.json").read_text())
        self.assertEqual({"complete", "naive"}, set(summary["schemes"]))
        self.assertEqual([], summary["failures"])
        self.assertNotIn("oracle", summary)

        with self.subTest("deterministic"):
            self.assertEqual(0, run_experiment(self.config("b", concurrency=1)))
            for name in ("trace.csv", "sweep.csv", "summary.json"):
                self.assertEqual(
                    (out / name).read_bytes(), (self.td / "b" / name).read_bytes()
                )

    def test_run_experiment_single_seed(self) -> None:
        status = run_experiment(
            self.config(schemes=[Scheme.hypergame], seeds=[5], sweeps=["perception"])
        )
        self.assertEqual(0, status)
        summary = json.loads((self.td / "out" / "summary.json").read_text())
        self.assertEqual({"5"}, set(summary["hse"]))
        with (self.td / "out" / "sweep.csv").open(newline="") as f:
            rows = list(csv.DictReader(f))
        self.assertEqual(len(PERCEPTION_MIX), len(rows))

    @patch("semhyper.core.solve_scheme")
    def test_run_experiment_failures(self, solve_mock: Mock) -> None:
        solve_mock.side_effect = SolverError("round 1: no usable strategy")
        with self.assertLogs("semhyper.core", level="ERROR"):
            status = run_experiment(self.config())
        self.assertEqual(2, status)

        summary = json.loads((self.td / "out" / "summary.json").read_text())
        self.assertEqual(
            [
                {"seed": 1, "error": "round 1: no usable strategy"},
                {"seed": 2, "error": "round 1: no usable strategy"},
            ],
            summary["failures"],
        )
        self.assertEqual({}, summary["schemes"])

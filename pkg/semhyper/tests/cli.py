# Copyright 2026 The semhyper authors
# Licensed under the MIT license

import os
from dataclasses import replace
from pathlib import Path
from tempfile import TemporaryDirectory
from textwrap import dedent
from unittest import TestCase
from unittest.mock import Mock, patch

from click.testing import CliRunner

from semhyper.__version__ import __version__
from semhyper.cli import main
from semhyper.config import dump_scenario, load_config, load_scenario, save_scenario
from semhyper.scenario import generate_scenario
from semhyper.types import ExperimentConfig, GenerateSpec, Scheme

from .scenario import tiny_scenario


class CliTest(TestCase):
    def setUp(self) -> None:
        load_config.cache_clear()
        self.runner = CliRunner(mix_stderr=False)
        self.cwd = os.getcwd()
        self.td = TemporaryDirectory()
        self.tdp = Path(self.td.name).resolve()
        os.chdir(self.tdp)

        self.scenario_path = self.tdp / "tiny.toml"
        save_scenario(tiny_scenario(), self.scenario_path)

    def tearDown(self) -> None:
        os.chdir(self.cwd)
        self.td.cleanup()
        load_config.cache_clear()

    def test_version(self) -> None:
        result = self.runner.invoke(main, ["--version"])
        self.assertEqual(0, result.exit_code)
        self.assertIn(__version__, result.stdout)

    def test_generate(self) -> None:
        expected = dump_scenario(generate_scenario(3, (1, 1, 2), 0.5))

        with self.subTest("stdout"):
            result = self.runner.invoke(main, ["generate", "3", "--shape", "1x1x2"])
            self.assertEqual(0, result.exit_code, result.stderr)
            self.assertEqual(expected, result.stdout)

        with self.subTest("file"):
            path = self.tdp / "scenarios" / "three.toml"
            result = self.runner.invoke(
                main, ["generate", "3", "--shape", "1x1x2", "-o", str(path)]
            )
            self.assertEqual(0, result.exit_code, result.stderr)
            self.assertEqual("", result.stdout)
            self.assertIn(f"Wrote {path}", result.stderr)
            self.assertEqual(expected, path.read_text())

        with self.subTest("quiet"):
            path = self.tdp / "quiet.toml"
            result = self.runner.invoke(
                main, ["--quiet", "generate", "3", "--shape", "1x1x2", "-o", str(path)]
            )
            self.assertEqual(0, result.exit_code)
            self.assertEqual("", result.stderr)
            self.assertEqual(3, load_scenario(path).rng_seed)

        with self.subTest("bad shape"):
            result = self.runner.invoke(main, ["generate", "3", "--shape", "2x2"])
            self.assertEqual(1, result.exit_code)
            self.assertIn("Error: invalid shape", result.stderr)

        with self.subTest("bad decay"):
            result = self.runner.invoke(main, ["generate", "3", "--decay", "0"])
            self.assertEqual(1, result.exit_code)
            self.assertIn("Error:", result.stderr)

    def test_validate(self) -> None:
        invalid = self.tdp / "invalid.toml"
        save_scenario(replace(tiny_scenario(), alpha1=0.5), invalid)
        broken = self.tdp / "broken.toml"
        broken.write_text("[scenario\n")

        with self.subTest("valid"):
            result = self.runner.invoke(main, ["validate", str(self.scenario_path)])
            self.assertEqual(0, result.exit_code, result.stderr)
            self.assertIn(f"{self.scenario_path}: ok", result.stderr)
            self.assertIn("✨ 1 scenario valid ✨", result.stderr)

        with self.subTest("invalid"):
            result = self.runner.invoke(
                main,
                ["validate", str(self.scenario_path), str(invalid), str(broken)],
            )
            self.assertEqual(1, result.exit_code)
            self.assertIn(f"{invalid}: alpha sum", result.stderr)
            self.assertIn(f"{broken}: ", result.stderr)
            self.assertIn("❗️ 2 invalid scenarios ❗️", result.stderr)

        with self.subTest("missing"):
            result = self.runner.invoke(main, ["validate", "missing.toml"])
            self.assertEqual(2, result.exit_code)

    @patch("semhyper.cli.run_experiment")
    def test_run(self, run_mock: Mock) -> None:
        run_mock.return_value = 0

        with self.subTest("explicit"):
            result = self.runner.invoke(
                main,
                [
                    "--concurrency",
                    "3",
                    "run",
                    "--scenario",
                    str(self.scenario_path),
                    "--schemes",
                    "naive,complete",
                    "--seeds",
                    "1,2",
                    "--rounds",
                    "5",
                    "--sweep",
                    "relevance",
                    "--sweep",
                    "perception",
                    "--oracle",
                    "--out",
                    "results",
                ],
            )
            self.assertEqual(0, result.exit_code, result.stderr)
            self.assertIn("✨ 2 seeds written to results ✨", result.stderr)
            (config,), _ = run_mock.call_args
            self.assertEqual(
                ExperimentConfig(
                    out=Path("results"),
                    schemes=[Scheme.naive, Scheme.complete],
                    seeds=[1, 2],
                    rounds=5,
                    scenario_path=self.scenario_path,
                    sweeps=["perception", "relevance"],
                    oracle=True,
                    concurrency=3,
                ),
                config,
            )
            run_mock.reset_mock()

        with self.subTest("generator seed"):
            result = self.runner.invoke(main, ["run", "--generate", "9,1x1x2,0.5"])
            self.assertEqual(0, result.exit_code, result.stderr)
            self.assertIn("✨ 1 seed written to out ✨", result.stderr)
            (config,), _ = run_mock.call_args
            self.assertEqual([9], config.seeds)
            self.assertEqual(GenerateSpec(9, (1, 1, 2), 0.5), config.generate)
            self.assertIsNone(config.scenario_path)
            self.assertEqual(200, config.rounds)
            self.assertEqual(list(Scheme), list(config.schemes))
            run_mock.reset_mock()

        with self.subTest("project defaults"):
            (self.tdp / "pyproject.toml").write_text(
                dedent(
                    """
                    [tool.semhyper]
                    schemes = ["hypergame", "classical"]
                    rounds = 7
                    seeds = [4, 5, 6]
                    out = "experiments"
                    sweeps = ["perception"]
                    """
                )
            )
            load_config.cache_clear()
            result = self.runner.invoke(
                main,
                ["--root", str(self.tdp), "run", "--scenario", str(self.scenario_path)],
            )
            self.assertEqual(0, result.exit_code, result.stderr)
            (config,), _ = run_mock.call_args
            self.assertEqual([Scheme.hypergame, Scheme.classical], config.schemes)
            self.assertEqual(7, config.rounds)
            self.assertEqual([4, 5, 6], config.seeds)
            self.assertEqual(Path("experiments"), config.out)
            self.assertEqual(["perception"], config.sweeps)
            self.assertIsNone(config.concurrency)
            run_mock.reset_mock()

        with self.subTest("every seed failed"):
            run_mock.return_value = 2
            result = self.runner.invoke(
                main, ["run", "--scenario", str(self.scenario_path), "--seeds", "1"]
            )
            self.assertEqual(2, result.exit_code)
            self.assertIn("❗️ Every seed failed ❗️", result.stderr)
            run_mock.return_value = 0
            run_mock.reset_mock()

        with self.subTest("conflicting sources"):
            result = self.runner.invoke(
                main,
                [
                    "run",
                    "--scenario",
                    str(self.scenario_path),
                    "--generate",
                    "9,1x1x2,0.5",
                ],
            )
            self.assertEqual(1, result.exit_code)
            self.assertIn("Error: exactly one of", result.stderr)
            run_mock.assert_not_called()

        with self.subTest("bad schemes"):
            result = self.runner.invoke(
                main,
                ["run", "--scenario", str(self.scenario_path), "--schemes", "bogus"],
            )
            self.assertEqual(1, result.exit_code)
            self.assertIn("Error:", result.stderr)
            run_mock.assert_not_called()

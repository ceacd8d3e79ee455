# Copyright 2026 The semhyper authors
# Licensed under the MIT license

from unittest import TestCase

import numpy as np

from semhyper.baselines import solve_complete_information
from semhyper.hypergame import perception_from_truth, uniform_rx, uniform_tx
from semhyper.leader import lagrangian, lagrangian_terms, leader_objective
from semhyper.oracle import brute_force_oracle, within_tolerance
from semhyper.types import OracleRefused, SolverSettings

from .scenario import tiny_scenario

SETTLE_SOLVER = SolverSettings(max_iters=200, split_grid=0.1)


class OracleTest(TestCase):
    def test_refused(self) -> None:
        for name, scenario, resolution in (
            ("two leaders", tiny_scenario(shape=(2, 1, 2)), 0.5),
            ("two followers", tiny_scenario(shape=(1, 2, 2)), 0.5),
            ("three concepts", tiny_scenario(shape=(1, 1, 3)), 0.5),
            ("wide alphabet", tiny_scenario(bit_alphabet_max=5), 0.5),
            ("fine grid", tiny_scenario(), 0.001),
        ):
            with self.subTest(name):
                with self.assertRaises(OracleRefused):
                    brute_force_oracle(scenario, resolution)

    def test_oracle(self) -> None:
        scenario = tiny_scenario(3)
        result = brute_force_oracle(scenario, grid_resolution=0.5)
        self.assertEqual(81, result.feasible_points)
        self.assertEqual((4,), result.rx_probs.shape)
        self.assertAlmostEqual(1.0, float(result.rx_probs.sum()))
        self.assertTrue(np.all(result.rx_probs >= 0.0))

        perception = perception_from_truth(
            uniform_tx(scenario), uniform_rx(scenario), scenario
        )
        terms = lagrangian_terms(0, 0, perception, scenario)
        values = np.arange(0.0, 4.5, 0.5)
        for a in values:
            for b in values:
                point = lagrangian(np.array([a, b]), 0.0, terms, scenario).sum()
                self.assertLessEqual(result.tx_utility, point + 1e-12)

    def test_price(self) -> None:
        scenario = tiny_scenario(3)
        free = brute_force_oracle(scenario, grid_resolution=0.5)
        priced = brute_force_oracle(scenario, grid_resolution=0.5, lam=1e6)
        np.testing.assert_array_equal([0.0, 0.0], priced.bits)
        self.assertLessEqual(priced.bits.sum(), free.bits.sum())

    def test_budget(self) -> None:
        scenario = tiny_scenario(4, bit_budget=1.0)
        result = brute_force_oracle(scenario, grid_resolution=0.5)
        self.assertLess(result.feasible_points, 81)
        w = scenario.tasks.relevance[0, 0]
        self.assertLessEqual(float(w @ result.bits), scenario.bit_budget + 1e-9)

    def test_within_tolerance(self) -> None:
        self.assertTrue(within_tolerance(1.05, 1.0))
        self.assertFalse(within_tolerance(1.06, 1.0))
        self.assertTrue(within_tolerance(0.5, 1.0))
        self.assertTrue(within_tolerance(0.0, 0.0))
        self.assertFalse(within_tolerance(-0.9, -1.0))

    def test_against_solver(self) -> None:
        for seed in range(10):
            with self.subTest(seed=seed):
                scenario = tiny_scenario(seed, solver=SETTLE_SOLVER)
                solved = solve_complete_information(scenario, max_rounds=10)
                assert solved.lambdas is not None
                lam = float(solved.lambdas[0])
                perception = perception_from_truth(solved.tx, solved.rx, scenario)
                oracle = brute_force_oracle(scenario, perception=perception, lam=lam)
                tx_solver = leader_objective(0, solved.tx, perception, scenario, lam)
                rx_solver = float(solved.report.rx_utilities[0])
                self.assertTrue(within_tolerance(tx_solver, oracle.tx_utility))
                self.assertTrue(within_tolerance(rx_solver, oracle.rx_utility))

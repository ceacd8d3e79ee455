# Copyright 2026 The semhyper authors
# Licensed under the MIT license

import math
from unittest import TestCase

import numpy as np

from semhyper.hypergame import (
    initial_perception,
    perception_from_truth,
    uniform_rx,
    uniform_tx,
)
from semhyper.leader import (
    bisect_lambda,
    closed_form_bits,
    closed_form_pi,
    lagrangian,
    lagrangian_gradient,
    lagrangian_terms,
    leader_objective,
    network_lambda,
    network_usage,
    normalize_strategy,
    optimal_bits,
    realize_bits,
    solve_leaders,
)
from semhyper.scenario import rescale_relevance
from semhyper.types import SolverError, SolverSettings

from .scenario import tiny_scenario


class LeaderTest(TestCase):
    def test_normalize_strategy(self) -> None:
        for name, raw, expected in (
            ("plain", [1.0, 3.0], [0.25, 0.75]),
            ("negative", [-1.0, 1.0, 1.0], [0.0, 0.5, 0.5]),
            ("negative infinity", [-np.inf, 1.0, 1.0], [0.0, 0.5, 0.5]),
            ("positive infinity", [np.inf, 1.0, np.inf], [0.5, 0.0, 0.5]),
            ("no mass", [0.0, -2.0, 0.0], [1.0, 0.0, 0.0]),
            ("nan", [np.nan, 1.0], [0.0, 1.0]),
        ):
            with self.subTest(name):
                np.testing.assert_allclose(expected, normalize_strategy(raw))

        with self.assertRaises(SolverError):
            normalize_strategy([np.nan, np.nan])

    def test_realize_bits(self) -> None:
        np.testing.assert_allclose([0, 0, 0.5, 0.5, 0], realize_bits(2.5, 4))
        np.testing.assert_allclose([0, 0, 1, 0, 0], realize_bits(2.0, 4))
        np.testing.assert_allclose([0, 0, 0, 0, 1], realize_bits(9.0, 4))
        np.testing.assert_allclose([1, 0, 0, 0, 0], realize_bits(-1.0, 4))
        probs = realize_bits(1.3, 4)
        self.assertAlmostEqual(1.3, float(probs @ np.arange(5)))

    def test_lagrangian_terms(self) -> None:
        scenario = tiny_scenario(shape=(2, 2, 2))
        perception = initial_perception(scenario)
        terms = lagrangian_terms(1, 0, perception, scenario)
        self.assertEqual((2, 2), terms.relevance.shape)
        np.testing.assert_allclose(scenario.initial_relevance, terms.relevance)
        np.testing.assert_allclose(
            scenario.channels.decode_reliability[1] * 0.75, terms.keep
        )
        self.assertTrue(terms.active.all())

    def test_gradient_matches_lagrangian(self) -> None:
        scenario = tiny_scenario()
        perception = perception_from_truth(
            uniform_tx(scenario), uniform_rx(scenario), scenario
        )
        terms = lagrangian_terms(0, 0, perception, scenario)
        bits = np.array([1.2, 0.7])
        h = 1e-6
        gradient = lagrangian_gradient(bits, 0.3, terms, scenario)
        for r in range(2):
            step = np.zeros(2)
            step[r] = h
            numeric = (
                lagrangian(bits + step, 0.3, terms, scenario)[r]
                - lagrangian(bits - step, 0.3, terms, scenario)[r]
            ) / (2 * h)
            self.assertAlmostEqual(numeric, gradient[r], places=5)

    def test_closed_form(self) -> None:
        scenario = tiny_scenario(bit_alphabet_max=8)
        perception = perception_from_truth(
            uniform_tx(scenario), uniform_rx(scenario), scenario
        )
        terms = lagrangian_terms(0, 0, perception, scenario)
        bits = closed_form_bits(0.0, terms, scenario)
        self.assertEqual((1, 2), bits.shape)

        with self.subTest("stationary"):
            interior = np.clip(bits[0], 0.0, scenario.bit_alphabet_max)
            gradient = lagrangian_gradient(interior, 0.0, terms, scenario)
            for r in range(2):
                if 0 < bits[0, r] < scenario.bit_alphabet_max:
                    self.assertAlmostEqual(0.0, gradient[r], places=9)

        with self.subTest("more price, fewer bits"):
            cheaper = closed_form_bits(1.0, terms, scenario)
            self.assertTrue(np.all(cheaper < bits))

        with self.subTest("irrelevant concept"):
            perception.relevance_by_tx[0][0, 0, 1] = 0.0
            terms = lagrangian_terms(0, 0, perception, scenario)
            self.assertEqual(0.0, closed_form_bits(0.0, terms, scenario)[0, 1])
            self.assertEqual(
                1.0, closed_form_pi(0, 1, 0, 0.0, perception, scenario)
            )
            self.assertEqual(
                0.0, closed_form_pi(0, 0, 0, 0.0, perception, scenario)
            )
            self.assertAlmostEqual(
                bits[0, 0] / 2, closed_form_pi(0, 0, 2, 0.0, perception, scenario)
            )

    def test_optimal_bits(self) -> None:
        for shape in ((1, 1, 2), (1, 3, 2)):
            scenario = tiny_scenario(1, shape)
            perception = initial_perception(scenario)
            terms = lagrangian_terms(0, 0, perception, scenario)
            for lam in (0.0, 0.5, 5.0):
                with self.subTest(shape=shape, lam=lam):
                    bits = optimal_bits(lam, terms, scenario)
                    gradient = lagrangian_gradient(bits, lam, terms, scenario)
                    top = scenario.bit_alphabet_max
                    for r in range(2):
                        self.assertGreaterEqual(bits[r], 0.0)
                        self.assertLessEqual(bits[r], top)
                        if bits[r] == 0.0:
                            self.assertGreaterEqual(gradient[r], -1e-9)
                        elif bits[r] == top:
                            self.assertLessEqual(gradient[r], 1e-9)
                        else:
                            self.assertAlmostEqual(0.0, gradient[r], places=6)

    def test_bisect_lambda(self) -> None:
        with self.subTest("loose budget"):
            scenario = tiny_scenario(bit_budget=100.0)
            solution = bisect_lambda(0, initial_perception(scenario), scenario)
            self.assertEqual(0.0, solution.lam)
            self.assertFalse(solution.binding)
            self.assertTrue(solution.feasible)
            self.assertGreater(solution.budget_slack, 0.0)
            np.testing.assert_allclose(1.0, solution.probs.sum(axis=-1))
            np.testing.assert_allclose(
                solution.target_bits, solution.probs @ scenario.bit_values
            )

        with self.subTest("tight budget"):
            scenario = tiny_scenario(bit_budget=0.05, alpha1=0.01, alpha2=0.99)
            perception = initial_perception(scenario)
            solution = bisect_lambda(0, perception, scenario)
            self.assertGreater(solution.lam, 0.0)
            self.assertTrue(solution.binding)
            self.assertTrue(solution.feasible)
            self.assertGreaterEqual(solution.budget_slack, 0.0)
            used = network_usage([solution.target_bits], scenario)
            self.assertLessEqual(used, scenario.bit_budget + 1e-9)

        with self.subTest("all leaders"):
            scenario = tiny_scenario(shape=(2, 1, 2))
            solutions = solve_leaders(initial_perception(scenario), scenario)
            self.assertEqual([0, 1], [s.tx for s in solutions])
            self.assertEqual(solutions[0].lam, solutions[1].lam)

    def test_network_lambda(self) -> None:
        precise = SolverSettings()
        with self.subTest("binding budget is met on the true relevance"):
            for shape in ((1, 1, 2), (2, 1, 2), (2, 2, 2)):
                scenario = tiny_scenario(
                    shape=shape, bit_budget=0.05, alpha1=0.01, solver=precise
                )
                solutions = solve_leaders(initial_perception(scenario), scenario)
                used = network_usage([s.target_bits for s in solutions], scenario)
                lam, metered, feasible = network_lambda(
                    initial_perception(scenario), scenario
                )
                self.assertTrue(feasible)
                self.assertGreater(lam, 0.0)
                self.assertAlmostEqual(metered, used)
                self.assertLessEqual(used, scenario.bit_budget * (1 + 1e-6))
                self.assertGreaterEqual(used, scenario.bit_budget * (1 - 1e-6))

        with self.subTest("misjudged relevance"):
            for belief in (0.01, 1.0):
                scenario = tiny_scenario(
                    shape=(2, 1, 2), bit_budget=0.05, alpha1=0.01, solver=precise
                )
                perception = initial_perception(scenario, relevance=belief)
                solutions = solve_leaders(perception, scenario)
                used = network_usage([s.target_bits for s in solutions], scenario)
                self.assertLessEqual(used, scenario.bit_budget + 1e-9)

        with self.subTest("zero budget"):
            scenario = tiny_scenario(bit_budget=0.0)
            solution = bisect_lambda(0, initial_perception(scenario), scenario)
            self.assertTrue(solution.feasible)
            np.testing.assert_array_equal([0.0, 0.0], solution.target_bits)
            self.assertEqual(0.0, solution.budget_slack)

    def test_price_and_keep(self) -> None:
        scenario = tiny_scenario(2, bit_alphabet_max=8)
        perception = initial_perception(scenario)
        terms = lagrangian_terms(0, 0, perception, scenario)
        w = scenario.tasks.relevance[:, 0, :]

        with self.subTest("price"):
            usage = [
                float(np.sum(w * optimal_bits(lam, terms, scenario)))
                for lam in (0.0, 0.01, 0.1, 1.0, 10.0, 100.0)
            ]
            for before, after in zip(usage, usage[1:]):
                self.assertLessEqual(after, before + 1e-12)

        with self.subTest("keep"):
            tx = uniform_tx(scenario)
            bits = []
            for drop in (0.75, 0.5, 0.0):
                rx = uniform_rx(scenario)
                rx.probs[:] = [1.0 - drop, 0.0, 0.0, drop]
                terms = lagrangian_terms(
                    0, 0, perception_from_truth(tx, rx, scenario), scenario
                )
                bits.append(optimal_bits(0.0, terms, scenario))
            for before, after in zip(bits, bits[1:]):
                self.assertTrue(np.all(after <= before + 1e-9), (before, after))

        with self.subTest("relevance"):
            usage = []
            for decay in (0.3, 0.5, 0.7, 0.9, 1.0):
                scaled = rescale_relevance(scenario, decay)
                truth = perception_from_truth(
                    uniform_tx(scaled), uniform_rx(scaled), scaled
                )
                terms = lagrangian_terms(0, 0, truth, scaled)
                bits = optimal_bits(0.0, terms, scaled)
                usage.append(float(np.sum(scaled.tasks.relevance[:, 0, :] * bits)))
            for before, after in zip(usage, usage[1:]):
                self.assertGreaterEqual(after, before - 1e-12)

        with self.subTest("stationary at interior allocations"):
            for seed in range(5):
                seeded = tiny_scenario(seed, bit_alphabet_max=8, bit_budget=100.0)
                solution = bisect_lambda(0, initial_perception(seeded), seeded)
                top = seeded.bit_alphabet_max
                if np.all((solution.target_bits > 0) & (solution.target_bits < top)):
                    self.assertLessEqual(solution.stationarity_residual, 1e-6)

    def test_leader_objective(self) -> None:
        scenario = tiny_scenario()
        perception = initial_perception(scenario)
        solution = bisect_lambda(0, perception, scenario)
        optimum = uniform_tx(scenario)
        optimum.probs[0] = solution.probs
        value = leader_objective(0, optimum, perception, scenario, solution.lam)
        self.assertTrue(math.isfinite(value))
        self.assertLessEqual(
            value,
            leader_objective(
                0, uniform_tx(scenario), perception, scenario, solution.lam
            )
            + 1e-9,
        )

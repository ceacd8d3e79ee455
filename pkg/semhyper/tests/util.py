# Copyright 2026 The semhyper authors
# Licensed under the MIT license

from unittest import TestCase

import numpy as np

from semhyper.util import (
    as_real,
    config_hash,
    format_float,
    l1_distance,
    make_rng,
    OUTCOME_STREAM,
    PROBE_STREAM,
)


class UtilTest(TestCase):
    def test_make_rng(self) -> None:
        a = make_rng(7, OUTCOME_STREAM).random(4)
        b = make_rng(7, OUTCOME_STREAM).random(4)
        c = make_rng(7, PROBE_STREAM).random(4)
        np.testing.assert_array_equal(a, b)
        self.assertFalse(np.array_equal(a, c))

    def test_as_real(self) -> None:
        value = as_real(np.float64(2.5))
        self.assertIsInstance(value, float)
        self.assertEqual(2.5, value)

        array = as_real(np.array([1.0, 2.0]))
        self.assertIsInstance(array, np.ndarray)

    def test_format_float(self) -> None:
        for value, expected in (
            (None, ""),
            (1.0, "1"),
            (0.1, "0.1"),
            (1 / 3, "0.333333333333"),
            (float("inf"), "inf"),
            (float("-inf"), "-inf"),
            (float("nan"), "nan"),
        ):
            with self.subTest(value):
                self.assertEqual(expected, format_float(value))

    def test_config_hash(self) -> None:
        a = config_hash("text", rounds=3, schemes=["hypergame"])
        self.assertEqual(16, len(a))
        self.assertEqual(a, config_hash("text", schemes=["hypergame"], rounds=3))
        self.assertNotEqual(a, config_hash("text", rounds=4, schemes=["hypergame"]))
        self.assertNotEqual(a, config_hash("other", rounds=3, schemes=["hypergame"]))

    def test_l1_distance(self) -> None:
        self.assertEqual(0.0, l1_distance(np.ones(3), np.ones(3)))
        self.assertAlmostEqual(1.5, l1_distance(np.zeros(2), np.array([1.0, -0.5])))

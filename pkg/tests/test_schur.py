import itertools
import math
import unittest

import numpy as np
from numpy.testing import assert_array_equal

from bincomp.errors import GenerationFailedError, InvalidComponentsError, RankTooLargeError
from bincomp.schur import (
    binary_capacity,
    binary_schur_family,
    binary_schur_rank,
    exact_integer_rank,
    is_schur_independent_binary,
    is_schur_independent_signs,
    make_rng,
    max_schur_rank,
    random_binary_family_schur_independent,
    random_schur_independent_signs,
    random_sign_family,
    schur_family,
    schur_rank,
    sign_lift,
)


class SignTesterTests(unittest.TestCase):
    def test_single_column_is_independent(self) -> None:
        self.assertTrue(is_schur_independent_signs(np.array([1, -1, 1])))

    def test_duplicate_columns_are_dependent(self) -> None:
        s = np.array([[1, 1], [-1, -1], [1, 1], [1, 1]])
        self.assertFalse(is_schur_independent_signs(s))

    def test_hadamard_columns(self) -> None:
        s = np.array([[1, 1, 1], [1, 1, -1], [1, -1, 1], [1, -1, -1]])
        self.assertTrue(is_schur_independent_signs(s))
        self.assertEqual(schur_rank(s), (4, 4))
        self.assertEqual(exact_integer_rank(schur_family(s)), 4)

    def test_rejects_non_sign_entries(self) -> None:
        with self.assertRaises(InvalidComponentsError):
            is_schur_independent_signs(np.array([[1, 0], [1, 1]]))

    def test_subset_heredity_and_flip_invariance(self) -> None:
        rng = make_rng(4)
        for _ in range(5):
            s = random_schur_independent_signs(24, 5, rng)
            for size in range(1, 6):
                for subset in itertools.combinations(range(5), size):
                    self.assertTrue(is_schur_independent_signs(s[:, list(subset)]))
            flips = rng.integers(0, 2, size=5) * 2 - 1
            self.assertTrue(is_schur_independent_signs(s * flips))
            # Schur independence implies linear independence.
            self.assertEqual(np.linalg.matrix_rank(s.astype(float)), 5)

    def test_gram_rank_agrees_with_exact_elimination(self) -> None:
        rng = make_rng(9)
        for _ in range(20):
            s = random_sign_family(10, 4, rng)
            achieved, _ = schur_rank(s)
            self.assertEqual(achieved, exact_integer_rank(schur_family(s)))


class CapacityTests(unittest.TestCase):
    def test_examples(self) -> None:
        self.assertEqual(max_schur_rank(7), 4)
        self.assertEqual(max_schur_rank(1), 1)
        self.assertEqual(max_schur_rank(11), 5)
        self.assertEqual(binary_capacity(11), 4)

    def test_closed_form_is_largest_feasible_r(self) -> None:
        for n in list(range(1, 2000)) + [10**6 - 1, 10**6]:
            r = max_schur_rank(n)
            self.assertLessEqual(math.comb(r, 2) + 1, n)
            self.assertGreater(math.comb(r + 1, 2) + 1, n)

    def test_exhaustive_over_capacity_fails(self) -> None:
        # Canonical vectors (first entry +1) suffice: the tester ignores column signs.
        for n in range(2, 7):
            r = max_schur_rank(n) + 1
            canonical = [np.array((1,) + rest) for rest in itertools.product((1, -1), repeat=n - 1)]
            for columns in itertools.combinations_with_replacement(canonical, r):
                self.assertFalse(is_schur_independent_signs(np.column_stack(columns)))


class BinaryTesterTests(unittest.TestCase):
    def test_all_ones_component_is_dependent(self) -> None:
        self.assertFalse(is_schur_independent_binary(np.ones(5, dtype=int)))

    def test_small_example_agrees_with_direct_span(self) -> None:
        z = np.array([[1, 1], [1, 0], [0, 1], [0, 0]])
        expected = exact_integer_rank(binary_schur_family(z)) == binary_schur_family(z).shape[1]
        self.assertEqual(is_schur_independent_binary(z), expected)
        self.assertTrue(expected)

    def test_lift_equivalence_on_random_fixtures(self) -> None:
        rng = make_rng(17)
        for _ in range(50):
            n = int(rng.integers(3, 12))
            r = int(rng.integers(1, 4))
            z = rng.integers(0, 2, size=(n, r))
            self.assertEqual(is_schur_independent_binary(z), is_schur_independent_signs(sign_lift(z)))

    def test_binary_rank_counts(self) -> None:
        z = np.array([[1, 1], [1, 0], [0, 1], [0, 0]])
        self.assertEqual(binary_schur_rank(z), (4, 4))


class GeneratorTests(unittest.TestCase):
    def test_seed_determinism(self) -> None:
        first = random_sign_family(8, 2, make_rng(0))
        second = random_sign_family(8, 2, make_rng(0))
        assert_array_equal(first, second)
        self.assertEqual(first.shape, (8, 2))
        self.assertTrue(np.all(np.isin(first, (-1, 1))))

    def test_rank_too_large(self) -> None:
        with self.assertRaises(RankTooLargeError):
            random_sign_family(4, 4, make_rng(1))
        with self.assertRaises((RankTooLargeError, GenerationFailedError)):
            random_schur_independent_signs(3, 3, make_rng(1))
        with self.assertRaises((RankTooLargeError, GenerationFailedError)):
            random_binary_family_schur_independent(2, 2, make_rng(1))

    def test_rejection_sampler_postconditions(self) -> None:
        rng = make_rng(2)
        for _ in range(10):
            s = random_schur_independent_signs(16, 3, rng)
            self.assertTrue(is_schur_independent_signs(s))
            canonical = {tuple(col * col[0]) for col in s.T}
            self.assertEqual(len(canonical), 3)

    def test_boundary_case_succeeds_for_some_seeds(self) -> None:
        successes = 0
        for seed in range(100):
            try:
                random_schur_independent_signs(7, 4, make_rng(seed), max_rounds=50)
                successes += 1
            except GenerationFailedError:
                pass
        self.assertGreater(successes, 0)

    def test_binary_sampler_postconditions(self) -> None:
        rng = make_rng(3)
        for _ in range(10):
            z = random_binary_family_schur_independent(16, 3, rng)
            self.assertTrue(is_schur_independent_binary(z))
            self.assertTrue(is_schur_independent_signs(sign_lift(z)))

    def test_seed_range(self) -> None:
        with self.assertRaises(ValueError):
            make_rng(-1)
        with self.assertRaises(ValueError):
            make_rng(2**64)


if __name__ == "__main__":
    unittest.main()

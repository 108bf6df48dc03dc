"""End-to-end recovery properties over seeded grids.

The default grid runs r = 2 and r at capacity for n in {16, 32, 64} with two
seeds. Set BINCOMP_FULL_GRID=1 for every r from 2 to min(6, capacity), plus
capacity, with 20 seeds per (n, r).
"""
import os
import time
import unittest

import numpy as np
from numpy.testing import assert_array_equal

from bincomp.bcd import binary_component_decomposition
from bincomp.errors import BincompError, DecompositionFailed
from bincomp.instance_generator import InstanceGenerator
from bincomp.mimo import assign_pilots, detect_scene, random_scene
from bincomp.scd import (
    canonical_order,
    canonicalize_signs,
    face_separator,
    scd_compressed,
    separator_value,
    sign_component_decomposition,
)
from bincomp.schur import binary_capacity, is_schur_independent_signs, make_rng, max_schur_rank, random_sign_family

FULL_GRID = os.environ.get("BINCOMP_FULL_GRID") == "1"
SIZES = (16, 32, 64)
SEEDS = range(20) if FULL_GRID else range(2)


def grid(capacity):
    for n in SIZES:
        ranks = set(range(2, min(6, capacity(n)) + 1)) if FULL_GRID else {2}
        for r in sorted(ranks | {capacity(n)}):
            for seed in SEEDS:
                yield n, r, seed


class SignRecoveryTests(unittest.TestCase):
    def test_round_trip_and_engine_agreement(self) -> None:
        generator = InstanceGenerator()
        for n, r, seed in grid(max_schur_rank):
            with self.subTest(n=n, r=r, seed=seed):
                instance = generator.sign_instance(n, r, make_rng(seed))
                expected, tau = canonical_order(canonicalize_signs(instance.components), instance.weights)
                full = sign_component_decomposition(instance.matrix, make_rng(seed + 1000))
                assert_array_equal(full.components, expected)
                self.assertLessEqual(float(np.max(np.abs(full.weights - tau))), 1e-6)
                compressed = scd_compressed(instance.matrix, make_rng(seed + 1000))
                assert_array_equal(compressed.components, full.components)
                self.assertTrue(np.array_equal(compressed.weights, full.weights))

    def test_compressed_sdp_stage_is_faster(self) -> None:
        instance = InstanceGenerator().sign_instance(64, 4, make_rng(0))
        started = time.perf_counter()
        full = sign_component_decomposition(instance.matrix, make_rng(1))
        full_ms = (time.perf_counter() - started) * 1000.0
        compressed = scd_compressed(instance.matrix, make_rng(1))
        self.assertLess(compressed.timings_ms["sdp"], full.timings_ms["sdp"])
        self.assertLess(compressed.timings_ms["sdp"], full_ms)


class BinaryRecoveryTests(unittest.TestCase):
    def test_round_trip(self) -> None:
        generator = InstanceGenerator()
        for n, r, seed in grid(binary_capacity):
            with self.subTest(n=n, r=r, seed=seed):
                instance = generator.binary_instance(n, r, make_rng(seed))
                expected, tau = canonical_order(instance.components, instance.weights)
                result = binary_component_decomposition(instance.matrix, make_rng(seed + 1000))
                assert_array_equal(result.components, expected)
                self.assertLessEqual(float(np.max(np.abs(result.weights - tau))), 1e-6)


class SeparatorTests(unittest.TestCase):
    def test_face_is_exposed(self) -> None:
        generator = InstanceGenerator()
        rng = make_rng(44)
        for _ in range(5):
            instance = generator.sign_instance(32, 4, rng)
            p = face_separator(instance.matrix)
            for _ in range(1000):
                g = rng.standard_normal((32, int(rng.integers(1, 33))))
                x = g @ g.T
                d = np.sqrt(np.diag(x))
                self.assertLessEqual(separator_value(p, x / np.outer(d, d)), 1.0 + 1e-8)
            cols = instance.components.astype(float)
            for _ in range(100):
                tau = rng.dirichlet(np.ones(4))
                self.assertAlmostEqual(separator_value(p, (cols * tau) @ cols.T), 1.0, delta=1e-8)


class GenericityTests(unittest.TestCase):
    def test_random_signs_are_usually_schur_independent(self) -> None:
        n, r = 100, 5
        hits = sum(is_schur_independent_signs(random_sign_family(n, r, make_rng(seed))) for seed in range(200))
        self.assertGreaterEqual(hits / 200, 1.0 - r * r * np.exp(-n / (r * r)))


class ActivityDetectionTests(unittest.TestCase):
    def test_exact_mode_recovery(self) -> None:
        recovered = 0
        for seed in range(20):
            with self.subTest(seed=seed):
                rng = make_rng(seed)
                codebook = assign_pilots(1000, rng)
                self.assertEqual(codebook.n, 11)
                scene = random_scene(codebook, 4, rng, noise_variance=0.2)
                if not is_schur_independent_signs(codebook.pilots[:, list(scene.active)]):
                    continue
                report = detect_scene(codebook, scene, rng)
                self.assertTrue(report.matches(scene))
                truth = scene.fading_by_device()
                for device, estimate in zip(report.active, report.fading_estimate):
                    self.assertLessEqual(abs(estimate - truth[device]), 1e-6)
                recovered += 1
        self.assertGreater(recovered, 0)

    def test_over_capacity_never_returns_silently(self) -> None:
        for seed in range(5):
            rng = make_rng(seed)
            codebook = assign_pilots(1000, rng)
            scene = random_scene(codebook, 6, rng, noise_variance=0.2)
            try:
                report = detect_scene(codebook, scene, rng)
            except BincompError:
                continue
            self.assertTrue(report.matches(scene))


class HypothesisViolationTests(unittest.TestCase):
    def test_full_rank_inputs_fail_with_a_stage(self) -> None:
        failures = 0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            g = rng.standard_normal((16, 16))
            x = g @ g.T
            d = np.sqrt(np.diag(x))
            try:
                sign_component_decomposition(x / np.outer(d, d), make_rng(seed))
            except DecompositionFailed as exc:
                self.assertTrue(exc.stage)
                failures += 1
        self.assertGreaterEqual(failures, 95)


if __name__ == "__main__":
    unittest.main()

import unittest

import numpy as np
from numpy.testing import assert_array_equal

from bincomp.certificate_checker import CertificateChecker
from bincomp.errors import GenerationFailedError
from bincomp.instance_generator import InstanceGenerator
from bincomp.schur import is_schur_independent_binary, is_schur_independent_signs, make_rng


class InstanceGeneratorTests(unittest.TestCase):
    def setUp(self) -> None:
        self.generator = InstanceGenerator()

    def test_weights_in_open_simplex_with_floor(self) -> None:
        rng = make_rng(0)
        for r in range(1, 7):
            tau = self.generator.random_weights(r, rng)
            self.assertAlmostEqual(float(np.sum(tau)), 1.0, places=12)
            self.assertGreaterEqual(float(np.min(tau)), 0.01)

    def test_floor_too_high(self) -> None:
        with self.assertRaises(GenerationFailedError):
            InstanceGenerator(min_weight=0.5).random_weights(2, make_rng(0))

    def test_sign_instance_is_correlation(self) -> None:
        instance = self.generator.sign_instance(32, 4, make_rng(7))
        self.assertEqual((instance.n, instance.r), (32, 4))
        self.assertTrue(is_schur_independent_signs(instance.components))
        assert_array_equal(np.diag(instance.matrix), np.ones(32))
        self.assertTrue(CertificateChecker().check_correlation(instance.matrix).passed)

    def test_binary_instance(self) -> None:
        instance = self.generator.binary_instance(16, 3, make_rng(1))
        self.assertTrue(is_schur_independent_binary(instance.components))
        cols = instance.components.astype(float)
        np.testing.assert_allclose(instance.matrix, (cols * instance.weights) @ cols.T, atol=1e-14)

    def test_unknown_kind(self) -> None:
        with self.assertRaises(ValueError):
            self.generator.generate("ternary", 8, 2, make_rng(0))


if __name__ == "__main__":
    unittest.main()

import unittest

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal

from bincomp.bcd import (
    BinaryDecomposition,
    bcd_to_scd_matrix,
    binary_component_decomposition,
    binary_to_sign,
    centering_projector,
    resolve_signs,
    sign_to_binary,
    verify_binary_decomposition,
)
from bincomp.certificate_checker import reconstruct
from bincomp.errors import DecompositionFailed, InvalidComponentsError, SignResolutionFailedError
from bincomp.instance_generator import InstanceGenerator
from bincomp.scd import SignDecomposition, canonical_order, sign_component_decomposition
from bincomp.schur import make_rng


class AffineMapTests(unittest.TestCase):
    def test_round_trip_on_entries(self) -> None:
        z = np.array([[1, 0], [0, 1], [1, 1]])
        assert_array_equal(binary_to_sign(z), [[1, -1], [-1, 1], [1, 1]])
        assert_array_equal(sign_to_binary(binary_to_sign(z)), z)

    def test_rejects_foreign_entries(self) -> None:
        with self.assertRaises(InvalidComponentsError):
            binary_to_sign(np.array([0, 2]))
        with self.assertRaises(InvalidComponentsError):
            sign_to_binary(np.array([1, 0]))


class ReductionTests(unittest.TestCase):
    def test_centering_projector(self) -> None:
        r = centering_projector(4)
        assert_allclose(r @ np.ones(4), np.zeros(4), atol=1e-15)
        assert_allclose(r @ r, r, atol=1e-15)

    def test_kernel_of_centering(self) -> None:
        rng = np.random.default_rng(4)
        r = centering_projector(6)
        e = np.ones(6)
        for _ in range(5):
            x = rng.standard_normal(6)
            kernel = np.outer(e, x) + np.outer(x, e)
            assert_allclose(r @ kernel @ r, np.zeros((6, 6)), atol=1e-12)

    def test_reduction_gives_sign_lift(self) -> None:
        generator = InstanceGenerator()
        rng = make_rng(12)
        for _ in range(20):
            instance = generator.binary_instance(12, 3, rng)
            signs = binary_to_sign(instance.components)
            expected = reconstruct(signs, instance.weights)
            corr = bcd_to_scd_matrix(instance.matrix)
            assert_allclose(corr.matrix, expected, atol=1e-10)
            r = centering_projector(12)
            assert_allclose(r @ (4.0 * instance.matrix - corr.matrix) @ r, np.zeros((12, 12)), atol=1e-10)

    def test_all_ones_mass_collapses(self) -> None:
        corr = bcd_to_scd_matrix(np.ones((3, 3)))
        assert_allclose(corr.matrix, np.ones((3, 3)), atol=1e-12)


class SignResolutionTests(unittest.TestCase):
    def setUp(self) -> None:
        # H = zzᵗ with z = (1, 0): A = ssᵗ with s = (1, -1).
        self.h = np.diag([1.0, 0.0])
        self.corr = bcd_to_scd_matrix(self.h)
        self.decomposition = sign_component_decomposition(self.corr, make_rng(0))

    def test_two_by_two_hand_case(self) -> None:
        assert_allclose(self.corr.matrix, [[1.0, -1.0], [-1.0, 1.0]], atol=1e-12)
        assert_array_equal(self.decomposition.components[:, 0], [1, -1])
        assert_array_equal(resolve_signs(self.h, self.corr, self.decomposition), [1])

    def test_stored_flip_is_resolved(self) -> None:
        flipped = SignDecomposition(components=np.array([[-1], [1]]), weights=np.array([1.0]), residual_fro=0.0)
        assert_array_equal(resolve_signs(self.h, self.corr, flipped), [-1])
        assert_array_equal(sign_to_binary(flipped.components[:, 0] * -1), [1, 0])

    def test_doubled_trace_term_is_inconsistent(self) -> None:
        with self.assertRaises(SignResolutionFailedError):
            resolve_signs(self.h, self.corr, self.decomposition, trace_factor=4.0)

    def test_resolution_recovers_hidden_flips(self) -> None:
        generator = InstanceGenerator()
        rng = make_rng(21)
        for _ in range(5):
            instance = generator.binary_instance(16, 3, rng)
            corr = bcd_to_scd_matrix(instance.matrix)
            signed = sign_component_decomposition(corr, rng)
            flips = resolve_signs(instance.matrix, corr, signed)
            recovered = sign_to_binary(signed.components * flips)
            expected, _ = canonical_order(instance.components, instance.weights)
            cols, _ = canonical_order(recovered, signed.weights)
            assert_array_equal(cols, expected)


class BinaryDecompositionTests(unittest.TestCase):
    def test_single_component(self) -> None:
        z = np.array([1, 0, 1, 1, 0])
        result = binary_component_decomposition(np.outer(z, z).astype(float), make_rng(0))
        assert_array_equal(result.components[:, 0], z)
        assert_allclose(result.weights, [1.0])

    def test_recovers_generated_instances_with_both_methods(self) -> None:
        generator = InstanceGenerator()
        rng = make_rng(5)
        for method in ("full", "compressed"):
            for _ in range(3):
                instance = generator.binary_instance(20, 3, rng)
                result = binary_component_decomposition(instance.matrix, rng, method=method)
                expected_cols, expected_tau = canonical_order(instance.components, instance.weights)
                assert_array_equal(result.components, expected_cols)
                assert_allclose(result.weights, expected_tau, atol=1e-6)
                self.assertLessEqual(result.residual_fro, 1e-6 * 20)
                self.assertTrue(verify_binary_decomposition(instance.matrix, result).passed)

    def test_all_ones_fails_certificate(self) -> None:
        with self.assertRaises(DecompositionFailed) as ctx:
            binary_component_decomposition(np.ones((4, 4)), make_rng(0))
        self.assertEqual(ctx.exception.stage, "certificate")

    def test_unknown_method(self) -> None:
        with self.assertRaises(ValueError):
            binary_component_decomposition(np.eye(2), make_rng(0), method="sparse")

    def test_verify_flags_dependent_family(self) -> None:
        z = np.array([[1, 1], [1, 1], [0, 0]])
        h = reconstruct(z, np.array([0.5, 0.5]))
        decomposition = BinaryDecomposition(components=z, weights=np.array([0.5, 0.5]), residual_fro=0.0)
        report = verify_binary_decomposition(h, decomposition)
        self.assertFalse(report.schur_independent)


if __name__ == "__main__":
    unittest.main()

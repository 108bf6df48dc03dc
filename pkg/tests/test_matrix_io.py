import tempfile
import unittest
from pathlib import Path

import numpy as np
from numpy.testing import assert_array_equal

from bincomp.errors import MatrixFileError
from bincomp.matrix_io import read_matrix, write_matrix


class MatrixIoTests(unittest.TestCase):
    def setUp(self) -> None:
        tmp = tempfile.TemporaryDirectory()
        self.addCleanup(tmp.cleanup)
        self.dir = Path(tmp.name)

    def test_floats_survive_exactly(self) -> None:
        rng = np.random.default_rng(0)
        x = rng.standard_normal((4, 4))
        path = self.dir / "x.csv"
        write_matrix(path, x, {"n": 4, "kind": "sign"})
        loaded, meta = read_matrix(path)
        self.assertTrue(np.array_equal(loaded, x))
        self.assertEqual(meta, {"n": "4", "kind": "sign"})

    def test_integer_components_and_vectors(self) -> None:
        path = self.dir / "s.csv"
        write_matrix(path, np.array([[1, -1], [-1, 1], [1, 1]]), integer=True)
        self.assertIn("1,-1", path.read_text(encoding="utf-8"))
        write_matrix(self.dir / "w.csv", np.array([0.25, 0.75]))
        weights, _ = read_matrix(self.dir / "w.csv")
        self.assertEqual(weights.shape, (2, 1))
        loaded, meta = read_matrix(path)
        assert_array_equal(loaded, [[1, -1], [-1, 1], [1, 1]])
        self.assertEqual(meta, {})

    def test_missing_file(self) -> None:
        with self.assertRaises(MatrixFileError):
            read_matrix(self.dir / "missing.csv")

    def test_ragged_rows(self) -> None:
        path = self.dir / "ragged.csv"
        path.write_text("1,2\n3\n", encoding="utf-8")
        with self.assertRaises(MatrixFileError):
            read_matrix(path)

    def test_non_finite_entries(self) -> None:
        path = self.dir / "nan.csv"
        path.write_text("1,nan\n0,1\n", encoding="utf-8")
        with self.assertRaises(MatrixFileError):
            read_matrix(path)

    def test_header_only(self) -> None:
        path = self.dir / "empty.csv"
        path.write_text("# n=0\n", encoding="utf-8")
        with self.assertRaises(MatrixFileError):
            read_matrix(path)

    def test_rejects_three_dimensional(self) -> None:
        with self.assertRaises(MatrixFileError):
            write_matrix(self.dir / "cube.csv", np.zeros((2, 2, 2)))


if __name__ == "__main__":
    unittest.main()

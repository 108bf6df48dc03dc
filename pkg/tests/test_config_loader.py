import tempfile
import textwrap
import unittest
from pathlib import Path

from bincomp.config_loader import ConfigValidationError, Tolerances, load_config


class ConfigLoaderTests(unittest.TestCase):
    def _write_config(self, content: str) -> Path:
        tmp = tempfile.NamedTemporaryFile("w", suffix=".yaml", delete=False)
        tmp.write(textwrap.dedent(content))
        tmp.flush()
        tmp.close()
        path = Path(tmp.name)
        self.addCleanup(path.unlink, missing_ok=True)
        return path

    def test_defaults_without_file(self) -> None:
        options = load_config(environ={})
        self.assertEqual(options.tolerances, Tolerances())
        self.assertEqual(options.solver.max_iterations, 200)
        self.assertEqual(options.max_redraws, 20)

    def test_shipped_default_matches_code_defaults(self) -> None:
        path = Path(__file__).resolve().parent.parent / "configs" / "default.yaml"
        self.assertEqual(load_config(path, environ={}), load_config(environ={}))

    def test_load_valid_config(self) -> None:
        path = self._write_config(
            """
            tolerances:
              rank_rel_tol: 1.0e-6
            solver:
              max_iterations: 50
              initial_scale: 2.5
            max_redraws: 5
            """
        )

        options = load_config(path, environ={})
        self.assertEqual(options.tolerances.rank_rel_tol, 1e-6)
        self.assertEqual(options.tolerances.psd_tol, 1e-8)
        self.assertEqual(options.solver.max_iterations, 50)
        self.assertEqual(options.solver.initial_scale, 2.5)
        self.assertEqual(options.max_redraws, 5)

    def test_environment_overrides_file(self) -> None:
        path = self._write_config(
            """
            tolerances:
              round_tol: 1.0e-3
            """
        )

        options = load_config(path, environ={"BINCOMP_ROUND_TOL": "0.01", "BINCOMP_PSD_TOL": " "})
        self.assertEqual(options.tolerances.round_tol, 0.01)
        self.assertEqual(options.tolerances.psd_tol, 1e-8)

    def test_cli_overrides_environment(self) -> None:
        options = load_config(environ={"BINCOMP_RANK_TOL": "1e-5"}).with_tolerances(rank_rel_tol=1e-7, psd_tol=None)
        self.assertEqual(options.tolerances.rank_rel_tol, 1e-7)
        self.assertEqual(options.tolerances.psd_tol, 1e-8)

    def test_rejects_tolerance_out_of_range(self) -> None:
        path = self._write_config(
            """
            tolerances:
              psd_tol: 1.5
            """
        )

        with self.assertRaises(ConfigValidationError):
            load_config(path, environ={})

    def test_rejects_unknown_keys(self) -> None:
        path = self._write_config(
            """
            solver:
              method: simplex
            """
        )

        with self.assertRaises(ConfigValidationError):
            load_config(path, environ={})

    def test_rejects_non_numeric_environment(self) -> None:
        with self.assertRaises(ConfigValidationError):
            load_config(environ={"BINCOMP_RANK_TOL": "tight"})

    def test_rejects_boolean_redraws(self) -> None:
        path = self._write_config("max_redraws: true\n")
        with self.assertRaises(ConfigValidationError):
            load_config(path, environ={})

    def test_missing_file(self) -> None:
        with self.assertRaises(ConfigValidationError):
            load_config("does-not-exist.yaml", environ={})


if __name__ == "__main__":
    unittest.main()

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from typing import Optional, Sequence

from bincomp.bcd import binary_component_decomposition, verify_binary_decomposition
from bincomp.certificate_checker import CertificateChecker
from bincomp.config_loader import ConfigValidationError, DecompositionOptions, load_config
from bincomp.errors import BincompError, DecompositionFailed, GenerationFailedError, RankTooLargeError
from bincomp.instance_generator import InstanceGenerator
from bincomp.matrix_io import read_matrix, write_matrix
from bincomp.mimo import (
    assign_pilots,
    denoise_and_normalize,
    detect_active,
    detection_options,
    random_scene,
    simulate_covariance,
)
from bincomp.reporter import Reporter, decomposition_report, write_json
from bincomp.scd import as_correlation_matrix, scd_compressed, sign_component_decomposition, verify_decomposition
from bincomp.schur import as_binary_matrix, as_sign_matrix, make_rng

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_USAGE = 2
EXIT_DECOMPOSITION = 3
EXIT_DETECTION = 4


def run(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        options = _load_options(args)
    except ConfigValidationError as exc:
        print(f"Config validation failed: {exc}")
        return EXIT_USAGE
    return args.handler(args, options)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Sign and binary component decompositions")
    subparsers = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Optional YAML config file")
    common.add_argument("--rank-tol", "--tol", dest="rank_tol", type=float, help="Relative rank tolerance")
    common.add_argument("--psd-tol", type=float, help="PSD tolerance")
    common.add_argument("--round-tol", type=float, help="Sign rounding tolerance")
    common.add_argument("--verbose", action="store_true", help="Log solver progress and per-round records")
    common.add_argument("--no-color", action="store_true", help="Plain terminal report")
    common.add_argument("--report-file", help="Optional path for the text report")

    gen = subparsers.add_parser("gen", parents=[common], help="Generate a random decomposable instance")
    gen.add_argument("--kind", choices=["sign", "binary"], required=True)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--r", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out-prefix", required=True)
    gen.set_defaults(handler=cmd_gen)

    check = subparsers.add_parser("check-schur", parents=[common], help="Test a component file for Schur independence")
    check.add_argument("--input", required=True)
    check.add_argument("--kind", choices=["sign", "binary"], default="sign")
    check.set_defaults(handler=cmd_check_schur)

    scd = subparsers.add_parser("scd", parents=[common], help="Sign component decomposition of a correlation matrix")
    scd.add_argument("--input", required=True)
    scd.add_argument("--algorithm", choices=["full", "compressed"], default="full")
    scd.add_argument("--seed", type=int, default=0)
    scd.add_argument("--out", help="Path of the JSON report")
    scd.set_defaults(handler=cmd_scd)

    bcd = subparsers.add_parser("bcd", parents=[common], help="Binary component decomposition of a PSD matrix")
    bcd.add_argument("--input", required=True)
    bcd.add_argument("--algorithm", choices=["full", "compressed"], default="full")
    bcd.add_argument("--seed", type=int, default=0)
    bcd.add_argument("--out", help="Path of the JSON report")
    bcd.set_defaults(handler=cmd_bcd)

    mimo = subparsers.add_parser("mimo", parents=[common], help="Simulate and detect device activity")
    mimo.add_argument("--devices", type=int, required=True)
    mimo.add_argument("--active", type=int, required=True)
    mimo.add_argument("--antennas", default="exact", help="Antenna count, or `exact` for the exact covariance")
    mimo.add_argument("--noise", type=float, default=0.0)
    mimo.add_argument("--seed", type=int, default=0)
    mimo.add_argument("--out", help="Path of the JSON report")
    mimo.set_defaults(handler=cmd_mimo)

    return parser


def _load_options(args: argparse.Namespace) -> DecompositionOptions:
    options = load_config(args.config)
    return options.with_tolerances(
        rank_rel_tol=args.rank_tol,
        psd_tol=args.psd_tol,
        round_tol=args.round_tol,
    )


def cmd_gen(args: argparse.Namespace, options: DecompositionOptions) -> int:
    generator = InstanceGenerator(options.tolerances)
    try:
        rng = make_rng(args.seed)
        instance = generator.generate(args.kind, args.n, args.r, rng)
    except (RankTooLargeError, GenerationFailedError, ValueError) as exc:
        print(f"Generation failed: {exc}")
        return EXIT_USAGE

    prefix = args.out_prefix
    meta = {"n": instance.n, "r": instance.r, "kind": instance.kind}
    write_matrix(f"{prefix}_components.csv", instance.components, meta, integer=True)
    write_matrix(f"{prefix}_weights.csv", instance.weights, meta)
    write_matrix(f"{prefix}_matrix.csv", instance.matrix, meta)
    print(f"Wrote {prefix}_components.csv, {prefix}_weights.csv, {prefix}_matrix.csv")
    return EXIT_OK


def cmd_check_schur(args: argparse.Namespace, options: DecompositionOptions) -> int:
    try:
        array, _ = read_matrix(args.input)
        if args.kind == "sign":
            components = as_sign_matrix(array)
        else:
            components = as_binary_matrix(array)
    except BincompError as exc:
        print(f"Invalid component file: {exc}")
        return EXIT_USAGE

    checker = CertificateChecker(options.tolerances)
    check = checker.check_sign_schur(components) if args.kind == "sign" else checker.check_binary_schur(components)
    reporter = Reporter(use_color=not args.no_color)
    reporter.add_check("schur", check)
    _show(reporter, args)
    return EXIT_NEGATIVE if reporter.has_failures else EXIT_OK


def cmd_scd(args: argparse.Namespace, options: DecompositionOptions) -> int:
    decompose = sign_component_decomposition if args.algorithm == "full" else scd_compressed
    return _run_decomposition(args, options, f"scd-{args.algorithm}", decompose, kind="sign")


def cmd_bcd(args: argparse.Namespace, options: DecompositionOptions) -> int:
    def decompose(matrix, rng, opts, on_iteration):
        return binary_component_decomposition(matrix, rng, opts, method=args.algorithm, on_iteration=on_iteration)

    return _run_decomposition(args, options, "bcd", decompose, kind="binary")


def _run_decomposition(args, options: DecompositionOptions, algorithm: str, decompose, kind: str) -> int:
    reporter = Reporter(use_color=not args.no_color)
    timings = {}

    started = time.perf_counter()
    try:
        matrix, _ = read_matrix(args.input)
        rng = make_rng(args.seed)
        if kind == "sign":
            matrix = as_correlation_matrix(matrix, options.tolerances).matrix
    except (BincompError, ValueError) as exc:
        print(f"Invalid input: {exc}")
        return EXIT_USAGE
    timings["load"] = _elapsed_ms(started)

    hook = (lambda record: reporter.add_iteration(algorithm, record)) if args.verbose else None
    started = time.perf_counter()
    try:
        result = decompose(matrix, rng, options, hook)
    except DecompositionFailed as exc:
        timings["decompose"] = _elapsed_ms(started)
        reporter.add_custom(algorithm, "decomposition", False, str(exc))
        _show(reporter, args)
        payload = decomposition_report(
            matrix=matrix,
            algorithm=algorithm,
            seed=args.seed,
            timings_ms=timings,
            failure_stage=exc.stage,
            error=str(exc),
        )
        _emit(args.out, payload)
        return EXIT_DECOMPOSITION
    except BincompError as exc:
        print(f"Invalid input: {exc}")
        return EXIT_USAGE
    timings["decompose"] = _elapsed_ms(started)

    started = time.perf_counter()
    if kind == "sign":
        report = verify_decomposition(matrix, result, options.tolerances)
        signed = result
    else:
        report = verify_binary_decomposition(matrix, result, options.tolerances)
        signed = result.sign_decomposition
    timings["verify"] = _elapsed_ms(started)
    timings.update({f"stage_{name}": value for name, value in signed.timings_ms.items()})

    for check in report.checks:
        reporter.add_check(algorithm, check)
    _show(reporter, args)

    payload = decomposition_report(
        matrix=matrix,
        algorithm=algorithm,
        seed=args.seed,
        components=result.components,
        weights=result.weights,
        residual_fro=result.residual_fro,
        schur_certificate=report.schur_independent,
        timings_ms=timings,
        solver_stats=signed.solver_stats,
    )
    _emit(args.out, payload)
    return EXIT_OK


def cmd_mimo(args: argparse.Namespace, options: DecompositionOptions) -> int:
    try:
        antennas = None if args.antennas == "exact" else int(args.antennas)
        rng = make_rng(args.seed)
        codebook = assign_pilots(args.devices, rng)
        scene = random_scene(codebook, args.active, rng, noise_variance=args.noise, antennas=antennas)
    except ValueError as exc:
        print(f"Invalid scenario: {exc}")
        return EXIT_USAGE

    payload = {
        "devices": codebook.devices,
        "n": codebook.n,
        "mode": scene.mode.value,
        "seed": args.seed,
        "true_active": list(scene.active),
        "fading_true": list(scene.fading),
        "detected": [],
        "fading_est": [],
        "unmatched": [],
        "status": "ok",
        "failure_stage": None,
        "error": None,
    }
    reporter = Reporter(use_color=not args.no_color)
    started = time.perf_counter()
    try:
        observation = simulate_covariance(codebook, scene, rng)
        denoised = denoise_and_normalize(observation, options.tolerances)
        reporter.add_check("mimo", CertificateChecker(options.tolerances).check_correlation(denoised.correlation.matrix))
        detect_opts = detection_options(options, observation.mode)
        detection = detect_active(denoised.correlation, denoised.scale, codebook, rng, detect_opts)
    except BincompError as exc:
        partial = getattr(exc, "report", None)
        if partial is not None:
            payload["detected"] = list(partial.active)
            payload["fading_est"] = list(partial.fading_estimate)
            payload["unmatched"] = [list(col) for col in partial.unmatched]
        payload.update(status="failed", failure_stage=getattr(exc, "stage", type(exc).__name__), error=str(exc))
        payload["timings_ms"] = {"detect": _elapsed_ms(started)}
        reporter.add_custom("mimo", "detection", False, str(exc))
        _show(reporter, args)
        _emit(args.out, payload)
        return EXIT_DETECTION

    payload["timings_ms"] = {"detect": _elapsed_ms(started)}
    payload["detected"] = list(detection.active)
    payload["fading_est"] = list(detection.fading_estimate)
    exact = detection.matches(scene)
    if not exact:
        payload["status"] = "mismatch"
    reporter.add_custom(
        "mimo",
        "active_set",
        exact,
        f"true={list(scene.active)}, detected={list(detection.active)}",
    )
    _show(reporter, args)
    _emit(args.out, payload)
    return EXIT_DETECTION if reporter.has_failures else EXIT_OK


def _show(reporter: Reporter, args: argparse.Namespace) -> None:
    reporter.print()
    if args.report_file:
        reporter.write(args.report_file)


def _emit(out: Optional[str], payload: dict) -> None:
    if out:
        write_json(out, payload)
    else:
        print(json.dumps(payload, indent=2, sort_keys=True))


def _elapsed_ms(started: float) -> float:
    return (time.perf_counter() - started) * 1000.0


if __name__ == "__main__":
    sys.exit(run())

from bincomp.bcd import BinaryDecomposition, binary_component_decomposition, verify_binary_decomposition
from bincomp.config_loader import DecompositionOptions, SolverOptions, Tolerances, load_config
from bincomp.errors import BincompError, DecompositionFailed
from bincomp.instance_generator import Instance, InstanceGenerator
from bincomp.mimo import assign_pilots, denoise_and_normalize, detect_active, simulate_covariance
from bincomp.scd import (
    SignDecomposition,
    as_correlation_matrix,
    scd_compressed,
    sign_component_decomposition,
    verify_decomposition,
)
from bincomp.schur import is_schur_independent_binary, is_schur_independent_signs, make_rng, max_schur_rank
from bincomp.sdpcore import SdpProblem, SdpSolution, deflate_zeta, solve_sdp

__all__ = [
    "BinaryDecomposition",
    "BincompError",
    "DecompositionFailed",
    "DecompositionOptions",
    "Instance",
    "InstanceGenerator",
    "SdpProblem",
    "SdpSolution",
    "SignDecomposition",
    "SolverOptions",
    "Tolerances",
    "as_correlation_matrix",
    "assign_pilots",
    "binary_component_decomposition",
    "deflate_zeta",
    "denoise_and_normalize",
    "detect_active",
    "is_schur_independent_binary",
    "is_schur_independent_signs",
    "load_config",
    "make_rng",
    "max_schur_rank",
    "scd_compressed",
    "sign_component_decomposition",
    "simulate_covariance",
    "solve_sdp",
    "verify_binary_decomposition",
    "verify_decomposition",
]

"""Activity detection for a stylized massive-MIMO uplink.

Each device owns a ±1 pilot of length n = ceil(log2 N) + 1. The base station
observes the covariance of the received pilots across M antennas; the active
devices are the sign components of the denoised, normalized covariance.
The channel is real-valued throughout.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from bincomp.config_loader import DEFAULT_OPTIONS, DEFAULT_TOLERANCES, DecompositionOptions, Tolerances
from bincomp.errors import DiagonalNotConstantError, NoEigengapError, UnmatchedComponentError
from bincomp.matcore import as_symmetric, sym_eig
from bincomp.scd import CorrelationMatrix, SignDecomposition, as_correlation_matrix, scd_compressed

log = logging.getLogger(__name__)

EIGENGAP_RATIO = 10.0
EXACT_DIAG_TOL = 1e-10
EMPIRICAL_DIAG_TOL = 1e-2
FADING_RANGE = (0.5, 2.0)
EMPIRICAL_LIMITS = {
    "rank_rel_tol": 2e-2,
    "round_tol": 1e-1,
    "rank_one_ratio": 5e-2,
    "extraction_tol": 1e-1,
    "residual_tol": 5e-2,
}


class ObservationMode(str, Enum):
    EXACT = "exact"
    EMPIRICAL = "empirical"


def pilot_length(devices: int) -> int:
    """ceil(log2 N) + 1, computed on integers."""
    if devices < 1:
        raise ValueError(f"device count must be positive, got {devices}")
    return (devices - 1).bit_length() + 1


@dataclass(frozen=True)
class PilotCodebook:
    pilots: np.ndarray  # n x N
    lookup: Dict[Tuple[int, ...], int] = field(repr=False)

    @property
    def devices(self) -> int:
        return int(self.pilots.shape[1])

    @property
    def n(self) -> int:
        return int(self.pilots.shape[0])

    def device_for(self, s: Sequence[int]) -> Optional[int]:
        """Device whose pilot equals ±s, if any."""
        vec = tuple(int(v) for v in s)
        if vec and vec[0] < 0:
            vec = tuple(-v for v in vec)
        return self.lookup.get(vec)


def assign_pilots(devices: int, rng: np.random.Generator) -> PilotCodebook:
    """Distinct ±-classes for every device, with a random global sign per pilot."""
    if devices < 2:
        raise ValueError(f"need at least 2 devices, got {devices}")
    n = pilot_length(devices)
    classes = rng.choice(2 ** (n - 1), size=devices, replace=False)

    # Class c: leading +1, then bit b of c set -> entry b + 1 is -1.
    bits = (classes[None, :] >> np.arange(n - 1)[:, None]) & 1
    canonical = np.vstack([np.ones((1, devices), dtype=np.int64), 1 - 2 * bits.astype(np.int64)])
    flips = rng.integers(0, 2, size=devices, dtype=np.int64) * 2 - 1
    pilots = canonical * flips
    pilots.flags.writeable = False

    lookup = {tuple(int(v) for v in canonical[:, k]): k for k in range(devices)}
    return PilotCodebook(pilots=pilots, lookup=lookup)


@dataclass(frozen=True)
class ChannelScene:
    active: Tuple[int, ...]
    fading: Tuple[float, ...]
    noise_variance: float = 0.0
    antennas: Optional[int] = None  # None: exact covariance

    def __post_init__(self) -> None:
        if len(self.active) != len(self.fading):
            raise ValueError("one fading coefficient per active device is required")
        if len(set(self.active)) != len(self.active):
            raise ValueError("active devices must be distinct")
        if any(t <= 0 for t in self.fading):
            raise ValueError("fading coefficients must be positive")
        if self.noise_variance < 0:
            raise ValueError("noise variance must be nonnegative")
        if self.antennas is not None and self.antennas < 1:
            raise ValueError("antenna count must be positive")

    @property
    def mode(self) -> ObservationMode:
        return ObservationMode.EXACT if self.antennas is None else ObservationMode.EMPIRICAL

    def fading_by_device(self) -> Dict[int, float]:
        return dict(zip(self.active, self.fading))


def random_scene(
    codebook: PilotCodebook,
    active_count: int,
    rng: np.random.Generator,
    noise_variance: float = 0.0,
    antennas: Optional[int] = None,
    fading_range: Tuple[float, float] = FADING_RANGE,
) -> ChannelScene:
    if not 0 <= active_count <= codebook.devices:
        raise ValueError(f"cannot activate {active_count} of {codebook.devices} devices")
    active = np.sort(rng.choice(codebook.devices, size=active_count, replace=False))
    fading = rng.uniform(fading_range[0], fading_range[1], size=active_count)
    return ChannelScene(
        active=tuple(int(k) for k in active),
        fading=tuple(float(t) for t in fading),
        noise_variance=noise_variance,
        antennas=antennas,
    )


@dataclass(frozen=True)
class CovarianceObservation:
    matrix: np.ndarray
    mode: ObservationMode
    antennas: Optional[int] = None


def simulate_covariance(codebook: PilotCodebook, scene: ChannelScene, rng: np.random.Generator) -> CovarianceObservation:
    n = codebook.n
    pilots = codebook.pilots[:, list(scene.active)].astype(float)
    tau = np.array(scene.fading, dtype=float)

    if scene.mode is ObservationMode.EXACT:
        cov = (pilots * tau) @ pilots.T + scene.noise_variance * np.eye(n)
    else:
        m = scene.antennas
        fading = rng.standard_normal((len(scene.active), m))
        noise = rng.standard_normal((n, m))
        received = (pilots * np.sqrt(tau)) @ fading + np.sqrt(scene.noise_variance) * noise
        cov = received @ received.T / m
    cov = (cov + cov.T) / 2.0
    cov.flags.writeable = False
    return CovarianceObservation(matrix=cov, mode=scene.mode, antennas=scene.antennas)


def covariance_error(observation: CovarianceObservation, codebook: PilotCodebook, scene: ChannelScene) -> float:
    """‖Y - E[Y]‖_F / n."""
    expected = simulate_covariance(codebook, ChannelScene(scene.active, scene.fading, scene.noise_variance), None)
    return float(np.linalg.norm(observation.matrix - expected.matrix)) / codebook.n


@dataclass(frozen=True)
class DenoisedCovariance:
    correlation: CorrelationMatrix
    scale: float
    noise_estimate: float
    rank: int


def denoise_and_normalize(observation: CovarianceObservation, tol: Tolerances = DEFAULT_TOLERANCES) -> DenoisedCovariance:
    """Strip the isotropic noise floor and rescale to unit diagonal.

    The signal rank is found differently per mode. An exact covariance has a
    flat floor: every eigenvalue within rank_rel_tol·λ_max of the smallest is
    noise. An empirical one has a scattered floor, so the rank sits at the
    largest ratio λ_i / λ_(i+1), which must exceed 10. Fewer antennas than
    pilot entries leave the floor unobserved and raise NoEigengapError.

    The signal part Ȳ is normalized as D^(-1/2) Ȳ D^(-1/2) with D = diag(Ȳ),
    after checking that diag(Ȳ)/scale is within tolerance of 1.
    """
    decomp = sym_eig(as_symmetric(observation.matrix, tol))
    lam = decomp.eigenvalues
    n = lam.size
    top = float(lam[0])
    if top <= 0:
        raise NoEigengapError("covariance has no positive eigenvalue")

    if observation.mode is ObservationMode.EXACT:
        rank = int(np.count_nonzero(lam - lam[-1] > tol.rank_rel_tol * top))
        if rank == 0:
            raise NoEigengapError("spectrum is flat: nothing above the noise floor")
    else:
        if observation.antennas is not None and observation.antennas < n:
            raise NoEigengapError(f"{observation.antennas} antenna(s) for pilots of length {n}: noise floor not observable")
        floor = np.maximum(lam[1:], tol.rank_rel_tol * top)
        ratios = lam[:-1] / floor
        best = int(np.argmax(ratios)) if ratios.size else 0
        if not ratios.size or ratios[best] <= EIGENGAP_RATIO:
            raise NoEigengapError(
                f"largest eigenvalue ratio {ratios[best] if ratios.size else 0:.2f} does not exceed {EIGENGAP_RATIO:g}"
            )
        rank = best + 1

    noise = float(np.mean(lam[rank:])) if rank < n else 0.0
    vectors = decomp.eigenvectors[:, :rank]
    signal = (vectors * (lam[:rank] - noise)) @ vectors.T
    signal = (signal + signal.T) / 2.0
    diag = np.diag(signal)
    scale = float(np.mean(diag))
    if scale <= 0 or float(np.min(diag)) <= 0:
        raise NoEigengapError("signal part has no positive mass on every entry")

    diag_tol = EXACT_DIAG_TOL if observation.mode is ObservationMode.EXACT else EMPIRICAL_DIAG_TOL
    deviation = float(np.max(np.abs(diag / scale - 1.0)))
    if deviation > diag_tol:
        raise DiagonalNotConstantError(f"normalized diagonal deviates from 1 by {deviation:.3e}")
    inv_sqrt = 1.0 / np.sqrt(diag)
    normalized = signal * np.outer(inv_sqrt, inv_sqrt)
    log.debug("denoised: rank %d, noise %.6g, scale %.6g, diagonal spread %.2e", rank, noise, scale, deviation)
    return DenoisedCovariance(
        correlation=as_correlation_matrix((normalized + normalized.T) / 2.0, tol),
        scale=scale,
        noise_estimate=noise,
        rank=rank,
    )


def detection_options(options: DecompositionOptions, mode: ObservationMode) -> DecompositionOptions:
    """Options for decomposing a denoised covariance observed in `mode`.

    Empirical correlations are off by sampling error up to the diagonal
    tolerance, so their rank cut, rounding and residual limits are widened
    to at least EMPIRICAL_LIMITS. Looser user settings are kept.
    """
    if mode is ObservationMode.EXACT:
        return options
    tol = options.tolerances
    return options.with_tolerances(**{name: max(getattr(tol, name), value) for name, value in EMPIRICAL_LIMITS.items()})


@dataclass(frozen=True)
class DetectionReport:
    active: Tuple[int, ...]
    fading_estimate: Tuple[float, ...]
    unmatched: Tuple[Tuple[int, ...], ...] = ()
    decomposition: Optional[SignDecomposition] = None

    def matches(self, scene: ChannelScene) -> bool:
        return not self.unmatched and set(self.active) == set(scene.active)


def detect_active(
    correlation,
    scale: float,
    codebook: PilotCodebook,
    rng: np.random.Generator,
    options: Optional[DecompositionOptions] = None,
) -> DetectionReport:
    """Match each sign component of the normalized covariance to a pilot, up to sign."""
    opts = options or DEFAULT_OPTIONS
    corr = as_correlation_matrix(correlation, opts.tolerances)
    decomposition = scd_compressed(corr, rng, opts)

    found: Dict[int, float] = {}
    unmatched = []
    for weight, column in decomposition.pairs():
        device = codebook.device_for(column)
        if device is None:
            unmatched.append(column)
        else:
            found[device] = scale * weight

    active = tuple(sorted(found))
    report = DetectionReport(
        active=active,
        fading_estimate=tuple(found[k] for k in active),
        unmatched=tuple(unmatched),
        decomposition=decomposition,
    )
    if unmatched:
        raise UnmatchedComponentError(f"{len(unmatched)} recovered component(s) match no pilot", report)
    return report


def detect_scene(
    codebook: PilotCodebook,
    scene: ChannelScene,
    rng: np.random.Generator,
    options: Optional[DecompositionOptions] = None,
) -> DetectionReport:
    """Simulate, denoise and detect in one pass."""
    opts = options or DEFAULT_OPTIONS
    observation = simulate_covariance(codebook, scene, rng)
    denoised = denoise_and_normalize(observation, opts.tolerances)
    options = detection_options(opts, observation.mode)
    return detect_active(denoised.correlation, denoised.scale, codebook, rng, options)

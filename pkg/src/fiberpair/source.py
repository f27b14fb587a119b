"""Photon-pair source model: loss budget, spectral selection, pair rates,
and the bidirectionally pumped (Sagnac) polarization-entangled state."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .quantum import DensityMatrix, projector

PAIR_MODELS = ("poisson", "thermal", "single")


@dataclass(frozen=True)
class EfficiencyChain:
    """Ordered loss stages of one arm, e.g. fiber facet, lens, filters, coupling."""

    stages: tuple[tuple[str, float], ...] = ()

    def __post_init__(self):
        stages = tuple((str(label), float(eff)) for label, eff in self.stages)
        for label, eff in stages:
            if not 0.0 <= eff <= 1.0:
                raise ValueError(f"stage {label!r}: efficiency {eff} outside [0, 1]")
        object.__setattr__(self, "stages", stages)

    @classmethod
    def of(cls, *pairs: tuple[str, float]) -> "EfficiencyChain":
        return cls(tuple(pairs))

    def __add__(self, other: "EfficiencyChain") -> "EfficiencyChain":
        return EfficiencyChain(self.stages + other.stages)

    def append(self, label: str, eff: float) -> "EfficiencyChain":
        return EfficiencyChain(self.stages + ((label, eff),))

    @property
    def labels(self) -> list[str]:
        return [s[0] for s in self.stages]

    def __len__(self):
        return len(self.stages)


def chain_product(chain: EfficiencyChain | Iterable[float]) -> float:
    if isinstance(chain, EfficiencyChain):
        effs = [e for _, e in chain.stages]
    else:
        effs = [float(e) for e in chain]
    return float(math.prod(effs))


def pair_extraction(signal: EfficiencyChain, idler: EfficiencyChain) -> float:
    return chain_product(signal) * chain_product(idler)


@dataclass(frozen=True)
class SpectralConfig:
    """Filter pass band against the photon bandwidth (widths in nm).

    ``grating_peak_efficiency`` is the box-profile averaged reflectance of
    one grating, not its peak value.
    """

    filter_fwhm: float
    photon_fwhm: float
    grating_peak_efficiency: float = 1.0
    grating_passes: int = 1
    extra_transmission_loss: float = 0.0

    def __post_init__(self):
        if self.filter_fwhm <= 0 or self.photon_fwhm <= 0:
            raise ValueError("filter and photon widths must be positive")
        if not 0 <= self.grating_peak_efficiency <= 1:
            raise ValueError("grating efficiency outside [0, 1]")
        if int(self.grating_passes) != self.grating_passes or self.grating_passes < 1:
            raise ValueError("grating_passes must be an integer >= 1")
        if not 0 <= self.extra_transmission_loss <= 1:
            raise ValueError("extra_transmission_loss outside [0, 1]")


def spectral_efficiency(cfg: SpectralConfig) -> float:
    band = min(1.0, cfg.filter_fwhm / cfg.photon_fwhm)
    return band * cfg.grating_peak_efficiency ** cfg.grating_passes * (1 - cfg.extra_transmission_loss)


def photon_bandwidth(filter_fwhm: float, pump_induced_fwhm: float) -> float:
    """Photon FWHM from filter and pump contributions added in quadrature."""
    if filter_fwhm <= 0 or pump_induced_fwhm < 0:
        raise ValueError("widths must be positive")
    return math.hypot(filter_fwhm, pump_induced_fwhm)


def pump_induced_width(filter_fwhm: float, photon_fwhm: float) -> float:
    """Inverse of :func:`photon_bandwidth`."""
    if photon_fwhm < filter_fwhm:
        raise ValueError("photon narrower than the filter")
    return math.sqrt(photon_fwhm**2 - filter_fwhm**2)


@dataclass(frozen=True)
class SourceConfig:
    """Pump and emission parameters.

    Pair number per pulse scales with the square of pump power, Raman singles
    linearly. ``raman_singles_per_pulse`` is (signal, idler) photons per pulse
    at 1 mW entering each arm, before the arm's losses.
    """

    pump_power: float = 1.0  # mW
    rep_rate: float = 76e6  # Hz
    mean_pairs_per_pulse_at_1mW: float = 0.0
    pair_number_model: str = "poisson"
    raman_singles_per_pulse: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.rep_rate <= 0:
            raise ValueError("rep_rate must be positive")
        if self.pump_power < 0 or self.mean_pairs_per_pulse_at_1mW < 0:
            raise ValueError("pump power and pair rate must be non-negative")
        if self.pair_number_model not in PAIR_MODELS:
            raise ValueError(f"pair_number_model must be one of {PAIR_MODELS}")
        raman = tuple(float(r) for r in self.raman_singles_per_pulse)
        if len(raman) != 2 or min(raman) < 0:
            raise ValueError("raman_singles_per_pulse needs two non-negative values")
        object.__setattr__(self, "raman_singles_per_pulse", raman)


def mean_pairs(cfg: SourceConfig, pump_power: float | None = None) -> float:
    p = cfg.pump_power if pump_power is None else pump_power
    if p < 0:
        raise ValueError("pump power must be non-negative")
    return cfg.mean_pairs_per_pulse_at_1mW * p * p


def raman_mean(cfg: SourceConfig, arm: int, pump_power: float | None = None) -> float:
    p = cfg.pump_power if pump_power is None else pump_power
    return cfg.raman_singles_per_pulse[arm] * p


def calibrate_mean_pairs(detected_rate: float, pump_power: float, rep_rate: float,
                         pair_detection_efficiency: float) -> float:
    """Mean pairs per pulse at 1 mW that reproduces a detected pair rate.

    Uses the low-gain relation rate = rep_rate * mu * eta_pair, mu ~ P^2.
    """
    mu = detected_rate / (rep_rate * pair_detection_efficiency)
    return mu / pump_power**2


# ---------------------------------------------------------------------------
# Sagnac loop
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SagnacConfig:
    """Bidirectional pumping of one fiber axis inside a PBS loop.

    ``direction_imbalance`` is the CW/CCW pair-generation ratio at equal pump
    power; ``pump_split_ratio`` is the pump fraction sent clockwise (the
    direction producing |HH>).
    """

    direction_imbalance: float = 1.0
    pump_split_ratio: float = 0.5
    relative_phase: float = np.pi
    polarization_extinction: float = math.inf

    def __post_init__(self):
        if self.direction_imbalance <= 0:
            raise ValueError("direction_imbalance must be positive")
        if not 0 < self.pump_split_ratio < 1:
            raise ValueError("pump_split_ratio must lie strictly inside (0, 1)")
        if self.polarization_extinction < 1:
            raise ValueError("polarization_extinction must be >= 1")


def balancing_split(direction_imbalance: float) -> float:
    """Pump split ratio that equalizes the two directions' pair rates."""
    return 1.0 / (1.0 + math.sqrt(direction_imbalance))


def direction_weights(cfg: SagnacConfig) -> tuple[float, float]:
    """Relative pair rates (CW -> HH, CCW -> VV); quadratic in each direction's pump."""
    s = cfg.pump_split_ratio
    cw = cfg.direction_imbalance * s * s
    ccw = (1 - s) ** 2
    return cw, ccw


def sagnac_mean_pairs(cfg: SagnacConfig, source: SourceConfig, pump_power: float) -> tuple[float, float]:
    cw, ccw = direction_weights(cfg)
    k = source.mean_pairs_per_pulse_at_1mW * pump_power**2
    return k * cw, k * ccw


def sagnac_state(cfg: SagnacConfig) -> DensityMatrix:
    cw, ccw = direction_weights(cfg)
    alpha = math.sqrt(cw / (cw + ccw))
    beta = math.sqrt(ccw / (cw + ccw))
    ket = np.array([alpha, 0, 0, np.exp(1j * cfg.relative_phase) * beta], dtype=complex)
    leak = 1.0 / cfg.polarization_extinction
    rho = (1 - leak) * projector(ket)
    rho[1, 1] += leak / 2
    rho[2, 2] += leak / 2
    return DensityMatrix(rho)


def coherence_fwhm_fs(bandwidth_nm: float, wavelength_nm: float, tbp: float = 2 * math.log(2) / math.pi) -> float:
    """Transform-limited FWHM duration (fs) of a Gaussian spectrum."""
    c = 299_792_458.0
    dnu = c * bandwidth_nm * 1e-9 / (wavelength_nm * 1e-9) ** 2
    return tbp / dnu * 1e15


def hom_dip_fwhm_fs(bandwidth_nm: float, wavelength_nm: float) -> float:
    """FWHM in delay of the two-photon dip for identical pure Gaussian photons.

    The dip follows the squared overlap of the two wavepackets, which is
    sqrt(2) wider than a single transform-limited pulse.
    """
    return math.sqrt(2) * coherence_fwhm_fs(bandwidth_nm, wavelength_nm)

"""Minimal two-photon polarization tomography with tetrahedral projectors.

Each photon is projected on four states whose Stokes vectors form a regular
tetrahedron; the 16 coincidence rates determine the 16 two-photon Stokes
parameters by linear inversion.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .counting import ClickModel, _background, run_summary
from .quantum import (
    PAULI,
    PHI_MINUS,
    AnalyzerSetting,
    DensityMatrix,
    JonesVector,
    StokesVector,
    analyzer_projector,
    fidelity,
    nearest_physical,
    pauli_expand,
    solve_analyzer,
    tangle,
)
from .rng import stream
from .source import raman_mean, sagnac_mean_pairs, sagnac_state

TETRAHEDRON_STOKES = np.array([
    [1, 1, 1],
    [1, -1, -1],
    [-1, 1, -1],
    [-1, -1, 1],
]) / math.sqrt(3)


class SingularInstrumentError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class TetrahedronSet:
    settings: tuple[AnalyzerSetting, ...]
    projectors: tuple[JonesVector, ...]

    @property
    def stokes(self) -> np.ndarray:
        return np.array([p.to_stokes().array for p in self.projectors])

    def to_json(self) -> list:
        return [
            {"qwp_angle": s.qwp_angle, "hwp_angle": s.hwp_angle,
             "stokes": [float(x) for x in p.to_stokes().array]}
            for s, p in zip(self.settings, self.projectors)
        ]


@lru_cache(maxsize=1)
def tetrahedron() -> TetrahedronSet:
    """Canonical tetrahedron with plate angles solved numerically."""
    settings = []
    projectors = []
    for s in TETRAHEDRON_STOKES:
        target = StokesVector(*s).to_jones()
        setting = solve_analyzer(target)
        settings.append(setting)
        projectors.append(analyzer_projector(setting))
    return TetrahedronSet(tuple(settings), tuple(projectors))


def from_projectors(projectors: Sequence[JonesVector]) -> TetrahedronSet:
    """Projector set without plate angles (for testing other geometries)."""
    projectors = tuple(p.normalize() for p in projectors)
    settings = tuple(AnalyzerSetting(0.0, 0.0) for _ in projectors)
    return TetrahedronSet(settings, projectors)


def _stokes_rows(tet: TetrahedronSet) -> np.ndarray:
    """a[i, m] = <psi_i| sigma_m |psi_i>."""
    return np.array([[np.vdot(p.array, s @ p.array).real for s in PAULI] for p in tet.projectors])


def instrument_matrix(tet: TetrahedronSet) -> np.ndarray:
    """Maps two-photon Stokes parameters S_mn to projection probabilities p_ij.

    Row (i, j) is the projector P_i (x) P_j written in the Pauli basis.
    """
    a = _stokes_rows(tet)
    return np.kron(a, a) / 4


def condition_number(tet: TetrahedronSet) -> float:
    return float(np.linalg.cond(instrument_matrix(tet)))


def expected_probabilities(rho, tet: TetrahedronSet) -> np.ndarray:
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    out = np.empty((4, 4))
    for i, pi in enumerate(tet.projectors):
        for j, pj in enumerate(tet.projectors):
            k = np.kron(pi.array, pj.array)
            out[i, j] = np.vdot(k, m @ k).real
    return out


@dataclass(frozen=True, eq=False)
class TomogramCounts:
    counts: np.ndarray  # [signal setting, idler setting]
    pulses: np.ndarray  # pulses integrated per setting
    seed: int | None = None
    accidentals: np.ndarray | None = None

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.shape != (4, 4) or (c < 0).any():
            raise ValueError("counts must be a non-negative 4x4 array")
        p = np.broadcast_to(np.asarray(self.pulses, dtype=np.int64), (4, 4)).copy()
        object.__setattr__(self, "counts", c)
        object.__setattr__(self, "pulses", p)

    def to_json(self, tet: TetrahedronSet | None = None) -> dict:
        out = {
            "counts": np.asarray(self.counts).astype(int).tolist(),
            "pulses_per_setting": self.pulses.astype(int).tolist(),
            "seed": self.seed,
        }
        if self.accidentals is not None:
            out["accidentals"] = np.asarray(self.accidentals).astype(int).tolist()
        if tet is not None:
            out["settings"] = tet.to_json()
        return out

    @classmethod
    def from_json(cls, d: dict) -> "TomogramCounts":
        acc = d.get("accidentals")
        return cls(np.array(d["counts"]), np.array(d["pulses_per_setting"]), d.get("seed"),
                   None if acc is None else np.array(acc))


@dataclass(frozen=True)
class TomoSource:
    """Pair source seen by the two analyzers."""

    mean_pairs: float
    pair_model: str = "poisson"
    eta_signal: float = 1.0
    eta_idler: float = 1.0
    noise_signal: float = 0.0
    noise_idler: float = 0.0


def tomo_source(cfg) -> tuple[DensityMatrix, TomoSource]:
    """Sagnac state and source parameters for the configured loop."""
    tomo = cfg.tomography()
    cw, ccw = sagnac_mean_pairs(cfg.sagnac, cfg.source, tomo.pump_power)
    ds, di = cfg.detector("signal"), cfg.detector("idler")
    es = cfg.eta_signal * ds.efficiency * tomo.mode_transmission
    ei = cfg.eta_idler * di.efficiency * tomo.mode_transmission
    # unpolarized Raman light passes an analyzer half the time
    src = TomoSource(
        mean_pairs=cw + ccw,
        pair_model=cfg.source.pair_number_model,
        eta_signal=es,
        eta_idler=ei,
        noise_signal=_background(ds.dark_count_prob_per_pulse,
                                 0.5 * raman_mean(cfg.source, 0, tomo.pump_power) * es),
        noise_idler=_background(di.dark_count_prob_per_pulse,
                                0.5 * raman_mean(cfg.source, 1, tomo.pump_power) * ei),
    )
    return sagnac_state(cfg.sagnac), src


def setting_model(rho, tet: TetrahedronSet, i: int, j: int, src: TomoSource) -> ClickModel:
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    ps, pi_ = tet.projectors[i].array, tet.projectors[j].array
    p_both = np.vdot(np.kron(ps, pi_), m @ np.kron(ps, pi_)).real
    # marginals: trace out the other photon
    proj_s = np.kron(np.outer(ps, ps.conj()), np.eye(2))
    proj_i = np.kron(np.eye(2), np.outer(pi_, pi_.conj()))
    p_s = np.trace(proj_s @ m).real
    p_i = np.trace(proj_i @ m).real
    es, ei = src.eta_signal, src.eta_idler
    both = max(0.0, es * ei * p_both)
    return ClickModel(
        channels=("signal", "idler"),
        mean_pairs=src.mean_pairs,
        pair_model=src.pair_model,
        outcomes=((0b11, both), (0b01, max(0.0, es * p_s - both)), (0b10, max(0.0, ei * p_i - both))),
        noise=(src.noise_signal, src.noise_idler),
    )


def acquire_tomogram(rho, tet: TetrahedronSet, pulses_per_setting: int, seed: int,
                     source: TomoSource | None = None, workers: int = 1) -> TomogramCounts:
    """Simulated 16-setting coincidence acquisition.

    Without a source model every pulse carries exactly one pair, detected with
    unit efficiency and no background, so each count is Binomial(pulses, p_ij).
    With a source model each setting runs the pulse-train engine and the raw
    coincidence count includes accidentals.
    """
    counts = np.zeros((4, 4), dtype=np.int64)
    if source is None:
        probs = np.clip(expected_probabilities(rho, tet), 0, 1)
        for i in range(4):
            for j in range(4):
                counts[i, j] = stream(seed, "tomo:ideal", i, j).binomial(pulses_per_setting, probs[i, j])
        return TomogramCounts(counts, np.full((4, 4), pulses_per_setting), seed)
    acc = np.zeros((4, 4), dtype=np.int64)
    for i in range(4):
        for j in range(4):
            model = setting_model(rho, tet, i, j, source)
            summary = run_summary(model, seed, pulses_per_setting, workers, tag=f"tomo:{i}:{j}")
            counts[i, j], acc[i, j] = summary.start_stop("signal", "idler")
    return TomogramCounts(counts, np.full((4, 4), pulses_per_setting), seed, acc)


@dataclass(frozen=True, eq=False)
class Reconstruction:
    rho_raw: np.ndarray
    rho: DensityMatrix
    stokes: np.ndarray
    condition_number: float


def reconstruct(counts: TomogramCounts, tet: TetrahedronSet) -> Reconstruction:
    """Linear inversion, then clip-and-renormalize to a physical state.

    Rates are counts per integrated pulse, so settings may be integrated for
    different durations; the overall scale is fixed by S_00 = 1.
    """
    c = np.asarray(counts.counts, dtype=float)
    if c.sum() <= 0:
        raise ValueError("tomogram has no counts")
    a = instrument_matrix(tet)
    cond = float(np.linalg.cond(a))
    if not np.isfinite(cond) or cond > 1e8:
        raise SingularInstrumentError(f"instrument matrix is singular (condition {cond:.3g})")
    rates = c / counts.pulses
    s = np.linalg.solve(a, rates.ravel()).reshape(4, 4)
    if s[0, 0] <= 0:
        raise ValueError("reconstructed normalization is not positive")
    s = s / s[0, 0]
    raw = pauli_expand(s)
    raw = (raw + raw.conj().T) / 2
    return Reconstruction(raw, nearest_physical(raw), s, cond)


@dataclass(frozen=True)
class StateReport:
    fidelity: float
    tangle: float
    purity: float
    stderr: dict = field(default_factory=dict)

    def as_tuple(self):
        return self.fidelity, self.tangle, self.purity


def _metrics(rho, target) -> tuple[float, float, float]:
    return fidelity(rho, target), tangle(rho), rho.purity()


def characterize(rho: DensityMatrix, counts: TomogramCounts | None = None,
                 tet: TetrahedronSet | None = None, n_boot: int = 200, seed: int = 0,
                 target: np.ndarray = PHI_MINUS) -> StateReport:
    """Fidelity to the target Bell state, tangle and purity.

    Given the raw counts, standard errors come from a Poisson bootstrap of
    every count followed by a full reconstruction.
    """
    f, t, p = _metrics(rho, target)
    stderr = {}
    if counts is not None and n_boot > 1:
        tet = tet or tetrahedron()
        rng = stream(seed, "tomo:bootstrap")
        samples = []
        for _ in range(n_boot):
            resampled = TomogramCounts(rng.poisson(np.asarray(counts.counts, dtype=float)), counts.pulses)
            samples.append(_metrics(reconstruct(resampled, tet).rho, target))
        sd = np.std(np.array(samples), axis=0, ddof=1)
        stderr = {"fidelity": float(sd[0]), "tangle": float(sd[1]), "purity": float(sd[2])}
    return StateReport(f, t, p, stderr)

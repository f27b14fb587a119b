"""Experiment configuration: JSON loading, schema validation with key paths.

One file describes the source; the ``tomography`` and ``hom`` sections are
optional and only validated by the commands that need them.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .source import (
    PAIR_MODELS,
    EfficiencyChain,
    SagnacConfig,
    SourceConfig,
    SpectralConfig,
    chain_product,
    hom_dip_fwhm_fs,
)


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


_MISSING = object()


def _get(d: dict, key: str, path: str, default=_MISSING):
    if not isinstance(d, dict):
        raise ConfigError(path, "expected an object")
    if key not in d:
        if default is _MISSING:
            raise ConfigError(f"{path}.{key}" if path else key, "missing required key")
        return default
    return d[key]


def _number(d, key, path, lo=None, hi=None, default=_MISSING, lo_open=False) -> float:
    where = f"{path}.{key}" if path else key
    val = _get(d, key, path, default)
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(where, f"expected a number, got {val!r}")
    val = float(val)
    if math.isnan(val):
        raise ConfigError(where, "NaN is not allowed")
    if lo is not None and (val < lo or (lo_open and val == lo)):
        raise ConfigError(where, f"must be {'>' if lo_open else '>='} {lo}, got {val}")
    if hi is not None and val > hi:
        raise ConfigError(where, f"must be <= {hi}, got {val}")
    return val


def _prob(d, key, path, default=_MISSING) -> float:
    return _number(d, key, path, 0.0, 1.0, default)


def _int(d, key, path, lo=0, default=_MISSING) -> int:
    where = f"{path}.{key}" if path else key
    val = _number(d, key, path, lo, None, default)
    if val != int(val):
        raise ConfigError(where, f"expected an integer, got {val}")
    return int(val)


@dataclass(frozen=True)
class DetectorConfig:
    efficiency: float = 1.0
    dark_count_prob_per_pulse: float = 0.0

    def __post_init__(self):
        for name in ("efficiency", "dark_count_prob_per_pulse"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} outside [0, 1]")


def _detector(d, path) -> DetectorConfig:
    return DetectorConfig(_prob(d, "efficiency", path), _prob(d, "dark_count_prob_per_pulse", path, 0.0))


def _chain(items, path) -> EfficiencyChain:
    if not isinstance(items, list):
        raise ConfigError(path, "expected a list of {label, efficiency} stages")
    stages = []
    for k, item in enumerate(items):
        p = f"{path}[{k}]"
        label = _get(item, "label", p)
        stages.append((str(label), _prob(item, "efficiency", p)))
    return EfficiencyChain(tuple(stages))


def _spectral(d, path) -> SpectralConfig:
    return SpectralConfig(
        filter_fwhm=_number(d, "filter_fwhm", path, 0, lo_open=True),
        photon_fwhm=_number(d, "photon_fwhm", path, 0, lo_open=True),
        grating_peak_efficiency=_prob(d, "grating_peak_efficiency", path, 1.0),
        grating_passes=_int(d, "grating_passes", path, 1, 1),
        extra_transmission_loss=_prob(d, "extra_transmission_loss", path, 0.0),
    )


@dataclass(frozen=True)
class TomographySettings:
    pump_power: float = 1.0  # mW before the loop PBS
    pulses_per_setting: int = 10**8
    mode_transmission: float = 1.0  # extra per-photon loss of the loop geometry
    bootstrap: int = 200


@dataclass(frozen=True)
class HomSettings:
    pump_power_per_direction: float = 1.0
    mean_pairs_per_pulse_at_1mW: float = 0.0
    direction_ratio: float = 1.0  # CCW/CW pair rate
    signal_transmission: float = 1.0
    idler_transmission: float = 1.0
    mode_overlap: float = 1.0
    coherence_fwhm_fs: float = 1000.0
    delays_fs: tuple[float, ...] = ()
    pulses_per_point: int = 10**9
    background_pulses: int = 10**9
    baseline_min_delay_fs: float | None = None
    bootstrap: int = 200


@dataclass(frozen=True)
class ExperimentConfig:
    source: SourceConfig
    spectral_signal: SpectralConfig
    spectral_idler: SpectralConfig
    chain_signal: EfficiencyChain
    chain_idler: EfficiencyChain
    detectors: dict[str, DetectorConfig]
    seed: int | None = None
    pulses: int = 10**8
    sagnac: SagnacConfig | None = None
    raw: dict = field(default_factory=dict, compare=False, repr=False)
    wavelengths: tuple[float, float] = (690.4, 801.2)

    # derived efficiencies -------------------------------------------------
    @property
    def eta_signal(self) -> float:
        return chain_product(self.chain_signal)

    @property
    def eta_idler(self) -> float:
        return chain_product(self.chain_idler)

    def detector(self, name: str) -> DetectorConfig:
        if name == "idler_b" and "idler_b" not in self.detectors:
            return self.detectors["idler"]
        return self.detectors[name]

    @property
    def pair_detection_efficiency(self) -> float:
        return (self.eta_signal * self.detector("signal").efficiency
                * self.eta_idler * self.detector("idler").efficiency)

    def with_source(self, **changes) -> "ExperimentConfig":
        from dataclasses import replace
        return replace(self, source=replace(self.source, **changes))

    def config_hash(self) -> str:
        return config_hash(self.raw)

    # lazily validated sections ---------------------------------------------
    def tomography(self) -> TomographySettings:
        if self.sagnac is None:
            raise ConfigError("sagnac", "missing required section")
        d = self.raw.get("tomography", {})
        p = "tomography"
        return TomographySettings(
            pump_power=_number(d, "pump_power", p, 0, default=1.0),
            pulses_per_setting=_int(d, "pulses_per_setting", p, 1, 10**8),
            mode_transmission=_prob(d, "mode_transmission", p, 1.0),
            bootstrap=_int(d, "bootstrap", p, 0, 200),
        )

    def hom(self) -> HomSettings:
        if "hom" not in self.raw:
            raise ConfigError("hom", "missing required section")
        d = self.raw["hom"]
        p = "hom"
        if "coherence_fwhm_fs" in d:
            coh = _number(d, "coherence_fwhm_fs", p, 0, lo_open=True)
        else:
            coh = hom_dip_fwhm_fs(self.spectral_idler.filter_fwhm, self.wavelengths[1])
        delays = _get(d, "delays_fs", p, None)
        if delays is None:
            half = 4 * coh
            step = coh / 10
            n = int(round(half / step))
            delays = [step * k for k in range(-n, n + 1)]
        elif isinstance(delays, dict):
            start = _number(delays, "start", f"{p}.delays_fs")
            stop = _number(delays, "stop", f"{p}.delays_fs")
            step = _number(delays, "step", f"{p}.delays_fs", 0, lo_open=True)
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            delays = [start + k * step for k in range(n)]
        elif not isinstance(delays, list) or not delays:
            raise ConfigError(f"{p}.delays_fs", "expected a non-empty list or {start, stop, step}")
        for k, x in enumerate(delays):
            if isinstance(x, bool) or not isinstance(x, (int, float)):
                raise ConfigError(f"{p}.delays_fs[{k}]", f"expected a number, got {x!r}")
        baseline = d.get("baseline_min_delay_fs")
        return HomSettings(
            pump_power_per_direction=_number(d, "pump_power_per_direction", p, 0, default=1.0),
            mean_pairs_per_pulse_at_1mW=_number(
                d, "mean_pairs_per_pulse_at_1mW", p, 0,
                default=self.source.mean_pairs_per_pulse_at_1mW),
            direction_ratio=_number(d, "direction_ratio", p, 0, default=1.0, lo_open=True),
            signal_transmission=_prob(d, "signal_transmission", p, 1.0),
            idler_transmission=_prob(d, "idler_transmission", p, 1.0),
            mode_overlap=_prob(d, "mode_overlap", p, 1.0),
            coherence_fwhm_fs=coh,
            delays_fs=tuple(float(x) for x in delays),
            pulses_per_point=_int(d, "pulses_per_point", p, 1, 10**9),
            background_pulses=_int(d, "background_pulses", p, 1, 10**9),
            baseline_min_delay_fs=None if baseline is None else _number(d, "baseline_min_delay_fs", p, 0),
            bootstrap=_int(d, "bootstrap", p, 0, 200),
        )


def config_hash(raw: dict) -> str:
    blob = json.dumps(raw, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def parse_config(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "expected a JSON object")
    s = _get(raw, "source", "")
    model = _get(s, "pair_number_model", "source", "poisson")
    if model not in PAIR_MODELS:
        raise ConfigError("source.pair_number_model", f"must be one of {PAIR_MODELS}, got {model!r}")
    raman = _get(s, "raman_singles_per_pulse", "source", [0.0, 0.0])
    if isinstance(raman, dict):
        raman = [_number(raman, "signal", "source.raman_singles_per_pulse", 0),
                 _number(raman, "idler", "source.raman_singles_per_pulse", 0)]
    elif not (isinstance(raman, list) and len(raman) == 2):
        raise ConfigError("source.raman_singles_per_pulse", "expected [signal, idler]")
    else:
        raman = [_number({"v": r}, "v", f"source.raman_singles_per_pulse[{k}]", 0) for k, r in enumerate(raman)]
    source = SourceConfig(
        pump_power=_number(s, "pump_power", "source", 0, default=1.0),
        rep_rate=_number(s, "rep_rate", "source", 0, lo_open=True, default=76e6),
        mean_pairs_per_pulse_at_1mW=_number(s, "mean_pairs_per_pulse_at_1mW", "source", 0),
        pair_number_model=model,
        raman_singles_per_pulse=tuple(raman),
    )
    spectral = _get(raw, "spectral", "")
    chain = _get(raw, "chain", "")
    dets_raw = _get(raw, "detectors", "")
    if not isinstance(dets_raw, dict):
        raise ConfigError("detectors", "expected an object")
    detectors = {name: _detector(v, f"detectors.{name}") for name, v in dets_raw.items()}
    for name in ("signal", "idler"):
        if name not in detectors:
            raise ConfigError(f"detectors.{name}", "missing required key")
    run = raw.get("run", {})
    seed = run.get("seed")
    if seed is not None:
        seed = _int(run, "seed", "run", 0)
    sagnac = None
    if "sagnac" in raw:
        sg = raw["sagnac"]
        ext = _get(sg, "polarization_extinction", "sagnac", None)
        sagnac = SagnacConfig(
            direction_imbalance=_number(sg, "direction_imbalance", "sagnac", 0, lo_open=True, default=1.0),
            pump_split_ratio=_number(sg, "pump_split_ratio", "sagnac", 0, 1, default=0.5),
            relative_phase=_number(sg, "relative_phase", "sagnac", default=math.pi),
            polarization_extinction=math.inf if ext is None else _number(sg, "polarization_extinction", "sagnac", 1),
        )
    sig_spec = _get(spectral, "signal", "spectral")
    idl_spec = _get(spectral, "idler", "spectral")
    wavelengths = (
        _number(sig_spec, "center_wavelength", "spectral.signal", 0, lo_open=True, default=690.4),
        _number(idl_spec, "center_wavelength", "spectral.idler", 0, lo_open=True, default=801.2),
    )
    return ExperimentConfig(
        source=source,
        spectral_signal=_spectral(sig_spec, "spectral.signal"),
        spectral_idler=_spectral(idl_spec, "spectral.idler"),
        chain_signal=_chain(_get(chain, "signal", "chain"), "chain.signal"),
        chain_idler=_chain(_get(chain, "idler", "chain"), "chain.idler"),
        detectors=detectors,
        seed=seed,
        pulses=_int(run, "pulses", "run", 0, 10**8),
        sagnac=sagnac,
        raw=raw,
        wavelengths=wavelengths,
    )


def load_config(path: str | Path) -> ExperimentConfig:
    with open(path) as fh:
        raw = json.load(fh)
    return parse_config(raw)

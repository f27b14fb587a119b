"""Four-fold Hong-Ou-Mandel scan with two heralded sources.

Both pump directions of the loop emit pairs independently. Each signal
photon heralds on its own detector; the idlers meet on a 50:50 splitter
whose outputs feed two more detectors. A four-fold needs both heralds and
both splitter outputs in the same pulse.

Losses are applied before the splitter (the two output detectors share one
efficiency, so this is exact). Exactly one photon per input port interferes
with the delay-dependent dip; every other photon-number pattern is routed
classically, which is how multi-pair emission from a single direction
becomes a delay-independent background.

Pulses are independent, so the four-fold count at a delay point is
Binomial(pulses, p4) with p4 obtained by summing over photon numbers. A
direct per-pulse sampler is kept for checking that sum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from concurrent.futures import ProcessPoolExecutor

import numpy as np
from scipy import optimize
from scipy.special import comb

from .counting import _background
from .rng import stream
from .source import raman_mean

FOURLN2 = 4 * math.log(2)
PMF_TAIL = 1e-15


@dataclass(frozen=True)
class HomConfig:
    delays_fs: tuple[float, ...]
    coherence_fwhm_fs: float
    mode_overlap: float = 1.0
    mean_pairs: tuple[float, float] = (0.0, 0.0)  # per pulse, (CW, CCW)
    herald_efficiency: tuple[float, float] = (1.0, 1.0)
    idler_efficiency: tuple[float, float] = (1.0, 1.0)  # up to and including detection
    pair_model: str = "poisson"
    herald_noise: tuple[float, float] = (0.0, 0.0)
    output_noise: tuple[float, float] = (0.0, 0.0)
    pulses_per_point: int = 10**9
    background_pulses: int = 10**9
    rep_rate: float = 76e6
    baseline_min_delay_fs: float | None = None
    bootstrap: int = 200

    def __post_init__(self):
        if not self.delays_fs:
            raise ValueError("delay scan is empty")
        if self.coherence_fwhm_fs <= 0:
            raise ValueError("coherence time must be positive")
        if not 0 <= self.mode_overlap <= 1:
            raise ValueError("mode_overlap outside [0, 1]")
        for name in ("herald_efficiency", "idler_efficiency", "herald_noise", "output_noise"):
            if any(not 0 <= x <= 1 for x in getattr(self, name)):
                raise ValueError(f"{name} outside [0, 1]")
        if min(self.mean_pairs) < 0:
            raise ValueError("mean pairs must be non-negative")

    @property
    def baseline_delay(self) -> float:
        if self.baseline_min_delay_fs is not None:
            return self.baseline_min_delay_fs
        return 2.0 * self.coherence_fwhm_fs


def hom_config(cfg, **overrides) -> HomConfig:
    """Build the scan model from the experiment file's ``hom`` section."""
    h = cfg.hom()
    p = h.pump_power_per_direction
    mu = h.mean_pairs_per_pulse_at_1mW * p * p
    ds, di = cfg.detector("signal"), cfg.detector("idler")
    es = cfg.eta_signal * ds.efficiency * h.signal_transmission
    ei = cfg.eta_idler * di.efficiency * h.idler_transmission
    herald_noise = _background(ds.dark_count_prob_per_pulse, raman_mean(cfg.source, 0, p) * es)
    # both idler beams reach each output port through the splitter
    out_noise = _background(di.dark_count_prob_per_pulse, raman_mean(cfg.source, 1, p) * ei)
    model = HomConfig(
        delays_fs=h.delays_fs,
        coherence_fwhm_fs=h.coherence_fwhm_fs,
        mode_overlap=h.mode_overlap,
        mean_pairs=(mu, mu * h.direction_ratio),
        herald_efficiency=(es, es),
        idler_efficiency=(ei, ei),
        pair_model=cfg.source.pair_number_model,
        herald_noise=(herald_noise, herald_noise),
        output_noise=(out_noise, out_noise),
        pulses_per_point=h.pulses_per_point,
        background_pulses=h.background_pulses,
        rep_rate=cfg.source.rep_rate,
        baseline_min_delay_fs=h.baseline_min_delay_fs,
        bootstrap=h.bootstrap,
    )
    return replace(model, **overrides) if overrides else model


def hom_coincidence_prob(delay: float, cfg: HomConfig) -> float:
    """Probability that one photon per input leaves through different outputs."""
    x = delay / cfg.coherence_fwhm_fs
    return 0.5 * (1.0 - cfg.mode_overlap * math.exp(-FOURLN2 * x * x))


# ---------------------------------------------------------------------------
# exact four-fold probability
# ---------------------------------------------------------------------------


def pair_number_pmf(pair_model: str, mu: float) -> np.ndarray:
    """P(m pairs), truncated once the tail is negligible."""
    if pair_model == "single":
        return np.array([1 - mu, mu])
    if mu == 0:
        return np.array([1.0])
    out = []
    if pair_model == "poisson":
        term = math.exp(-mu)
        m = 0
        while True:
            out.append(term)
            m += 1
            term *= mu / m
            if term < PMF_TAIL and m > mu:
                break
    else:
        r = mu / (1 + mu)
        term = 1 / (1 + mu)
        while term >= PMF_TAIL or not out:
            out.append(term)
            term *= r
    return np.array(out)


def herald_idler_distribution(pair_model: str, mu: float, eta_s: float, eta_i: float,
                              noise: float) -> np.ndarray:
    """out[k] = P(herald clicks and k idler photons reach the splitter)."""
    pmf = pair_number_pmf(pair_model, mu)
    out = np.zeros(pmf.size)
    for m, pm in enumerate(pmf):
        k = np.arange(m + 1)
        c = comb(m, k)
        p_k = c * eta_i**k * (1 - eta_i) ** (m - k)
        p_k_nosig = c * (eta_i * (1 - eta_s)) ** k * ((1 - eta_s) * (1 - eta_i)) ** (m - k)
        out[: m + 1] += pm * ((p_k - p_k_nosig) + p_k_nosig * noise)
    return out


def _both_outputs(n: int, n3: float, n4: float) -> float:
    """Both output detectors click when n photons split independently."""
    miss = 0.5**n
    return 1 - (1 - n3) * miss - (1 - n4) * miss + (1 - n3) * (1 - n4) * (n == 0)


def fourfold_probability(cfg: HomConfig, delay: float, blocked: str | None = None) -> float:
    """Per-pulse four-fold probability; ``blocked`` is None, 'a' (CW) or 'b' (CCW)."""
    dist = [
        herald_idler_distribution(cfg.pair_model, cfg.mean_pairs[d], cfg.herald_efficiency[d],
                                  cfg.idler_efficiency[d], cfg.herald_noise[d])
        for d in (0, 1)
    ]
    if blocked == "a":
        dist[0] = np.array([dist[0].sum()])
    elif blocked == "b":
        dist[1] = np.array([dist[1].sum()])
    elif blocked is not None:
        raise ValueError("blocked must be None, 'a' or 'b'")
    n3, n4 = cfg.output_noise
    kmax = dist[0].size + dist[1].size
    both = np.array([_both_outputs(n, n3, n4) for n in range(kmax)])
    ka = np.arange(dist[0].size)[:, None]
    kb = np.arange(dist[1].size)[None, :]
    table = both[ka + kb]
    if dist[0].size > 1 and dist[1].size > 1:
        p_diff = hom_coincidence_prob(delay, cfg)
        table[1, 1] = p_diff + (1 - p_diff) * 0.5 * (n3 + n4)
    return float(dist[0] @ table @ dist[1])


# ---------------------------------------------------------------------------
# direct per-pulse sampler
# ---------------------------------------------------------------------------

SAMPLER_BLOCK = 1 << 22


def _draw_pairs(rng, model: str, mu: float, n: int) -> np.ndarray:
    if model == "poisson":
        return rng.poisson(mu, n)
    if model == "thermal":
        return rng.geometric(1 / (1 + mu), n) - 1
    return (rng.random(n) < mu).astype(np.int64)


def sample_fourfolds(cfg: HomConfig, delay: float, n_pulses: int, seed: int, point: int,
                     blocked: str | None = None) -> int:
    """Four-fold count from explicit per-pulse draws."""
    total = 0
    p_diff = hom_coincidence_prob(delay, cfg)
    for b, start in enumerate(range(0, n_pulses, SAMPLER_BLOCK)):
        n = min(SAMPLER_BLOCK, n_pulses - start)
        rng = stream(seed, f"hom:pulses:{blocked}", point, b)
        herald = []
        idlers = []
        for d in (0, 1):
            m = _draw_pairs(rng, cfg.pair_model, cfg.mean_pairs[d], n)
            sig = rng.binomial(m, cfg.herald_efficiency[d])
            idl = rng.binomial(m, cfg.idler_efficiency[d])
            herald.append((sig > 0) | (rng.random(n) < cfg.herald_noise[d]))
            idlers.append(idl)
        if blocked == "a":
            idlers[0] = np.zeros_like(idlers[0])
        elif blocked == "b":
            idlers[1] = np.zeros_like(idlers[1])
        ka, kb = idlers
        k = ka + kb
        to3 = rng.binomial(k, 0.5)
        single = (ka == 1) & (kb == 1)
        u = rng.random(n)
        side = rng.random(n) < 0.5
        # interfering pairs: split with p_diff, otherwise both on one side
        to3 = np.where(single, np.where(u < p_diff, 1, np.where(side, 2, 0)), to3)
        d3 = (to3 > 0) | (rng.random(n) < cfg.output_noise[0])
        d4 = ((k - to3) > 0) | (rng.random(n) < cfg.output_noise[1])
        total += int(np.count_nonzero(herald[0] & herald[1] & d3 & d4))
    return total


# ---------------------------------------------------------------------------
# scan and analysis
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HomScanResult:
    delays_fs: np.ndarray
    counts: np.ndarray
    pulses_per_point: int
    rep_rate: float
    background_counts: tuple[int, int]
    background_pulses: int
    baseline_delay_fs: float
    fit: dict = field(default_factory=dict)
    raw_visibility: float = math.nan
    corrected_visibility: float = math.nan
    raw_stderr: float = math.nan
    corrected_stderr: float = math.nan

    @property
    def seconds_per_point(self) -> float:
        return self.pulses_per_point / self.rep_rate

    @property
    def rates(self) -> np.ndarray:
        return self.counts / self.seconds_per_point

    @property
    def background_rate(self) -> float:
        return sum(self.background_counts) / (self.background_pulses / self.rep_rate)

    @property
    def baseline_mask(self) -> np.ndarray:
        return np.abs(self.delays_fs) >= self.baseline_delay_fs

    @property
    def peak_rate(self) -> float:
        return float(self.rates[self.baseline_mask].mean())

    def summary(self) -> dict:
        return {
            "raw_visibility": self.raw_visibility,
            "raw_visibility_stderr": self.raw_stderr,
            "corrected_visibility": self.corrected_visibility,
            "corrected_visibility_stderr": self.corrected_stderr,
            "background_rate_per_s": self.background_rate,
            "baseline_rate_per_s": self.peak_rate,
            "mean_fourfold_rate_per_s": float(self.rates.mean()),
            "background_fraction_of_baseline": self.background_rate / self.peak_rate if self.peak_rate else math.nan,
            "fit": self.fit,
            "pulses_per_point": self.pulses_per_point,
            "background_pulses": self.background_pulses,
            "baseline_min_delay_fs": self.baseline_delay_fs,
        }


def _dip(d, base, vis, center, width):
    return base * (1 - vis * np.exp(-FOURLN2 * ((d - center) / width) ** 2))


def fit_dip(delays, rates, sigma, width_guess) -> dict:
    base0 = float(np.max(rates)) if np.max(rates) > 0 else 1.0
    p0 = [base0, 0.8, 0.0, width_guess]
    bounds = ([0, -1, -np.inf, 1e-9 * width_guess], [np.inf, 2, np.inf, np.inf])
    try:
        popt, _ = optimize.curve_fit(_dip, delays, rates, p0=p0, sigma=sigma,
                                        absolute_sigma=True, bounds=bounds, maxfev=20000)
    except (RuntimeError, ValueError):
        popt = np.array(p0, dtype=float)
    return {"baseline": float(popt[0]), "depth": float(popt[1]), "center_fs": float(popt[2]),
            "width_fs": float(popt[3]), "minimum": float(popt[0] * (1 - popt[1]))}


def _visibility_from(delays, counts, seconds, bg_rate, baseline, width_guess) -> tuple[float, dict]:
    rates = counts / seconds - bg_rate
    far = rates[baseline].mean()
    if far <= 0:
        raise ZeroDivisionError("zero baseline: visibility undefined")
    sigma = np.sqrt(np.maximum(counts, 1.0)) / seconds
    fit = fit_dip(delays, rates, sigma, width_guess)
    return float((far - fit["minimum"]) / far), fit


def visibility(scan: HomScanResult, corrected: bool = False) -> float:
    """(C_far - C_0) / C_far with C_0 the fitted dip minimum.

    The corrected value first subtracts the blocked-port background rate.
    """
    mask = scan.baseline_mask
    if not mask.any():
        raise ValueError("scan has no baseline points beyond the dip")
    bg = scan.background_rate if corrected else 0.0
    width = scan.fit.get("raw", {}).get("width_fs") or scan.baseline_delay_fs / 2
    v, _ = _visibility_from(scan.delays_fs, scan.counts.astype(float), scan.seconds_per_point,
                            bg, mask, width)
    return float(np.clip(v, 0.0, 1.0))


def analyze_scan(scan: HomScanResult, coherence_fwhm_fs: float, n_boot: int = 200,
                 seed: int = 0) -> HomScanResult:
    mask = scan.baseline_mask
    if not mask.any():
        raise ValueError("scan has no baseline points beyond the dip")
    counts = scan.counts.astype(float)
    sec = scan.seconds_per_point
    bg_sec = scan.background_pulses / scan.rep_rate
    raw, fit = _visibility_from(scan.delays_fs, counts, sec, 0.0, mask, coherence_fwhm_fs)
    corr, fit_c = _visibility_from(scan.delays_fs, counts, sec, scan.background_rate, mask,
                                   coherence_fwhm_fs)
    raw_se = corr_se = math.nan
    if n_boot > 1:
        rng = stream(seed, "hom:bootstrap")
        bg_total = float(sum(scan.background_counts))
        vals = []
        for _ in range(n_boot):
            c = rng.poisson(counts).astype(float)
            bg = rng.poisson(bg_total) / bg_sec
            try:
                vals.append((
                    _visibility_from(scan.delays_fs, c, sec, 0.0, mask, coherence_fwhm_fs)[0],
                    _visibility_from(scan.delays_fs, c, sec, bg, mask, coherence_fwhm_fs)[0],
                ))
            except ZeroDivisionError:
                continue
        if len(vals) > 1:
            raw_se, corr_se = np.std(np.array(vals), axis=0, ddof=1)
    # the bootstrap spread is taken before clamping so it stays honest near V = 1
    fit_out = {"raw": fit, "corrected": fit_c,
               "raw_visibility_unclamped": raw, "corrected_visibility_unclamped": corr}
    return replace(scan, fit=fit_out, raw_visibility=float(np.clip(raw, 0, 1)),
                   corrected_visibility=float(np.clip(corr, 0, 1)),
                   raw_stderr=float(raw_se), corrected_stderr=float(corr_se))


def _point(args):
    cfg, seed, k, delay, method = args
    if method == "pulses":
        return sample_fourfolds(cfg, delay, cfg.pulses_per_point, seed, k)
    p = fourfold_probability(cfg, delay)
    return int(stream(seed, "hom:point", k).binomial(cfg.pulses_per_point, p))


def blocked_port_counts(cfg: HomConfig, seed: int, method: str = "exact") -> tuple[int, int]:
    out = []
    for k, port in enumerate(("a", "b")):
        if method == "pulses":
            out.append(sample_fourfolds(cfg, 0.0, cfg.background_pulses, seed, k, blocked=port))
        else:
            p = fourfold_probability(cfg, 0.0, blocked=port)
            out.append(int(stream(seed, "hom:blocked", k).binomial(cfg.background_pulses, p)))
    return out[0], out[1]


def blocked_port_background(cfg: HomConfig, seed: int, method: str = "exact") -> float:
    """Summed four-fold rate (1/s) with each splitter input blocked in turn."""
    ca, cb = blocked_port_counts(cfg, seed, method)
    return (ca + cb) / (cfg.background_pulses / cfg.rep_rate)


def simulate_hom_scan(cfg: HomConfig, seed: int, method: str = "exact", workers: int = 1,
                      analyze: bool = True) -> HomScanResult:
    """Four-fold counts across the delay scan plus the blocked-port background.

    ``method='exact'`` draws each point's count from its exact per-pulse
    probability; ``method='pulses'`` simulates every pulse (slow, for checks).
    """
    if method not in ("exact", "pulses"):
        raise ValueError("method must be 'exact' or 'pulses'")
    tasks = [(cfg, seed, k, d, method) for k, d in enumerate(cfg.delays_fs)]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            counts = list(ex.map(_point, tasks))
    else:
        counts = [_point(t) for t in tasks]
    scan = HomScanResult(
        delays_fs=np.array(cfg.delays_fs, dtype=float),
        counts=np.array(counts, dtype=np.int64),
        pulses_per_point=cfg.pulses_per_point,
        rep_rate=cfg.rep_rate,
        background_counts=blocked_port_counts(cfg, seed, method),
        background_pulses=cfg.background_pulses,
        baseline_delay_fs=cfg.baseline_delay,
    )
    if not analyze:
        return scan
    return analyze_scan(scan, cfg.coherence_fwhm_fs, cfg.bootstrap, seed)

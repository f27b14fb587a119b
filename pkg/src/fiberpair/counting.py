"""Pulse-train Monte Carlo and coincidence electronics.

Time is discretized to pump pulses: the 5 ns coincidence window is shorter
than the 13.2 ns pulse period, so a coincidence is a same-pulse event and
the accidental estimate uses the neighbouring pulse.

The engine only materializes pulses with at least one click. Pairs whose
photons are all lost produce nothing, so the number of *detected* pairs in
a pulse is drawn directly (Poisson and geometric pair statistics are closed
under independent thinning) and each detected pair is then assigned a
click pattern. Background clicks are independent Bernoulli processes per
detector, generated by geometric gap sampling.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np
from scipy import optimize

from .rng import BLOCK_PULSES, blocks, stream
from .source import PAIR_MODELS, mean_pairs, raman_mean

MAX_SUMMARY_CHANNELS = 6


class UndefinedResultError(ArithmeticError):
    """A ratio estimator was asked for with a zero denominator."""


# ---------------------------------------------------------------------------
# model and records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClickModel:
    """Per-pulse click statistics of a set of non-number-resolving detectors.

    ``outcomes`` lists, for a single emitted pair, the probability of each
    non-empty click pattern (bit k = channel k). Whatever probability is
    left over is the pair being lost entirely. ``noise`` holds an independent
    per-pulse background click probability per channel.
    """

    channels: tuple[str, ...]
    mean_pairs: float
    pair_model: str = "poisson"
    outcomes: tuple[tuple[int, float], ...] = ()
    noise: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))
        if len(set(self.channels)) != len(self.channels) or not self.channels:
            raise ValueError("channels must be unique and non-empty")
        if len(self.channels) > 32:
            raise ValueError("at most 32 channels fit a click word")
        if self.pair_model not in PAIR_MODELS:
            raise ValueError(f"pair_model must be one of {PAIR_MODELS}")
        if self.mean_pairs < 0:
            raise ValueError("mean_pairs must be non-negative")
        if self.pair_model == "single" and self.mean_pairs > 1:
            raise ValueError("the 'single' pair model needs mean_pairs <= 1")
        full = (1 << len(self.channels)) - 1
        outs = tuple((int(w), float(p)) for w, p in self.outcomes)
        for w, p in outs:
            if w <= 0 or w & ~full:
                raise ValueError(f"outcome word {w:#x} uses undeclared channels")
            if p < 0:
                raise ValueError("outcome probabilities must be non-negative")
        if sum(p for _, p in outs) > 1 + 1e-12:
            raise ValueError("outcome probabilities sum above 1")
        object.__setattr__(self, "outcomes", outs)
        noise = tuple(float(p) for p in self.noise) or (0.0,) * len(self.channels)
        if len(noise) != len(self.channels) or any(not 0 <= p <= 1 for p in noise):
            raise ValueError("noise needs one probability in [0, 1] per channel")
        object.__setattr__(self, "noise", noise)

    def bit(self, name: str) -> int:
        try:
            return 1 << self.channels.index(name)
        except ValueError:
            raise KeyError(f"unknown channel {name!r}") from None

    @property
    def detected_fraction(self) -> float:
        return float(sum(p for _, p in self.outcomes))


@dataclass(frozen=True, eq=False)
class ClickBatch:
    """Sparse click records for pulses [start, stop): only non-empty words."""

    channels: tuple[str, ...]
    start: int
    stop: int
    pulse_index: np.ndarray  # uint64, absolute, strictly increasing
    click_word: np.ndarray  # uint32

    def __len__(self):
        return int(self.pulse_index.size)

    @property
    def n_pulses(self) -> int:
        return self.stop - self.start


def channel_mask(channels: Sequence[str], names) -> int:
    if isinstance(names, str):
        names = (names,)
    names = tuple(names)
    if not names:
        raise ValueError("channel set must be non-empty")
    mask = 0
    for n in names:
        if n not in channels:
            raise KeyError(f"unknown channel {n!r}")
        mask |= 1 << channels.index(n)
    return mask


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def _bernoulli_positions(rng: np.random.Generator, n: int, p: float) -> np.ndarray:
    """Indices in [0, n) of successes of n Bernoulli(p) trials."""
    if n <= 0 or p <= 0:
        return np.empty(0, dtype=np.int64)
    if p >= 1:
        return np.arange(n, dtype=np.int64)
    if p > 0.02:
        return np.flatnonzero(rng.random(n) < p)
    chunks = []
    last = -1
    while True:
        expect = (n - 1 - last) * p
        size = int(expect + 6 * math.sqrt(expect) + 16)
        pos = last + np.cumsum(rng.geometric(p, size=size))
        if pos[-1] >= n:
            chunks.append(pos[pos < n])
            break
        chunks.append(pos)
        last = int(pos[-1])
    return np.concatenate(chunks)


def active_probability(pair_model: str, lam: float) -> float:
    """P(at least one pair) for the given mean."""
    if pair_model == "poisson":
        return -math.expm1(-lam)
    if pair_model == "thermal":
        return lam / (1 + lam)
    return lam


def _poisson_truncated_cdf(lam: float) -> np.ndarray:
    pmf = [lam]
    k = 1
    while pmf[-1] > 1e-18 * pmf[0] and k < 200:
        k += 1
        pmf.append(pmf[-1] * lam / k)
    cdf = np.cumsum(pmf)
    cdf /= cdf[-1]
    cdf[-1] = 1.0
    return cdf


def _truncated_counts(rng, pair_model: str, lam: float, size: int) -> np.ndarray:
    """Pair counts conditioned on being >= 1."""
    if size == 0:
        return np.empty(0, dtype=np.int64)
    if pair_model == "single":
        return np.ones(size, dtype=np.int64)
    if pair_model == "thermal":
        return rng.geometric(1.0 / (1.0 + lam), size=size).astype(np.int64)
    cdf = _poisson_truncated_cdf(lam)
    return 1 + np.searchsorted(cdf, rng.random(size), side="right").astype(np.int64)


def simulate_block(model: ClickModel, seed: int, block: int, start: int, stop: int,
                   tag: str = "") -> ClickBatch:
    n = stop - start
    all_pos, all_words = [], []

    eta = model.detected_fraction
    lam = model.mean_pairs * eta
    if lam > 0:
        rng = stream(seed, f"{tag}/pairs", block)
        pos = _bernoulli_positions(rng, n, active_probability(model.pair_model, lam))
        m = _truncated_counts(rng, model.pair_model, lam, pos.size)
        words = np.array([w for w, _ in model.outcomes], dtype=np.uint32)
        cdf = np.cumsum([p for _, p in model.outcomes]) / eta
        cdf[-1] = 1.0
        cls = np.searchsorted(cdf, rng.random(int(m.sum())), side="right")
        pair_words = words[np.minimum(cls, words.size - 1)]
        if pos.size and m.max() > 1:
            starts = np.concatenate(([0], np.cumsum(m)[:-1]))
            pair_words = np.bitwise_or.reduceat(pair_words, starts)
        all_pos.append(pos)
        all_words.append(pair_words)

    for c, p in enumerate(model.noise):
        if p <= 0:
            continue
        rng = stream(seed, f"{tag}/noise:{model.channels[c]}", block)
        pos = _bernoulli_positions(rng, n, p)
        all_pos.append(pos)
        all_words.append(np.full(pos.size, 1 << c, dtype=np.uint32))

    if not all_pos:
        pos = np.empty(0, dtype=np.int64)
        words = np.empty(0, dtype=np.uint32)
    else:
        pos = np.concatenate(all_pos)
        words = np.concatenate(all_words)
        order = np.argsort(pos, kind="stable")
        pos, words = pos[order], words[order]
        if pos.size:
            first = np.flatnonzero(np.r_[True, pos[1:] != pos[:-1]])
            words = np.bitwise_or.reduceat(words, first)
            pos = pos[first]
    return ClickBatch(model.channels, start, stop,
                      (pos + start).astype(np.uint64), words.astype(np.uint32))


def simulate_pulses(model: ClickModel, seed: int, n_pulses: int, tag: str = "",
                    block: int = BLOCK_PULSES) -> Iterator[ClickBatch]:
    """Stream of click batches, one per fixed pulse block.

    The content depends only on (model, seed, tag, n_pulses) and the block
    size, never on how batches are consumed or distributed.
    """
    if n_pulses < 0:
        raise ValueError("n_pulses must be >= 0")
    for b, start, stop in blocks(n_pulses, block):
        yield simulate_block(model, seed, b, start, stop, tag)


# ---------------------------------------------------------------------------
# streaming analysis on records
# ---------------------------------------------------------------------------


def _as_batches(records) -> Iterable[ClickBatch]:
    if isinstance(records, ClickBatch):
        return (records,)
    return records


def nfold_count(records, channel_set) -> int:
    """Number of pulses whose click word contains every channel in the set."""
    total = 0
    for batch in _as_batches(records):
        mask = channel_mask(batch.channels, channel_set)
        total += int(np.count_nonzero((batch.click_word & np.uint32(mask)) == mask))
    return total


def start_stop(records, start_channel, stop_channel) -> tuple[int, int]:
    """(same-pulse coincidences, next-pulse accidentals).

    ``stop_channel`` may name several channels; any of them stops the clock.
    """
    coinc = accid = 0
    prev_index = None
    prev_word = 0
    for batch in _as_batches(records):
        smask = channel_mask(batch.channels, start_channel)
        tmask = channel_mask(batch.channels, stop_channel)
        w = batch.click_word
        idx = batch.pulse_index
        is_start = (w & np.uint32(smask)) != 0
        is_stop = (w & np.uint32(tmask)) != 0
        coinc += int(np.count_nonzero(is_start & is_stop))
        if idx.size:
            nxt = idx[1:] == idx[:-1] + np.uint64(1)
            accid += int(np.count_nonzero(is_start[:-1] & is_stop[1:] & nxt))
            if prev_index is not None and prev_word & smask and int(idx[0]) == prev_index + 1 and is_stop[0]:
                accid += 1
            prev_index = int(idx[-1])
            prev_word = int(w[-1])
    return coinc, accid


# ---------------------------------------------------------------------------
# mergeable summaries for large parallel runs
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class StreamSummary:
    """Histogram of click words plus neighbouring-pulse word pairs.

    Enough to evaluate any n-fold count or start/stop accidental estimate.
    Summaries of contiguous pulse ranges merge by addition.
    """

    channels: tuple[str, ...]
    start: int
    stop: int
    words: np.ndarray  # counts per word; words[0] is pulses without a click
    adjacent: np.ndarray  # counts of (word_i, word_{i+1}), both non-empty
    first_word: int = 0
    last_word: int = 0

    @property
    def pulses(self) -> int:
        return self.stop - self.start

    @classmethod
    def from_batch(cls, batch: ClickBatch) -> "StreamSummary":
        nch = len(batch.channels)
        if nch > MAX_SUMMARY_CHANNELS:
            raise ValueError("too many channels for a dense summary")
        size = 1 << nch
        w = batch.click_word.astype(np.int64)
        words = np.bincount(w, minlength=size).astype(np.int64)
        words[0] = batch.n_pulses - w.size
        adjacent = np.zeros((size, size), dtype=np.int64)
        idx = batch.pulse_index
        if idx.size > 1:
            nxt = np.flatnonzero(idx[1:] == idx[:-1] + np.uint64(1))
            np.add.at(adjacent, (w[nxt], w[nxt + 1]), 1)
        first = int(w[0]) if idx.size and int(idx[0]) == batch.start else 0
        last = int(w[-1]) if idx.size and int(idx[-1]) == batch.stop - 1 else 0
        return cls(batch.channels, batch.start, batch.stop, words, adjacent, first, last)

    def mask(self, names) -> int:
        return channel_mask(self.channels, names)

    def nfold(self, names) -> int:
        m = self.mask(names)
        sel = (np.arange(self.words.size) & m) == m
        return int(self.words[sel].sum())

    def start_stop(self, start_channel, stop_channel) -> tuple[int, int]:
        smask, tmask = self.mask(start_channel), self.mask(stop_channel)
        ar = np.arange(self.words.size)
        s = (ar & smask) != 0
        t = (ar & tmask) != 0
        coinc = int(self.words[s & t].sum())
        accid = int(self.adjacent[np.ix_(s, t)].sum())
        return coinc, accid


def merge_summaries(parts: Sequence[StreamSummary]) -> StreamSummary:
    """Merge summaries of contiguous ranges; input order does not matter."""
    parts = sorted(parts, key=lambda s: (s.start, s.stop))
    if not parts:
        raise ValueError("nothing to merge")
    out = StreamSummary(parts[0].channels, parts[0].start, parts[0].stop,
                        parts[0].words.copy(), parts[0].adjacent.copy(),
                        parts[0].first_word, parts[0].last_word)
    for p in parts[1:]:
        if p.start != out.stop or p.channels != out.channels:
            raise ValueError("summaries must cover contiguous ranges of one channel set")
        out.words += p.words
        out.adjacent += p.adjacent
        if out.last_word and p.first_word:
            out.adjacent[out.last_word, p.first_word] += 1
        out.stop = p.stop
        out.last_word = p.last_word
    return out


def _summarize(args) -> StreamSummary:
    model, seed, tag, b, start, stop = args
    return StreamSummary.from_batch(simulate_block(model, seed, b, start, stop, tag))


def run_summary(model: ClickModel, seed: int, n_pulses: int, workers: int = 1,
                tag: str = "", block: int = BLOCK_PULSES) -> StreamSummary:
    """Simulate n_pulses and reduce to a summary, optionally across processes."""
    tasks = [(model, seed, tag, b, s, e) for b, s, e in blocks(n_pulses, block)]
    if not tasks:
        size = 1 << len(model.channels)
        return StreamSummary(model.channels, 0, 0, np.zeros(size, np.int64),
                             np.zeros((size, size), np.int64))
    if workers <= 1 or len(tasks) == 1:
        parts = [_summarize(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_summarize, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    return merge_summaries(parts)


# ---------------------------------------------------------------------------
# tallies and estimators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoincidenceTally:
    """Counts of a heralded three-detector run.

    c1: herald singles; c12, c13: herald with either idler detector;
    c123: threefold; coincidences / accidentals: herald against any idler
    detector in the same / next pulse.
    """

    pulses: int
    c1: int
    c12: int
    c13: int
    c123: int
    coincidences: int = 0
    accidentals: int = 0
    fourfold: int = 0

    def __post_init__(self):
        if self.c123 > min(self.c12, self.c13) or max(self.c12, self.c13) > self.c1:
            raise ValueError("inconsistent tally: need C123 <= min(C12, C13) <= C1")
        if max(self.c1, self.coincidences, self.accidentals, self.fourfold) > self.pulses:
            raise ValueError("a count exceeds the number of pulses")

    def merge(self, other: "CoincidenceTally") -> "CoincidenceTally":
        return CoincidenceTally(*(a + b for a, b in zip(_fields(self), _fields(other))))


def _fields(t: CoincidenceTally):
    return (t.pulses, t.c1, t.c12, t.c13, t.c123, t.coincidences, t.accidentals, t.fourfold)


def tally_from_summary(summary: StreamSummary, herald: str = "signal",
                       idler_a: str = "idler_a", idler_b: str = "idler_b") -> CoincidenceTally:
    c, a = summary.start_stop(herald, (idler_a, idler_b))
    return CoincidenceTally(
        pulses=summary.pulses,
        c1=summary.nfold(herald),
        c12=summary.nfold((herald, idler_a)),
        c13=summary.nfold((herald, idler_b)),
        c123=summary.nfold((herald, idler_a, idler_b)),
        coincidences=c,
        accidentals=a,
    )


def coincidence_to_accidentals(tally) -> float:
    """C/A; infinite when no accidentals were recorded."""
    if isinstance(tally, CoincidenceTally):
        c, a = tally.coincidences, tally.accidentals
    else:
        c, a = tally
    if a == 0:
        return math.inf
    return c / a


def g2_estimate(tally: CoincidenceTally) -> float:
    """Heralded g2(0) = 4 C123 C1 / (C12 + C13)^2, no background subtraction."""
    den = (tally.c12 + tally.c13) ** 2
    if den == 0:
        raise UndefinedResultError("g2 undefined: no twofold coincidences")
    # int / int is correctly rounded, so this equals the exact rational rounded once
    return (4 * tally.c123 * tally.c1) / den


def g2_exact(tally: CoincidenceTally) -> Fraction:
    return Fraction(4 * tally.c123 * tally.c1, (tally.c12 + tally.c13) ** 2)


def g2_stderr(tally: CoincidenceTally) -> float:
    """Poisson delta-method error; with no threefolds, the one-count value."""
    n = tally.c12 + tally.c13
    if n == 0 or tally.c1 == 0:
        return math.nan
    if tally.c123 == 0:
        return 4 * tally.c1 / n**2
    g = g2_estimate(tally)
    return g * math.sqrt(1 / tally.c123 + 1 / tally.c1 + 4 / n)


# ---------------------------------------------------------------------------
# experiment models
# ---------------------------------------------------------------------------


def _background(dark: float, mean_photons: float) -> float:
    return 1.0 - (1.0 - dark) * math.exp(-mean_photons)


def twofold_model(cfg, pump_power: float | None = None) -> ClickModel:
    """Signal and idler each on one detector (start-stop setup)."""
    p = cfg.source.pump_power if pump_power is None else pump_power
    ds, di = cfg.detector("signal"), cfg.detector("idler")
    es = cfg.eta_signal * ds.efficiency
    ei = cfg.eta_idler * di.efficiency
    return ClickModel(
        channels=("signal", "idler"),
        mean_pairs=mean_pairs(cfg.source, p),
        pair_model=cfg.source.pair_number_model,
        outcomes=((0b11, es * ei), (0b01, es * (1 - ei)), (0b10, (1 - es) * ei)),
        noise=(
            _background(ds.dark_count_prob_per_pulse, raman_mean(cfg.source, 0, p) * es),
            _background(di.dark_count_prob_per_pulse, raman_mean(cfg.source, 1, p) * ei),
        ),
    )


def g2_model(cfg, pump_power: float | None = None) -> ClickModel:
    """Herald on the signal, idler split by a balanced 50:50 coupler."""
    p = cfg.source.pump_power if pump_power is None else pump_power
    ds, da, db = cfg.detector("signal"), cfg.detector("idler"), cfg.detector("idler_b")
    es = cfg.eta_signal * ds.efficiency
    ea = cfg.eta_idler * 0.5 * da.efficiency
    eb = cfg.eta_idler * 0.5 * db.efficiency
    el = 1 - ea - eb
    raman_i = raman_mean(cfg.source, 1, p)
    return ClickModel(
        channels=("signal", "idler_a", "idler_b"),
        mean_pairs=mean_pairs(cfg.source, p),
        pair_model=cfg.source.pair_number_model,
        outcomes=(
            (0b011, es * ea), (0b101, es * eb), (0b001, es * el),
            (0b010, (1 - es) * ea), (0b100, (1 - es) * eb),
        ),
        noise=(
            _background(ds.dark_count_prob_per_pulse, raman_mean(cfg.source, 0, p) * es),
            _background(da.dark_count_prob_per_pulse, raman_i * ea),
            _background(db.dark_count_prob_per_pulse, raman_i * eb),
        ),
    )


@dataclass(frozen=True)
class G2Result:
    pump_power: float
    g2: float
    g2_stderr: float
    detected_pair_rate: float  # coincidences minus accidentals, per second
    spectral_brightness: float  # pairs / (s nm mW)
    car: float
    tally: CoincidenceTally = field(repr=False)

    def row(self) -> dict:
        return {
            "pump_mW": self.pump_power,
            "detected_pairs_per_s": self.detected_pair_rate,
            "brightness_pairs_per_s_nm_mW": self.spectral_brightness,
            "g2": self.g2,
            "g2_stderr": self.g2_stderr,
            "CA": self.car,
        }


def g2_experiment(cfg, seed: int, n_pulses: int, pump_power: float | None = None,
                  workers: int = 1) -> G2Result:
    p = cfg.source.pump_power if pump_power is None else pump_power
    model = g2_model(cfg, p)
    summary = run_summary(model, seed, n_pulses, workers, tag=f"g2:{p!r}")
    tally = tally_from_summary(summary)
    seconds = n_pulses / cfg.source.rep_rate
    rate = (tally.coincidences - tally.accidentals) / seconds
    brightness = rate / (cfg.spectral_signal.filter_fwhm * p) if p > 0 else math.nan
    return G2Result(
        pump_power=p,
        g2=g2_estimate(tally),
        g2_stderr=g2_stderr(tally),
        detected_pair_rate=rate,
        spectral_brightness=brightness,
        car=coincidence_to_accidentals(tally),
        tally=tally,
    )


# ---------------------------------------------------------------------------
# closed-form expectations
# ---------------------------------------------------------------------------


def pair_pgf(pair_model: str, mu: float, z: float) -> float:
    """E[z^n] of the per-pulse pair number."""
    if pair_model == "poisson":
        return math.exp(-mu * (1 - z))
    if pair_model == "thermal":
        return 1 / (1 + mu * (1 - z))
    return 1 - mu + mu * z


def prob_silent(model: ClickModel, names) -> float:
    """Probability that none of the named channels clicks in a pulse."""
    mask = channel_mask(model.channels, names)
    reach = sum(p for w, p in model.outcomes if w & mask)
    quiet = math.prod(1 - q for k, q in enumerate(model.noise) if mask >> k & 1)
    return quiet * pair_pgf(model.pair_model, model.mean_pairs, 1 - reach)


def expected_net_rate(model: ClickModel, rep_rate: float, start, stop) -> float:
    """Mean of (coincidences - next-pulse accidentals) per second."""
    p_start = 1 - prob_silent(model, start)
    p_stop = 1 - prob_silent(model, stop)
    both = 1 - prob_silent(model, start) - prob_silent(model, stop) + prob_silent(model, _union(start, stop))
    return rep_rate * (both - p_start * p_stop)


def _union(a, b) -> tuple[str, ...]:
    a = (a,) if isinstance(a, str) else tuple(a)
    b = (b,) if isinstance(b, str) else tuple(b)
    return tuple(dict.fromkeys(a + b))


def calibrate_detected_rate(cfg, target_rate: float, pump_power: float) -> float:
    """Pair rate constant (mean pairs per pulse at 1 mW) giving ``target_rate``
    net detected pairs per second in the heralded splitter setup."""
    def excess(mu1):
        model = g2_model(cfg.with_source(mean_pairs_per_pulse_at_1mW=mu1), pump_power)
        return expected_net_rate(model, cfg.source.rep_rate, "signal", ("idler_a", "idler_b")) - target_rate

    hi = 1.0
    while excess(hi) < 0:
        hi *= 2
        if hi > 1e6:
            raise ValueError("target rate out of reach")
    return float(optimize.brentq(excess, 0.0, hi, xtol=1e-15, rtol=1e-13))


# ---------------------------------------------------------------------------
# record files
# ---------------------------------------------------------------------------

RECORD_DTYPE = np.dtype([("pulse_index", "<u8"), ("click_word", "<u4")])


def write_records(path: str | Path, records, meta: dict | None = None) -> Path:
    """Binary (u64 pulse, u32 word) little-endian records plus a JSON sidecar."""
    path = Path(path)
    channels = None
    n_pulses = 0
    start = None
    with open(path, "wb") as fh:
        for batch in _as_batches(records):
            channels = batch.channels if channels is None else channels
            if batch.channels != channels:
                raise ValueError("all batches must share one channel set")
            start = batch.start if start is None else start
            n_pulses = batch.stop
            arr = np.empty(len(batch), dtype=RECORD_DTYPE)
            arr["pulse_index"] = batch.pulse_index
            arr["click_word"] = batch.click_word
            fh.write(arr.tobytes())
    sidecar = {
        "channels": {name: bit for bit, name in enumerate(channels or ())},
        "start": start or 0,
        "stop": n_pulses,
        "record": {"pulse_index": "uint64 little-endian", "click_word": "uint32 little-endian"},
    }
    if meta:
        sidecar["meta"] = meta
    Path(str(path) + ".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True))
    return path


def read_records(path: str | Path) -> ClickBatch:
    path = Path(path)
    side = json.loads(Path(str(path) + ".json").read_text())
    bits = side["channels"]
    channels = tuple(sorted(bits, key=bits.get))
    if [bits[c] for c in channels] != list(range(len(channels))):
        raise ValueError("channel bits must be 0..n-1")
    arr = np.fromfile(path, dtype=RECORD_DTYPE)
    return ClickBatch(channels, int(side["start"]), int(side["stop"]),
                      arr["pulse_index"].astype(np.uint64), arr["click_word"].astype(np.uint32))

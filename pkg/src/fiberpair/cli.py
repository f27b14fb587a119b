"""Command-line experiment runner.

    fiberpair budget   --config configs/reference.json --out out/
    fiberpair g2-sweep --config configs/reference.json --seed 1 --out out/ --powers 0.05,0.5
    fiberpair tomo     --config configs/reference.json --seed 1 --out out/
    fiberpair hom      --config configs/reference.json --seed 1 --out out/

Set FIBERPAIR_LOG=debug|info|warning for log verbosity.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from . import __version__
from .config import ConfigError, ExperimentConfig, load_config
from .counting import g2_experiment
from .hom import hom_config, simulate_hom_scan
from .tomography import acquire_tomogram, characterize, reconstruct, tetrahedron, tomo_source

log = logging.getLogger("fiberpair")

MANIFEST = "manifest.json"


@dataclass
class RunManifest:
    command: str
    config_hash: str
    seed: int | None
    version: str
    files: list[str] = field(default_factory=list)
    duration_s: float = 0.0

    def write(self, out: Path) -> Path:
        for name in self.files:
            p = out / name
            if not p.exists() or p.stat().st_size == 0:
                raise RuntimeError(f"declared output {name} missing or empty")
        path = out / MANIFEST
        path.write_text(json.dumps(asdict(self), indent=2) + "\n")
        return path


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, float) else str(x)


def _write_csv(path: Path, header: list[str], rows: list[dict]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(r[h]) for h in header])
    path.write_text(buf.getvalue())


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def budget_rows(cfg: ExperimentConfig) -> list[dict]:
    """Per-stage efficiencies followed by the derived totals."""
    rows = []
    sig, idl = cfg.chain_signal, cfg.chain_idler
    labels = list(dict.fromkeys(sig.labels + idl.labels))
    for label in labels:
        s = [e for l, e in sig.stages if l == label]
        i = [e for l, e in idl.stages if l == label]
        rows.append({"quantity": label, "signal": s[0] if s else "", "idler": i[0] if i else "",
                     "pair": ""})
    es, ei = cfg.eta_signal, cfg.eta_idler
    ds, di = cfg.detector("signal").efficiency, cfg.detector("idler").efficiency
    rows.append({"quantity": "extraction", "signal": es, "idler": ei, "pair": es * ei})
    rows.append({"quantity": "detector", "signal": ds, "idler": di, "pair": ""})
    rows.append({"quantity": "detection", "signal": es * ds, "idler": ei * di,
                 "pair": cfg.pair_detection_efficiency})
    return rows


def cmd_budget(cfg: ExperimentConfig, out: Path, args) -> list[str]:
    _write_csv(out / "budget.csv", ["quantity", "signal", "idler", "pair"], budget_rows(cfg))
    return ["budget.csv"]


G2_COLUMNS = ["pump_mW", "detected_pairs_per_s", "brightness_pairs_per_s_nm_mW", "g2", "g2_stderr", "CA"]


def cmd_g2_sweep(cfg: ExperimentConfig, out: Path, args) -> list[str]:
    powers = args.powers if args.powers is not None else [cfg.source.pump_power]
    pulses = args.pulses or cfg.pulses
    rows = []
    for p in powers:
        log.info("g2 sweep: %.4g mW, %d pulses", p, pulses)
        try:
            res = g2_experiment(cfg, args.seed, pulses, p, workers=args.workers)
        except ArithmeticError as exc:
            raise RuntimeError(f"g2 at {p} mW: {exc}") from exc
        rows.append(res.row())
    _write_csv(out / "g2_sweep.csv", G2_COLUMNS, rows)
    return ["g2_sweep.csv"]


def cmd_tomo(cfg: ExperimentConfig, out: Path, args) -> list[str]:
    settings = cfg.tomography()
    pulses = args.pulses or settings.pulses_per_setting
    rho, src = tomo_source(cfg)
    tet = tetrahedron()
    log.info("tomography: %d pulses per setting", pulses)
    counts = acquire_tomogram(rho, tet, pulses, args.seed, src, workers=args.workers)
    rec = reconstruct(counts, tet)
    report = characterize(rec.rho, counts, tet, settings.bootstrap, args.seed)
    _write_json(out / "tomogram.json", counts.to_json(tet))
    _write_json(out / "state_report.json", {
        "density_matrix": rec.rho.to_json(),
        "density_matrix_unconstrained": [[[float(z.real), float(z.imag)] for z in row] for row in rec.rho_raw],
        "target": "phi_minus",
        "fidelity": report.fidelity,
        "tangle": report.tangle,
        "purity": report.purity,
        "stderr": report.stderr,
        "condition_number": rec.condition_number,
        "bootstrap_samples": settings.bootstrap,
    })
    return ["tomogram.json", "state_report.json"]


def cmd_hom(cfg: ExperimentConfig, out: Path, args) -> list[str]:
    overrides = {}
    if args.pulses:
        overrides["pulses_per_point"] = args.pulses
    if args.delays is not None:
        overrides["delays_fs"] = tuple(args.delays)
    model = hom_config(cfg, **overrides)
    log.info("hom scan: %d delays, %d pulses per point", len(model.delays_fs), model.pulses_per_point)
    scan = simulate_hom_scan(model, args.seed, workers=args.workers)
    bg = scan.background_rate
    rows = [
        {"delay_fs": float(d), "fourfold_count": int(c), "fourfold_rate_per_s": float(r),
         "background_rate_per_s": bg}
        for d, c, r in zip(scan.delays_fs, scan.counts, scan.rates)
    ]
    _write_csv(out / "hom_scan.csv",
               ["delay_fs", "fourfold_count", "fourfold_rate_per_s", "background_rate_per_s"], rows)
    summary = scan.summary()
    summary["background_counts"] = list(scan.background_counts)
    summary["coherence_fwhm_fs"] = model.coherence_fwhm_fs
    _write_json(out / "hom_summary.json", summary)
    return ["hom_scan.csv", "hom_summary.json"]


COMMANDS = {
    "budget": (cmd_budget, False),
    "g2-sweep": (cmd_g2_sweep, True),
    "tomo": (cmd_tomo, True),
    "hom": (cmd_hom, True),
}


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _float_list(text: str) -> list[float]:
    text = text.strip()
    if not text:
        return []
    if text.count(":") == 2:
        start, stop, step = (float(x) for x in text.split(":"))
        if step <= 0:
            raise argparse.ArgumentTypeError("step must be positive")
        n = int((stop - start) / step + 1e-9) + 1
        return [start + k * step for k in range(n)]
    try:
        return [float(x) for x in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fiberpair", description="Photon-pair source characterization simulator")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name, (_, randomized) in COMMANDS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--seed", type=_seed, required=randomized)
        p.add_argument("--out", required=True, type=Path)
        p.add_argument("--workers", type=int, default=1)
        if name == "g2-sweep":
            p.add_argument("--powers", type=_float_list, help="mW, comma list or start:stop:step")
        if name in ("g2-sweep", "tomo", "hom"):
            p.add_argument("--pulses", type=int, help="pulses per power / setting / delay point")
        if name == "hom":
            p.add_argument("--delays", type=_float_list, help="fs, comma list or start:stop:step")
    return ap


def run(argv: list[str] | None = None) -> RunManifest:
    args = build_parser().parse_args(argv)
    fn, _ = COMMANDS[args.command]
    if args.workers < 1:
        raise ConfigError("--workers", "must be at least 1")
    if getattr(args, "powers", None) and min(args.powers) <= 0:
        raise ConfigError("--powers", "pump powers must be positive")
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    args.out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    files = fn(cfg, args.out, args)
    manifest = RunManifest(args.command, cfg.config_hash(), args.seed, __version__, files,
                           round(time.perf_counter() - t0, 3))
    manifest.write(args.out)
    return manifest


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get("FIBERPAIR_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(message)s")
    try:
        manifest = run(argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for f in manifest.files:
        print(f)
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Print the calibrations used for the source and HOM sections of a config.

The mean pair number per pulse is chosen so the expected accidental-subtracted
heralded rate hits a target; the low-gain estimate is shown for comparison.
"""
import argparse
from pathlib import Path

from fiberpair.config import load_config
from fiberpair.counting import calibrate_detected_rate, expected_net_rate, g2_model
from fiberpair.hom import fourfold_probability, hom_config
from fiberpair.source import calibrate_mean_pairs

ap = argparse.ArgumentParser()
ap.add_argument("--config", type=Path, default=Path("configs/reference.json"))
ap.add_argument("--rate", type=float, default=3800.0, help="target heralded pairs/s")
ap.add_argument("--power", type=float, default=0.5, help="pump power in mW")
args = ap.parse_args()

cfg = load_config(args.config)
rep = cfg.source.rep_rate
exact = calibrate_detected_rate(cfg, args.rate, args.power)
low_gain = calibrate_mean_pairs(args.rate, args.power, rep, cfg.pair_detection_efficiency)
for name, mu1 in (("exact", exact), ("low-gain", low_gain)):
    model = g2_model(cfg.with_source(mean_pairs_per_pulse_at_1mW=mu1), args.power)
    rate = expected_net_rate(model, rep, "signal", ("idler_a", "idler_b"))
    print(f"{name:9s} mu(1 mW) = {mu1:.10f}  ->  expected net rate {rate:.2f}/s")

hom = hom_config(cfg)
peak = fourfold_probability(hom, hom.baseline_delay * 2) * rep
blocked = (fourfold_probability(hom, 0.0, blocked="a") + fourfold_probability(hom, 0.0, blocked="b")) * rep
print(f"HOM dip FWHM {hom.coherence_fwhm_fs:.1f} fs")
print(f"HOM baseline four-fold rate {peak:.5f}/s, blocked-port background {blocked:.5f}/s "
      f"({blocked / peak:.1%} of baseline)")

"""Development-time measurement runs used to freeze acceptance-test numbers.

Writes results as JSON to scripts/calibration.json as sections complete.
Not part of the package or the test suite.
"""

import json
import os
import sys
import time

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from mbmsim.analysis import mutual_information_mc, qam_constellation  # noqa: E402
from mbmsim.detect import DetectorConfig, all_unit_permutations  # noqa: E402
from mbmsim.engine import (ConstellationSpec, FecSpec, StoppingRule, SweepSpec,  # noqa: E402
                           run_coded_sweep, run_uncoded_sweep)
from mbmsim.rng import substream  # noqa: E402

OUT = os.path.join(os.path.dirname(__file__), "calibration.json")
results = {}
if os.path.exists(OUT):
    results = json.load(open(OUT))


def save(key, value):
    results[key] = value
    with open(OUT, "w") as fh:
        json.dump(results, fh, indent=2)
    print(f"== saved {key}: {value}", flush=True)


def curve_to_rows(points):
    return [{"ebn0_db": p.ebn0_db, "trials": p.trials, "errors": p.symbol_errors,
             "frame_errors": p.frame_errors, "ser": p.ser, "fer": p.fer,
             "seconds": round(p.seconds, 1)} for p in points]


def probe_fig2():
    t0 = time.time()
    grids = {}
    for name, cs in (("fig2a", ConstellationSpec(2, 8, 8)),
                     ("fig2b", ConstellationSpec(1, 16, 8))):
        spec = SweepSpec(cs, (0.0, 1.0, 2.0, 3.0, 4.0),
                         stopping=StoppingRule(min_errors=60, max_trials=30000),
                         batch_size=1500, seed=11)
        pts = run_uncoded_sweep(spec, workers=2)
        grids[name] = curve_to_rows(pts)
        print(name, [(p.ebn0_db, p.ser) for p in pts], flush=True)
    save("fig2_probe", {"rows": grids, "minutes": (time.time() - t0) / 60})


def probe_fig4_nightly():
    t0 = time.time()
    cfg = DetectorConfig(iterations=2, beam_width=32,
                         permutations=all_unit_permutations(4)[:6])
    spec = SweepSpec(ConstellationSpec(4, 8, 16), (-4.0,), detector=cfg,
                     stopping=StoppingRule(min_errors=30, max_trials=60000),
                     batch_size=500, seed=2024)
    pts = run_uncoded_sweep(spec, workers=2)
    save("fig4_nightly", {"rows": curve_to_rows(pts),
                          "minutes": (time.time() - t0) / 60})


def probe_coded_slope():
    t0 = time.time()
    cs = ConstellationSpec(1, 4, 4)
    # locate the uncoded operating region first
    spec = SweepSpec(cs, (4.0, 6.0, 8.0, 10.0, 12.0, 14.0),
                     stopping=StoppingRule(min_errors=150, max_trials=300000),
                     batch_size=300, seed=5)
    pts = run_uncoded_sweep(spec, workers=2)
    save("slope_uncoded_probe", curve_to_rows(pts))
    print("uncoded", [(p.ebn0_db, p.ser) for p in pts], flush=True)
    save("slope_probe_minutes", (time.time() - t0) / 60)


def probe_capacity():
    t0 = time.time()
    qam = qam_constellation(256)
    curve = {}
    for snr_db in (21.8, 22.0, 22.2, 22.4, 22.6, 23.0):
        est, se = mutual_information_mc(qam, 10 ** (snr_db / 10), samples=60000, seed=1)
        curve[snr_db] = (round(est, 4), round(se, 4))
    save("qam_curve", curve)
    snr_db = 22.4
    rates = []
    for r in range(120):
        rng = substream(77, "constellation", r)
        pts = (rng.standard_normal(256) + 1j * rng.standard_normal(256)) / np.sqrt(2)
        est, _ = mutual_information_mc(pts, 10 ** (snr_db / 10), samples=4000,
                                       seed=substream(77, "mutual-information", r))
        rates.append(est)
    rates = np.array(rates)
    save("capacity_spread", {
        "snr_db": snr_db,
        "mean": float(rates.mean()), "p5": float(np.percentile(rates, 5)),
        "min": float(rates.min()), "minutes": (time.time() - t0) / 60})


if __name__ == "__main__":
    which = sys.argv[1] if len(sys.argv) > 1 else "all"
    if which in ("fig4", "all"):
        probe_fig4_nightly()
    if which in ("fig2", "all"):
        probe_fig2()
    if which in ("slope", "all"):
        probe_coded_slope()
    if which in ("capacity", "all"):
        probe_capacity()

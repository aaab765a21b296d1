"""Criterion-6 calibration: coded-vs-uncoded slope ratio in the per-use
ensemble (N=1, R_n=4, K=4, w=R). Freezes the acceptance grid."""

import json
import time

import numpy as np

from mbmsim.analysis import pairwise_error_closed_form
from mbmsim.engine import (ConstellationSpec, FecSpec, StoppingRule, SweepSpec,
                           run_coded_sweep, run_uncoded_sweep)

GRID_DB = (0.5, 1.5, 2.5, 3.5)
CS = ConstellationSpec(1, 4, 4)


def predicted_p(ebn0_db):
    snr = 4 * 10 ** (ebn0_db / 10)
    return 15 * pairwise_error_closed_form(snr, 4, 1)


def fit_slope(ebn0_db, rates):
    x = np.log(4 * 10 ** (np.asarray(ebn0_db) / 10.0))
    y = np.log(np.asarray(rates))
    return np.polyfit(x, y, 1)[0]


def main():
    print("predicted uncoded p:", {db: f"{predicted_p(db):.3e}" for db in GRID_DB}, flush=True)
    t0 = time.time()
    out = {"grid_db": GRID_DB}

    unc = SweepSpec(CS, GRID_DB, constellation_mode="redraw-per-use",
                    stopping=StoppingRule(min_errors=400, max_trials=400000),
                    batch_size=4000, seed=61)
    pts = run_uncoded_sweep(unc, workers=1)
    out["uncoded_ser"] = [p.ser for p in pts]
    out["uncoded_slope"] = fit_slope(GRID_DB, out["uncoded_ser"])
    print("uncoded:", [f"{p.ser:.3e}" for p in pts], "slope",
          f"{out['uncoded_slope']:.3f}", flush=True)

    for t, dim in ((1, 13), (2, 11)):
        spec = SweepSpec(CS, GRID_DB, constellation_mode="redraw-per-use",
                         fec=FecSpec(4, 15, dim),
                         stopping=StoppingRule(min_errors=50, max_trials=7_000_000),
                         batch_size=20000, seed=61)
        pts = run_coded_sweep(spec, workers=1)
        key = f"t{t}"
        out[key + "_fer"] = [p.fer for p in pts]
        out[key + "_frames"] = [p.trials for p in pts]
        out[key + "_slope"] = fit_slope(GRID_DB, out[key + "_fer"])
        ratio = out[key + "_slope"] / out["uncoded_slope"]
        out[key + "_ratio"] = ratio
        print(f"t={t}:", [f"{p.fer:.3e}" for p in pts], "slope",
              f"{out[key + '_slope']:.3f}", "ratio", f"{ratio:.3f}", flush=True)

    out["minutes"] = (time.time() - t0) / 60
    json.dump(out, open("scripts/slope_probe.json", "w"), indent=2)
    print("done", out["minutes"], "min", flush=True)


if __name__ == "__main__":
    main()

"""Command-line front end: config parsing, experiment dispatch, CSV output.

Subcommands: ``ser`` (uncoded sweep), ``fer`` (coded sweep), ``analytic``
(closed-form curves), ``capacity`` (mutual-information histogram data),
``agree`` (detector agreement study), ``train-sweep`` (SER vs pilot quality).

Every run writes a CSV plus a ``<csv>.manifest.json`` with the fully resolved
configuration, seed, and package version, sufficient to reproduce the run.
Option values resolve as defaults < preset < config file < flags. Config
files are INI-style with one section per subcommand; grid-valued options use
the range grammar ``lo..hi[:step]`` (inclusive) or comma-separated values.

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import os
import sys
import time

import numpy as np

from . import __version__
from ._kernels import default_backend
from .analysis import (coded_error_approx, coded_error_sum, mutual_information_mc,
                       pairwise_error_asymptotic, pairwise_error_closed_form,
                       qam_constellation)
from .detect import DetectorConfig, agreement_rate, all_unit_permutations, \
    random_unit_permutations
from .engine import (ConstellationSpec, CurvePoint, FecSpec, StoppingRule, SweepSpec,
                     run_coded_sweep, run_training_sweep, run_uncoded_sweep)
from .model import ChannelParams, eb_n0_to_n0, generate_constellation
from .presets import PRESETS
from .rng import substream

CURVE_SCHEMA = ("ebn0_db", "trials", "sym_errors", "frame_errors", "ser", "fer",
                "ci95_lo", "ci95_hi", "seconds")


class ConfigError(Exception):
    pass


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def write_curve_csv(fh, points: list[CurvePoint], first_column: str = "ebn0_db") -> None:
    w = csv.writer(fh)
    w.writerow((first_column,) + CURVE_SCHEMA[1:])
    for p in points:
        w.writerow([_fmt(p.ebn0_db), p.trials, p.symbol_errors, p.frame_errors,
                    _fmt(p.ser), _fmt(p.fer), _fmt(p.ci95_lo), _fmt(p.ci95_hi),
                    _fmt(p.seconds)])


def read_curve_csv(fh) -> list[CurvePoint]:
    """Parse rows written by :func:`write_curve_csv` back into CurvePoints."""
    rows = list(csv.reader(fh))
    if not rows or tuple(rows[0][1:]) != CURVE_SCHEMA[1:]:
        raise ValueError("not a curve CSV (header mismatch)")
    out = []
    for row in rows[1:]:
        out.append(CurvePoint(
            ebn0_db=float(row[0]), trials=int(row[1]), symbol_errors=int(row[2]),
            frame_errors=int(row[3]), ser=float(row[4]), fer=float(row[5]),
            ci95_lo=float(row[6]), ci95_hi=float(row[7]), seconds=float(row[8])))
    return out


def parse_float_range(text: str) -> list[float]:
    """``lo..hi[:step]`` inclusive, or comma-separated values, or a scalar."""
    text = text.strip()
    if ".." in text:
        span, _, step_s = text.partition(":")
        lo_s, _, hi_s = span.partition("..")
        try:
            lo, hi = float(lo_s), float(hi_s)
            step = float(step_s) if step_s else 1.0
        except ValueError:
            raise ConfigError(f"bad range {text!r}") from None
        if step <= 0 or hi < lo:
            raise ConfigError(f"bad range {text!r}")
        n = int(np.floor((hi - lo) / step + 1e-9)) + 1
        return [lo + i * step for i in range(n)]
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"bad number list {text!r}") from None


def parse_int_range(text: str) -> list[int]:
    vals = parse_float_range(text)
    out = [int(round(v)) for v in vals]
    if any(abs(v - r) > 1e-9 for v, r in zip(vals, out)):
        raise ConfigError(f"expected integers: {text!r}")
    return out


# option tables: (name, parser, default, help); None default means required
_COMMON = [
    ("seed", int, 0, "master random seed"),
    ("workers", int, None, "worker threads (default: cpu count)"),
    ("output", str, None, "output CSV path (default: <out-dir>/<command>.csv)"),
    ("out-dir", str, None, "output directory (default: $MBMSIM_OUT_DIR or cwd)"),
]

_LINK = [
    ("preset", str, None, "named preset: " + ", ".join(sorted(PRESETS))),
    ("n", int, None, "transmit units"),
    ("bits-per-unit", int, None, "bits selected by each unit"),
    ("k", int, None, "receive dimensions"),
    ("d-slots", int, 1, "silent-transmission time slots (dimension multiplier)"),
    ("energy", float, 1.0, "per-unit transmit energy"),
    ("ebn0", parse_float_range, None, "Eb/N0 grid in dB (lo..hi[:step])"),
    ("exhaustive", bool, False, "use exhaustive ML detection"),
    ("p", int, 1, "beam width for layered detection"),
    ("iterations", int, 2, "layered detection iterations"),
    ("permutations", str, "all", "restart orders: 'all' or a count"),
    ("min-errors", int, 100, "stop a grid point after this many errors"),
    ("max-trials", int, 1_000_000, "trial cap per grid point"),
    ("max-seconds", float, None, "wall-clock cap per grid point"),
    ("mode", str, "redraw-per-batch", "fixed-single or redraw-per-batch"),
    ("batch-size", int, 1000, "trials per scheduling batch"),
    ("cap", int, 2**24, "exhaustive enumeration cap"),
]

_OPTIONS = {
    "ser": _COMMON + _LINK,
    "fer": _COMMON + _LINK + [
        ("rs-w", int, 8, "Reed-Solomon field bits"),
        ("rs-len", int, 240, "Reed-Solomon block length L"),
        ("rs-dim", int, 225, "Reed-Solomon dimension D"),
    ],
    "analytic": _COMMON + [
        ("k", int, 1, "receive dimensions"),
        ("snr-db", parse_float_range, None, "linear-SNR grid in dB"),
        ("delta", parse_int_range, None, "pairwise error orders"),
        ("t", parse_int_range, None, "code correction capabilities"),
        ("d-max", int, 20, "upper summation limit for coded curves"),
    ],
    "capacity": _COMMON + [
        ("points", int, 256, "constellation size"),
        ("k", int, 1, "receive dimensions"),
        ("realizations", int, 10000, "random constellations to draw"),
        ("snr-db", float, 22.4, "operating SNR in dB"),
        ("samples", int, 2000, "Monte Carlo samples per realization"),
        ("qam", bool, False, "append the square-QAM reference row"),
    ],
    "agree": _COMMON + [
        ("n", int, 2, "transmit units"),
        ("bits-per-unit", int, 4, "bits selected by each unit"),
        ("k", int, 8, "receive dimensions"),
        ("energy", float, 1.0, "per-unit transmit energy"),
        ("ebn0", parse_float_range, None, "Eb/N0 grid in dB"),
        ("p", int, 8, "beam width"),
        ("iterations", int, 2, "iterations"),
        ("permutations", str, "all", "restart orders: 'all' or a count"),
        ("trials", int, 10000, "trials per grid point"),
        ("cap", int, 2**24, "exhaustive enumeration cap"),
    ],
    "train-sweep": _COMMON + [
        ("n", int, 2, "transmit units"),
        ("bits-per-unit", int, 4, "bits selected by each unit"),
        ("k", int, 4, "receive dimensions"),
        ("energy", float, 1.0, "per-unit transmit energy"),
        ("ebn0", float, None, "operating Eb/N0 in dB"),
        ("pilot-n0", parse_float_range, None, "pilot noise density grid"),
        ("reps", int, 1, "pilot repetitions per table entry"),
        ("scheme", str, "hadamard", "default-vector scheme: hadamard or bypass"),
        ("exhaustive", bool, True, "use exhaustive ML detection"),
        ("p", int, 1, "beam width for layered detection"),
        ("iterations", int, 2, "layered detection iterations"),
        ("permutations", str, "all", "restart orders"),
        ("min-errors", int, 100, "stop after this many errors"),
        ("max-trials", int, 200_000, "trial cap per point"),
        ("batch-size", int, 1000, "trials per scheduling batch"),
        ("cap", int, 2**24, "exhaustive enumeration cap"),
    ],
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="mbmsim", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd, opts in _OPTIONS.items():
        p = sub.add_parser(cmd)
        p.add_argument("--config", type=str, default=None,
                       help="INI config file with a [%s] section" % cmd)
        for name, typ, _default, helptext in opts:
            flag = "--" + name
            if typ is bool:
                p.add_argument(flag, action="store_const", const=True, default=None,
                               help=helptext)
            else:
                p.add_argument(flag, type=str, default=None, help=helptext)
    return parser


def _resolve(cmd: str, args: argparse.Namespace) -> dict:
    """Merge defaults, preset, config file, and flags into one option dict."""
    opts = {name: (typ, default) for name, typ, default, _ in _OPTIONS[cmd]}
    values = {name: default for name, (_, default) in opts.items()}

    def coerce(name, raw, origin):
        typ = opts[name][0]
        try:
            if typ is bool:
                if isinstance(raw, bool):
                    return raw
                return str(raw).strip().lower() in ("1", "true", "yes", "on")
            return typ(raw)
        except ConfigError:
            raise
        except (TypeError, ValueError):
            raise ConfigError(f"{origin}: bad value for {name!r}: {raw!r}") from None

    preset_name = getattr(args, "preset", None)
    if preset_name:
        if preset_name not in PRESETS:
            raise ConfigError(f"unknown preset {preset_name!r}; "
                              f"choose from {sorted(PRESETS)}")
        for key, val in PRESETS[preset_name].items():
            name = key.replace("_", "-")
            if name in values:
                values[name] = val
        values["preset"] = preset_name

    if args.config:
        cp = configparser.ConfigParser()
        try:
            with open(args.config) as fh:
                cp.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        except configparser.Error as exc:
            raise ConfigError(f"config parse error: {exc}") from None
        if cp.has_section(cmd):
            for key, raw in cp.items(cmd):
                name = key.replace("_", "-")
                if name not in values:
                    raise ConfigError(f"{args.config} [{cmd}]: unknown option {key!r}")
                values[name] = coerce(name, raw, f"{args.config} [{cmd}]")

    for name in values:
        raw = getattr(args, name.replace("-", "_"), None)
        if raw is not None:
            values[name] = raw if opts[name][0] is bool else coerce(name, raw, "flag")

    missing = [n for n, v in values.items() if v is None
               and n in ("ebn0", "snr-db", "pilot-n0")]
    if missing:
        raise ConfigError(f"missing required option(s): {', '.join('--' + m for m in missing)}")
    return values


def _out_path(cmd: str, values: dict) -> str:
    if values.get("output"):
        return values["output"]
    out_dir = values.get("out-dir") or os.environ.get("MBMSIM_OUT_DIR") or "."
    return os.path.join(out_dir, f"{cmd}.csv")


def _write_outputs(cmd: str, values: dict, path: str, rows_text: str,
                   extra_manifest: dict | None = None) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(rows_text)
    manifest = {
        "command": cmd,
        "config": {k: v for k, v in sorted(values.items())},
        "package_version": __version__,
        "kernel_backend": default_backend(),
        "created_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    if extra_manifest:
        manifest.update(extra_manifest)
    with open(path + ".manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, default=str)
    print(f"wrote {path} and {path}.manifest.json")


def _detector_from(values: dict, num_units: int) -> DetectorConfig | None:
    if values.get("exhaustive"):
        return None
    perm_spec = str(values.get("permutations", "all"))
    if perm_spec == "all":
        perms = all_unit_permutations(num_units)
        if len(perms) > 24:
            perms = random_unit_permutations(num_units, 24, values["seed"])
    else:
        try:
            count = int(perm_spec)
        except ValueError:
            raise ConfigError(f"permutations must be 'all' or a count, got {perm_spec!r}")
        perms = random_unit_permutations(num_units, count, values["seed"])
    return DetectorConfig(iterations=values["iterations"], beam_width=values["p"],
                          permutations=perms)


def _sweep_spec(values: dict, fec: FecSpec | None = None) -> SweepSpec:
    for req in ("n", "bits-per-unit", "k"):
        if values.get(req) is None:
            raise ConfigError(f"missing required option --{req} (or a --preset)")
    cs = ConstellationSpec(values["n"], values["bits-per-unit"], values["k"],
                           values.get("d-slots", 1))
    return SweepSpec(
        constellation=cs,
        ebn0_grid_db=tuple(values["ebn0"]) if isinstance(values["ebn0"], list)
        else (float(values["ebn0"]),),
        detector=_detector_from(values, cs.num_units),
        stopping=StoppingRule(values["min-errors"], values["max-trials"],
                              values.get("max-seconds")),
        constellation_mode=values.get("mode", "redraw-per-batch"),
        fec=fec,
        per_unit_energy=values["energy"],
        batch_size=values["batch-size"],
        seed=values["seed"],
        enumeration_cap=values["cap"],
    )


def _cmd_ser(values: dict) -> tuple[str, dict]:
    spec = _sweep_spec(values)
    points = run_uncoded_sweep(spec, workers=values["workers"])
    buf = io.StringIO()
    write_curve_csv(buf, points)
    extra = {"censored_points": [p.ebn0_db for p in points if p.censored]}
    return buf.getvalue(), extra


def _cmd_fer(values: dict) -> tuple[str, dict]:
    fec = FecSpec(values["rs-w"], values["rs-len"], values["rs-dim"])
    spec = _sweep_spec(values, fec=fec)
    points = run_coded_sweep(spec, workers=values["workers"])
    buf = io.StringIO()
    write_curve_csv(buf, points)
    extra = {
        "censored_points": [p.ebn0_db for p in points if p.censored],
        "primitive_poly": hex(fec.build().gf.poly),
    }
    return buf.getvalue(), extra


def _cmd_analytic(values: dict) -> tuple[str, dict]:
    if (values.get("delta") is None) == (values.get("t") is None):
        raise ConfigError("analytic needs exactly one of --delta or --t")
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(("snr_db", "delta_or_t", "p_closed", "p_asymptotic"))
    k = values["k"]
    for snr_db in values["snr-db"]:
        snr = 10.0 ** (snr_db / 10.0)
        if values.get("delta") is not None:
            for delta in values["delta"]:
                w.writerow([_fmt(snr_db), delta,
                            _fmt(pairwise_error_closed_form(snr, k, delta)),
                            _fmt(pairwise_error_asymptotic(snr, delta))])
        else:
            for t in values["t"]:
                w.writerow([_fmt(snr_db), t,
                            _fmt(coded_error_sum(snr, k, t, values["d-max"])),
                            _fmt(coded_error_approx(snr, t))])
    return buf.getvalue(), {}


def _cmd_capacity(values: dict) -> tuple[str, dict]:
    snr = 10.0 ** (values["snr-db"] / 10.0)
    k = values["k"]
    m = values["points"]
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(("kind", "index", "mi_bits", "stderr"))
    for r in range(values["realizations"]):
        rng = substream(values["seed"], "constellation", r)
        pts = (rng.standard_normal((m, k)) + 1j * rng.standard_normal((m, k))) / np.sqrt(2.0)
        est, se = mutual_information_mc(pts, snr, values["samples"],
                                        substream(values["seed"], "mutual-information", r))
        w.writerow(["random", r, _fmt(est), _fmt(se)])
    if values.get("qam"):
        if k != 1:
            raise ConfigError("--qam reference requires --k 1")
        est, se = mutual_information_mc(qam_constellation(m), snr, values["samples"] * 10,
                                        substream(values["seed"], "mutual-information",
                                                  values["realizations"]))
        w.writerow(["qam", 0, _fmt(est), _fmt(se)])
    return buf.getvalue(), {}


def _cmd_agree(values: dict) -> tuple[str, dict]:
    cs = ConstellationSpec(values["n"], values["bits-per-unit"], values["k"])
    cfg = _detector_from(values, cs.num_units)
    if cfg is None:
        raise ConfigError("agree compares the layered detector; do not pass --exhaustive")
    c = generate_constellation(cs.num_units, cs.bits_per_unit, cs.effective_dims,
                               substream(values["seed"], "constellation"))
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(("ebn0_db", "trials", "agreement_rate"))
    for ebn0 in values["ebn0"]:
        n0 = eb_n0_to_n0(ebn0, cs.num_units, values["energy"], cs.rate_bits)
        rate = agreement_rate(c, ChannelParams(n0, values["energy"]), cfg,
                              values["trials"], values["seed"],
                              enumeration_cap=values["cap"])
        w.writerow([_fmt(ebn0), values["trials"], _fmt(rate)])
    return buf.getvalue(), {}


def _cmd_train_sweep(values: dict) -> tuple[str, dict]:
    spec = _sweep_spec({**values, "ebn0": values["ebn0"], "max-seconds": None,
                        "mode": "fixed-single"})
    points = run_training_sweep(spec, float(values["ebn0"]), values["pilot-n0"],
                                values["reps"], values["scheme"],
                                workers=values["workers"])
    buf = io.StringIO()
    write_curve_csv(buf, points, first_column="pilot_n0")
    return buf.getvalue(), {"scheme": values["scheme"], "reps": values["reps"]}


_HANDLERS = {
    "ser": _cmd_ser,
    "fer": _cmd_fer,
    "analytic": _cmd_analytic,
    "capacity": _cmd_capacity,
    "agree": _cmd_agree,
    "train-sweep": _cmd_train_sweep,
}


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        values = _resolve(args.command, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        rows_text, extra = _HANDLERS[args.command](values)
        path = _out_path(args.command, values)
        _write_outputs(args.command, values, path, rows_text, extra)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

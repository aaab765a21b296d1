"""Monte Carlo experiment orchestration: SER/FER sweeps and studies.

Trials run in fixed-size batches whose random streams are keyed by
(master seed, stream, point index, batch index), and batch results are
consumed strictly in batch order, so error counts are bit-identical at any
worker count. Stopping is error-count driven (Wilson confidence shrinks with
the error count, not the trial count) with a trial cap and an optional
wall-clock cap per grid point; a point cut short by the wall clock is flagged
``censored``.

Energy accounting: Eb is energy per information bit, so coded sweeps convert
Eb/N0 using rate R * D / L.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .detect import DetectorConfig, detect_exhaustive_batch, detect_layered_batch
from .fec import RsCode, SymbolMapping, codeword_to_messages, messages_to_codeword, \
    rs_decode, rs_encode_batch
from .model import LayeredConstellation, eb_n0_to_n0, generate_constellation, \
    map_messages_to_points
from .rng import substream
from .train import train_per_unit

DEFAULT_ENUMERATION_CAP = 2**24

# redraw-per-use models an independent channel state per channel use (ideal
# interleaving); every point is enumerated per use, so keep the set small
_PER_USE_CAP = 4096

_Z95 = 1.959963984540054


def wilson_interval(errors: int, trials: int) -> tuple[float, float]:
    """95% Wilson score interval for a binomial rate."""
    if trials < 1 or not 0 <= errors <= trials:
        raise ValueError("need 0 <= errors <= trials and trials >= 1")
    z2 = _Z95 * _Z95
    p = errors / trials
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2 * trials)) / denom
    half = (_Z95 / denom) * np.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials))
    # the score interval touches the boundary exactly at p = 0 and p = 1
    lo = 0.0 if errors == 0 else max(0.0, center - half)
    hi = 1.0 if errors == trials else min(1.0, center + half)
    return lo, hi


@dataclass(frozen=True)
class ConstellationSpec:
    num_units: int
    bits_per_unit: int
    receive_dims: int
    time_slots: int = 1

    @property
    def effective_dims(self) -> int:
        return self.receive_dims * self.time_slots

    @property
    def rate_bits(self) -> int:
        return self.num_units * self.bits_per_unit


@dataclass(frozen=True)
class StoppingRule:
    min_errors: int = 100
    max_trials: int = 1_000_000
    max_wall_seconds: float | None = None

    def __post_init__(self):
        if self.min_errors < 1 or self.max_trials < 1:
            raise ValueError("min_errors and max_trials must be >= 1")


@dataclass(frozen=True)
class FecSpec:
    """Reed-Solomon code request; the symbol mapping follows the link geometry."""

    field_bits: int
    length: int
    dimension: int
    primitive_poly: int | None = None

    def build(self) -> RsCode:
        return RsCode(self.field_bits, self.length, self.dimension, self.primitive_poly)


@dataclass(frozen=True)
class SweepSpec:
    constellation: ConstellationSpec
    ebn0_grid_db: tuple[float, ...]
    detector: DetectorConfig | None = None      # None selects exhaustive ML
    stopping: StoppingRule = StoppingRule()
    constellation_mode: str = "redraw-per-batch"
    fec: FecSpec | None = None
    per_unit_energy: float = 1.0
    batch_size: int = 1000
    seed: int = 0
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP

    def __post_init__(self):
        if len(self.ebn0_grid_db) == 0:
            raise ValueError("ebn0_grid_db must be nonempty")
        if list(self.ebn0_grid_db) != sorted(set(self.ebn0_grid_db)):
            raise ValueError("ebn0_grid_db must be strictly increasing")
        if self.constellation_mode not in ("fixed-single", "redraw-per-batch",
                                           "redraw-per-use"):
            raise ValueError("constellation_mode must be fixed-single, redraw-per-batch "
                             "or redraw-per-use")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.detector is not None:
            self.detector.validate_for(self.constellation.num_units)
        if self.constellation_mode == "redraw-per-use":
            if self.detector is not None:
                raise ValueError("redraw-per-use supports exhaustive detection only")
            if 2 ** self.constellation.rate_bits > _PER_USE_CAP:
                raise ValueError(f"redraw-per-use enumerates every point per use; "
                                 f"needs at most {_PER_USE_CAP} points")


@dataclass
class CurvePoint:
    """One measured grid point. ``trials`` counts channel uses for uncoded
    runs and frames for coded runs; ``ci95_lo/hi`` bound the primary rate
    (SER uncoded, FER coded)."""

    ebn0_db: float
    trials: int
    symbol_errors: int
    frame_errors: int
    ser: float
    fer: float
    ci95_lo: float
    ci95_hi: float
    seconds: float
    throughput: float = 0.0
    censored: bool = False
    channel_uses: int = 0
    info_symbol_errors: int = 0

    @property
    def ci95(self) -> float:
        """Wilson interval half-width of the primary rate."""
        return (self.ci95_hi - self.ci95_lo) / 2.0


def _constellation_for(spec: SweepSpec, point_idx: int, batch_idx: int) -> LayeredConstellation:
    cs = spec.constellation
    if spec.constellation_mode == "fixed-single":
        return generate_constellation(cs.num_units, cs.bits_per_unit, cs.effective_dims,
                                      substream(spec.seed, "constellation"))
    return generate_constellation(cs.num_units, cs.bits_per_unit, cs.effective_dims,
                                  substream(spec.seed, "constellation", point_idx, batch_idx))


def _detect_batch(rx: np.ndarray, c: LayeredConstellation, spec: SweepSpec) -> np.ndarray:
    # detectors work in constellation units: normalize the transmit scaling out
    rx = rx * (1.0 / np.sqrt(spec.per_unit_energy))
    if spec.detector is None:
        return detect_exhaustive_batch(rx, c, spec.enumeration_cap)
    return detect_layered_batch(rx, c, spec.detector)[0]


def _transmit_batch(pts: np.ndarray, n0: float, energy: float, rng) -> np.ndarray:
    noise = rng.standard_normal(pts.shape) + 1j * rng.standard_normal(pts.shape)
    return np.sqrt(energy) * pts + np.sqrt(n0 / 2.0) * noise


def _per_use_tables(spec: SweepSpec, point_idx: int, batch_idx: int,
                    uses: int) -> np.ndarray:
    cs = spec.constellation
    rng = substream(spec.seed, "constellation", point_idx, batch_idx)
    shape = (uses, cs.num_units, 2**cs.bits_per_unit, cs.effective_dims)
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def _per_use_points(tables: np.ndarray, msgs: np.ndarray) -> np.ndarray:
    rows = np.arange(tables.shape[0])
    pts = tables[rows, 0, msgs[:, 0]].copy()
    for n in range(1, tables.shape[1]):
        pts += tables[rows, n, msgs[:, n]]
    return pts


def _per_use_detect(tables: np.ndarray, rx: np.ndarray, energy: float) -> np.ndarray:
    """Exhaustive detection when every use has its own constellation draw."""
    rx = rx * (1.0 / np.sqrt(energy))
    num_units = tables.shape[1]
    size = tables.shape[2]
    enum = _enum_messages(num_units, size)
    pts = tables[:, 0, enum[:, 0], :]
    for n in range(1, num_units):
        pts = pts + tables[:, n, enum[:, n], :]
    diff = pts - rx[:, None, :]
    d = np.sum(diff.real**2 + diff.imag**2, axis=2)
    return enum[np.argmin(d, axis=1)]


def _enum_messages(num_units: int, size: int) -> np.ndarray:
    idx = np.arange(size**num_units, dtype=np.int64)
    return np.stack([(idx // size**(num_units - 1 - n)) % size
                     for n in range(num_units)], axis=1)


def _uncoded_batch(spec: SweepSpec, n0: float, point_idx: int, batch_idx: int,
                   size: int, fixed_c: LayeredConstellation | None,
                   detect_c: LayeredConstellation | None = None) -> dict:
    cs = spec.constellation
    msgs = substream(spec.seed, "message", point_idx, batch_idx).integers(
        0, 2**cs.bits_per_unit, size=(size, cs.num_units))
    noise_rng = substream(spec.seed, "noise", point_idx, batch_idx)
    if spec.constellation_mode == "redraw-per-use":
        tables = _per_use_tables(spec, point_idx, batch_idx, size)
        rx = _transmit_batch(_per_use_points(tables, msgs), n0,
                             spec.per_unit_energy, noise_rng)
        det = _per_use_detect(tables, rx, spec.per_unit_energy)
    else:
        c = fixed_c if fixed_c is not None else _constellation_for(spec, point_idx, batch_idx)
        pts = map_messages_to_points(c, msgs)
        rx = _transmit_batch(pts, n0, spec.per_unit_energy, noise_rng)
        det = _detect_batch(rx, detect_c if detect_c is not None else c, spec)
    errors = int(np.count_nonzero(np.any(det != msgs, axis=1)))
    return {"trials": size, "symbol_errors": errors, "frame_errors": errors,
            "channel_uses": size, "info_symbol_errors": 0}


def _coded_batch(spec: SweepSpec, n0: float, point_idx: int, batch_idx: int,
                 size: int, fixed_c: LayeredConstellation | None,
                 code: RsCode, mapping: SymbolMapping) -> dict:
    frames = size
    info = substream(spec.seed, "message", point_idx, batch_idx).integers(
        0, code.gf.order, size=(frames, code.dimension))
    cw = rs_encode_batch(code, info)
    ch_msgs = codeword_to_messages(cw, mapping)          # (frames, uses, N)
    uses = ch_msgs.shape[1]
    flat = ch_msgs.reshape(-1, spec.constellation.num_units)
    noise_rng = substream(spec.seed, "noise", point_idx, batch_idx)
    if spec.constellation_mode == "redraw-per-use":
        tables = _per_use_tables(spec, point_idx, batch_idx, flat.shape[0])
        rx = _transmit_batch(_per_use_points(tables, flat), n0,
                             spec.per_unit_energy, noise_rng)
        det = _per_use_detect(tables, rx, spec.per_unit_energy)
    else:
        c = fixed_c if fixed_c is not None else _constellation_for(spec, point_idx, batch_idx)
        pts = map_messages_to_points(c, flat)
        rx = _transmit_batch(pts, n0, spec.per_unit_energy, noise_rng)
        det = _detect_batch(rx, c, spec)
    det = det.astype(np.int64).reshape(frames, uses, spec.constellation.num_units)
    symbol_errors = int(np.count_nonzero(
        np.any(det != ch_msgs, axis=2)))
    received_cw = messages_to_codeword(det, mapping)     # (frames, L)

    # clean frames re-encode to themselves; only the rest hit the decoder
    reencoded = rs_encode_batch(code, received_cw[:, :code.dimension])
    dirty = np.flatnonzero(np.any(reencoded != received_cw, axis=1))
    decoded_info = received_cw[:, :code.dimension].copy()
    failed = np.zeros(frames, dtype=bool)
    for f in dirty:
        res = rs_decode(code, received_cw[f])
        decoded_info[f] = res.message
        failed[f] = res.failed
    wrong = decoded_info != info
    frame_errors = int(np.count_nonzero(failed | np.any(wrong, axis=1)))
    info_symbol_errors = int(np.count_nonzero(wrong))
    return {"trials": frames, "symbol_errors": symbol_errors,
            "frame_errors": frame_errors, "channel_uses": frames * uses,
            "info_symbol_errors": info_symbol_errors}


def _run_point(spec: SweepSpec, point_idx: int, ebn0_db: float, batch_fn,
               workers: int | None) -> CurvePoint:
    stop = spec.stopping
    batch = spec.batch_size
    num_batches = -(-stop.max_trials // batch)
    sizes = [min(batch, stop.max_trials - i * batch) for i in range(num_batches)]
    workers = workers or 1
    window = max(2 * workers, workers + 1)

    totals = {"trials": 0, "symbol_errors": 0, "frame_errors": 0,
              "channel_uses": 0, "info_symbol_errors": 0}
    censored = False
    t0 = time.perf_counter()
    with ThreadPoolExecutor(max_workers=workers) as ex:
        inflight: dict[int, object] = {}
        next_submit = 0

        def fill():
            nonlocal next_submit
            while next_submit < num_batches and len(inflight) < window:
                inflight[next_submit] = ex.submit(batch_fn, point_idx, next_submit,
                                                  sizes[next_submit])
                next_submit += 1

        fill()
        consume = 0
        while consume < next_submit:
            result = inflight.pop(consume).result()
            consume += 1
            for k in totals:
                totals[k] += result[k]
            primary = totals["frame_errors"] if spec.fec else totals["symbol_errors"]
            if primary >= stop.min_errors or totals["trials"] >= stop.max_trials:
                break
            if stop.max_wall_seconds is not None and \
                    time.perf_counter() - t0 > stop.max_wall_seconds:
                censored = True
                break
            fill()
        for fut in inflight.values():
            fut.cancel()
    seconds = time.perf_counter() - t0

    trials = totals["trials"]
    uses = totals["channel_uses"]
    ser = totals["symbol_errors"] / uses if uses else 0.0
    fer = totals["frame_errors"] / trials if trials else 0.0
    if spec.fec:
        lo, hi = wilson_interval(totals["frame_errors"], trials)
    else:
        lo, hi = wilson_interval(totals["symbol_errors"], trials)
    return CurvePoint(ebn0_db=ebn0_db, trials=trials,
                      symbol_errors=totals["symbol_errors"],
                      frame_errors=totals["frame_errors"], ser=ser, fer=fer,
                      ci95_lo=lo, ci95_hi=hi, seconds=seconds,
                      throughput=uses / seconds if seconds > 0 else 0.0,
                      censored=censored, channel_uses=uses,
                      info_symbol_errors=totals["info_symbol_errors"])


def run_uncoded_sweep(spec: SweepSpec, workers: int | None = None) -> list[CurvePoint]:
    """Uncoded SER over the Eb/N0 grid: map, transmit, detect, count."""
    if spec.fec is not None:
        raise ValueError("spec has FEC configured; use run_coded_sweep")
    cs = spec.constellation
    _check_cap(spec)
    fixed_c = _constellation_for(spec, 0, 0) if spec.constellation_mode == "fixed-single" else None
    points = []
    for point_idx, ebn0 in enumerate(spec.ebn0_grid_db):
        n0 = eb_n0_to_n0(ebn0, cs.num_units, spec.per_unit_energy, cs.rate_bits)

        def batch_fn(pi, bi, size, _n0=n0):
            return _uncoded_batch(spec, _n0, pi, bi, size, fixed_c)

        points.append(_run_point(spec, point_idx, ebn0, batch_fn, workers))
    return points


def run_coded_sweep(spec: SweepSpec, workers: int | None = None) -> list[CurvePoint]:
    """Coded FER over the grid: encode, map, transmit, detect, decode, count."""
    if spec.fec is None:
        raise ValueError("spec.fec is required for a coded sweep")
    cs = spec.constellation
    _check_cap(spec)
    code = spec.fec.build()
    mapping = SymbolMapping(spec.fec.field_bits, cs.num_units, cs.bits_per_unit)
    if code.length % mapping.symbols_per_use:
        raise ValueError("code length must fill a whole number of channel uses")
    rate_info = cs.rate_bits * code.dimension / code.length
    fixed_c = _constellation_for(spec, 0, 0) if spec.constellation_mode == "fixed-single" else None
    points = []
    for point_idx, ebn0 in enumerate(spec.ebn0_grid_db):
        n0 = eb_n0_to_n0(ebn0, cs.num_units, spec.per_unit_energy, rate_info)

        def batch_fn(pi, bi, size, _n0=n0):
            return _coded_batch(spec, _n0, pi, bi, size, fixed_c, code, mapping)

        points.append(_run_point(spec, point_idx, ebn0, batch_fn, workers))
    return points


def run_training_sweep(spec: SweepSpec, ebn0_db: float, pilot_n0_grid, reps: int,
                       scheme: str = "hadamard", workers: int | None = None) -> list[CurvePoint]:
    """SER versus pilot quality: detect with a trained table copy of one fixed
    true constellation. Returned points carry the pilot N0 in ``ebn0_db``."""
    cs = spec.constellation
    _check_cap(spec)
    true_c = generate_constellation(cs.num_units, cs.bits_per_unit, cs.effective_dims,
                                    substream(spec.seed, "constellation"))
    n0 = eb_n0_to_n0(ebn0_db, cs.num_units, spec.per_unit_energy, cs.rate_bits)
    points = []
    for point_idx, pilot_n0 in enumerate(pilot_n0_grid):
        trained = train_per_unit(true_c, pilot_n0,
                                 reps, substream(spec.seed, "pilot", point_idx),
                                 default_scheme=scheme)

        def batch_fn(pi, bi, size, _trained=trained):
            return _uncoded_batch(spec, n0, pi, bi, size, true_c, detect_c=_trained)

        points.append(_run_point(spec, point_idx, float(pilot_n0), batch_fn, workers))
    return points


def _check_cap(spec: SweepSpec) -> None:
    if spec.detector is None:
        m = 2 ** spec.constellation.rate_bits
        if m > spec.enumeration_cap:
            raise ValueError(f"exhaustive detection needs {m} points enumerated, above "
                             f"the cap {spec.enumeration_cap}; configure a layered detector")

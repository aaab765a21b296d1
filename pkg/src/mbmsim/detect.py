"""Maximum-likelihood and greedy iterative layered detection.

``detect_exhaustive`` scans every constellation point (optimal, O(M));
``detect_layered`` runs the greedy per-unit search with permutation restarts
and a P-wide candidate beam, O(T * N * P * 2**bits_per_unit) distance
evaluations of O(K) each. Both break ties deterministically toward the
smallest integer message encoding, and both report the squared distance of
the chosen point recomputed directly from the constellation, so the layered
distance can never undercut the exhaustive one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations as _itertools_permutations

import numpy as np

from . import _kernels
from .model import (ChannelParams, LayeredConstellation, map_messages_to_points,
                    map_to_point)
from .rng import substream

DEFAULT_ENUMERATION_CAP = 2**24


def all_unit_permutations(num_units: int) -> tuple[tuple[int, ...], ...]:
    """All num_units! decoding orders (unit indices are 0-based)."""
    return tuple(_itertools_permutations(range(num_units)))


def random_unit_permutations(num_units: int, count: int, seed) -> tuple[tuple[int, ...], ...]:
    """``count`` distinct decoding orders drawn deterministically from ``seed``."""
    total = math.factorial(num_units)
    if count >= total:
        return all_unit_permutations(num_units)
    rng = substream(seed, "permutation") if isinstance(seed, int) else np.random.default_rng(seed)
    chosen: set[tuple[int, ...]] = set()
    while len(chosen) < count:
        chosen.add(tuple(int(x) for x in rng.permutation(num_units)))
    return tuple(sorted(chosen))


@dataclass(frozen=True)
class DetectorConfig:
    """Layered-search parameters: T iterations, beam width P, restart orders."""

    iterations: int
    beam_width: int
    permutations: tuple[tuple[int, ...], ...]
    tie_break: str = "lowest-index"
    early_exit_epsilon: float = 0.0

    def __post_init__(self):
        if self.iterations < 1 or self.beam_width < 1:
            raise ValueError("iterations and beam_width must be >= 1")
        if len(self.permutations) == 0:
            raise ValueError("need at least one permutation")
        if self.tie_break != "lowest-index":
            raise ValueError(f"unknown tie_break rule {self.tie_break!r}")
        object.__setattr__(self, "permutations",
                           tuple(tuple(int(i) for i in p) for p in self.permutations))

    def validate_for(self, num_units: int) -> None:
        want = set(range(num_units))
        for p in self.permutations:
            if set(p) != want or len(p) != num_units:
                raise ValueError(f"{p} is not a permutation of 0..{num_units - 1}")

    @staticmethod
    def default(num_units: int, *, beam_width: int = 1, iterations: int = 2,
                max_permutations: int = 24, seed: int = 0) -> "DetectorConfig":
        """All N! restart orders for small N, else a seeded random subset."""
        if math.factorial(num_units) <= max_permutations:
            perms = all_unit_permutations(num_units)
        else:
            perms = random_unit_permutations(num_units, max_permutations, seed)
        return DetectorConfig(iterations=iterations, beam_width=beam_width, permutations=perms)


@dataclass(frozen=True)
class DetectionResult:
    message: tuple[int, ...]
    distance_squared: float
    candidates_examined: int


def _row_distances(r: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances from ``r`` to each row of ``points``.

    Single shared reduction so every caller's distances are comparable
    bit for bit.
    """
    diff = points - r
    return np.sum(diff.real**2 + diff.imag**2, axis=-1)


def point_distance_sq(r: np.ndarray, constellation: LayeredConstellation, message) -> float:
    return float(_row_distances(r, map_to_point(constellation, message)[None, :])[0])


def _enumerate_message_block(constellation: LayeredConstellation,
                             start: int, stop: int) -> np.ndarray:
    idx = np.arange(start, stop, dtype=np.int64)
    bits = constellation.bits_per_unit
    mask = constellation.table_size - 1
    cols = [(idx >> (bits * (constellation.num_units - 1 - n))) & mask
            for n in range(constellation.num_units)]
    return np.stack(cols, axis=1)


def detect_exhaustive(r: np.ndarray, constellation: LayeredConstellation,
                      enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
                      block_size: int = 8192) -> DetectionResult:
    """Optimal minimum-distance detection by full enumeration."""
    m = constellation.num_points
    if m > enumeration_cap:
        raise ValueError(f"constellation has {m} points, above the enumeration cap "
                         f"{enumeration_cap}")
    r = np.asarray(r, dtype=np.complex128)
    best_d = np.inf
    best_idx = -1
    for start in range(0, m, block_size):
        msgs = _enumerate_message_block(constellation, start, min(start + block_size, m))
        d = _row_distances(r, map_messages_to_points(constellation, msgs))
        k = int(np.argmin(d))
        if d[k] < best_d:
            best_d = float(d[k])
            best_idx = start + k
    message = _enumerate_message_block(constellation, best_idx, best_idx + 1)[0]
    return DetectionResult(tuple(int(x) for x in message), best_d, m)


def detect_exhaustive_batch(received: np.ndarray, constellation: LayeredConstellation,
                            enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
                            block_size: int = 8192) -> np.ndarray:
    """Exhaustive detection of many received vectors at once.

    Uses the expanded form |r|^2 - 2 Re<r, c> + |c|^2 so the cross terms run
    through one matrix product per block; returns the (batch, N) messages.
    """
    m = constellation.num_points
    if m > enumeration_cap:
        raise ValueError(f"constellation has {m} points, above the enumeration cap "
                         f"{enumeration_cap}")
    received = np.ascontiguousarray(received, dtype=np.complex128)
    best_d = np.full(received.shape[0], np.inf)
    best_idx = np.zeros(received.shape[0], dtype=np.int64)
    for start in range(0, m, block_size):
        msgs = _enumerate_message_block(constellation, start, min(start + block_size, m))
        pts = map_messages_to_points(constellation, msgs)
        cross = received @ pts.conj().T
        d = np.sum(pts.real**2 + pts.imag**2, axis=1)[None, :] - 2.0 * cross.real
        k = np.argmin(d, axis=1)
        dk = np.take_along_axis(d, k[:, None], axis=1)[:, 0]
        better = dk < best_d
        best_d[better] = dk[better]
        best_idx[better] = start + k[better]
    bits = constellation.bits_per_unit
    mask = constellation.table_size - 1
    cols = [(best_idx >> (bits * (constellation.num_units - 1 - n))) & mask
            for n in range(constellation.num_units)]
    return np.stack(cols, axis=1).astype(np.int32)


def detect_layered_batch(received: np.ndarray, constellation: LayeredConstellation,
                         config: DetectorConfig, backend: str | None = None):
    """Kernel dispatch for a (batch, K) block; returns (messages, running dists)."""
    config.validate_for(constellation.num_units)
    kernel = _kernels.get_backend(backend)
    perms = np.asarray(config.permutations, dtype=np.int64)
    messages, dists, examined = kernel.beam_search_batch(
        np.ascontiguousarray(received, dtype=np.complex128),
        constellation.tables, perms, config.iterations, config.beam_width,
        config.early_exit_epsilon)
    return messages, dists, examined


def detect_layered(r: np.ndarray, constellation: LayeredConstellation,
                   config: DetectorConfig, backend: str | None = None) -> DetectionResult:
    """Greedy iterative layered detection (sub-optimal, fast)."""
    r = np.asarray(r, dtype=np.complex128)
    messages, _, examined = detect_layered_batch(r[None, :], constellation, config, backend)
    message = tuple(int(x) for x in messages[0])
    return DetectionResult(message, point_distance_sq(r, constellation, message),
                           int(examined[0]))


def agreement_rate(constellation: LayeredConstellation, params: ChannelParams,
                   config: DetectorConfig, trials: int, seed: int,
                   count_ties: bool = True, backend: str | None = None,
                   enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
                   batch_size: int = 2048) -> float:
    """Fraction of noisy trials where the layered detector matches exhaustive.

    With ``count_ties`` a differing message whose recomputed distance equals
    the exhaustive one to within 1e-9 counts as agreement (an exact tie).
    Deterministic given ``seed``.
    """
    c = constellation
    agreements = 0
    done = 0
    batch_idx = 0
    while done < trials:
        n = min(batch_size, trials - done)
        msg_rng = substream(seed, "agreement", batch_idx, 0)
        noise_rng = substream(seed, "agreement", batch_idx, 1)
        msgs = msg_rng.integers(0, c.table_size, size=(n, c.num_units))
        pts = map_messages_to_points(c, msgs)
        noise = noise_rng.standard_normal(pts.shape) + 1j * noise_rng.standard_normal(pts.shape)
        rx = np.sqrt(params.per_unit_energy) * pts + np.sqrt(params.noise_density / 2.0) * noise
        lay, _, _ = detect_layered_batch(rx, c, config, backend)
        exh = detect_exhaustive_batch(rx, c, enumeration_cap)
        same = np.all(lay == exh, axis=1)
        agreements += int(np.count_nonzero(same))
        if count_ties and not np.all(same):
            for b in np.flatnonzero(~same):
                d_lay = point_distance_sq(rx[b], c, lay[b])
                d_exh = point_distance_sq(rx[b], c, exh[b])
                if d_lay <= d_exh + 1e-9:
                    agreements += 1
        done += n
        batch_idx += 1
    return agreements / trials

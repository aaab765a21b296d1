"""Layered constellations, the AWGN channel, and energy accounting.

A constellation point is the superposition of one "constituent vector" per
transmit unit: unit ``n`` holds a table of ``2**bits_per_unit`` complex
K-dimensional vectors and the message component ``m_n`` selects one of them.
``N`` units therefore define ``2**(N*bits_per_unit)`` points while storing
only ``N * 2**bits_per_unit`` vectors.

Vectors are plain 1-D ``complex128`` numpy arrays throughout. Constituent
superposition is accumulated in unit order 0..N-1; that fixed order is part
of the contract so independently computed points match bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import as_generator


@dataclass(frozen=True)
class LayeredConstellation:
    """N tables of constituent vectors implicitly defining all points.

    ``tables`` has shape ``(num_units, 2**bits_per_unit, receive_dims)`` and
    is read-only after construction; instances are safe to share across
    threads.
    """

    num_units: int
    bits_per_unit: int
    receive_dims: int
    tables: np.ndarray

    def __post_init__(self):
        if self.num_units < 1 or self.receive_dims < 1 or self.bits_per_unit < 0:
            raise ValueError("num_units and receive_dims must be >= 1, bits_per_unit >= 0")
        expected = (self.num_units, 2**self.bits_per_unit, self.receive_dims)
        if self.tables.shape != expected:
            raise ValueError(f"tables shape {self.tables.shape} != {expected}")
        tables = np.ascontiguousarray(self.tables, dtype=np.complex128)
        tables.setflags(write=False)
        object.__setattr__(self, "tables", tables)

    @property
    def table_size(self) -> int:
        return 2**self.bits_per_unit

    @property
    def rate_bits(self) -> int:
        """Raw bits per channel use (no SBM extension, no FEC)."""
        return self.num_units * self.bits_per_unit

    @property
    def num_points(self) -> int:
        return 2**self.rate_bits


@dataclass(frozen=True)
class ChannelParams:
    """AWGN channel: noise density N0 per complex dimension, energy E per unit.

    Total symbol energy is ``num_units * per_unit_energy``; ``time_slots > 1``
    models silent-transmission slots purely as a receive-dimensionality
    multiplier (the constellation is then generated at Q = time_slots * K).
    """

    noise_density: float
    per_unit_energy: float = 1.0
    time_slots: int = 1

    def __post_init__(self):
        if self.noise_density < 0:
            raise ValueError("noise_density must be >= 0")
        if self.per_unit_energy <= 0:
            raise ValueError("per_unit_energy must be > 0")
        if self.time_slots < 1:
            raise ValueError("time_slots must be >= 1")

    def symbol_energy(self, num_units: int) -> float:
        return num_units * self.per_unit_energy


def generate_constellation(num_units: int, bits_per_unit: int, receive_dims: int,
                           seed) -> LayeredConstellation:
    """Draw constituent vectors i.i.d. circularly-symmetric complex Gaussian.

    Components have unit variance (1/2 per real part), the static
    Rayleigh-fading convention E|h_k|^2 = 1. Deterministic given ``seed``.
    """
    if num_units < 1 or bits_per_unit < 1 or receive_dims < 1:
        raise ValueError("num_units, bits_per_unit and receive_dims must be >= 1")
    rng = as_generator(seed)
    shape = (num_units, 2**bits_per_unit, receive_dims)
    tables = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    return LayeredConstellation(num_units, bits_per_unit, receive_dims, tables)


def constellation_from_tables(tables) -> LayeredConstellation:
    """Wrap explicit per-unit constituent tables verbatim.

    ``tables`` is a sequence of per-unit tables, each a sequence of equal
    length complex vectors; every table must have the same power-of-two size.
    Enables deterministic toy constellations and golden-value fixtures.
    """
    if len(tables) == 0:
        raise ValueError("need at least one unit table")
    arrays = []
    for t in tables:
        a = np.atleast_2d(np.asarray(t, dtype=np.complex128))
        if a.shape[0] == 0:
            raise ValueError("unit tables must be nonempty")
        arrays.append(a)
    size = arrays[0].shape[0]
    dims = arrays[0].shape[1]
    if size & (size - 1):
        raise ValueError(f"table size {size} is not a power of two")
    for a in arrays[1:]:
        if a.shape[0] != size:
            raise ValueError("all unit tables must have the same size")
        if a.shape[1] != dims:
            raise ValueError("constituent vectors must all have the same length")
    bits = size.bit_length() - 1
    return LayeredConstellation(len(arrays), bits, dims, np.stack(arrays))


def map_to_point(constellation: LayeredConstellation, message, weights=None) -> np.ndarray:
    """Superpose the selected constituents: sum_n s_n * h^n(m_n).

    ``weights`` defaults to all-ones (pure media-based modulation); pass
    unit-modulus complex weights to model a source-modulated extension.
    """
    msg = np.asarray(message, dtype=np.int64)
    if msg.shape != (constellation.num_units,):
        raise ValueError(f"message must have {constellation.num_units} components")
    if np.any(msg < 0) or np.any(msg >= constellation.table_size):
        raise ValueError("message index out of range")
    if weights is None:
        w = np.ones(constellation.num_units, dtype=np.complex128)
    else:
        w = np.asarray(weights, dtype=np.complex128)
        if w.shape != (constellation.num_units,):
            raise ValueError(f"weights must have {constellation.num_units} components")
    point = np.zeros(constellation.receive_dims, dtype=np.complex128)
    for n in range(constellation.num_units):
        point = point + w[n] * constellation.tables[n, msg[n]]
    return point


def map_messages_to_points(constellation: LayeredConstellation, messages: np.ndarray) -> np.ndarray:
    """Vectorized all-ones mapping of a (batch, N) message array to points.

    Accumulates in the same unit order as :func:`map_to_point`, so rows match
    the scalar mapping bit for bit.
    """
    msgs = np.asarray(messages, dtype=np.int64)
    points = constellation.tables[0][msgs[:, 0]].copy()
    for n in range(1, constellation.num_units):
        points += constellation.tables[n][msgs[:, n]]
    return points


def transmit(point: np.ndarray, params: ChannelParams, seed) -> np.ndarray:
    """Scale by sqrt(per-unit energy) and add complex AWGN with E|z_k|^2 = N0."""
    rng = as_generator(seed)
    point = np.asarray(point, dtype=np.complex128)
    noise = rng.standard_normal(point.shape) + 1j * rng.standard_normal(point.shape)
    return np.sqrt(params.per_unit_energy) * point + np.sqrt(params.noise_density / 2.0) * noise


def eb_n0_to_n0(ebn0_db: float, num_units: int, per_unit_energy: float, rate_bits: float) -> float:
    """Noise density from Eb/N0 in dB: N0 = N*E / (R * 10^(dB/10))."""
    if rate_bits < 1:
        raise ValueError("rate_bits must be >= 1")
    if per_unit_energy <= 0:
        raise ValueError("per_unit_energy must be > 0")
    return num_units * per_unit_energy / (rate_bits * 10.0 ** (ebn0_db / 10.0))


def n0_to_eb_n0(n0: float, num_units: int, per_unit_energy: float, rate_bits: float) -> float:
    """Inverse of :func:`eb_n0_to_n0` (Eb/N0 in dB)."""
    return 10.0 * np.log10(num_units * per_unit_energy / (rate_bits * n0))


def message_to_index(constellation: LayeredConstellation, message) -> int:
    """Big-endian message encoding: unit 0 occupies the most significant bits."""
    idx = 0
    for m in np.asarray(message, dtype=np.int64):
        idx = (idx << constellation.bits_per_unit) | int(m)
    return idx


def index_to_message(constellation: LayeredConstellation, index: int) -> tuple[int, ...]:
    mask = constellation.table_size - 1
    out = []
    for n in reversed(range(constellation.num_units)):
        out.append((index >> (n * constellation.bits_per_unit)) & mask)
    return tuple(out)


def squared_norm(v: np.ndarray) -> float:
    """Sum_k |v_k|^2 via the shared reduction used by all distance checks."""
    v = np.asarray(v)
    return float(np.sum(v.real**2 + v.imag**2, axis=-1))


_FORMAT_HEADER = "mbmsim-constellation v1"


def save_constellation(path, constellation: LayeredConstellation) -> None:
    """Write the self-describing text table format (header, then one
    constituent per line as re/im pairs, unit-major order)."""
    c = constellation
    with open(path, "w") as fh:
        fh.write(f"{_FORMAT_HEADER}\n")
        fh.write(f"{c.num_units} {c.bits_per_unit} {c.receive_dims}\n")
        for n in range(c.num_units):
            for s in range(c.table_size):
                row = c.tables[n, s]
                fh.write(" ".join(f"{x.real:.17g} {x.imag:.17g}" for x in row) + "\n")


def load_constellation(path) -> LayeredConstellation:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != _FORMAT_HEADER:
            raise ValueError(f"unrecognized constellation file header: {header!r}")
        num_units, bits, dims = (int(x) for x in fh.readline().split())
        rows = []
        for line in fh:
            vals = [float(x) for x in line.split()]
            rows.append(np.array(vals[0::2]) + 1j * np.array(vals[1::2]))
    tables = np.stack(rows).reshape(num_units, 2**bits, dims)
    return LayeredConstellation(num_units, bits, dims, tables)

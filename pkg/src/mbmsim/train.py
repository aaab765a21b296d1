"""Receiver training: constituent-vector estimation from noisy pilots.

Training is per unit rather than per constellation point: each unit's table
of 2^R_n constituents is scanned while the other units hold their default
constituent (index 0), whose received contribution is estimated separately
and subtracted. Pilot cost is therefore N * 2^R_n * reps + N * reps slots
instead of 2^(N R_n).

Default vectors are estimated either by observing units one at a time
("bypass", as with RF bypass switches) or by N' = next power of two slots of
+-1 weighted superpositions forming a Hadamard basis, inverted at the
receiver ("hadamard"); the latter averages noise down by 1/N' per component.
"""

from __future__ import annotations

import numpy as np

from .model import LayeredConstellation
from .rng import substream

_SCHEMES = ("hadamard", "bypass")


def _pilot_noise(rng, dims: int, pilot_n0: float, count: int = 1) -> np.ndarray:
    shape = (count, dims) if count > 1 else (dims,)
    return np.sqrt(pilot_n0 / 2.0) * (rng.standard_normal(shape)
                                      + 1j * rng.standard_normal(shape))


def _hadamard(order: int) -> np.ndarray:
    h = np.ones((1, 1))
    while h.shape[0] < order:
        h = np.block([[h, h], [h, -h]])
    return h


def pilot_count(num_units: int, bits_per_unit: int, reps: int,
                scheme: str = "hadamard") -> int:
    """Total pilot slots used by :func:`train_per_unit`."""
    if scheme not in _SCHEMES:
        raise ValueError(f"scheme must be one of {_SCHEMES}")
    defaults = reps * (num_units if scheme == "bypass"
                       else 1 << (num_units - 1).bit_length())
    return num_units * 2**bits_per_unit * reps + defaults


def estimate_defaults_hadamard(true: LayeredConstellation, pilot_n0: float,
                               seed, reps: int = 1) -> np.ndarray:
    """Estimate each unit's default constituent from Hadamard-weighted pilots.

    Returns an (N, K) array. Exact at pilot_n0 = 0; per-component estimation
    variance is pilot_n0 / (N' * reps).
    """
    n = true.num_units
    order = 1 << (n - 1).bit_length()
    h = _hadamard(order)
    defaults = true.tables[:, 0, :]  # (N, K)
    rng = substream(seed, "pilot", 0) if isinstance(seed, int) else np.random.default_rng(seed)
    acc = np.zeros((order, true.receive_dims), dtype=np.complex128)
    for _ in range(reps):
        observed = h[:, :n] @ defaults + _pilot_noise(rng, true.receive_dims, pilot_n0, order)
        acc += observed
    recovered = (h.T @ acc) / (order * reps)
    return recovered[:n]


def estimate_defaults_bypass(true: LayeredConstellation, pilot_n0: float,
                             seed, reps: int = 1) -> np.ndarray:
    """Estimate default constituents by transmitting one unit at a time."""
    rng = substream(seed, "pilot", 0) if isinstance(seed, int) else np.random.default_rng(seed)
    out = np.zeros((true.num_units, true.receive_dims), dtype=np.complex128)
    for _ in range(reps):
        for n in range(true.num_units):
            out[n] += true.tables[n, 0] + _pilot_noise(rng, true.receive_dims, pilot_n0)
    return out / reps


def train_per_unit(true: LayeredConstellation, pilot_n0: float, reps: int, seed,
                   default_scheme: str = "hadamard") -> LayeredConstellation:
    """Simulate the full per-unit training scan; returns the estimated tables.

    For each unit n and index m the receiver averages ``reps`` observations of
    h^n(m) plus the other units' default sum, then subtracts the separately
    estimated defaults. Exact when pilot_n0 = 0.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    if default_scheme == "hadamard":
        defaults_est = estimate_defaults_hadamard(true, pilot_n0, seed, reps)
    elif default_scheme == "bypass":
        defaults_est = estimate_defaults_bypass(true, pilot_n0, seed, reps)
    else:
        raise ValueError(f"default_scheme must be one of {_SCHEMES}")

    true_defaults = true.tables[:, 0, :]
    default_sum_true = np.sum(true_defaults, axis=0)
    default_sum_est = np.sum(defaults_est, axis=0)
    rng = substream(seed, "pilot", 1) if isinstance(seed, int) else np.random.default_rng(seed)

    tables = np.empty_like(true.tables)
    for n in range(true.num_units):
        others_true = default_sum_true - true_defaults[n]
        others_est = default_sum_est - defaults_est[n]
        for m in range(true.table_size):
            obs = np.zeros(true.receive_dims, dtype=np.complex128)
            for _ in range(reps):
                obs += true.tables[n, m] + others_true + _pilot_noise(
                    rng, true.receive_dims, pilot_n0)
            tables[n, m] = obs / reps - others_est
    return LayeredConstellation(true.num_units, true.bits_per_unit,
                                true.receive_dims, tables)

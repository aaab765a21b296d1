"""Pure numpy beam-search kernel: the semantic reference for the compiled one.

Greedy iterative layered detection: each permutation restart begins from the
all-zero (invalid) candidate; every step re-optimizes one unit's constituent
over its whole table while the beam keeps the ``P`` best distinct message
candidates ranked by (distance, message key). The beam carries across
iterations within a run; the answer is the best candidate over all restarts.

Candidate states are encoded as radix-(S+1) integer keys, the extra digit
value ``S`` marking a unit still at the zero initializer.
"""

from __future__ import annotations

import numpy as np


def _prepare(tables: np.ndarray, beam_width: int):
    num_units, table_size, dims = tables.shape
    radix = table_size + 1
    if num_units * np.log2(radix) >= 62:
        raise ValueError("message key would exceed 63 bits; reduce units or bits per unit")
    pows = radix ** np.arange(num_units - 1, -1, -1, dtype=np.int64)
    tables_ext = np.concatenate(
        [tables, np.zeros((num_units, 1, dims), dtype=np.complex128)], axis=1)
    return pows, tables_ext


def beam_search_batch(received: np.ndarray, tables: np.ndarray, perms: np.ndarray,
                      iterations: int, beam_width: int, early_exit_eps: float = 0.0):
    """Detect each row of ``received``; returns (messages, dists, examined).

    ``dists`` are the incrementally maintained squared distances of the chosen
    candidates (callers recompute final distances directly when they matter).
    """
    received = np.ascontiguousarray(received, dtype=np.complex128)
    tables = np.ascontiguousarray(tables, dtype=np.complex128)
    perms = np.asarray(perms, dtype=np.int64)
    num_trials = received.shape[0]
    num_units = tables.shape[0]
    if iterations < 1 or beam_width < 1:
        raise ValueError("iterations and beam_width must be >= 1")
    if perms.ndim != 2 or perms.shape[1] != num_units:
        raise ValueError("perms must have shape (num_perms, num_units)")
    pows, tables_ext = _prepare(tables, beam_width)

    messages = np.empty((num_trials, num_units), dtype=np.int32)
    dists = np.empty(num_trials, dtype=np.float64)
    examined = np.zeros(num_trials, dtype=np.int64)
    for b in range(num_trials):
        key, dist, count = _detect_one(received[b], tables, tables_ext, perms,
                                       iterations, beam_width, early_exit_eps, pows)
        messages[b] = _key_digits(key, pows)
        dists[b] = dist
        examined[b] = count
    return messages, dists, examined


def _key_digits(key: int, pows: np.ndarray) -> np.ndarray:
    digits = np.empty(len(pows), dtype=np.int32)
    for n, p in enumerate(pows):
        digits[n], key = divmod(key, int(p))
    return digits


def _detect_one(r, tables, tables_ext, perms, iterations, beam_width, eps, pows,
                trace=None):
    num_units, table_size, dims = tables.shape
    sentinel = table_size
    init_key = int(np.sum(sentinel * pows))
    init_dist = float(np.sum(r.real**2 + r.imag**2))
    j_all = np.arange(table_size, dtype=np.int64)

    best_key = -1
    best_dist = np.inf
    examined = 0
    stop = False
    for perm in perms:
        cand_idx = np.full((1, num_units), sentinel, dtype=np.int64)
        cand_res = r[None, :].copy()
        cand_dist = np.array([init_dist])
        cand_key = np.array([init_key], dtype=np.int64)
        for _ in range(iterations):
            for i in perm:
                width = cand_idx.shape[0]
                w = cand_res + tables_ext[i, cand_idx[:, i]]
                diff = w[:, None, :] - tables[i][None, :, :]
                d = np.sum(diff.real**2 + diff.imag**2, axis=2)
                examined += width * table_size

                keys = cand_key[:, None] + (j_all[None, :] - cand_idx[:, i][:, None]) * pows[i]
                flat_d = d.ravel()
                flat_key = keys.ravel()
                flat_p = np.repeat(np.arange(width), table_size)
                order = np.lexsort((flat_p, flat_key, flat_d))
                # best entry per distinct message, then the beam_width best overall
                _, first = np.unique(flat_key[order], return_index=True)
                keep = order[np.sort(first)][:beam_width]

                p_sel = flat_p[keep]
                j_sel = keep % table_size
                cand_res = w[p_sel] - tables[i][j_sel]
                new_idx = cand_idx[p_sel].copy()
                new_idx[:, i] = j_sel
                cand_idx = new_idx
                cand_dist = flat_d[keep]
                cand_key = flat_key[keep]
                if trace is not None:
                    trace.append(cand_dist[0])
                # early exit only once the leader is a complete constellation point
                if eps > 0.0 and cand_dist[0] < eps and not np.any(cand_idx[0] == sentinel):
                    stop = True
                    break
            if stop:
                break
        if cand_dist[0] < best_dist or (cand_dist[0] == best_dist and cand_key[0] < best_key):
            best_dist = float(cand_dist[0])
            best_key = int(cand_key[0])
        if stop:
            break
    return best_key, best_dist, examined

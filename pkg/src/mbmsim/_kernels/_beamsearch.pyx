# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled beam-search kernel.

Same search semantics as ``pyref.py``: permutation restarts from the zero
candidate, per-step re-optimization of one unit's constituent with a
deduplicated beam of the ``P`` best (distance, message-key) candidates, the
beam carried across iterations. Complex vectors are handled as interleaved
re/im float pairs and distances accumulate over four independent partial
sums, a fixed order chosen so the compiler can vectorize without changing
results between builds. Beam selection keeps a sorted insert list with an
O(1) reject test instead of sorting all P*2^R candidates.

Runs without the GIL so callers can thread across batches.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()

ctypedef cnp.int64_t i64
ctypedef cnp.int32_t i32


cdef inline double _sq_dist(const double* w, const double* t, int q_len) noexcept nogil:
    cdef double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0, d0, d1, d2, d3
    cdef int q = 0
    while q + 4 <= q_len:
        d0 = w[q] - t[q]
        d1 = w[q + 1] - t[q + 1]
        d2 = w[q + 2] - t[q + 2]
        d3 = w[q + 3] - t[q + 3]
        a0 += d0 * d0
        a1 += d1 * d1
        a2 += d2 * d2
        a3 += d3 * d3
        q += 4
    while q < q_len:
        d0 = w[q] - t[q]
        a0 += d0 * d0
        q += 1
    return (a0 + a2) + (a1 + a3)


cdef inline int _try_insert(double dist, i64 key, int p, int j,
                            double* sd, i64* sk, i32* sp, i32* sj,
                            int n_kept, int cap) noexcept nogil:
    """Insert (dist, key, p, j) into the sorted keep list; dedup by key.

    Returns the new list length. Total order is (dist, key) ascending; a key
    already kept with a better-or-equal entry wins, a worse kept entry is
    replaced.
    """
    cdef int q, r, pos
    if n_kept == cap and (dist > sd[cap - 1] or (dist == sd[cap - 1] and key >= sk[cap - 1])):
        return n_kept
    for q in range(n_kept):
        if sk[q] == key:
            if dist >= sd[q]:
                return n_kept
            for r in range(q, n_kept - 1):
                sd[r] = sd[r + 1]
                sk[r] = sk[r + 1]
                sp[r] = sp[r + 1]
                sj[r] = sj[r + 1]
            n_kept -= 1
            break
    if n_kept == cap:
        n_kept -= 1
    pos = n_kept
    while pos > 0 and (dist < sd[pos - 1] or (dist == sd[pos - 1] and key < sk[pos - 1])):
        pos -= 1
    for r in range(n_kept, pos, -1):
        sd[r] = sd[r - 1]
        sk[r] = sk[r - 1]
        sp[r] = sp[r - 1]
        sj[r] = sj[r - 1]
    sd[pos] = dist
    sk[pos] = key
    sp[pos] = p
    sj[pos] = j
    return n_kept + 1


cdef void _detect_one(const double[:, ::1] received, int b,
                      const double[:, :, ::1] tables,
                      const double[:, :, ::1] tables_ext,
                      const i64[:, ::1] perms, int iterations, int beam_width, double eps,
                      const i64[::1] pows,
                      double[::1] sel_dist, i64[::1] sel_key, i32[::1] sel_p, i32[::1] sel_j,
                      i64[:, ::1] cur_idx, i64[:, ::1] new_idx,
                      double[:, ::1] cur_res, double[:, ::1] new_res,
                      double[:, ::1] wbuf,
                      double[::1] cur_dist, i64[::1] cur_key,
                      i32[:, ::1] messages, double[::1] dists,
                      i64[::1] examined) noexcept nogil:
    cdef int num_units = tables.shape[0]
    cdef int table_size = tables.shape[1]
    cdef int q_len = tables.shape[2]        # 2*K interleaved floats
    cdef int num_perms = perms.shape[0]
    cdef i64 sentinel = table_size
    cdef i64 init_key = 0, best_key = -1, key, base_key, mi, count = 0
    cdef double init_dist = 0.0, dist, best_dist = INFINITY
    cdef int n, k, p, j, i, t, pi, si, s, n_kept, width_cur
    cdef bint stop, has_sentinel
    cdef const double* trow
    cdef const double* wrow

    for n in range(num_units):
        init_key += sentinel * pows[n]
    init_dist = _sq_dist(&received[b, 0], &tables_ext[0, table_size, 0], q_len)

    for pi in range(num_perms):
        width_cur = 1
        for n in range(num_units):
            cur_idx[0, n] = sentinel
        for k in range(q_len):
            cur_res[0, k] = received[b, k]
        cur_dist[0] = init_dist
        cur_key[0] = init_key
        stop = False
        for t in range(iterations):
            for si in range(num_units):
                i = <int>perms[pi, si]
                n_kept = 0
                for p in range(width_cur):
                    mi = cur_idx[p, i]
                    trow = &tables_ext[i, mi, 0]
                    for k in range(q_len):
                        wbuf[p, k] = cur_res[p, k] + trow[k]
                    base_key = cur_key[p] - mi * pows[i]
                    wrow = &wbuf[p, 0]
                    for j in range(table_size):
                        dist = _sq_dist(wrow, &tables[i, j, 0], q_len)
                        n_kept = _try_insert(dist, base_key + j * pows[i], p, j,
                                             &sel_dist[0], &sel_key[0], &sel_p[0], &sel_j[0],
                                             n_kept, beam_width)
                count += width_cur * table_size
                for s in range(n_kept):
                    p = sel_p[s]
                    j = sel_j[s]
                    for n in range(num_units):
                        new_idx[s, n] = cur_idx[p, n]
                    new_idx[s, i] = j
                    trow = &tables[i, j, 0]
                    for k in range(q_len):
                        new_res[s, k] = wbuf[p, k] - trow[k]
                width_cur = n_kept
                for s in range(width_cur):
                    cur_key[s] = sel_key[s]
                    cur_dist[s] = sel_dist[s]
                    for n in range(num_units):
                        cur_idx[s, n] = new_idx[s, n]
                    for k in range(q_len):
                        cur_res[s, k] = new_res[s, k]
                if eps > 0.0 and cur_dist[0] < eps:
                    has_sentinel = False
                    for n in range(num_units):
                        if cur_idx[0, n] == sentinel:
                            has_sentinel = True
                            break
                    if not has_sentinel:
                        stop = True
                        break
            if stop:
                break
        if cur_dist[0] < best_dist or (cur_dist[0] == best_dist and cur_key[0] < best_key):
            best_dist = cur_dist[0]
            best_key = cur_key[0]
        if stop:
            break

    key = best_key
    for n in range(num_units):
        messages[b, n] = <i32>(key // pows[n])
        key = key % pows[n]
    dists[b] = best_dist
    examined[b] = count


def beam_search_batch(received, tables, perms, int iterations, int beam_width,
                      double early_exit_eps=0.0):
    """Detect each row of ``received``; returns (messages, dists, examined)."""
    received = np.ascontiguousarray(received, dtype=np.complex128)
    tables = np.ascontiguousarray(tables, dtype=np.complex128)
    perms = np.ascontiguousarray(perms, dtype=np.int64)
    cdef int num_trials = received.shape[0]
    cdef int num_units = tables.shape[0]
    cdef int table_size = tables.shape[1]
    cdef int dims = tables.shape[2]
    if iterations < 1 or beam_width < 1:
        raise ValueError("iterations and beam_width must be >= 1")
    if perms.ndim != 2 or perms.shape[1] != num_units:
        raise ValueError("perms must have shape (num_perms, num_units)")
    radix = table_size + 1
    if num_units * np.log2(radix) >= 62:
        raise ValueError("message key would exceed 63 bits; reduce units or bits per unit")
    pows = (radix ** np.arange(num_units - 1, -1, -1)).astype(np.int64)
    tables_ext = np.concatenate(
        [tables, np.zeros((num_units, 1, dims), dtype=np.complex128)], axis=1)

    # interleaved re/im float views; the trailing axis is 2*K contiguous doubles
    received_f = received.view(np.float64)
    tables_f = tables.view(np.float64)
    tables_ext_f = tables_ext.view(np.float64)

    messages = np.empty((num_trials, num_units), dtype=np.int32)
    dists = np.empty(num_trials, dtype=np.float64)
    examined = np.zeros(num_trials, dtype=np.int64)
    sel_dist = np.empty(beam_width, dtype=np.float64)
    sel_key = np.empty(beam_width, dtype=np.int64)
    sel_p = np.empty(beam_width, dtype=np.int32)
    sel_j = np.empty(beam_width, dtype=np.int32)
    cur_idx = np.empty((beam_width, num_units), dtype=np.int64)
    new_idx = np.empty((beam_width, num_units), dtype=np.int64)
    cur_res = np.empty((beam_width, 2 * dims), dtype=np.float64)
    new_res = np.empty((beam_width, 2 * dims), dtype=np.float64)
    wbuf = np.empty((beam_width, 2 * dims), dtype=np.float64)
    cur_dist = np.empty(beam_width, dtype=np.float64)
    cur_key = np.empty(beam_width, dtype=np.int64)

    cdef const double[:, ::1] received_v = received_f
    cdef const double[:, :, ::1] tables_v = tables_f
    cdef const double[:, :, ::1] tables_ext_v = tables_ext_f
    cdef const i64[:, ::1] perms_v = perms
    cdef const i64[::1] pows_v = pows
    cdef double[::1] sel_dist_v = sel_dist
    cdef i64[::1] sel_key_v = sel_key
    cdef i32[::1] sel_p_v = sel_p
    cdef i32[::1] sel_j_v = sel_j
    cdef i64[:, ::1] cur_idx_v = cur_idx
    cdef i64[:, ::1] new_idx_v = new_idx
    cdef double[:, ::1] cur_res_v = cur_res
    cdef double[:, ::1] new_res_v = new_res
    cdef double[:, ::1] wbuf_v = wbuf
    cdef double[::1] cur_dist_v = cur_dist
    cdef i64[::1] cur_key_v = cur_key
    cdef i32[:, ::1] messages_v = messages
    cdef double[::1] dists_v = dists
    cdef i64[::1] examined_v = examined

    cdef int b
    cdef int T = iterations, P = beam_width
    cdef double eps = early_exit_eps
    with nogil:
        for b in range(num_trials):
            _detect_one(received_v, b, tables_v, tables_ext_v, perms_v, T, P, eps,
                        pows_v, sel_dist_v, sel_key_v, sel_p_v, sel_j_v,
                        cur_idx_v, new_idx_v, cur_res_v, new_res_v, wbuf_v,
                        cur_dist_v, cur_key_v, messages_v, dists_v, examined_v)
    return messages, dists, examined

"""Hot inner loops of the message-passing engine.

Each kernel exists twice: ``*_py`` is the plain-Python/numpy source and
the module-level name is its numba-compiled alias (or the same function
when the fallback path is selected, see ``crsbm._accel``).  Both paths
execute identical operations in identical order.

Message layout: ``msg[e]`` holds the message arriving at node ``src[e]``
from ``neighbors[e]``, so a node's incoming messages are one contiguous
block; updating the outgoing message on a visited slot writes through
``rev`` instead of reading through it, which keeps sweeps cache-friendly
on large graphs.
"""

import numpy as np

from ._accel import NUMBA_ENABLED, njit


def _bp_sweep_py(offsets, neighbors, meta, msg, beliefs, hf, f_nbr,
                 omega, log_nu, delta, order):
    """One asynchronous sweep over directed edges in the given order.

    Visiting slot e updates the message src[e] -> neighbors[e] (stored at
    rev[e]) and then the belief of neighbors[e]; meta[e] packs (src[e],
    rev[e]) so each visit costs one index-line read.  Lazy external
    fields are reconstructed per visit as H[l, r] + sum_s f[l, s]
    delta[s, r], with hf packing [H | f] row-wise so one node's field
    snapshot and popularity row share a cache line; f_nbr is the
    slot-aligned copy f[neighbors], turning per-neighbor factor reads
    into contiguous scans (f is constant for the whole run, so both
    copies are made once).  Updates msg, beliefs and delta in place;
    returns (max L-inf message change, zero-row fallback count).
    """
    q = omega.shape[0]
    h_i = np.empty(q)
    h_j = np.empty(q)
    logv = np.empty(q)
    u = np.empty(q)
    work = np.empty(q)
    newb = np.empty(q)
    max_change = 0.0
    fallbacks = 0

    for t in range(order.shape[0]):
        e = order[t]
        i = meta[e, 0]
        j = neighbors[e]
        out = meta[e, 1]      # slot holding the message i -> j

        for r in range(q):
            acc_i = hf[i, r]
            acc_j = hf[j, r]
            for s in range(q):
                acc_i += hf[i, q + s] * delta[s, r]
                acc_j += hf[j, q + s] * delta[s, r]
            h_i[r] = acc_i
            h_j[r] = acc_j

        # message i -> j: product over i's incoming slots except e itself
        for r in range(q):
            logv[r] = log_nu[r] - h_i[r]
        for e2 in range(offsets[i], offsets[i + 1]):
            if e2 == e:
                continue
            for s in range(q):
                u[s] = msg[e2, s] * hf[i, q + s]
            for r in range(q):
                acc = 0.0
                for s in range(q):
                    acc += u[s] * omega[s, r]
                acc *= f_nbr[e2, r]
                if acc > 0.0:
                    logv[r] += np.log(acc)
                else:
                    logv[r] = -np.inf

        mx = logv[0]
        for r in range(1, q):
            if logv[r] > mx:
                mx = logv[r]
        norm = 0.0
        if mx == -np.inf:
            for r in range(q):
                work[r] = 1.0
                norm += 1.0
            fallbacks += 1
        else:
            for r in range(q):
                work[r] = np.exp(logv[r] - mx)
                norm += work[r]
        for r in range(q):
            val = work[r] / norm
            change = abs(val - msg[out, r])
            if change > max_change:
                max_change = change
            msg[out, r] = val

        # belief of j from its (contiguous) incoming block, then fold the
        # change into the accumulator
        for r in range(q):
            logv[r] = log_nu[r] - h_j[r]
        for e2 in range(offsets[j], offsets[j + 1]):
            for s in range(q):
                u[s] = msg[e2, s] * hf[j, q + s]
            for r in range(q):
                acc = 0.0
                for s in range(q):
                    acc += u[s] * omega[s, r]
                acc *= f_nbr[e2, r]
                if acc > 0.0:
                    logv[r] += np.log(acc)
                else:
                    logv[r] = -np.inf
        mx = logv[0]
        for r in range(1, q):
            if logv[r] > mx:
                mx = logv[r]
        norm = 0.0
        if mx == -np.inf:
            for r in range(q):
                newb[r] = 1.0
                norm += 1.0
            fallbacks += 1
        else:
            for r in range(q):
                newb[r] = np.exp(logv[r] - mx)
                norm += newb[r]
        for r in range(q):
            newb[r] /= norm
        for r in range(q):
            db = newb[r] - beliefs[j, r]
            for s in range(q):
                delta[r, s] += db * hf[j, q + s] * omega[r, s]
        for r in range(q):
            beliefs[j, r] = newb[r]

    return max_change, fallbacks


def _soft_block_counts_py(edge_slots, src, neighbors, rev, msg, f, omega):
    """Belief-propagation estimate of block edge counts.

    Per undirected edge {i, j} the pairwise assignment weights are
    aleph[r, s] = omega[r, s] * (f[i,s] f[j,r] m_ij[r] m_ji[s]
                                 + f[i,r] f[j,s] m_ij[s] m_ji[r]),
    normalized by Z = 0.5 * sum(aleph); the (r, s) cell receives
    aleph / (Z * (1 + delta_rs)) so the upper triangle totals one edge.
    Returns (m_rs matrix, zero-normalizer fallback count).
    """
    q = omega.shape[0]
    m_rs = np.zeros((q, q))
    aleph = np.empty((q, q))
    fallbacks = 0
    for t in range(edge_slots.shape[0]):
        e = edge_slots[t]          # slot carries msg j -> i with i = src[e]
        i = src[e]
        j = neighbors[e]
        out = rev[e]               # slot carries msg i -> j
        z = 0.0
        for r in range(q):
            for s in range(q):
                a = omega[r, s] * (f[i, s] * f[j, r] * msg[out, r] * msg[e, s]
                                   + f[i, r] * f[j, s] * msg[out, s] * msg[e, r])
                aleph[r, s] = a
                z += a
        z *= 0.5
        if z <= 0.0:
            fallbacks += 1
            for r in range(q):
                for s in range(q):
                    aleph[r, s] = 1.0
            z = 0.5 * q * q
        for r in range(q):
            for s in range(q):
                scale = 2.0 if r == s else 1.0
                m_rs[r, s] += aleph[r, s] / (z * scale)
    return m_rs, fallbacks


if NUMBA_ENABLED:
    bp_sweep = njit(cache=True)(_bp_sweep_py)
    soft_block_counts = njit(cache=True)(_soft_block_counts_py)
else:
    bp_sweep = _bp_sweep_py
    soft_block_counts = _soft_block_counts_py

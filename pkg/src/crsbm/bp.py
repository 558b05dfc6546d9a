"""Sum-product message passing with lazy external-field accounting.

Messages live on directed edge slots aligned with the compressed
adjacency: slot e carries the message arriving at src[e] from
neighbors[e], so each node's incoming messages form one contiguous
block (the outgoing message src[e] -> neighbors[e] sits at rev[e]).  A sweep
visits every directed edge once in a fresh random order, updating the
message and the destination belief asynchronously; external fields are
reconstructed per visit from the sweep-start snapshot plus a q x q
change accumulator; a sweep costs O(q^2) per endpoint refresh plus
O(k q^2) per visited edge, i.e. O(q^2 m) on bounded-degree graphs.

The engine is single-writer; beliefs may be read concurrently between
sweeps, and independent runs (different seeds) can execute in parallel.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .graph import AttributedGraph, Partition
from .model import CrsbmParams


@dataclass
class BpConfig:
    max_sweeps: int = 100
    tol: float = 1e-6
    seed: int = 0


@dataclass
class BpState:
    """Mutable engine state: directed messages, beliefs, field snapshot, accumulator."""

    offsets: np.ndarray
    neighbors: np.ndarray
    src: np.ndarray            # slot -> owning node (the adjacency row)
    rev: np.ndarray            # slot of pair (i, j) maps to slot of (j, i)
    messages: np.ndarray       # (2m, q) incoming per slot, rows on the simplex
    beliefs: np.ndarray        # (n, q), rows on the simplex
    ext_field_base: np.ndarray  # (n, q) sweep-start fields
    delta_acc: np.ndarray      # (q, q) lazy-update accumulator
    rng: np.random.Generator
    converged: bool = False
    sweep_count: int = 0
    fallbacks: int = 0

    @property
    def n(self) -> int:
        return self.beliefs.shape[0]

    @property
    def q(self) -> int:
        return self.beliefs.shape[1]


@dataclass
class BpResult:
    beliefs: np.ndarray
    partition: Partition
    converged: bool
    sweeps: int
    trace: list = field(default_factory=list)  # (sweep, max message change)
    state: BpState | None = None


def reverse_slots(offsets: np.ndarray, neighbors: np.ndarray, n: int) -> np.ndarray:
    """Slot index of the opposite directed edge, for every slot."""
    src = np.repeat(np.arange(n, dtype=np.int64), np.diff(offsets))
    keys = src * n + neighbors            # slots are sorted by (src, neighbor)
    return np.searchsorted(keys, neighbors * n + src).astype(np.int64)


def compute_fields(beliefs: np.ndarray, f: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """External fields H[i, r] = sum_s f[i,s] omega[s,r] (sum_l psi[l,s] f[l,r]).

    The inner node sum runs over all nodes, the self term being within
    the sparse-graph approximation already made.
    """
    group_sums = beliefs.T @ f            # (q, q): [s, r] = sum_l psi_s^l f_lr
    return f @ (omega * group_sums)


def _slot_of(state: BpState, i: int, j: int) -> int:
    lo, hi = state.offsets[i], state.offsets[i + 1]
    pos = lo + np.searchsorted(state.neighbors[lo:hi], j)
    if pos >= hi or state.neighbors[pos] != j:
        raise ValueError(f"({i}, {j}) is not an edge")
    return int(pos)


def _log_norm(logv: np.ndarray) -> np.ndarray:
    mx = logv.max()
    if mx == -np.inf:
        return np.full(logv.size, 1.0 / logv.size)
    v = np.exp(logv - mx)
    return v / v.sum()


def init_messages(g: AttributedGraph, q: int, seed: int) -> BpState:
    """Random simplex messages, then beliefs and fields computed once.

    Initial beliefs take the message-product form with a zero field (the
    field itself is derived from beliefs and is rebuilt at the start of
    every sweep anyway).
    """
    if g.n == 0:
        raise ValueError("empty graph")
    if q < 2:
        raise ValueError("need q >= 2")
    rng = np.random.default_rng(seed)
    msg = rng.random((2 * g.m, q))
    msg /= msg.sum(axis=1, keepdims=True)
    src = np.repeat(np.arange(g.n, dtype=np.int64), g.degrees)
    rev = reverse_slots(g.offsets, g.neighbors, g.n)
    state = BpState(offsets=g.offsets, neighbors=g.neighbors, src=src, rev=rev,
                    messages=msg, beliefs=np.empty((g.n, q)),
                    ext_field_base=np.zeros((g.n, q)), delta_acc=np.zeros((q, q)),
                    rng=rng)
    return state


def _refresh_beliefs(state: BpState, f: np.ndarray, omega: np.ndarray, nu: np.ndarray):
    """Beliefs from current messages with zero field (initialization only)."""
    n, q = state.beliefs.shape
    incoming = state.messages                                 # (2m, q) psi^{l -> i}
    t = (incoming * f[state.src]) @ omega                     # (2m, q)
    logterm = np.log(t * f[state.neighbors])
    logb = np.tile(np.log(nu), (n, 1))
    np.add.at(logb, state.src, logterm)
    mx = logb.max(axis=1, keepdims=True)
    b = np.exp(logb - mx)
    state.beliefs = b / b.sum(axis=1, keepdims=True)
    state.ext_field_base = compute_fields(state.beliefs, f, omega)


def external_field(state: BpState, params: CrsbmParams, g: AttributedGraph,
                   i: int, r: int) -> float:
    """Exact field h_r^i from the current beliefs."""
    f = params.effective_f(g)
    H = compute_fields(state.beliefs, f, params.omega)
    return float(H[i, r])


def update_message(state: BpState, params: CrsbmParams, g: AttributedGraph,
                   i: int, j: int) -> np.ndarray:
    """Message i -> j recomputed from the current state with exact fields.

    Inspection-grade counterpart of the sweep kernel; does not commit.
    """
    f = params.effective_f(g)
    h = compute_fields(state.beliefs, f, params.omega)[i]
    logv = np.log(params.nu) - h
    for e2 in range(state.offsets[i], state.offsets[i + 1]):
        l = state.neighbors[e2]
        if l == j:
            continue
        inc = state.messages[e2]
        term = ((inc * f[i]) @ params.omega) * f[l]
        with np.errstate(divide="ignore"):
            logv += np.log(term)
    return _log_norm(logv)


def update_belief(state: BpState, params: CrsbmParams, g: AttributedGraph,
                  j: int) -> np.ndarray:
    """Belief of j recomputed from the current state with exact fields."""
    f = params.effective_f(g)
    h = compute_fields(state.beliefs, f, params.omega)[j]
    logv = np.log(params.nu) - h
    for e2 in range(state.offsets[j], state.offsets[j + 1]):
        l = state.neighbors[e2]
        inc = state.messages[e2]
        term = ((inc * f[j]) @ params.omega) * f[l]
        with np.errstate(divide="ignore"):
            logv += np.log(term)
    return _log_norm(logv)


def argmax_partition(beliefs: np.ndarray, tie_tol: float = 0.0) -> Partition:
    """Hard assignment, ties broken toward the lowest group index.

    ``tie_tol`` widens the tie test: groups within tie_tol of the row
    maximum count as tied.  Converged solver output cannot distinguish
    beliefs closer than its tolerance, so verdict-grade consumers pass a
    small positive value here instead of letting float noise decide.
    """
    if tie_tol > 0.0:
        mx = beliefs.max(axis=1, keepdims=True)
        labels = np.argmax((mx - beliefs) <= tie_tol, axis=1)
    else:
        labels = np.argmax(beliefs, axis=1)
    return Partition(labels=labels.astype(np.int64), q=beliefs.shape[1])


def run_bp(g: AttributedGraph, params: CrsbmParams, config: BpConfig,
           initial_messages: np.ndarray | None = None,
           orders: list | None = None) -> BpResult:
    """Iterate sweeps until the max message change drops below tol.

    ``initial_messages`` warm-starts from a previous run's message table;
    ``orders`` overrides the per-sweep random edge orders (testing hook).
    The output is a deterministic function of (graph, params, seed,
    config) and the optional overrides.
    """
    state = init_messages(g, params.q, config.seed)
    if initial_messages is not None:
        if initial_messages.shape != state.messages.shape:
            raise ValueError("warm-start message table has the wrong shape")
        state.messages = initial_messages.copy()
    f = np.ascontiguousarray(params.effective_f(g))
    f_nbr = np.ascontiguousarray(f[g.neighbors])
    # 32-bit index copies keep the sweep's memory traffic down
    neighbors32 = g.neighbors.astype(np.int32)
    meta = np.ascontiguousarray(
        np.column_stack([state.src, state.rev]).astype(np.int32))
    omega = np.ascontiguousarray(params.omega)
    log_nu = np.log(params.nu)
    _refresh_beliefs(state, f, omega, params.nu)

    q = params.q
    hf = np.empty((g.n, 2 * q))
    hf[:, q:] = f
    trace = []
    for sweep in range(config.max_sweeps):
        state.ext_field_base = compute_fields(state.beliefs, f, omega)
        hf[:, :q] = state.ext_field_base
        state.delta_acc[:] = 0.0
        if orders is not None and sweep < len(orders):
            order = np.asarray(orders[sweep], dtype=np.int32)
        else:
            order = state.rng.permutation(2 * g.m).astype(np.int32)
        max_change, fb = _kernels.bp_sweep(
            state.offsets, neighbors32, meta,
            state.messages, state.beliefs, hf, f_nbr, omega, log_nu,
            state.delta_acc, order)
        state.fallbacks += fb
        state.sweep_count = sweep + 1
        trace.append((sweep + 1, float(max_change)))
        if max_change < config.tol:
            state.converged = True
            break

    return BpResult(beliefs=state.beliefs.copy(),
                    partition=argmax_partition(state.beliefs),
                    converged=state.converged, sweeps=state.sweep_count,
                    trace=trace, state=state)


def write_beliefs_csv(path, beliefs: np.ndarray):
    np.savetxt(path, beliefs, delimiter=",", fmt="%.17g")


def write_trace_csv(path, trace):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("sweep,max_delta\n")
        for sweep, delta in trace:
            fh.write(f"{sweep},{delta:.17g}\n")

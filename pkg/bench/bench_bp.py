"""Benchmark the message-passing sweep: numba kernel vs numpy fallback.

Both paths run the same source (see crsbm._accel); this script times them
on identical inputs and checks they produce identical numbers.

    python bench/bench_bp.py [--n-per 2000] [--c 8] [--q 4] [--sweeps 3]
"""

import argparse
import time

import numpy as np

from crsbm import _kernels
from crsbm.bp import BpConfig, compute_fields, init_messages
from crsbm.model import PopularityFunction, make_params
from crsbm.synth import SsbmSpec, generate_ssbm


def build_workload(n_per, c, q, seed=0):
    spec = SsbmSpec(q_star=q, q_tilde=q, n_per=n_per, c=c, epsilon=0.3, seed=seed)
    g, _ = generate_ssbm(spec)
    rng = np.random.default_rng(seed)
    zeta = rng.normal(size=(q, g.d))
    pf = PopularityFunction(mode="sigmoid", gamma_star=2.5, beta1=6.0, beta2=2.0)
    omega = np.full((q, q), spec.c_out / g.n)
    np.fill_diagonal(omega, spec.c_in / g.n)
    params = make_params(g, zeta, pf, omega)
    state = init_messages(g, q, seed=seed)
    return g, params, state


def time_sweeps(kernel, g, params, state, sweeps, seed=0):
    from crsbm.bp import _refresh_beliefs

    msg = state.messages.copy()
    beliefs = state.beliefs.copy()
    f = np.ascontiguousarray(params.effective_f(g))
    f_nbr = np.ascontiguousarray(f[g.neighbors])
    omega = np.ascontiguousarray(params.omega)
    log_nu = np.log(params.nu)
    work = type(state)(offsets=state.offsets, neighbors=state.neighbors,
                       src=state.src, rev=state.rev, messages=msg,
                       beliefs=beliefs, ext_field_base=state.ext_field_base.copy(),
                       delta_acc=np.zeros_like(state.delta_acc),
                       rng=np.random.default_rng(seed))
    _refresh_beliefs(work, f, omega, params.nu)
    orders = [np.random.default_rng(seed + s).permutation(2 * g.m).astype(np.int64)
              for s in range(sweeps)]
    q = omega.shape[0]
    meta = np.ascontiguousarray(np.column_stack([work.src, work.rev]))
    hf = np.empty((g.n, 2 * q))
    hf[:, q:] = f
    t0 = time.perf_counter()
    for order in orders:
        hf[:, :q] = compute_fields(work.beliefs, f, omega)
        delta = np.zeros_like(omega)
        kernel(work.offsets, work.neighbors, meta,
               work.messages, work.beliefs, hf, f_nbr, omega, log_nu, delta, order)
    elapsed = time.perf_counter() - t0
    return elapsed, work.messages, work.beliefs


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-per", type=int, default=2000)
    ap.add_argument("--c", type=float, default=8.0)
    ap.add_argument("--q", type=int, default=4)
    ap.add_argument("--sweeps", type=int, default=3)
    args = ap.parse_args()

    from crsbm._accel import NUMBA_ENABLED
    g, params, state = build_workload(args.n_per, args.c, args.q)
    print(f"workload: n={g.n} m={g.m} q={args.q} sweeps={args.sweeps}")

    t_py, msg_py, blf_py = time_sweeps(_kernels._bp_sweep_py, g, params, state,
                                       args.sweeps)
    print(f"numpy fallback : {t_py:8.3f} s  ({t_py / args.sweeps:.3f} s/sweep)")

    if not NUMBA_ENABLED:
        print("numba disabled (CRSBM_NUMBA=0 or not installed); fallback only")
        return

    # warm the JIT before timing
    f_warm = np.ascontiguousarray(params.effective_f(g))
    hf_warm = np.hstack([state.ext_field_base, f_warm])
    meta_warm = np.ascontiguousarray(np.column_stack([state.src, state.rev]))
    _kernels.bp_sweep(state.offsets, state.neighbors, meta_warm,
                      state.messages.copy(), state.beliefs.copy(),
                      hf_warm, np.ascontiguousarray(f_warm[g.neighbors]),
                      np.ascontiguousarray(params.omega), np.log(params.nu),
                      np.zeros_like(params.omega),
                      np.arange(2 * g.m, dtype=np.int64))
    t_nb, msg_nb, blf_nb = time_sweeps(_kernels.bp_sweep, g, params, state,
                                       args.sweeps)
    print(f"numba kernel   : {t_nb:8.3f} s  ({t_nb / args.sweeps:.3f} s/sweep)")
    print(f"speedup        : {t_py / t_nb:8.1f}x")
    agree = np.allclose(msg_py, msg_nb, atol=1e-13) and np.allclose(blf_py, blf_nb, atol=1e-13)
    print(f"paths agree    : {agree}")


if __name__ == "__main__":
    main()

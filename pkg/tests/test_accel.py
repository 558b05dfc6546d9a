import os
import subprocess
import sys

import numpy as np

from crsbm import _kernels
from crsbm._accel import NUMBA_ENABLED
from crsbm.bp import BpConfig, compute_fields, init_messages, run_bp
from crsbm.model import PopularityFunction, make_params

from conftest import random_graph


def _workload(seed=0):
    g = random_graph(60, 0.08, seed=seed, d=2)
    rng = np.random.default_rng(seed)
    pf = PopularityFunction(mode="sigmoid", gamma_star=2.2, beta1=5.0, beta2=1.5)
    omega = np.full((3, 3), 2.0 / g.n)
    np.fill_diagonal(omega, 9.0 / g.n)
    params = make_params(g, rng.normal(size=(3, 2)), pf, omega)
    return g, params


def test_fallback_kernel_matches_compiled():
    """The un-jitted source and the compiled kernel produce identical sweeps."""
    if not NUMBA_ENABLED:
        assert _kernels.bp_sweep is _kernels._bp_sweep_py
        return
    g, params = _workload()
    state = init_messages(g, 3, seed=1)
    f = np.ascontiguousarray(params.effective_f(g))
    omega = np.ascontiguousarray(params.omega)
    log_nu = np.log(params.nu)
    order = np.random.default_rng(2).permutation(2 * g.m).astype(np.int64)

    f_nbr = np.ascontiguousarray(f[g.neighbors])
    meta = np.ascontiguousarray(np.column_stack([state.src, state.rev]))

    def run(kernel):
        msg = state.messages.copy()
        beliefs = np.full((g.n, 3), 1 / 3)
        hf = np.hstack([compute_fields(beliefs, f, omega), f])
        delta = np.zeros_like(omega)
        mc, fb = kernel(state.offsets, state.neighbors, meta,
                        msg, beliefs, hf, f_nbr, omega, log_nu, delta, order)
        return msg, beliefs, mc

    m1, b1, c1 = run(_kernels.bp_sweep)
    m2, b2, c2 = run(_kernels._bp_sweep_py)
    # same operations in the same order; only libm ulp differences remain
    assert np.allclose(m1, m2, atol=1e-13, rtol=0)
    assert np.allclose(b1, b2, atol=1e-13, rtol=0)
    assert abs(c1 - c2) < 1e-13


def test_env_flag_selects_fallback():
    """CRSBM_NUMBA=0 runs the whole engine on the numpy path."""
    code = (
        "import os; os.environ['CRSBM_NUMBA'] = '0';\n"
        "from crsbm._accel import NUMBA_ENABLED\n"
        "assert not NUMBA_ENABLED\n"
        "from crsbm import _kernels\n"
        "assert _kernels.bp_sweep is _kernels._bp_sweep_py\n"
        "import numpy as np\n"
        "from crsbm.synth import SsbmSpec, generate_ssbm\n"
        "from crsbm.bp import BpConfig, run_bp\n"
        "from crsbm.model import PopularityFunction, make_params\n"
        "spec = SsbmSpec(q_star=2, q_tilde=2, n_per=40, c=4.0, epsilon=0.2, seed=0)\n"
        "g, _ = generate_ssbm(spec)\n"
        "pf = PopularityFunction(mode='constant-one')\n"
        "omega = np.full((2, 2), spec.c_out / g.n); np.fill_diagonal(omega, spec.c_in / g.n)\n"
        "params = make_params(g, np.zeros((2, g.d)), pf, omega)\n"
        "res = run_bp(g, params, BpConfig(max_sweeps=5, tol=0.0, seed=0))\n"
        "print(round(float(res.beliefs.sum()), 6))\n"
    )
    env = dict(os.environ, CRSBM_NUMBA="0")
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, timeout=300)
    assert out.returncode == 0, out.stderr
    assert out.stdout.strip() == str(round(80.0, 6))


def test_soft_block_counts_paths_agree():
    if not NUMBA_ENABLED:
        return
    g, params = _workload(3)
    res = run_bp(g, params, BpConfig(max_sweeps=3, tol=0.0, seed=4))
    state = res.state
    edge_slots = np.flatnonzero(state.src < state.neighbors).astype(np.int64)
    f = np.ascontiguousarray(params.effective_f(g))
    args = (edge_slots, state.src, state.neighbors, state.rev,
            np.ascontiguousarray(state.messages), f,
            np.ascontiguousarray(params.omega))
    m1, f1 = _kernels.soft_block_counts(*args)
    m2, f2 = _kernels._soft_block_counts_py(*args)
    assert np.array_equal(m1, m2)
    assert f1 == f2

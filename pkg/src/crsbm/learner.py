"""EM-style detection pipeline: infer beliefs, re-estimate parameters, repeat.

One outer iteration runs message passing (E-step), then refreshes the
popularity curve from grid-averaged beliefs, the prototypes, and the
block rates (M-step).  Results are kept per iteration and the partition
with the largest modularity is returned — a fixed iteration budget with
modularity selection is more robust than an EM convergence threshold.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .bp import BpConfig, BpResult, run_bp
from .graph import AttributedGraph, Partition, degree_stats
from .metrics import modularity
from .model import (BlockStats, CrsbmParams, PopularityFunction, log_likelihood,
                    make_params, mle_nu, mle_omega, normalized_distances,
                    squared_distances)


@dataclass
class LearnerConfig:
    q: int
    tau_max: int = 10
    mu: float = 0.05
    n_grids: int = 10
    seed: int = 0
    bp: BpConfig = field(default_factory=BpConfig)
    degree_correction: bool = False
    distance: str = "sq-euclidean"
    warm_start: bool = True

    def __post_init__(self):
        if self.tau_max < 1:
            raise ValueError("tau_max must be >= 1")
        if not (0.0 < self.mu < 1.0):
            raise ValueError("mu must lie in (0, 1)")
        if self.n_grids < 2:
            raise ValueError("need at least 2 grids")


@dataclass
class FSamples:
    """Per-grid popularity targets built from belief averages."""

    midpoints: np.ndarray      # grid centers x_k
    dx: float                  # half-width
    mean_belief: np.ndarray    # <psi> over (j, r) pairs whose alpha falls in the grid
    delta: np.ndarray          # polarization measure in [-1, 1]
    targets: np.ndarray        # updated f(x_k) in [1, gamma_star]
    occupancy: np.ndarray      # pair count per grid


@dataclass
class IterationRecord:
    partition: Partition
    beliefs: np.ndarray
    modularity: float
    params: CrsbmParams
    bp_converged: bool
    bp_sweeps: int
    beta_refit: bool


@dataclass
class DetectionResult:
    iterations: list
    selected: int
    gamma_star: float
    timing: dict

    @property
    def partition(self) -> Partition:
        return self.iterations[self.selected].partition

    @property
    def modularity_trace(self) -> list:
        return [rec.modularity for rec in self.iterations]


def init_centers(X: np.ndarray, q: int, seed: int) -> np.ndarray:
    """k-means++ D^2-weighted seeding over the attribute rows.

    When fewer than q distinct rows exist the remaining centers repeat
    existing rows (degenerate input, resolved deterministically).
    """
    n = X.shape[0]
    if n < q:
        raise ValueError("need at least q attribute rows")
    rng = np.random.default_rng(seed)
    centers = np.empty((q, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for k in range(1, q):
        total = d2.sum()
        if total <= 0.0:
            idx = rng.integers(n)  # all remaining rows coincide with a center
        else:
            idx = rng.choice(n, p=d2 / total)
        centers[k] = X[idx]
        d2 = np.minimum(d2, ((X - centers[k]) ** 2).sum(axis=1))
    return centers


def solve_gamma_star(q_star: int, c_tilde: float, mu: float) -> float:
    """Popularity upper bound from the over-split guard and the slope cap.

    Branch A: the largest real root > 1 of the cubic that pins the
    two-brother detectability threshold at 1 (needs q_star >= 4 and
    c_tilde > 4).  Branch B: (4 / mu)^(1/3), the diminishing-returns
    point of the leading eigenvalue under the corner-case degree ratio.
    Returns min of the two; B alone when A has no admissible root.
    """
    gamma_b = (4.0 / mu) ** (1.0 / 3.0)
    if q_star < 4 or c_tilde <= 4.0:
        return gamma_b
    s = np.sqrt(c_tilde)
    qq = float(q_star)
    # (q-3+S+2/g)(1+(q-2)/g^2) = (q-1)(S-1), multiplied through by g^3
    a3 = (qq - 3.0 + s) - (qq - 1.0) * (s - 1.0)
    a2 = 2.0
    a1 = (qq - 2.0) * (qq - 3.0 + s)
    a0 = 2.0 * (qq - 2.0)
    roots = np.roots([a3, a2, a1, a0])
    real = roots[np.abs(roots.imag) < 1e-9].real
    admissible = real[real > 1.0]
    if admissible.size == 0:
        return gamma_b
    gamma_a = float(admissible.max())
    return min(gamma_a, gamma_b)


def linear_f0(gamma_star: float, alpha_min: float, alpha_max: float) -> PopularityFunction:
    return PopularityFunction(mode="linear", gamma_star=gamma_star,
                              alpha_min=alpha_min, alpha_max=alpha_max)


def update_f_samples(alpha: np.ndarray, beliefs: np.ndarray, gamma_star: float,
                     n_grids: int, f0: PopularityFunction) -> FSamples:
    """Grid the observed alpha range and derive popularity targets.

    Per grid, delta compares the average belief of the (node, group)
    pairs landing there against the uninformative 1/q point; the target
    interpolates from the linear baseline toward 1 (delta > 0) or
    gamma_star (delta < 0) with weight |delta|.  Empty grids are skipped.
    """
    q = beliefs.shape[1]
    a_min, a_max = float(alpha.min()), float(alpha.max())
    if a_max <= a_min:
        raise ValueError("degenerate alpha matrix; all distances equal")
    width = (a_max - a_min) / n_grids
    mids = a_min + width * (np.arange(n_grids) + 0.5)

    flat_a = alpha.ravel()
    flat_b = beliefs.ravel()
    bins = np.clip(((flat_a - a_min) / width).astype(np.int64), 0, n_grids - 1)
    occupancy = np.bincount(bins, minlength=n_grids)
    sums = np.bincount(bins, weights=flat_b, minlength=n_grids)

    mean_belief = np.full(n_grids, np.nan)
    nz = occupancy > 0
    mean_belief[nz] = sums[nz] / occupancy[nz]
    if not nz.any():
        raise ValueError("all grids empty; alpha degenerate")

    delta = np.zeros(n_grids)
    mb = mean_belief[nz]
    delta[nz] = 2.0 * mb / (mb + (1.0 - mb) / (q - 1.0)) - 1.0

    base = f0(mids)
    b = np.where(delta > 0.0, 1.0, gamma_star)
    targets = np.where(nz, base + np.abs(delta) * (b - base), np.nan)
    return FSamples(midpoints=mids, dx=width / 2.0, mean_belief=mean_belief,
                    delta=delta, targets=targets, occupancy=occupancy)


def fit_beta_lsm(samples: FSamples, gamma_star: float,
                 previous: tuple | None = None) -> tuple:
    """Sigmoid parameters by ordinary least squares on the logit transform.

    Targets are clamped 1e-6 inside (1, gamma_star) before the transform
    y~ = log(gamma_star - y) - log(y - 1) = beta1 * (-x) + beta2.  With
    fewer than 2 usable grids the previous parameters are kept; a
    non-monotone fit coerces beta1 up to 1e-6 (flagged by the caller via
    the returned flag).
    """
    usable = samples.occupancy > 0
    x = samples.midpoints[usable]
    y = np.clip(samples.targets[usable], 1.0 + 1e-6, gamma_star - 1e-6)
    if x.size < 2:
        if previous is None:
            raise ValueError("not enough grid samples to fit the popularity curve")
        return previous[0], previous[1], False
    ty = np.log(gamma_star - y) - np.log(y - 1.0)
    tx = -x
    A = np.column_stack([tx, np.ones_like(tx)])
    (beta1, beta2), *_ = np.linalg.lstsq(A, ty, rcond=None)
    coerced = beta1 < 1e-6
    if coerced:
        beta1 = 1e-6
    return float(beta1), float(beta2), bool(coerced)


def update_zeta(g: AttributedGraph, beliefs: np.ndarray, params: CrsbmParams,
                nu: np.ndarray) -> np.ndarray:
    """Prototype refresh: connectivity- and surprise-weighted attribute mean.

    zeta_s = sum_i kappa_is w_is (f_is - fbar_{z_i,s})^2 x_i / (same
    weights), with kappa_is = sum_j a_ij psi_s^j, w_is = ||x_i -
    zeta_s||^-2 alpha_is (1 - alpha_is), and fbar_{r,s} the
    belief-weighted mean of f_.s over group r -- so the squared term
    measures how atypical node i's distance profile is for its own
    group, and the hard group membership relaxes to i's belief row.
    With squared-Euclidean distances the ||.||^-2 factor cancels against
    alpha's numerator, keeping w finite as x_i -> zeta_s.  Groups with
    zero total weight keep their previous prototype.
    """
    X = g.attributes
    f = params.f_cache
    alpha = params.alpha
    q = params.q

    # kappa[i, s] = sum over neighbors j of psi_s^j
    kappa = np.zeros((g.n, q))
    src = np.repeat(np.arange(g.n, dtype=np.int64), g.degrees)
    np.add.at(kappa, src, beliefs[g.neighbors])

    group_mass = np.maximum(g.n * nu, 1e-300)
    fbar = (beliefs.T @ f) / group_mass[:, None]                   # (r, s)
    # surprise[i, s] = sum_r psi_r^i (f_is - fbar_rs)^2
    surprise = np.einsum("ir,irs->is", beliefs,
                         (f[:, None, :] - fbar[None, :, :]) ** 2)

    if params.distance == "sq-euclidean":
        # w = alpha (1 - alpha) / D with alpha = D / rowsum(D): D cancels
        rowsum = squared_distances(X, params.zeta).sum(axis=1)
        w = (1.0 - alpha) / np.maximum(rowsum, 1e-300)[:, None]
    else:
        dist = np.sqrt(squared_distances(X, params.zeta))
        w = alpha * (1.0 - alpha) / np.maximum(dist, 1e-12) ** 2

    weight = kappa * w * surprise                                  # (n, q)
    totals = weight.sum(axis=0)
    zeta = params.zeta.copy()
    ok = totals > 0.0
    if ok.any():
        zeta[ok] = (weight[:, ok].T @ X) / totals[ok, None]
    return zeta


def _accept_zeta(g: AttributedGraph, part, params: CrsbmParams,
                 zeta_new: np.ndarray) -> CrsbmParams:
    """Safeguarded prototype step: keep the proposal only if it does not
    lower the joint likelihood at the current hard assignment.

    The prototype equation solves a stationarity condition under a local
    quadratic approximation; far from the approximation's validity (for
    instance when nearly all stationarity weights vanish) it can propose
    centers that worsen the fit, so the step is accepted like a
    generalized-EM M-step: improve or stay.
    """
    candidate = params.with_zeta(g.attributes, zeta_new)
    if log_likelihood(g, part, candidate) >= log_likelihood(g, part, params):
        return candidate
    return params.with_zeta(g.attributes, params.zeta)


def update_block_params(g: AttributedGraph, result: BpResult, params: CrsbmParams):
    """Belief-weighted prior, group masses, block counts and rates."""
    state = result.state
    f = params.effective_f(g)
    nu = mle_nu(result.beliefs)
    n_rs = result.beliefs.T @ f
    edge_slots = np.flatnonzero(state.src < state.neighbors).astype(np.int64)
    m_rs, fallbacks = _kernels.soft_block_counts(
        edge_slots, state.src, state.neighbors, state.rev,
        np.ascontiguousarray(state.messages), np.ascontiguousarray(f),
        np.ascontiguousarray(params.omega))
    q = params.q
    stats = BlockStats(m_rs=m_rs, n_rs=n_rs, Xi=n_rs * n_rs.T / (1.0 + np.eye(q)))
    omega = mle_omega(stats)
    return nu, n_rs, m_rs, omega, fallbacks


def detect(g: AttributedGraph, config: LearnerConfig) -> DetectionResult:
    """Full detection pipeline; returns the iteration with maximal modularity."""
    t0 = time.perf_counter()
    q = config.q
    if g.n == 0 or q < 2:
        raise ValueError("need a non-empty graph and q >= 2")
    stats = degree_stats(g)

    zeta = init_centers(g.attributes, q, config.seed)
    # category count is unknown for real data; the guard cubic is solved
    # with q categories of two brothers each
    gamma_star = solve_gamma_star(2 * q, stats.c_tilde, config.mu)
    gamma_b = (4.0 / config.mu) ** (1.0 / 3.0)

    alpha0, _ = normalized_distances(g.attributes, zeta, config.distance)
    f0 = linear_f0(gamma_star, float(alpha0.min()), float(alpha0.max()))
    omega_bar = q * stats.c / g.n
    omega = np.full((q, q), omega_bar / (1.0 + gamma_b))
    np.fill_diagonal(omega, omega_bar * gamma_b / (1.0 + gamma_b))
    params = make_params(g, zeta, f0, omega,
                         degree_correction=config.degree_correction,
                         distance=config.distance)

    iterations = []
    messages = None
    beta = None
    bp_time = 0.0
    for tau in range(config.tau_max):
        t_bp = time.perf_counter()
        result = run_bp(g, params, replace(config.bp), initial_messages=messages)
        bp_time += time.perf_counter() - t_bp
        if config.warm_start:
            messages = result.state.messages
        part = result.partition
        Q = modularity(g, part)

        samples = update_f_samples(params.alpha, result.beliefs,
                                   gamma_star, config.n_grids, _current_f0(params, gamma_star))
        skip_refit = samples.delta[0] < 0.0 and samples.delta[1] < 0.0
        if skip_refit:
            # early iterations: keep the popularity curve, only re-center
            zeta = update_zeta(g, result.beliefs, params, params.nu)
            params = _accept_zeta(g, part, params, zeta)
        else:
            prev = beta if beta is not None else None
            b1, b2, _ = fit_beta_lsm(samples, gamma_star, previous=prev)
            beta = (b1, b2)
            pf = PopularityFunction(mode="sigmoid", gamma_star=gamma_star,
                                    beta1=b1, beta2=b2)
            zeta = update_zeta(g, result.beliefs, params, params.nu)
            params = replace(params, popularity=pf)
            params = _accept_zeta(g, part, params, zeta)

        nu, n_rs, m_rs, omega, _ = update_block_params(g, result, params)
        params = replace(params, nu=nu, omega=omega)

        iterations.append(IterationRecord(partition=part, beliefs=result.beliefs,
                                          modularity=Q, params=params,
                                          bp_converged=result.converged,
                                          bp_sweeps=result.sweeps,
                                          beta_refit=not skip_refit))

    selected = int(np.argmax([rec.modularity for rec in iterations]))
    timing = {"total_s": time.perf_counter() - t0, "bp_s": bp_time}
    return DetectionResult(iterations=iterations, selected=selected,
                           gamma_star=gamma_star, timing=timing)


def _current_f0(params: CrsbmParams, gamma_star: float) -> PopularityFunction:
    """Linear baseline over the current alpha range (targets anchor to it)."""
    return linear_f0(gamma_star, float(params.alpha.min()), float(params.alpha.max()))

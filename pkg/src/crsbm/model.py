"""Model parameterization: block rates, prior, cluster prototypes, popularity.

The generative law links a node pair (i, j) in groups (r, s) with
probability g_ij * omega_rs, where g_ij = f(alpha_{i,s}) * f(alpha_{j,r})
and alpha is the normalized attribute-to-prototype distance.  With the
popularity f pinned to 1 the plain block model is recovered; with the
degree-correction flag f picks up a k_i/c factor per endpoint.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .graph import AttributedGraph, Partition

NEG_INF = float("-inf")


@dataclass(frozen=True)
class PopularityFunction:
    """Nondecreasing map from normalized distance in [0,1] to a factor in [1, gamma_star].

    Modes:
      * "constant-one": f == 1 (block-model reduction)
      * "linear": f0(x) = (gamma_star-1) * x / (alpha_max-alpha_min) + 1
      * "sigmoid": f(x) = (gamma_star-1) / (1 + exp(-beta1*x + beta2)) + 1
    """

    mode: str = "sigmoid"
    gamma_star: float = 2.0
    beta1: float = 1.0
    beta2: float = 0.0
    alpha_min: float = 0.0
    alpha_max: float = 1.0

    def __post_init__(self):
        if self.mode not in ("constant-one", "linear", "sigmoid"):
            raise ValueError(f"unknown popularity mode {self.mode!r}")
        if self.mode == "sigmoid" and self.beta1 <= 0:
            raise ValueError("sigmoid popularity requires beta1 > 0")

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.mode == "constant-one":
            return np.ones_like(x)
        if self.mode == "linear":
            span = self.alpha_max - self.alpha_min
            if span <= 0:
                return np.ones_like(x)
            return (self.gamma_star - 1.0) / span * x + 1.0
        return (self.gamma_star - 1.0) / (1.0 + np.exp(-self.beta1 * x + self.beta2)) + 1.0


def popularity_eval(pf: PopularityFunction, x):
    """Evaluate the popularity function (scalar in, scalar out)."""
    return float(pf(x))


def squared_distances(X: np.ndarray, zeta: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances, shape (n, q)."""
    # ||x - z||^2 = ||x||^2 - 2 x.z + ||z||^2, clipped against roundoff
    sq = (X * X).sum(axis=1)[:, None] - 2.0 * X @ zeta.T + (zeta * zeta).sum(axis=1)[None, :]
    return np.maximum(sq, 0.0)


def normalized_distances(X: np.ndarray, zeta: np.ndarray, distance: str = "sq-euclidean"):
    """Row-normalized distances alpha[i, r] = D(x_i, zeta_r) / sum_s D(x_i, zeta_s).

    Rows sum to 1.  A node coinciding with every prototype gets a uniform
    row (degenerate, counted in the second return value).
    """
    q = zeta.shape[0]
    if q < 1:
        raise ValueError("need at least one prototype")
    if q == 1:
        # single group: the normalized distance is trivially 1
        return np.ones((X.shape[0], 1)), 0
    D = squared_distances(X, zeta)
    if distance == "euclidean":
        D = np.sqrt(D)
    elif distance != "sq-euclidean":
        raise ValueError(f"unknown distance {distance!r}")
    row = D.sum(axis=1)
    degenerate = row <= 0.0
    row = np.where(degenerate, 1.0, row)
    alpha = D / row[:, None]
    alpha[degenerate] = 1.0 / q
    alpha /= alpha.sum(axis=1, keepdims=True)
    return alpha, int(degenerate.sum())


@dataclass(frozen=True)
class CrsbmParams:
    """Full parameter snapshot; recomputation produces a new snapshot."""

    omega: np.ndarray          # (q, q) symmetric nonnegative rates, O(1/n) scale
    nu: np.ndarray             # (q,) prior on groups, sums to 1
    zeta: np.ndarray           # (q, d) cluster representative prototypes
    popularity: PopularityFunction
    alpha: np.ndarray          # (n, q) normalized distances, rows on the simplex
    f_cache: np.ndarray        # (n, q) f(alpha), before any degree factor
    degree_correction: bool = False
    distance: str = "sq-euclidean"

    @property
    def q(self) -> int:
        return self.omega.shape[0]

    def effective_f(self, g: AttributedGraph) -> np.ndarray:
        """f matrix consumed by inference/estimation; applies the degree factor."""
        if not self.degree_correction:
            return self.f_cache
        stats_c = 2.0 * g.m / g.n
        return self.f_cache * (g.degrees / stats_c)[:, None]

    def with_zeta(self, X: np.ndarray, zeta: np.ndarray) -> "CrsbmParams":
        alpha, _ = normalized_distances(X, zeta, self.distance)
        pf = self.popularity
        if pf.mode == "linear":
            pf = replace(pf, alpha_min=float(alpha.min()), alpha_max=float(alpha.max()))
        return replace(self, zeta=zeta, alpha=alpha, f_cache=pf(alpha), popularity=pf)

    def to_json(self) -> dict:
        return {
            "omega": self.omega.tolist(),
            "nu": self.nu.tolist(),
            "zeta": self.zeta.tolist(),
            "popularity": {
                "mode": self.popularity.mode,
                "gamma_star": self.popularity.gamma_star,
                "beta1": self.popularity.beta1,
                "beta2": self.popularity.beta2,
                "alpha_min": self.popularity.alpha_min,
                "alpha_max": self.popularity.alpha_max,
            },
            "degree_correction": self.degree_correction,
            "distance": self.distance,
        }

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=1)

    @staticmethod
    def from_json(doc: dict, X: np.ndarray) -> "CrsbmParams":
        pf = PopularityFunction(**doc["popularity"])
        zeta = np.asarray(doc["zeta"], dtype=np.float64)
        alpha, _ = normalized_distances(X, zeta, doc["distance"])
        return CrsbmParams(
            omega=np.asarray(doc["omega"], dtype=np.float64),
            nu=np.asarray(doc["nu"], dtype=np.float64),
            zeta=zeta, popularity=pf, alpha=alpha, f_cache=pf(alpha),
            degree_correction=doc["degree_correction"], distance=doc["distance"],
        )


def make_params(g: AttributedGraph, zeta: np.ndarray, popularity: PopularityFunction,
                omega: np.ndarray, nu: np.ndarray | None = None,
                degree_correction: bool = False, distance: str = "sq-euclidean") -> CrsbmParams:
    q = omega.shape[0]
    alpha, _ = normalized_distances(g.attributes, zeta, distance)
    if popularity.mode == "linear":
        popularity = replace(popularity, alpha_min=float(alpha.min()), alpha_max=float(alpha.max()))
    if nu is None:
        nu = np.full(q, 1.0 / q)
    return CrsbmParams(omega=np.asarray(omega, dtype=np.float64), nu=np.asarray(nu, dtype=np.float64),
                       zeta=np.asarray(zeta, dtype=np.float64), popularity=popularity,
                       alpha=alpha, f_cache=popularity(alpha),
                       degree_correction=degree_correction, distance=distance)


class EdgeFactorClips:
    """Counter surfaced when g_ij * omega products are clipped to a valid probability."""

    def __init__(self):
        self.count = 0


def edge_factor(params: CrsbmParams, g: AttributedGraph, i: int, j: int, r: int, s: int,
                clips: EdgeFactorClips | None = None) -> float:
    """Pair factor g_ij * omega_rs for assignment (z_i, z_j) = (r, s)."""
    f = params.f_cache
    gij = f[i, s] * f[j, r]
    if params.degree_correction:
        c = 2.0 * g.m / g.n
        gij *= (g.degrees[i] / c) * (g.degrees[j] / c)
    p = gij * params.omega[r, s]
    if p > 1.0:
        if clips is not None:
            clips.count += 1
        p = 1.0 - 1e-12
    return float(p)


@dataclass(frozen=True)
class BlockStats:
    """Block edge counts, popularity-weighted group sizes and pair weights.

    n_rs[r, s] = sum_i 1[z_i = r] * f_is (or the belief-weighted analogue);
    Xi[r, s] = n_rs[r, s] * n_rs[s, r] / (1 + delta_rs) is the pair-weight
    total the rate omega_rs multiplies in the likelihood.
    """

    m_rs: np.ndarray
    n_rs: np.ndarray
    Xi: np.ndarray


def hard_block_stats(g: AttributedGraph, z: Partition, f: np.ndarray) -> BlockStats:
    """Block statistics for a hard assignment."""
    q = z.q
    labels = z.labels
    edges = g.edge_array()
    m_rs = np.zeros((q, q))
    if edges.size:
        np.add.at(m_rs, (labels[edges[:, 0]], labels[edges[:, 1]]), 1.0)
        m_rs = m_rs + m_rs.T
        m_rs[np.diag_indices(q)] /= 2.0
    onehot = np.zeros((g.n, q))
    onehot[np.arange(g.n), labels] = 1.0
    n_rs = onehot.T @ f
    Xi = n_rs * n_rs.T / (1.0 + np.eye(q))
    return BlockStats(m_rs=m_rs, n_rs=n_rs, Xi=Xi)


def mle_omega(stats: BlockStats) -> np.ndarray:
    """Closed-form rate estimate omega_rs = m_rs (1 + delta_rs) / (n_r^s n_s^r)."""
    q = stats.m_rs.shape[0]
    denom = stats.n_rs * stats.n_rs.T
    numer = stats.m_rs * (1.0 + np.eye(q))
    bad = (denom <= 0.0) & (numer > 0.0)
    if bad.any():
        r, s = np.argwhere(bad)[0]
        raise ZeroDivisionError(f"block ({r}, {s}) has edges but zero popularity mass")
    omega = np.zeros_like(stats.m_rs)
    nz = denom > 0.0
    omega[nz] = numer[nz] / denom[nz]
    return omega


def mle_nu(beliefs: np.ndarray) -> np.ndarray:
    """Group prior as the mean belief: nu_r = n^-1 sum_i psi_r^i."""
    return beliefs.mean(axis=0)


def log_likelihood(g: AttributedGraph, z: Partition, params: CrsbmParams) -> float:
    """Joint log P(G, z) under the Poissonian pair approximation.

    Terms: sum_i log nu_{z_i} + sum_edges log g_ij
           + sum_{r<=s} (m_rs log omega_rs - Xi_rs omega_rs),
    with 0*log 0 := 0.  A zero rate on a block that holds edges makes the
    likelihood -inf.
    """
    labels = z.labels
    nu_term = float(np.log(params.nu[labels]).sum())
    f = params.effective_f(g)
    edges = g.edge_array()
    if edges.size:
        gij = f[edges[:, 0], labels[edges[:, 1]]] * f[edges[:, 1], labels[edges[:, 0]]]
        edge_term = float(np.log(gij).sum())
    else:
        edge_term = 0.0
    stats = hard_block_stats(g, z, f)
    iu = np.triu_indices(z.q)
    m_u, w_u, Xi_u = stats.m_rs[iu], params.omega[iu], stats.Xi[iu]
    if ((w_u == 0.0) & (m_u > 0.0)).any():
        return NEG_INF
    with np.errstate(divide="ignore"):
        logw = np.where(m_u > 0.0, np.log(np.where(w_u > 0.0, w_u, 1.0)), 0.0)
    block_term = float((m_u * logw).sum() - (Xi_u * w_u).sum())
    return nu_term + edge_term + block_term

"""Closed-form detectability theory for the nested planted benchmark.

Works in units of 1/n: the intra-block rate is fixed at 1 and the
inter-block rate at epsilon * eta, where eta is the brother-community
averaging factor; every returned quantity is a ratio in which n cancels.
Serves both as an analysis tool and as the numeric oracle for the
message-passing engine.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def eta_factor(q_star: int, q_b: int, gamma: float) -> float:
    """Averaging factor for the off-diagonal rate seen by message passing."""
    return (q_b - 1 + gamma ** -2 * (q_star - q_b)) / (q_star - 1)


@dataclass(frozen=True)
class DetectabilitySpec:
    """Planted nested benchmark: q_star communities, q_b brothers per category."""

    q_star: int
    q_b: int
    gamma: float
    epsilon: float
    c_tilde: float = 4.0

    def __post_init__(self):
        if self.q_star % self.q_b:
            raise ValueError("q_b must divide q_star")
        if self.gamma < 1.0:
            raise ValueError("gamma must be >= 1")
        if not (0.0 <= self.epsilon <= 1.0):
            raise ValueError("epsilon must lie in [0, 1]")

    @property
    def q_tilde(self) -> int:
        return self.q_star // self.q_b

    @property
    def omega_in(self) -> float:
        return 1.0

    @property
    def omega_out(self) -> float:
        return self.epsilon * eta_factor(self.q_star, self.q_b, self.gamma)


def fixed_point_messages(q_star: int, q_b: int, gamma: float):
    """Category-merged message values: (in-category, out-of-category).

    q_b * in + (q_star - q_b) * out = 1.  At gamma = 1 both collapse to
    the uniform 1/q_star point.
    """
    denom = q_b * gamma + q_star - q_b
    return gamma / denom, 1.0 / denom


def transfer_matrix(spec: DetectabilitySpec) -> np.ndarray:
    """Message transfer matrix for a reference node in community 1.

    T = (I - psi 1^T) Tt, where Tt is the row-normalized Omega F coupling
    (the belief diagonal cancels against the row normalizer) and the
    simplex projector is taken at the uniform point, under which the
    spectrum stays real with the closed-form value as its maximum.
    """
    q = spec.q_star
    f = np.ones(q)
    f[spec.q_b:] = spec.gamma
    Omega = np.full((q, q), spec.omega_out)
    np.fill_diagonal(Omega, spec.omega_in)
    M = Omega * f[None, :]
    row = M.sum(axis=1)
    if (row <= 0.0).any():
        raise ZeroDivisionError("singular row normalizer in transfer matrix")
    Tt = M / row[:, None]
    psi = np.full(q, 1.0 / q)
    return Tt - np.outer(psi, Tt.sum(axis=0))


def lambda1_closed_form(spec: DetectabilitySpec) -> float:
    """Leading transfer eigenvalue of the nested benchmark, closed form."""
    w_in, w_out = spec.omega_in, spec.omega_out
    return (w_in - w_out) / (w_in + (spec.q_star - 1 - spec.q_b) * w_out
                             + spec.q_b * w_out / spec.gamma)


def lambda_secondary(spec: DetectabilitySpec) -> float:
    """(q_b - 1)-fold within-category eigenvalue of the transfer matrix."""
    w_in, w_out = spec.omega_in, spec.omega_out
    return (w_in - w_out) / (w_in + (spec.q_star - spec.q_b) * spec.gamma * w_out
                             + (spec.q_b - 1) * w_out)


def lambda1_indicative(q: int, gamma: float, epsilon: float) -> float:
    """Leading eigenvalue when every node's attribute marks its own community."""
    g2 = gamma * gamma
    return (g2 - epsilon) / (g2 + (q - 2 + gamma) * epsilon)


def lambda1_indicative_derivative(q: int, gamma: float, epsilon: float) -> float:
    """d/dgamma of lambda1_indicative; strictly positive for epsilon > 0."""
    num = epsilon * (epsilon + gamma * (2 * q - 2 + gamma))
    den = (epsilon * (q - 2 + gamma) + gamma * gamma) ** 2
    return num / den


def threshold_epsilon(q_star: int, q_b: int, gamma: float, c_tilde: float) -> float:
    """Critical ratio eps* below which brother communities are detectable.

    Degenerate single-category layouts (q_b = q_star) fall back to the
    attribute-free gamma = 1 value.
    """
    if c_tilde <= 1.0:
        raise ValueError("threshold needs excess degree > 1")
    s = np.sqrt(c_tilde)
    if q_b == q_star:
        return (s - 1.0) / (q_star + s - 1.0)
    eta = eta_factor(q_star, q_b, gamma)
    return (s - 1.0) / (eta * (q_star - q_b + q_b / gamma + s - 1.0))


def ks_detectable(c_tilde: float, lambda1: float) -> bool:
    """Kesten-Stigum verdict: strictly c_tilde * lambda1^2 > 1."""
    if c_tilde <= 0:
        raise ValueError("c_tilde must be positive")
    return bool(c_tilde * lambda1 * lambda1 > 1.0)

"""Per-pair kernels: outcome gaps, treatment likelihood, penalties, and the
position objective with its analytic gradient.

All dot products are normalized by the column count m, so rows in
[-1, +1]^m give dots in [-1, +1]. The per-position objective couples each
normalized pairwise dot with the absolute normalized outcome gap,

    gamma_i = sum_{j != i} (1 + phi_cx_ij) * (dot_ij + y_ij)^2
                           + phi_bl_ij * dot_ij^2,

where phi_cx penalizes shared (non-treated) variation within the pair and
phi_bl penalizes imbalance of the pair's sum against the sample mean row.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def outcome_diff(yn_i: float, yn_j: float) -> float:
    """Directed nonnegative outcome gap max(0, yn_i - yn_j)."""
    return max(0.0, float(yn_i) - float(yn_j))


def pair_dot(x_i: np.ndarray, x_j: np.ndarray) -> float:
    """Inner product of two rows scaled by 1/m."""
    x_i = np.asarray(x_i, dtype=np.float64).ravel()
    x_j = np.asarray(x_j, dtype=np.float64).ravel()
    if x_i.shape != x_j.shape:
        raise ValueError(f"row length mismatch: {x_i.shape[0]} vs {x_j.shape[0]}")
    return float(x_i @ x_j) / x_i.shape[0]


def treatment_likelihood(x_i: np.ndarray, x_j: np.ndarray) -> float:
    """Probability that the pair realizes its factor differences as a treatment.

    Equals -dot clamped to [0, 1]: 1 only for antipodal unit rows, 0 whenever
    the scaled dot product is nonnegative.
    """
    return max(0.0, -pair_dot(x_i, x_j))


def phi_cx(x_i: np.ndarray, x_j: np.ndarray) -> float:
    """Treatment-size penalty: l2 norm of (x_i + x_j) divided by m."""
    x_i = np.asarray(x_i, dtype=np.float64).ravel()
    x_j = np.asarray(x_j, dtype=np.float64).ravel()
    if x_i.shape != x_j.shape:
        raise ValueError(f"row length mismatch: {x_i.shape[0]} vs {x_j.shape[0]}")
    return float(np.linalg.norm(x_i + x_j)) / x_i.shape[0]


def phi_bl(x_i: np.ndarray, x_j: np.ndarray, mean_row: np.ndarray) -> float:
    """Balance penalty: |<mean_row, x_i + x_j>| with the 1/m scaling.

    ``mean_row`` is the mean of the current position rows; the absolute
    projection is algebraically the per-pair sum of projections over the
    whole sample.
    """
    s = pair_dot(mean_row, np.asarray(x_i) + np.asarray(x_j))
    return abs(s)


@dataclass(frozen=True)
class PairDecomposition:
    """One pair's treatment decomposition in the current positions."""

    i: int
    j: int
    y_ij: float
    dot: float
    likelihood: float
    phi_cx: float
    phi_bl: float


def decompose(i: int, j: int, P: np.ndarray, yn: np.ndarray) -> PairDecomposition:
    P = np.asarray(P, dtype=np.float64)
    mean_row = P.mean(axis=0)
    return PairDecomposition(
        i=i,
        j=j,
        y_ij=outcome_diff(yn[i], yn[j]),
        dot=pair_dot(P[i], P[j]),
        likelihood=treatment_likelihood(P[i], P[j]),
        phi_cx=phi_cx(P[i], P[j]),
        phi_bl=phi_bl(P[i], P[j], mean_row),
    )


def pair_coefficients(i: int, P: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Penalty rows (phi_cx_ij, phi_bl_ij) of individual i against all j.

    Evaluated at the current positions; the gradient treats these as
    constants (coefficient freezing).
    """
    P = np.asarray(P, dtype=np.float64)
    n, m = P.shape
    if not 0 <= i < n:
        raise IndexError(f"row index {i} out of range for {n} rows")
    cx = np.linalg.norm(P + P[i], axis=1) / m
    mean_row = P.mean(axis=0)
    proj = (P @ mean_row) / m
    bl = np.abs(proj + proj[i])
    return cx, bl


def _pair_terms(i: int, P: np.ndarray, yn: np.ndarray, coeffs):
    P = np.asarray(P, dtype=np.float64)
    yn = np.asarray(yn, dtype=np.float64).ravel()
    n, m = P.shape
    if not 0 <= i < n:
        raise IndexError(f"row index {i} out of range for {n} rows")
    if yn.shape[0] != n:
        raise ValueError("outcome vector length must match position rows")
    if coeffs is None:
        coeffs = pair_coefficients(i, P)
    cx, bl = coeffs
    dots = (P @ P[i]) / m
    # Residual magnitude: the pair is scored once per direction with the
    # same absolute gap, so both orderings pull the dot toward -|y_i - y_j|.
    ygap = np.abs(yn - yn[i])
    return P, n, m, cx, bl, dots, ygap


def objective_gamma(i: int, P: np.ndarray, yn: np.ndarray, coeffs=None) -> float:
    """Objective of position i against all other rows (self-pair excluded)."""
    P, n, m, cx, bl, dots, ygap = _pair_terms(i, P, yn, coeffs)
    resid = dots + ygap
    terms = (1.0 + cx) * resid * resid + bl * dots * dots
    terms[i] = 0.0
    return float(terms.sum())


def grad_gamma(i: int, P: np.ndarray, yn: np.ndarray, coeffs=None) -> np.ndarray:
    """Analytic gradient of objective_gamma w.r.t. row i, coefficients frozen."""
    P, n, m, cx, bl, dots, ygap = _pair_terms(i, P, yn, coeffs)
    c = 2.0 * ((1.0 + cx) * (dots + ygap) + bl * dots) / m
    c[i] = 0.0
    return c @ P


def total_objective(P: np.ndarray, yn: np.ndarray) -> float:
    """Sum of objective_gamma over all rows."""
    P = np.asarray(P, dtype=np.float64)
    n = P.shape[0]
    return float(sum(objective_gamma(i, P, yn) for i in range(n)))

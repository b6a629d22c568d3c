"""Closed-form proximal operators for the three regularizers.

Each operator solves argmin_x 0.5*||x - t||^2 + c*R(x):

    R1 = ||theta||_2^2          -> uniform shrink t / (1 + 2c)
    R2 = sum of squared singular values below the top kappa
                                -> scale the tail singular values by 1/(1+2c)
    R3 = ||P||_{1,2}            -> column-wise group soft threshold

R2 is non-convex, but generalized singular value thresholding still gives a
global optimum: the scalar subproblem min 0.5*(s - sigma)^2 + c*s^2 has the
unique minimizer sigma/(1+2c), and the resulting diagonal preserves the
non-increasing order of the singular values, so it is feasible for the
order-constrained spectral problem.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD A = U diag(sigma) V' with sigma non-increasing."""

    u_left: np.ndarray
    sigma: np.ndarray
    v_right: np.ndarray

    @classmethod
    def decompose(cls, a: np.ndarray) -> "SvdFactors":
        u, s, vt = np.linalg.svd(a, full_matrices=False)
        return cls(u, s, vt.T)

    def reconstruct(self) -> np.ndarray:
        return (self.u_left * self.sigma) @ self.v_right.T


def _check_scale(c: float):
    if c < 0:
        raise ValueError(f"prox scale must be non-negative, got {c}")


def prox_ridge(t: np.ndarray, c: float) -> np.ndarray:
    """Minimizer of 0.5*||x - t||^2 + c*||x||^2, i.e. t / (1 + 2c)."""
    _check_scale(c)
    return np.asarray(t, dtype=np.float64) / (1.0 + 2.0 * c)


def prox_group_columns(p: np.ndarray, c: float) -> np.ndarray:
    """Column-wise group soft threshold: p_j * max(0, 1 - c/||p_j||)."""
    _check_scale(c)
    p = np.asarray(p, dtype=np.float64)
    if c == 0.0:
        return p.copy()
    norms = np.linalg.norm(p, axis=0)
    scale = np.zeros_like(norms)
    alive = norms > c
    scale[alive] = 1.0 - c / norms[alive]
    return p * scale


def prox_truncated_sv(g: np.ndarray, kappa: int, c: float) -> np.ndarray:
    """Shrink the singular values of g below the top kappa by 1/(1 + 2c).

    The top-kappa singular values pass through unchanged. When kappa covers
    the whole spectrum there is nothing to shrink and g is returned as-is.
    """
    if kappa < 1:
        raise ValueError(f"kappa must be >= 1, got {kappa}")
    _check_scale(c)
    g = np.asarray(g, dtype=np.float64)
    m = min(g.shape)
    if kappa >= m or c == 0.0:
        return g.copy()
    fac = SvdFactors.decompose(g)
    sigma = fac.sigma.copy()
    sigma[kappa:] /= 1.0 + 2.0 * c
    return (fac.u_left * sigma) @ fac.v_right.T


def reg_value_truncated_sv(g: np.ndarray, kappa: int) -> float:
    """Sum of squared singular values below the top kappa (zero if none)."""
    if kappa < 1:
        raise ValueError(f"kappa must be >= 1, got {kappa}")
    g = np.asarray(g, dtype=np.float64)
    if kappa >= min(g.shape):
        return 0.0
    sigma = np.linalg.svd(g, compute_uv=False)
    return float(np.sum(sigma[kappa:] ** 2))

"""Growth-tensor kinetics.

The growth tensor F_g of every cell (micro) or node (macro) starts at the
identity and evolves by dF_g/dt = G F_g, where the rate G is the clamped
positive part of the excess of the averaged stress or elastic strain over
an isotropic threshold tau*I.  det F_g >= 1 and eigenvalues >= 1 hold along
any admissible trajectory; violations indicate a time step that is too
large and are reported, never silently fixed.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

DET_TOL = 1e-12


class GrowthLaw(str, Enum):
    STRESS = "stress"
    STRAIN = "strain"


@dataclass(frozen=True)
class GrowthParams:
    """Extensibility eta, isotropic threshold tau, componentwise clamp M."""

    eta: float = 1.0
    tau: float = 0.0
    M: float = 1e6  # effectively inactive by default
    law: GrowthLaw = GrowthLaw.STRAIN

    def __post_init__(self):
        if self.eta < 0.0:
            raise ValueError("extensibility eta must be >= 0")
        if self.M <= 0.0:
            raise ValueError("clamp bound M must be > 0")
        object.__setattr__(self, "law", GrowthLaw(self.law))


class StepSizeError(RuntimeError):
    """Euler update produced det F_g below the admissible range."""


def positive_part(v: np.ndarray) -> np.ndarray:
    """Spectral positive part of a symmetric 2x2 matrix.

    Keeps tensile/elongational eigenvalues, zeroes the rest.  The scalar
    case (equal eigenvalues) is handled explicitly since any rotation then
    diagonalizes v.
    """
    v = np.asarray(v, dtype=float)
    a, b, c = v[0, 0], v[1, 1], 0.5 * (v[0, 1] + v[1, 0])
    mean = 0.5 * (a + b)
    rad = np.hypot(0.5 * (a - b), c)
    if rad == 0.0:
        lam = max(mean, 0.0)
        return np.array([[lam, 0.0], [0.0, lam]])
    lam1, lam2 = mean + rad, mean - rad
    if lam2 >= 0.0:
        return np.array([[a, c], [c, b]])
    if lam1 <= 0.0:
        return np.zeros((2, 2))
    # rank-one tensile part: lam1 * q1 (x) q1
    q = np.array([c, lam1 - a])
    if np.allclose(q, 0.0):
        q = np.array([lam1 - b, c])
    q /= np.linalg.norm(q)
    return lam1 * np.outer(q, q)


def positive_part_batch(v: np.ndarray) -> np.ndarray:
    """Vectorized positive_part for an (n, 2, 2) stack of symmetric matrices."""
    v = np.asarray(v, dtype=float)
    a, b = v[:, 0, 0], v[:, 1, 1]
    c = 0.5 * (v[:, 0, 1] + v[:, 1, 0])
    mean = 0.5 * (a + b)
    rad = np.hypot(0.5 * (a - b), c)
    lam1 = mean + rad
    lam2 = mean - rad
    out = np.zeros_like(v)
    keep = lam2 >= 0.0  # already PSD
    out[keep, 0, 0] = a[keep]
    out[keep, 1, 1] = b[keep]
    out[keep, 0, 1] = out[keep, 1, 0] = c[keep]
    mixed = (~keep) & (lam1 > 0.0)
    if np.any(mixed):
        qx, qy = c[mixed], (lam1 - a)[mixed]
        deg = (qx == 0.0) & (qy == 0.0)
        qx = np.where(deg, (lam1 - b)[mixed], qx)
        qy = np.where(deg, c[mixed], qy)
        nrm = np.hypot(qx, qy)
        qx, qy = qx / nrm, qy / nrm
        l1 = lam1[mixed]
        out[mixed, 0, 0] = l1 * qx * qx
        out[mixed, 1, 1] = l1 * qy * qy
        out[mixed, 0, 1] = out[mixed, 1, 0] = l1 * qx * qy
    return out


def clamp(Gt: np.ndarray, M: float) -> np.ndarray:
    """Componentwise truncation to [-M, M]."""
    if M <= 0.0:
        raise ValueError("clamp bound M must be > 0")
    return np.clip(np.asarray(Gt, dtype=float), -M, M)


def growth_rate(avg: np.ndarray, p: GrowthParams) -> np.ndarray:
    """Rate G = clamp(eta * [avg - tau*I]_+, M) for a cell-averaged tensor."""
    shifted = np.asarray(avg, dtype=float) - p.tau * np.eye(2)
    return clamp(p.eta * positive_part(shifted), p.M)


def growth_rate_batch(avg: np.ndarray, p: GrowthParams,
                      eta: np.ndarray | None = None,
                      tau: np.ndarray | None = None) -> np.ndarray:
    """Vectorized growth_rate; eta/tau may override p per entry (fields)."""
    avg = np.asarray(avg, dtype=float)
    n = avg.shape[0]
    tau_arr = np.full(n, p.tau) if tau is None else np.asarray(tau, dtype=float)
    eta_arr = np.full(n, p.eta) if eta is None else np.asarray(eta, dtype=float)
    shifted = avg - tau_arr[:, None, None] * np.eye(2)
    return clamp(eta_arr[:, None, None] * positive_part_batch(shifted), p.M)


def euler_step(F_g: np.ndarray, G: np.ndarray, dt: float) -> np.ndarray:
    """Explicit Euler update F_g' = (I + dt G) F_g.

    Raises StepSizeError if det drops below 1, which cannot happen for PSD G
    and small enough dt.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    F_new = (np.eye(2) + dt * np.asarray(G, dtype=float)) @ np.asarray(F_g, dtype=float)
    det = F_new[0, 0] * F_new[1, 1] - F_new[0, 1] * F_new[1, 0]
    if det < 1.0 - DET_TOL:
        raise StepSizeError(
            f"euler_step produced det F_g = {det:.6e} < 1; reduce dt"
        )
    return F_new


def euler_step_batch(F_g: np.ndarray, G: np.ndarray, dt: float) -> np.ndarray:
    """Vectorized euler_step on (n, 2, 2) stacks."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    A = np.eye(2) + dt * np.asarray(G, dtype=float)
    F_new = A @ np.asarray(F_g, dtype=float)
    det = F_new[:, 0, 0] * F_new[:, 1, 1] - F_new[:, 0, 1] * F_new[:, 1, 0]
    bad = det < 1.0 - DET_TOL
    if np.any(bad):
        raise StepSizeError(
            f"euler_step produced det F_g = {det[bad].min():.6e} < 1 "
            f"on {bad.sum()} entries; reduce dt"
        )
    return F_new


def inverse_and_det(F_g: np.ndarray) -> tuple[np.ndarray, float]:
    """Closed-form 2x2 inverse and determinant."""
    F = np.asarray(F_g, dtype=float)
    det = F[0, 0] * F[1, 1] - F[0, 1] * F[1, 0]
    if abs(det) < DET_TOL:
        raise ValueError(f"growth tensor is singular, det = {det:.3e}")
    inv = np.array([[F[1, 1], -F[0, 1]], [-F[1, 0], F[0, 0]]]) / det
    return inv, float(det)


def inverse_and_det_batch(F_g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized inverse_and_det on (n, 2, 2) stacks."""
    F = np.asarray(F_g, dtype=float)
    det = F[:, 0, 0] * F[:, 1, 1] - F[:, 0, 1] * F[:, 1, 0]
    if np.any(np.abs(det) < DET_TOL):
        raise ValueError("batch contains a singular growth tensor")
    inv = np.empty_like(F)
    inv[:, 0, 0] = F[:, 1, 1]
    inv[:, 1, 1] = F[:, 0, 0]
    inv[:, 0, 1] = -F[:, 0, 1]
    inv[:, 1, 0] = -F[:, 1, 0]
    inv /= det[:, None, None]
    return inv, det


def mean_growth_scalar(G: np.ndarray, weights: np.ndarray) -> float:
    """Area-weighted tissue average of tr(G)/2, the plotted growth rate."""
    G = np.asarray(G, dtype=float)
    w = np.asarray(weights, dtype=float)
    tr_half = 0.5 * (G[:, 0, 0] + G[:, 1, 1])
    return float(np.sum(tr_half * w) / np.sum(w))

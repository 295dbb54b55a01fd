"""Plane elasticity tensors stored as six independent components.

Component order is (E1111, E2222, E1122, E1212, E1112, E2212); minor and
major symmetries are implied by the storage, so a tensor is admissible as
soon as the associated quadratic form on symmetric matrices is positive
definite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# |E1112| + |E2212| below this fraction of the largest component counts as
# axis-aligned orthotropic.
ORTHOTROPY_TOL = 1e-8


@dataclass(frozen=True)
class ElasticTensor2D:
    """Plane elasticity tensor, six independent components."""

    c: tuple[float, float, float, float, float, float]

    def __post_init__(self):
        if len(self.c) != 6:
            raise ValueError("expected exactly six components")
        object.__setattr__(self, "c", tuple(float(x) for x in self.c))

    @property
    def E1111(self) -> float:
        return self.c[0]

    @property
    def E2222(self) -> float:
        return self.c[1]

    @property
    def E1122(self) -> float:
        return self.c[2]

    @property
    def E1212(self) -> float:
        return self.c[3]

    @property
    def E1112(self) -> float:
        return self.c[4]

    @property
    def E2212(self) -> float:
        return self.c[5]

    def voigt(self) -> np.ndarray:
        """3x3 matrix mapping (e11, e22, g12) to (s11, s22, s12), g12 = 2 e12."""
        c = self.c
        return np.array(
            [
                [c[0], c[2], c[4]],
                [c[2], c[1], c[5]],
                [c[4], c[5], c[3]],
            ]
        )

    def mandel(self) -> np.ndarray:
        """3x3 matrix in the orthonormal (e11, e22, sqrt(2) e12) basis.

        Its eigenvalues are the tensor eigenvalues on symmetric matrices, so
        positive definiteness and the bounds a1 |A|^2 <= EA:A <= a2 |A|^2 can
        be read off directly.
        """
        s = np.sqrt(2.0)
        c = self.c
        return np.array(
            [
                [c[0], c[2], s * c[4]],
                [c[2], c[1], s * c[5]],
                [s * c[4], s * c[5], 2.0 * c[3]],
            ]
        )

    def eigen_bounds(self) -> tuple[float, float]:
        """(a1, a2) with a1 |A|^2 <= EA:A <= a2 |A|^2 for symmetric A."""
        ev = np.linalg.eigvalsh(self.mandel())
        return float(ev[0]), float(ev[-1])

    def is_positive_definite(self, tol: float = 0.0) -> bool:
        return self.eigen_bounds()[0] > tol

    def scaled(self, factor: float) -> "ElasticTensor2D":
        return ElasticTensor2D(tuple(factor * x for x in self.c))

    def as_array(self) -> np.ndarray:
        return np.array(self.c)


def isotropic_plane_stress(E: float, nu: float) -> ElasticTensor2D:
    """Isotropic plane-stress tensor from Young modulus and Poisson ratio.

    Components are (2*mu + lam, 2*mu + lam, lam, mu, 0, 0) with
    mu = E / (2 (1 + nu)) and lam = E nu / (1 - nu^2).
    """
    if E <= 0.0:
        raise ValueError(f"Young modulus must be positive, got {E}")
    if not -1.0 < nu < 0.5:
        raise ValueError(f"Poisson ratio must lie in (-1, 0.5), got {nu}")
    mu = E / (2.0 * (1.0 + nu))
    lam = E * nu / (1.0 - nu * nu)
    return ElasticTensor2D((2.0 * mu + lam, 2.0 * mu + lam, lam, mu, 0.0, 0.0))


def contract(t: ElasticTensor2D, eps: np.ndarray) -> np.ndarray:
    """sigma_ij = E_ijkl eps_kl for a symmetric 2x2 strain."""
    eps = np.asarray(eps, dtype=float)
    s = t.voigt() @ np.array([eps[0, 0], eps[1, 1], eps[0, 1] + eps[1, 0]])
    return np.array([[s[0], s[2]], [s[2], s[1]]])


def orthotropic_props(t: ElasticTensor2D) -> tuple[float, float, float, float]:
    """(E1, E2, nu12, G12) of an axis-aligned orthotropic tensor.

    E1 = E1111 - E1122^2 / E2222, E2 = E2222 - E1122^2 / E1111,
    nu12 = E1122 / E2222, G12 = E1212.
    """
    cmax = max(abs(x) for x in t.c)
    if abs(t.E1112) + abs(t.E2212) > ORTHOTROPY_TOL * cmax:
        raise ValueError(
            "tensor is not orthotropic along the coordinate axes: "
            f"E1112={t.E1112:.3e}, E2212={t.E2212:.3e}"
        )
    E1 = t.E1111 - t.E1122**2 / t.E2222
    E2 = t.E2222 - t.E1122**2 / t.E1111
    nu12 = t.E1122 / t.E2222
    return E1, E2, nu12, t.E1212

"""Plate material and frequency bundle with derived bulk wavenumbers."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class PlateMaterial:
    """Isotropic plate of thickness 2*h at a fixed angular frequency.

    Attributes:
        h: half-thickness of the plate (m)
        lam: first Lame constant (Pa)
        mu: second Lame constant / shear modulus (Pa)
        rho: mass density (kg/m^3)
        omega: angular frequency (rad/s)
    """

    h: float
    lam: float
    mu: float
    rho: float
    omega: float

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError(f"half-thickness must be positive, got {self.h}")
        if self.mu <= 0:
            raise ValueError(f"shear modulus must be positive, got {self.mu}")
        if self.rho <= 0:
            raise ValueError(f"density must be positive, got {self.rho}")
        if self.lam <= -2.0 / 3.0 * self.mu:
            raise ValueError(
                f"first Lame constant {self.lam} violates lam > -2/3 mu"
            )
        if self.omega <= 0:
            raise ValueError(f"angular frequency must be positive, got {self.omega}")

    @property
    def c_l(self) -> float:
        """Longitudinal bulk wave speed."""
        return math.sqrt((self.lam + 2.0 * self.mu) / self.rho)

    @property
    def c_t(self) -> float:
        """Transverse bulk wave speed."""
        return math.sqrt(self.mu / self.rho)

    @property
    def k_l(self) -> float:
        """Longitudinal bulk wavenumber omega / c_l."""
        return self.omega / self.c_l

    @property
    def k_t(self) -> float:
        """Transverse bulk wavenumber omega / c_t."""
        return self.omega / self.c_t

    def at_omega(self, omega: float) -> "PlateMaterial":
        """Same plate at a different angular frequency."""
        return PlateMaterial(self.h, self.lam, self.mu, self.rho, omega)


def from_engineering(
    h: float, E: float, nu: float, rho: float, omega: float
) -> PlateMaterial:
    """Build a PlateMaterial from Young's modulus and Poisson's ratio."""
    lam = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
    mu = E / (2.0 * (1.0 + nu))
    return PlateMaterial(h=h, lam=lam, mu=mu, rho=rho, omega=omega)

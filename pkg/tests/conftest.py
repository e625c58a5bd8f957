"""Shared fixtures: a steel-like plate at a few reference frequencies."""

import pytest

from platescatter.material import PlateMaterial


def steel_plate(omega_h_over_ct: float, h: float = 1.0e-3) -> PlateMaterial:
    """Steel-like plate, frequency set through the dimensionless omega h / c_T."""
    lam, mu, rho = 1.13e11, 8.0e10, 7.85e3
    ct = (mu / rho) ** 0.5
    return PlateMaterial(h=h, lam=lam, mu=mu, rho=rho, omega=omega_h_over_ct * ct / h)


@pytest.fixture
def plate_low():
    return steel_plate(0.05)


@pytest.fixture
def plate_mid():
    return steel_plate(1.0)


@pytest.fixture
def plate_high():
    return steel_plate(3.5)

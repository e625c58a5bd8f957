"""Thickness-direction mode profiles, stress profiles, and closed-form
projection integrals for the symmetric Lamb and SH families.

Symmetric Lamb displacement profiles:

    V(z) = s1 cos(p z) + s2 cos(q z)      (even)
    W(z) = s3 sin(p z) + s4 sin(q z)      (odd)

and the cylindrical stress coefficient profiles

    S_rr(z)   = mu [s5 cos(p z) + s6 cos(q z)]
    S_rt(z)   = mu [s7 cos(p z) + s8 cos(q z)]   (= the tilde-rr profile)
    S_rz(z)   = mu [s9 sin(p z) + s10 sin(q z)]

Two s-coefficient sets are carried: the published closed forms, and a set
rederived from the displacement profiles through Hooke's law (they differ
only in the argument of the cosine in s8). The constructor keeps whichever
set is consistent with traction-free surfaces and the elasticity relations.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from .dispersion import LambRoot, ShRoot
from .material import PlateMaterial

TRACTION_FREE_TOL = 1e-8


def _sin_over_x(x: complex, h: float) -> complex:
    """sin(x h) / x, entire in x (series below |x h| = 1e-6)."""
    xh = x * h
    if abs(xh) < 1e-6:
        return h * (1.0 - xh * xh / 6.0)
    return cmath.sin(xh) / x


@dataclass(frozen=True)
class LambMode:
    material: PlateMaterial
    root: LambRoot
    s: tuple  # (s1..s10), index 0 unused-free: s[0] is s1

    @property
    def k(self) -> complex:
        return self.root.k


@dataclass(frozen=True)
class ShMode:
    material: PlateMaterial
    root: ShRoot


def _coeff_sets(material: PlateMaterial, root: LambRoot) -> tuple[tuple, tuple]:
    """(published, rederived) ten-coefficient sets for a Lamb root."""
    h = material.h
    k, p, q = root.k, root.p, root.q
    cph, cqh = cmath.cos(p * h), cmath.cos(q * h)
    s1 = 2.0 * cqh
    s2 = -((k * k - q * q) / (k * k)) * cph
    s3 = -(2.0 * p / k) * cqh
    s4 = -((k * k - q * q) / (q * k)) * cph
    s5 = (2.0 * (2.0 * p * p - k * k - q * q) / k) * cqh
    s6 = (2.0 * (k * k - q * q) / k) * cph
    s7 = 4.0 * cqh
    s9 = 4.0 * p * cqh
    s10 = ((k * k - q * q) ** 2 / (q * k * k)) * cph
    s8_published = -(2.0 * (k * k - q * q) / (k * k)) * cqh
    s8_rederived = -(2.0 * (k * k - q * q) / (k * k)) * cph
    published = (s1, s2, s3, s4, s5, s6, s7, s8_published, s9, s10)
    rederived = (s1, s2, s3, s4, s5, s6, s7, s8_rederived, s9, s10)
    return published, rederived


def lamb_profiles(mode: LambMode, z) -> tuple[np.ndarray, np.ndarray]:
    """Displacement thickness profiles (V, W) at z (scalar or array)."""
    z = np.asarray(z, dtype=float)
    p, q = mode.root.p, mode.root.q
    s1, s2, s3, s4 = mode.s[0:4]
    V = s1 * np.cos(p * z) + s2 * np.cos(q * z)
    W = s3 * np.sin(p * z) + s4 * np.sin(q * z)
    return V, W


def lamb_profile_derivatives(mode: LambMode, z) -> tuple[np.ndarray, np.ndarray]:
    """(dV/dz, dW/dz) at z."""
    z = np.asarray(z, dtype=float)
    p, q = mode.root.p, mode.root.q
    s1, s2, s3, s4 = mode.s[0:4]
    dV = -s1 * p * np.sin(p * z) - s2 * q * np.sin(q * z)
    dW = s3 * p * np.cos(p * z) + s4 * q * np.cos(q * z)
    return dV, dW


def lamb_stress_profiles(mode: LambMode, z) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(Sigma_rr, SigmaTilde_rr, Sigma_rz) coefficient profiles at z.

    SigmaTilde_rr doubles as the r-theta profile.
    """
    z = np.asarray(z, dtype=float)
    mu = mode.material.mu
    p, q = mode.root.p, mode.root.q
    s5, s6, s7, s8, s9, s10 = mode.s[4:10]
    srr = mu * (s5 * np.cos(p * z) + s6 * np.cos(q * z))
    srt = mu * (s7 * np.cos(p * z) + s8 * np.cos(q * z))
    srz = mu * (s9 * np.sin(p * z) + s10 * np.sin(q * z))
    return srr, srt, srz


def lamb_sigma_zz_profile(mode: LambMode, z) -> np.ndarray:
    """Normal-stress coefficient profile (lam + 2 mu) W' - lam k V."""
    lam, mu = mode.material.lam, mode.material.mu
    k = mode.k
    V, _ = lamb_profiles(mode, z)
    _, dW = lamb_profile_derivatives(mode, z)
    return (lam + 2.0 * mu) * dW - lam * k * V


def _stress_consistency_residual(mode: LambMode) -> float:
    """Mismatch of the stored stress profiles against Hooke's law.

    The elasticity relations give, independently of the s5..s10 closed forms:
        Sigma_rr  = lam W' - (lam + 2 mu) k V
        Sigma_rt  = 2 mu V
        Sigma_rz  = -mu (V' + k W)
    """
    lam, mu = mode.material.lam, mode.material.mu
    k, h = mode.k, mode.material.h
    z = np.linspace(-h, h, 9)
    V, W = lamb_profiles(mode, z)
    dV, dW = lamb_profile_derivatives(mode, z)
    srr, srt, srz = lamb_stress_profiles(mode, z)
    srr_o = lam * dW - (lam + 2.0 * mu) * k * V
    srt_o = 2.0 * mu * V
    srz_o = -mu * (dV + k * W)
    scale = max(np.abs(srr_o).max(), np.abs(srt_o).max(), np.abs(srz_o).max())
    return float(
        max(
            np.abs(srr - srr_o).max(),
            np.abs(srt - srt_o).max(),
            np.abs(srz - srz_o).max(),
        )
        / scale
    )


def check_traction_free(mode: LambMode) -> float:
    """Normalized surface traction residual at z = +-h.

    Checks both the shear profile Sigma_rz and the normal stress sigma_zz
    (assembled from the displacement profiles through Hooke's law); a
    conforming mode returns < 1e-8. The residual is invariant under global
    scaling of the s-coefficients.
    """
    h = mode.material.h
    zg = np.linspace(-h, h, 33)
    _, _, srz = lamb_stress_profiles(mode, zg)
    szz = lamb_sigma_zz_profile(mode, zg)
    srz_scale = np.abs(srz).max()
    szz_scale = np.abs(szz).max()
    _, _, srz_h = lamb_stress_profiles(mode, np.array([-h, h]))
    szz_h = lamb_sigma_zz_profile(mode, np.array([-h, h]))
    r = 0.0
    if srz_scale > 0:
        r = max(r, float(np.abs(srz_h).max() / srz_scale))
    if szz_scale > 0:
        r = max(r, float(np.abs(szz_h).max() / szz_scale))
    return r


def make_lamb_mode(material: PlateMaterial, root: LambRoot) -> LambMode:
    """Lamb mode with the stress-coefficient set that is self-consistent.

    The published s8 and the Hooke's-law rederivation disagree; the surface
    traction check alone cannot see s8 (it involves only V, W, s9, s10), so
    the selection additionally requires consistency of all stress profiles
    with the elasticity relations.
    """
    published, rederived = _coeff_sets(material, root)
    candidates = [LambMode(material, root, s) for s in (rederived, published)]
    scored = [
        (max(check_traction_free(m), _stress_consistency_residual(m)), m)
        for m in candidates
    ]
    scored.sort(key=lambda t: t[0])
    best_residual, best = scored[0]
    if check_traction_free(best) >= TRACTION_FREE_TOL:
        raise ValueError(
            f"no self-consistent coefficient set for root k={root.k} "
            f"(best residual {best_residual:.3e})"
        )
    return best


def make_sh_mode(material: PlateMaterial, root: ShRoot) -> ShMode:
    if root.kind == "cutoff":
        raise ValueError(f"SH order n={root.n} is at cutoff (l = 0); exclude it")
    return ShMode(material, root)


def sh_profile(n: int, z, h: float) -> np.ndarray:
    """Symmetric SH thickness profile cos(n pi z / 2h), n even."""
    if n % 2 != 0 or n < 0:
        raise ValueError(f"SH order must be even and >= 0, got {n}")
    z = np.asarray(z, dtype=float)
    return np.cos(n * np.pi * z / (2.0 * h))


def cos_projection_integral(n_prime: int, mode: LambMode) -> complex:
    """Closed-form integral of cos(n' pi z / 2h) V(z) over the thickness."""
    if n_prime % 2 != 0 or n_prime < 0:
        raise ValueError(f"projection order must be even and >= 0, got {n_prime}")
    h = mode.material.h
    a = n_prime * np.pi / (2.0 * h)
    p, q = mode.root.p, mode.root.q
    s1, s2 = mode.s[0], mode.s[1]

    def icc(beta: complex) -> complex:
        return _sin_over_x(a - beta, h) + _sin_over_x(a + beta, h)

    return s1 * icc(p) + s2 * icc(q)


def sin_projection_integral(n_prime: int, mode: LambMode) -> complex:
    """Closed-form integral of sin(n' pi z / 2h) W(z) over the thickness."""
    if n_prime % 2 != 0 or n_prime < 2:
        raise ValueError(f"projection order must be even and >= 2, got {n_prime}")
    h = mode.material.h
    a = n_prime * np.pi / (2.0 * h)
    p, q = mode.root.p, mode.root.q
    s3, s4 = mode.s[2], mode.s[3]

    def iss(beta: complex) -> complex:
        return _sin_over_x(a - beta, h) - _sin_over_x(a + beta, h)

    return s3 * iss(p) + s4 * iss(q)


def sh_norm_integral(n: int, n_prime: int, h: float) -> float:
    """Thickness norm of the SH cosine profiles: 2h, h, or 0."""
    if n % 2 != 0 or n_prime % 2 != 0:
        raise ValueError("SH orders must be even")
    if n != n_prime:
        return 0.0
    return 2.0 * h if n == 0 else h

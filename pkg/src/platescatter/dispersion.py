"""Guided-mode wavenumbers of the symmetric Lamb and SH families.

Lamb wavenumbers are roots of the symmetric Rayleigh-Lamb relation

    tan(q h) / tan(p h) = -4 k^2 p q / (q^2 - k^2)^2,
    p^2 = k_L^2 - k^2,   q^2 = k_T^2 - k^2.

Root finding uses the pole-free rearrangement

    F(k) = (q^2 - k^2)^2 cos(p h) sin(q h)/q + 4 k^2 p sin(p h) cos(q h)

which is an entire, even function of p and q (no branch sensitivity) and
real-valued on the real k axis, so it can be scanned for sign changes.
The sin(q h)/q factor removes the spurious q = 0 zero of the naive
cleared form. SH wavenumbers are closed form.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .material import PlateMaterial

RESIDUAL_TOL = 1e-10
SCAN_POINTS = 2000


class RootScanError(RuntimeError):
    """Raised when the sign-change scan cannot be trusted."""


@dataclass(frozen=True)
class LambRoot:
    k: complex
    p: complex
    q: complex
    kind: str  # "propagating" | "evanescent"


@dataclass(frozen=True)
class ShRoot:
    n: int
    l: complex
    kind: str  # "propagating" | "evanescent" | "cutoff"


def branch_sqrt(z: complex) -> complex:
    """Principal square root with Re >= 0, ties broken to Im >= 0."""
    w = cmath.sqrt(z)
    if w.real < 0 or (w.real == 0 and w.imag < 0):
        w = -w
    return w


def _pq(material: PlateMaterial, k: complex) -> tuple[complex, complex]:
    p = branch_sqrt(material.k_l**2 - k * k)
    q = branch_sqrt(material.k_t**2 - k * k)
    return p, q


def _characteristic_terms(material: PlateMaterial, k: complex) -> tuple[complex, complex]:
    h = material.h
    p, q = _pq(material, k)
    # sin(q h)/q via a series near q = 0 to keep the factor entire.
    if abs(q) * h < 1e-8:
        sinq_over_q = h * (1.0 - (q * h) ** 2 / 6.0)
    else:
        sinq_over_q = cmath.sin(q * h) / q
    t1 = (q * q - k * k) ** 2 * cmath.cos(p * h) * sinq_over_q
    t2 = 4.0 * k * k * p * cmath.sin(p * h) * cmath.cos(q * h)
    return t1, t2


def characteristic(material: PlateMaterial, k: complex) -> complex:
    t1, t2 = _characteristic_terms(material, k)
    return t1 + t2


def characteristic_residual(material: PlateMaterial, k: complex) -> float:
    """|F(k)| normalized by the magnitude of its two constituent terms."""
    t1, t2 = _characteristic_terms(material, k)
    scale = abs(t1) + abs(t2)
    if scale == 0.0:
        scale = material.k_t**4 * material.h
    return abs(t1 + t2) / scale


def _real_characteristic(material: PlateMaterial, k: float) -> float:
    return characteristic(material, k).real


def _scan_real_roots(material: PlateMaterial, n_points: int) -> list[float]:
    k_max = 1.5 * material.k_t
    ks = np.linspace(k_max / n_points, k_max, n_points)
    vals = np.array([_real_characteristic(material, k) for k in ks])
    roots: list[float] = []
    for i in range(len(ks) - 1):
        a, b = ks[i], ks[i + 1]
        fa, fb = vals[i], vals[i + 1]
        if fa == 0.0:
            roots.append(float(a))
            continue
        if fa * fb < 0.0:
            r = brentq(lambda k: _real_characteristic(material, k), a, b,
                       xtol=1e-15 * material.k_t, rtol=8.9e-16)
            roots.append(float(r))
    if vals[-1] == 0.0:
        roots.append(float(ks[-1]))
    # Merge near-duplicates from grid points landing on roots.
    roots.sort()
    merged: list[float] = []
    for r in roots:
        if not merged or abs(r - merged[-1]) > 1e-9 * material.k_t:
            merged.append(r)
    return merged


def _newton_complex(material: PlateMaterial, k0: complex, max_iter: int = 60) -> complex | None:
    k = k0
    dk = 1e-7 * material.k_t
    for _ in range(max_iter):
        f = characteristic(material, k)
        df = (characteristic(material, k + dk) - characteristic(material, k - dk)) / (2 * dk)
        if df == 0:
            return None
        step = f / df
        k = k - step
        if abs(step) < 1e-14 * material.k_t:
            break
    if characteristic_residual(material, k) < RESIDUAL_TOL:
        return k
    return None


def _find_evanescent(material: PlateMaterial, count: int) -> list[complex]:
    """Complex/imaginary roots with Im k > 0 by Newton from asymptotic guesses.

    Initial guesses combine the two thickness-resonance families
    (q h ~ n pi and p h ~ (n + 1/2) pi continued to imaginary k) with a
    coarse rectangular grid in the upper half plane.
    """
    h = material.h
    guesses: list[complex] = []
    for n in range(1, count + 6):
        guesses.append(branch_sqrt(material.k_t**2 - (n * math.pi / h) ** 2))
        guesses.append(branch_sqrt(material.k_l**2 - ((n + 0.5) * math.pi / h) ** 2))
    re_grid = np.linspace(0.0, 2.0 * material.k_t, 14)
    im_grid = np.linspace(0.1 * math.pi / h, (count + 3) * math.pi / h, 18)
    guesses.extend(complex(re, im) for re in re_grid for im in im_grid)

    found: list[complex] = []
    for g in guesses:
        r = _newton_complex(material, g)
        if r is None:
            continue
        if r.real < 0:
            r = -r.conjugate() if r.imag > 0 else -r
        if r.imag <= 1e-9 * material.k_t:
            continue
        if all(abs(r - f) > 1e-6 * material.k_t for f in found):
            found.append(r)
    found.sort(key=lambda z: (z.imag, -z.real))
    if len(found) < count:
        raise RootScanError(
            f"found only {len(found)} evanescent roots, requested {count}"
        )
    return found[:count]


def find_lamb_roots(material: PlateMaterial, count_evanescent: int = 0) -> list[LambRoot]:
    """All real propagating symmetric Lamb roots, fundamental (largest k) first.

    Optionally appends `count_evanescent` complex roots with Im k > 0.
    Raises RootScanError if a 4x denser rescan finds a different number of
    real roots (scan resolution insufficient).
    """
    if count_evanescent < 0:
        raise ValueError("count_evanescent must be >= 0")
    roots = _scan_real_roots(material, SCAN_POINTS)
    recount = _scan_real_roots(material, 4 * SCAN_POINTS)
    if len(roots) != len(recount):
        raise RootScanError(
            f"root scan resolution insufficient: {len(roots)} vs {len(recount)} roots"
        )
    out: list[LambRoot] = []
    for k in sorted(roots, reverse=True):
        if characteristic_residual(material, k) >= RESIDUAL_TOL:
            raise RootScanError(f"refined root k={k} fails the residual check")
        p, q = _pq(material, k)
        out.append(LambRoot(k=complex(k), p=p, q=q, kind="propagating"))
    if count_evanescent > 0:
        for k in _find_evanescent(material, count_evanescent):
            p, q = _pq(material, k)
            out.append(LambRoot(k=k, p=p, q=q, kind="evanescent"))
    return out


def sh_wavenumbers(material: PlateMaterial, n_max: int) -> list[ShRoot]:
    """Symmetric SH wavenumbers l_n, n = 0, 2, ..., n_max (closed form).

    l_n^2 = k_T^2 - (n pi / 2h)^2 with the branch Re l >= 0, Im l >= 0.
    A root at exact cutoff (l = 0) is flagged "cutoff" and must be excluded
    by callers that divide by l.
    """
    if n_max < 0 or n_max % 2 != 0:
        raise ValueError(f"n_max must be an even integer >= 0, got {n_max}")
    out = []
    for n in range(0, n_max + 1, 2):
        cut = n * math.pi / (2.0 * material.h)
        l2 = material.k_t**2 - cut**2
        l = branch_sqrt(complex(l2))
        if l == 0:
            kind = "cutoff"
        elif material.k_t > cut:
            kind = "propagating"
        else:
            kind = "evanescent"
        out.append(ShRoot(n=n, l=l, kind=kind))
    return out

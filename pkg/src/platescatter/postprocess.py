"""Energy balance, far-field amplitudes, and field export.

The net time-averaged power flux through the virtual cylinder must vanish
for the exact solution (cavity wall and plate faces are traction free), so
its magnitude relative to the incident-mode power is the energy-balance
error of a computed solution. Far-field amplitudes follow from the
large-argument asymptotics of the outgoing cylinder functions.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .dtn_boundary import Truncation, scattered_displacement, scattered_traction
from .incident import (
    IncidentField,
    incident_cartesian_stress,
    incident_displacement,
    incident_tractions_on_cylinder,
)
from .mesh import Mesh, boundary_face_quadrature
from .vtkio import write_vtk


class PostprocessError(ValueError):
    pass


@dataclass
class ScatteringResult:
    """Modal coefficients of one scattering solve with derived energy data.

    coefficients maps each angular harmonic m' to a complex vector ordered
    [Lamb modes..., SH modes...] in the truncation's column order; each entry
    multiplies a unit-coefficient outgoing mode (displacement normalization
    of the thickness profiles, Hankel radial factor).
    """

    trunc: Truncation
    coefficients: dict
    incident_power: float
    net_flux: float
    energy_balance_error: float
    mode_powers: dict


def incident_power(field: IncidentField, a: float, n_z: int = 128) -> float:
    """Time-averaged power of the incident mode through the diametral
    cross-section of width 2a, by thickness quadrature of the closed form."""
    mat = field.material
    zq, wq = np.polynomial.legendre.leggauss(n_z)
    z = mat.h * zq
    w = mat.h * wq
    pts = np.column_stack([np.zeros(n_z), np.zeros(n_z), z])
    u = incident_displacement(field, pts)
    s = incident_cartesian_stress(field, pts)
    flux = s["xx"] * np.conj(u[:, 0]) + s["xz"] * np.conj(u[:, 2])
    # With the e^{-i omega t} convention the time-averaged flux density is
    # +(omega/2) Im(t . conj(u)).
    P = (mat.omega / 2.0) * 2.0 * a * float(np.imag(flux @ w))
    if P <= 0.0:
        raise PostprocessError(
            f"incident power reference is non-positive ({P:.3e}); "
            "check the incident mode and amplitude"
        )
    return P


def boundary_net_flux(mesh: Mesh, u_fn, t_fn, omega: float,
                      gauss_order: int = 4) -> float:
    """Net outward power flux through the virtual cylinder r = a.

    u_fn(theta, z) and t_fn(theta, z) return displacement and traction
    samples with a trailing component axis in a common orthonormal basis.
    """
    theta_g, z_g, w_g, _ = boundary_face_quadrature(mesh, gauss_order)
    u = u_fn(theta_g, z_g)
    t = t_fn(theta_g, z_g)
    integrand = np.sum(t * np.conj(u), axis=-1)
    return (omega / 2.0) * float(np.imag(np.sum(integrand * w_g)))


def _incident_cylindrical_displacement(field, a, theta, z):
    ct, st = np.cos(theta), np.sin(theta)
    pts = np.column_stack([
        (a * ct).ravel(), (a * st).ravel(), np.broadcast_to(z, theta.shape).ravel()
    ])
    u = incident_displacement(field, pts).reshape(theta.shape + (3,))
    out = np.empty_like(u)
    out[..., 0] = u[..., 0] * ct + u[..., 1] * st
    out[..., 1] = -u[..., 0] * st + u[..., 1] * ct
    out[..., 2] = u[..., 2]
    return out


def _total_field_functions(field, trunc, coeffs, a):
    def u_fn(theta, z):
        u = scattered_displacement(trunc, coeffs, np.full_like(theta, a), theta, z)
        if field is not None:
            u = u + _incident_cylindrical_displacement(field, a, theta, z)
        return u

    def t_fn(theta, z):
        t = scattered_traction(trunc, coeffs, a, theta, z)
        if field is not None:
            s_r, t_rt, t_rz = incident_tractions_on_cylinder(field, a, theta, z)
            t = t + np.stack([s_r, t_rt, t_rz], axis=-1)
        return t

    return u_fn, t_fn


def _single_mode_coeffs(trunc: Truncation, coeffs: dict, column: int) -> dict:
    out = {}
    for m, c in coeffs.items():
        mask = np.zeros_like(c)
        mask[column] = c[column]
        out[m] = mask
    return out


def mode_power(trunc: Truncation, coeffs: dict, a: float, column: int,
               omega: float, n_theta: int | None = None, n_z: int = 64) -> float:
    """Outward power carried by one modal column alone through r = a.

    Diagnostic only: modal cross terms are dropped, so the column powers do
    not sum exactly to the net flux of the full field.
    """
    if n_theta is None:
        n_theta = 4 * trunc.M + 8
    theta = np.arange(n_theta) * 2 * np.pi / n_theta
    mat = (trunc.lamb_modes[0].material if trunc.lamb_modes
           else trunc.sh_modes[0].material)
    zq, wq = np.polynomial.legendre.leggauss(n_z)
    z = mat.h * zq
    wz = mat.h * wq
    T, Z = np.meshgrid(theta, z, indexing="ij")
    single = _single_mode_coeffs(trunc, coeffs, column)
    u = scattered_displacement(trunc, single, np.full_like(T, a), T, Z)
    t = scattered_traction(trunc, single, a, T, Z)
    integrand = np.sum(t * np.conj(u), axis=-1)
    ring = integrand @ wz  # z quadrature per theta sample
    return (omega / 2.0) * float(np.imag(ring.sum() * (2 * np.pi / n_theta) * a))


def energy_balance(mesh: Mesh, field: IncidentField | None, trunc: Truncation,
                   coeffs: dict, gauss_order: int = 4) -> ScatteringResult:
    """Net-flux energy check of a computed solution on the virtual boundary."""
    mat = (trunc.lamb_modes[0].material if trunc.lamb_modes
           else trunc.sh_modes[0].material)
    omega = mat.omega
    a = mesh.a
    u_fn, t_fn = _total_field_functions(field, trunc, coeffs, a)
    P_net = boundary_net_flux(mesh, u_fn, t_fn, omega, gauss_order)
    if field is None:
        raise PostprocessError("incident field required for the power reference")
    P_ref = incident_power(field, a)
    powers = {}
    for j, _ in enumerate(trunc.lamb_modes):
        powers[("lamb", j)] = mode_power(trunc, coeffs, a, j, omega)
    for j, sh in enumerate(trunc.sh_modes):
        powers[("sh", sh.root.n)] = mode_power(
            trunc, coeffs, a, len(trunc.lamb_modes) + j, omega
        )
    return ScatteringResult(
        trunc=trunc,
        coefficients=coeffs,
        incident_power=P_ref,
        net_flux=P_net,
        energy_balance_error=abs(P_net) / P_ref,
        mode_powers=powers,
    )


def far_field_pattern(trunc: Truncation, coeffs: dict, theta) -> dict:
    """Angular far-field amplitude of each propagating mode.

    f_n(theta) = sum_m c_mn sqrt(2/(pi k_n)) e^{-i(|m| pi/2 + pi/4)} e^{im theta},
    the coefficient of e^{i k_n r}/sqrt(r) in the large-r limit of the
    unsigned-order radial factors. Returns {("lamb", j) or ("sh", n):
    complex array over theta}.
    """
    theta = np.asarray(theta, dtype=float)
    columns = []
    for j, mode in enumerate(trunc.lamb_modes):
        if abs(mode.k.imag) < 1e-9 * abs(mode.k):
            columns.append((("lamb", j), j, mode.k.real))
    for j, sh in enumerate(trunc.sh_modes):
        if sh.root.kind == "propagating":
            columns.append(
                (("sh", sh.root.n), len(trunc.lamb_modes) + j, sh.root.l.real)
            )
    out = {}
    for key, col, k_n in columns:
        f = np.zeros(theta.shape, dtype=complex)
        for m, c in coeffs.items():
            f += (
                c[col]
                * np.sqrt(2.0 / (np.pi * k_n))
                * np.exp(-1j * (abs(m) * np.pi / 2 + np.pi / 4))
                * np.exp(1j * m * theta)
            )
        out[key] = f
    return out


def reflection_transmission(trunc: Truncation, coeffs: dict) -> dict:
    """Backscattered (theta = pi) and forward (theta = 0) far-field
    amplitudes per propagating mode."""
    pattern = far_field_pattern(trunc, coeffs, np.array([np.pi, 0.0]))
    return {key: (f[0], f[1]) for key, f in pattern.items()}


def export_fields(mesh: Mesh, U_total: np.ndarray, U_sca: np.ndarray,
                  path) -> None:
    """Write the mesh with total and scattered displacement vectors to a
    legacy ASCII VTK file."""
    write_vtk(
        path,
        mesh.nodes,
        mesh.elements,
        point_vectors={
            "u_total": np.asarray(U_total).reshape(-1, 3),
            "u_scattered": np.asarray(U_sca).reshape(-1, 3),
        },
    )


def write_coefficients_csv(path, freq: float, trunc: Truncation,
                           coeffs: dict) -> None:
    """Append-free CSV of modal coefficients, one row per (harmonic, mode).

    Columns: freq, family, n, m, Re, Im. Coefficients multiply outgoing
    modes with displacement-normalized thickness profiles and Hankel radial
    factors (no power normalization).
    """
    rows = coefficient_rows(freq, trunc, coeffs)
    try:
        f = open(path, "w", newline="")
    except OSError as exc:
        raise OSError(f"cannot write coefficients CSV {path}: {exc}") from exc
    with f:
        writer = csv.writer(f)
        writer.writerow(["freq", "family", "n", "m", "Re", "Im"])
        writer.writerows(rows)


def coefficient_rows(freq: float, trunc: Truncation, coeffs: dict) -> list:
    """CSV rows (freq, family, n, m, Re, Im) in deterministic order."""
    rows = []
    for m in sorted(coeffs):
        c = coeffs[m]
        for j, _ in enumerate(trunc.lamb_modes):
            rows.append([repr(freq), "lamb", j, m, repr(c[j].real), repr(c[j].imag)])
        for j, sh in enumerate(trunc.sh_modes):
            v = c[len(trunc.lamb_modes) + j]
            rows.append([repr(freq), "sh", sh.root.n, m, repr(v.real), repr(v.imag)])
    return rows

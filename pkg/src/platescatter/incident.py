"""Incident symmetric plane Lamb wave travelling along +x.

The fundamental symmetric mode with the largest real wavenumber k0 carries
the incident field, generated from the plane potential exp(i k0 x). It is
evaluated in closed Cartesian form and, for the traction on the virtual
cylinder r = a, as a cylindrical harmonic series whose terms decay
super-exponentially once the order exceeds k0 a.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dispersion import find_lamb_roots
from .material import PlateMaterial
from .mesh import Mesh, boundary_face_quadrature
from .modes import (
    LambMode,
    lamb_profile_derivatives,
    lamb_profiles,
    lamb_stress_profiles,
    make_lamb_mode,
)
from .specfun import bessel_j


class IncidentSeriesError(ArithmeticError):
    pass


# Relative size of the last retained harmonic shell at which the traction
# series is considered converged.
SERIES_REL_TOL = 1e-10


@dataclass(frozen=True)
class IncidentField:
    """Plane fundamental symmetric Lamb wave moving in +x."""

    mode0: LambMode
    amplitude: complex = 1.0 + 0.0j

    def __post_init__(self):
        k = self.mode0.root.k
        if not (k.real > 0 and abs(k.imag) < 1e-12 * abs(k.real)):
            raise ValueError("incident mode must be propagating (real wavenumber)")

    @property
    def k0(self) -> float:
        return self.mode0.root.k.real

    @property
    def material(self) -> PlateMaterial:
        return self.mode0.material


def make_incident(material: PlateMaterial, amplitude: complex = 1.0) -> IncidentField:
    """Build the incident field on the fundamental symmetric mode.

    The fundamental mode is the propagating root with the largest real
    wavenumber (find_lamb_roots returns roots sorted that way).
    """
    roots = find_lamb_roots(material)
    if not roots:
        raise ValueError("no propagating symmetric mode at this frequency")
    return IncidentField(mode0=make_lamb_mode(material, roots[0]), amplitude=amplitude)


def incident_displacement(field: IncidentField, points: np.ndarray) -> np.ndarray:
    """Closed-form incident displacement, (p, 3) complex for points (p, 3).

    u_x = i V0(z) e^{i k0 x}, u_y = 0, u_z = W0(z) e^{i k0 x}.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    V, W = lamb_profiles(field.mode0, pts[:, 2])
    phase = field.amplitude * np.exp(1j * field.k0 * pts[:, 0])
    u = np.zeros((pts.shape[0], 3), dtype=complex)
    u[:, 0] = 1j * V * phase
    u[:, 2] = W * phase
    return u if np.ndim(points) == 2 else u[0]


def incident_cartesian_stress(field: IncidentField, points: np.ndarray) -> dict:
    """Closed-form Cartesian stresses of the incident wave.

    Only sigma_xx, sigma_yy, sigma_zz and sigma_xz are nonzero; the field
    has no y displacement and no y dependence.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    mat = field.material
    z = pts[:, 2]
    k0 = field.k0
    V, W = lamb_profiles(field.mode0, z)
    dV, dW = lamb_profile_derivatives(field.mode0, z)
    phase = field.amplitude * np.exp(1j * k0 * pts[:, 0])
    dil = mat.lam * (dW - k0 * V)  # lambda * div(u) / e^{ik0 x}
    return {
        "xx": (dil - 2.0 * mat.mu * k0 * V) * phase,
        "yy": dil * phase,
        "zz": (dil + 2.0 * mat.mu * dW) * phase,
        "xz": 1j * mat.mu * (dV + k0 * W) * phase,
    }


def incident_traction_at(field: IncidentField, x, y, z) -> np.ndarray:
    """Cartesian traction of the incident wave on a surface with outward
    normal (x, y, 0)/r at the given points. Shapes broadcast."""
    x, y, z = np.broadcast_arrays(
        np.asarray(x, float), np.asarray(y, float), np.asarray(z, float)
    )
    r = np.hypot(x, y)
    ct, st = x / r, y / r
    pts = np.stack([x, np.zeros_like(x), z], axis=-1).reshape(-1, 3)
    s = incident_cartesian_stress(field, pts)
    shape = x.shape
    sxx = s["xx"].reshape(shape)
    syy = s["yy"].reshape(shape)
    sxz = s["xz"].reshape(shape)
    # The plane wave depends on x only; the stress evaluation above used the
    # true x of each point, so the phase is already correct.
    t = np.empty(shape + (3,), dtype=complex)
    t[..., 0] = sxx * ct
    t[..., 1] = syy * st
    t[..., 2] = sxz * ct
    return t


def incident_tractions_on_cylinder(
    field: IncidentField, a: float, theta, z
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cylindrical tractions (sigma_r, tau_rtheta, tau_rz) on r = a.

    Harmonic series summed over angular orders, truncated adaptively when
    the last order shell falls below SERIES_REL_TOL of the running sum.
    """
    theta, z = np.broadcast_arrays(np.asarray(theta, float), np.asarray(z, float))
    mode = field.mode0
    k0 = field.k0
    x = k0 * a
    sig_rr, sig_rt, sig_rz = lamb_stress_profiles(mode, z.ravel())
    shape = theta.shape
    sig_rr = sig_rr.reshape(shape)
    sig_rt = sig_rt.reshape(shape)
    sig_rz = sig_rz.reshape(shape)

    m_cap = 4 * int(np.ceil(x)) + 40
    s_r = np.zeros(shape, dtype=complex)
    s_rt = np.zeros(shape, dtype=complex)
    s_rz = np.zeros(shape, dtype=complex)
    converged = False
    for m in range(m_cap + 1):
        J = bessel_j(m, x)
        im = 1j**m
        if m == 0:
            e_cos, e_msin = np.ones(shape), np.zeros(shape)
        else:
            # i^m J_m e^{im t} and its -m partner combine into cosine and
            # sine shells (J_{-m} = (-1)^m J_m, i^{-m} = (-1)^m i^m).
            e_cos = 2.0 * np.cos(m * theta)
            e_msin = -2.0 * m * np.sin(m * theta)
        d_r = im * (
            sig_rr * J.value
            - sig_rt * (J.derivative / a - m * m * J.value / (k0 * a * a))
        ) * e_cos
        # The +-m pair of i^{m+1} m (...) e^{imt} terms sums to
        # -2 m i^m (...) sin(mt), which is im * e_msin here.
        d_rt = im * sig_rt * (
            J.derivative / a - J.value / (k0 * a * a)
        ) * e_msin
        d_rz = -im * sig_rz * J.derivative * e_cos
        s_r += d_r
        s_rt += d_rt
        s_rz += d_rz
        if m > x:
            num = max(np.abs(d_r).max(), np.abs(d_rt).max(), np.abs(d_rz).max())
            den = max(np.abs(s_r).max(), np.abs(s_rt).max(), np.abs(s_rz).max())
            if num <= SERIES_REL_TOL * max(den, 1e-300):
                converged = True
                break
    if not converged:
        raise IncidentSeriesError("incident series not converged")
    amp = field.amplitude
    return amp * s_r, amp * s_rt, amp * s_rz


def boundary_face_forces(
    mesh: Mesh, traction_fn, gauss_order: int = 4
) -> np.ndarray:
    """Q4-consistent nodal forces of a traction field on the virtual boundary.

    traction_fn(x, y, z) returns Cartesian tractions (..., 3). The faces lie
    exactly on r = a, so the surface element is a * d(theta) * dz.
    """
    theta_g, z_g, w_g, N = boundary_face_quadrature(mesh, gauss_order)
    a = mesh.a
    t = traction_fn(a * np.cos(theta_g), a * np.sin(theta_g), z_g)  # (F, g, 3)
    f_face = np.einsum("fgc,gj->fjc", t * w_g[:, :, None], N)  # (F, 4, 3)

    F = np.zeros(3 * mesh.n_nodes, dtype=complex)
    dofs = (3 * mesh.boundary_faces[:, :, None] + np.arange(3)).ravel()
    np.add.at(F, dofs, f_face.ravel())
    return F


def incident_nodal_data(
    field: IncidentField, mesh: Mesh
) -> tuple[np.ndarray, np.ndarray]:
    """(U_inc, F_inc), both complex of length 3p, node-major dof order.

    U_inc holds the closed-form displacement at every node. F_inc holds the
    equivalent nodal forces of the incident traction on the virtual boundary
    faces only; it is zero at interior and cavity-surface nodes.
    """
    U = incident_displacement(field, mesh.nodes).ravel()
    F = boundary_face_forces(mesh, lambda x, y, z: incident_traction_at(field, x, y, z))
    return U, F

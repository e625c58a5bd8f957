"""Incident plane-wave field: closed form, harmonic series, nodal data."""

import numpy as np
import pytest
import scipy.special as sps

from platescatter.fem_core import assemble
from platescatter.incident import (
    IncidentField,
    boundary_face_forces,
    incident_displacement,
    incident_nodal_data,
    incident_traction_at,
    incident_tractions_on_cylinder,
    make_incident,
)
from platescatter.mesh import CavitySpec, MeshResolution, generate
from platescatter.modes import lamb_profiles
from conftest import steel_plate

H = 1.0e-3


@pytest.fixture(scope="module")
def mat():
    return steel_plate(1.0, h=H)


@pytest.fixture(scope="module")
def field(mat):
    return make_incident(mat)


def test_displacement_at_origin(field):
    u = incident_displacement(field, np.array([[0.0, 0.0, 0.0]]))[0]
    V, W = lamb_profiles(field.mode0, np.array([0.0]))
    assert u[0] == pytest.approx(1j * V[0])
    assert u[1] == 0
    assert abs(u[2]) < 1e-12 * abs(u[0])  # W vanishes on the mid-plane


def test_plane_wave_periodicity(field):
    lam = 2 * np.pi / field.k0
    pts = np.array([[0.3 * lam, 0.2 * H, 0.4 * H]])
    u1 = incident_displacement(field, pts)
    u2 = incident_displacement(field, pts + [lam, 0, 0])
    assert np.allclose(u1, u2, rtol=1e-10)


def test_displacement_matches_cylindrical_series(field):
    # Independent partial-wave expansion of the plane wave, truncated at
    # |m| = 25, evaluated in cylindrical components and rotated back.
    a = 6 * H
    theta = np.pi / 3
    k0 = field.k0
    for z in (-0.7 * H, 0.0, 0.5 * H):
        V, W = lamb_profiles(field.mode0, np.array([z]))
        V, W = V[0], W[0]
        ur = ut = uz = 0.0j
        for m in range(-25, 26):
            J = sps.jv(m, k0 * a)
            Jp = sps.jvp(m, k0 * a)
            ph = (1j**m) * np.exp(1j * m * theta)
            ur += ph * V * Jp
            ut += ph * 1j * m * V * J / (k0 * a)
            uz += ph * W * J
        expect = np.array(
            [
                ur * np.cos(theta) - ut * np.sin(theta),
                ur * np.sin(theta) + ut * np.cos(theta),
                uz,
            ]
        )
        got = incident_displacement(field, np.array([[a * np.cos(theta), a * np.sin(theta), z]]))[0]
        assert np.abs(got - expect).max() < 1e-8 * np.abs(expect).max()


def fd_cylindrical_traction_oracle(field, a, theta, z, delta=1e-9):
    """Hooke's law on centered differences of the closed-form displacement,
    rotated to cylindrical traction components on r = a."""
    mat = field.material
    x = a * np.cos(theta)

    def u(xx, zz):
        return incident_displacement(field, np.array([[xx, 0.0, zz]]))[0]

    dux_dx = (u(x + delta, z)[0] - u(x - delta, z)[0]) / (2 * delta)
    duz_dx = (u(x + delta, z)[2] - u(x - delta, z)[2]) / (2 * delta)
    dux_dz = (u(x, z + delta)[0] - u(x, z - delta)[0]) / (2 * delta)
    duz_dz = (u(x, z + delta)[2] - u(x, z - delta)[2]) / (2 * delta)
    div = dux_dx + duz_dz
    sxx = mat.lam * div + 2 * mat.mu * dux_dx
    syy = mat.lam * div
    sxz = mat.mu * (dux_dz + duz_dx)
    ct, st = np.cos(theta), np.sin(theta)
    sig_r = sxx * ct * ct + syy * st * st
    tau_rt = (syy - sxx) * st * ct
    tau_rz = sxz * ct
    return sig_r, tau_rt, tau_rz


def test_traction_series_vs_cartesian_oracle(field):
    a = 5 * H
    rng = np.random.default_rng(4)
    scale = field.material.mu * field.k0
    for _ in range(10):
        theta = rng.uniform(-np.pi, np.pi)
        z = rng.uniform(-H, H)
        got = incident_tractions_on_cylinder(field, a, theta, z)
        want = fd_cylindrical_traction_oracle(field, a, theta, z)
        for g, w in zip(got, want):
            assert abs(complex(g) - w) < 1e-7 * scale


def test_traction_free_plate_faces(field):
    a = 5 * H
    theta = np.linspace(-np.pi, np.pi, 9)
    sig_r, _, tau_rz = incident_tractions_on_cylinder(field, a, theta, np.full(9, H))
    assert np.abs(tau_rz).max() < 1e-8 * np.abs(sig_r).max()
    _, _, tau_rz = incident_tractions_on_cylinder(field, a, theta, np.full(9, -H))
    assert np.abs(tau_rz).max() < 1e-8 * np.abs(sig_r).max()


def test_tau_rtheta_angular_average_vanishes(field):
    # tau_rtheta has no m = 0 component, so its average over a period is 0.
    n = 256
    theta = (np.arange(n) + 0.5) * 2 * np.pi / n
    _, tau_rt, _ = incident_tractions_on_cylinder(field, 5 * H, theta, np.full(n, 0.3 * H))
    assert abs(tau_rt.mean()) < 1e-10 * np.abs(tau_rt).max()


def test_amplitude_scaling(field):
    doubled = IncidentField(mode0=field.mode0, amplitude=2.0)
    pts = np.array([[H, 0.5 * H, 0.2 * H]])
    assert np.allclose(
        incident_displacement(doubled, pts), 2 * incident_displacement(field, pts)
    )


def test_nodal_force_support_and_parity(mat, field):
    mesh = generate(5 * H, mat, CavitySpec("cylinder-through", radius=H), MeshResolution(5, 24, 4))
    U, F = incident_nodal_data(field, mesh)
    on_boundary = np.zeros(mesh.n_nodes, dtype=bool)
    on_boundary[mesh.boundary_node_ids] = True
    inner_dofs = np.repeat(~on_boundary, 3)
    assert np.abs(F[inner_dofs]).max() == 0.0

    # Mirror pairs in z: u_x even, u_z odd.
    nodes = mesh.nodes
    i = int(np.argmax(nodes[:, 2]))
    target = nodes[i] * [1, 1, -1]
    j = int(np.argmin(np.linalg.norm(nodes - target, axis=1)))
    assert U[3 * i] == pytest.approx(U[3 * j], rel=1e-12)
    assert U[3 * i + 2] == pytest.approx(-U[3 * j + 2], rel=1e-12)


def test_total_force_matches_refined_quadrature(mat, field):
    mesh = generate(5 * H, mat, None, MeshResolution(4, 24, 4))
    _, F = incident_nodal_data(field, mesh)
    total = F.reshape(-1, 3).sum(axis=0)
    fn = lambda x, y, z: incident_traction_at(field, x, y, z)
    refined = boundary_face_forces(mesh, fn, gauss_order=16).reshape(-1, 3).sum(axis=0)
    scale = np.abs(refined).max()
    assert np.abs(total - refined).max() < 1e-6 * scale


def test_discrete_superposition_consistency(mat, field):
    # On a solid mesh the incident field satisfies the discrete equations up
    # to FEM discretization error.
    mesh = generate(4 * H, mat, None, MeshResolution(16, 64, 10))
    sys = assemble(mesh, mat)
    U, F = incident_nodal_data(field, mesh)
    A = sys.K - mat.omega**2 * sys.M
    r = A @ U - F
    assert np.linalg.norm(r) / np.linalg.norm(F) < 2e-2

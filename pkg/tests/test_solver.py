"""Direct solve of the DtN-closed system: trivial cases and a null test."""

import warnings

import numpy as np
import pytest

from platescatter.dtn_boundary import Truncation, build_dtn_operator, recover_coefficients
from platescatter.fem_core import assemble
from platescatter.incident import IncidentField, incident_nodal_data, make_incident
from platescatter.mesh import MeshResolution, generate
from platescatter.solver import solve_scattering
from conftest import steel_plate

H = 1.0e-3


@pytest.fixture(scope="module")
def mat():
    return steel_plate(1.0, h=H)


@pytest.fixture(scope="module")
def setup(mat):
    # Solid plate (no cavity): the exact scattered field is zero, so the
    # discrete scattered field measures pure discretization error.
    mesh = generate(4 * H, mat, None, MeshResolution(8, 48, 6))
    system = assemble(mesh, mat)
    trunc = Truncation.default(mat, M=6, N=2)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        dtn = build_dtn_operator(mesh, trunc)
    return mesh, system, trunc, dtn


def test_zero_incident_gives_zero_solution(setup):
    _, system, _, dtn = setup
    n = 3 * setup[0].n_nodes
    sol = solve_scattering(system, dtn, (np.zeros(n, complex), np.zeros(n, complex)))
    assert np.all(sol.U_sca == 0)
    assert sol.residual == 0.0


def test_solution_linear_in_amplitude(setup, mat):
    mesh, system, _, dtn = setup
    field = make_incident(mat)
    sol1 = solve_scattering(system, dtn, incident_nodal_data(field, mesh))
    tripled = IncidentField(mode0=field.mode0, amplitude=3.0)
    sol3 = solve_scattering(system, dtn, incident_nodal_data(tripled, mesh))
    scale = np.abs(sol3.U_sca).max()
    assert np.abs(sol3.U_sca - 3.0 * sol1.U_sca).max() < 1e-10 * scale


def test_solid_plate_null_scattering(setup, mat):
    mesh, system, trunc, dtn = setup
    field = make_incident(mat)
    U_inc, F_inc = incident_nodal_data(field, mesh)
    sol = solve_scattering(system, dtn, (U_inc, F_inc))
    assert sol.residual < 1e-10
    assert np.linalg.norm(sol.U_sca) / np.linalg.norm(U_inc) < 2e-2

    # Recovered propagating coefficients stay at the discretization level.
    coeffs = recover_coefficients(dtn, sol.U_sca)
    n_lamb = len(trunc.lamb_modes)
    for c in coeffs.values():
        for i in range(n_lamb):
            assert abs(c[i]) < 2e-2
        for j, sh in enumerate(trunc.sh_modes):
            if sh.root.kind == "propagating":
                assert abs(c[n_lamb + j]) < 2e-2

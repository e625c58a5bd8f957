"""DtN boundary operator: projections, modal matrices, force map."""

import numpy as np
import pytest

from platescatter.dispersion import LambRoot
from platescatter.dtn_boundary import (
    DtnError,
    Truncation,
    build_AB,
    build_dtn_operator,
    build_G,
    build_projection_D,
    recover_coefficients,
    scattered_displacement,
)
from platescatter.mesh import (
    CavitySpec,
    MeshResolution,
    boundary_face_quadrature,
    generate,
)
from platescatter.modes import LambMode, lamb_profiles, make_lamb_mode
from platescatter.specfun import hankel1
from conftest import steel_plate

H = 1.0e-3


@pytest.fixture(scope="module")
def mat():
    return steel_plate(1.0, h=H)


@pytest.fixture(scope="module")
def trunc(mat):
    return Truncation.default(mat, M=2, N=2)


@pytest.fixture(scope="module")
def mesh(mat):
    return generate(4 * H, mat, None, MeshResolution(2, 48, 8))


def boundary_nodal_field(mesh, fn):
    """Full-length dof vector from fn(theta, z) -> (u_x, u_y, u_z) rows,
    nonzero on boundary nodes only."""
    u = np.zeros(3 * mesh.n_nodes, dtype=complex)
    ids = mesh.boundary_node_ids
    xyz = mesh.nodes[ids]
    theta = np.arctan2(xyz[:, 1], xyz[:, 0])
    vals = fn(theta, xyz[:, 2])
    for c in range(3):
        u[3 * ids + c] = vals[:, c]
    return u


def sample_scattered_field(mesh, trunc, coeffs):
    """Exact modal displacement at the boundary nodes, in Cartesian dofs."""

    def fn(theta, z):
        cyl = scattered_displacement(trunc, coeffs, mesh.a, theta, z)
        out = np.empty_like(cyl)
        out[:, 0] = cyl[:, 0] * np.cos(theta) - cyl[:, 1] * np.sin(theta)
        out[:, 1] = cyl[:, 0] * np.sin(theta) + cyl[:, 1] * np.cos(theta)
        out[:, 2] = cyl[:, 2]
        return out

    return boundary_nodal_field(mesh, fn)


def unit_coeffs(trunc, m_active, index):
    return {
        m: (np.eye(trunc.n_columns)[index] if m == m_active
            else np.zeros(trunc.n_columns))
        for m in range(-trunc.M, trunc.M + 1)
    }


def test_row_block_dof_support(mesh, trunc):
    D = build_projection_D(mesh, trunc, 1)
    Pc, Ps = len(trunc.cos_orders), len(trunc.sin_orders)
    z_cols = np.zeros(D.shape[1], dtype=bool)
    z_cols[2::3] = True
    assert np.abs(D[: 2 * Pc][:, z_cols]).max() == 0
    assert np.abs(D[2 * Pc :][:, ~z_cols]).max() == 0
    assert Ps > 0 and np.abs(D[2 * Pc :]).max() > 0


def test_sin_row_kills_constant_uz(mesh, trunc, mat):
    D = build_projection_D(mesh, trunc, 0)
    u = boundary_nodal_field(mesh, lambda t, z: np.stack(
        [np.zeros_like(t), np.zeros_like(t), np.ones_like(t)], axis=1))
    dofs = (3 * mesh.boundary_node_ids[:, None] + np.arange(3)).ravel()
    res = D @ u[dofs]
    Pc = len(trunc.cos_orders)
    scale = np.abs(D).sum(axis=1).max()
    assert np.abs(res[2 * Pc :]).max() < 1e-12 * scale


def test_cos_row_matches_thickness_integral_constant_profile(mesh, mat):
    # A synthetic mode with p = q = 0 has a z-constant radial profile, so the
    # piecewise-linear nodal interpolation is exact and the projection must
    # reproduce the closed-form thickness integral.
    root = LambRoot(k=1.0 / H, p=0.0, q=0.0, kind="synthetic")
    mode = LambMode(material=mat, root=root, s=(0.7, 0.3) + (0.0,) * 8)
    tr = Truncation(M=1, lamb_modes=(mode,), sh_modes=(),
                    cos_orders=(0, 2), sin_orders=(2,))
    D = build_projection_D(mesh, tr, 0)
    V_const = 0.7 + 0.3  # s1 + s2 at p = q = 0
    u = boundary_nodal_field(mesh, lambda t, z: np.stack(
        [V_const * np.cos(t), V_const * np.sin(t), np.zeros_like(t)], axis=1))
    dofs = (3 * mesh.boundary_node_ids[:, None] + np.arange(3)).ravel()
    res = D @ u[dofs]
    from platescatter.modes import cos_projection_integral

    want0 = (mesh.a / mat.mu) * cos_projection_integral(0, mode)
    want2 = (mesh.a / mat.mu) * cos_projection_integral(2, mode)
    assert abs(res[0] - want0) < 1e-8 * abs(want0)
    assert abs(res[1] - want2) < 1e-8 * abs(want0)


def test_cos_row_matches_interpolated_mode_integral(mesh, mat, trunc):
    # Genuine fundamental mode: the projection equals the thickness integral
    # of the piecewise-linear interpolant of V, computed here independently
    # with dense Gauss quadrature per z interval.
    mode = trunc.lamb_modes[0]
    zs = np.unique(mesh.boundary_z)
    V_nodes, _ = lamb_profiles(mode, zs)
    n_p = 2

    import numpy.polynomial.legendre as leg

    x64, w64 = leg.leggauss(64)
    total = 0.0j
    for i in range(len(zs) - 1):
        z0, z1 = zs[i], zs[i + 1]
        zg = 0.5 * (z0 + z1) + 0.5 * (z1 - z0) * x64
        lin = V_nodes[i] + (V_nodes[i + 1] - V_nodes[i]) * (zg - z0) / (z1 - z0)
        total += 0.5 * (z1 - z0) * np.sum(
            w64 * np.cos(n_p * np.pi * zg / (2 * H)) * lin)
    want = (mesh.a / mat.mu) * total

    D = build_projection_D(mesh, trunc, 0)
    u = boundary_nodal_field(mesh, lambda t, z: np.stack(
        [lamb_profiles(mode, z)[0] * np.cos(t),
         lamb_profiles(mode, z)[0] * np.sin(t),
         np.zeros_like(t)], axis=1))
    dofs = (3 * mesh.boundary_node_ids[:, None] + np.arange(3)).ravel()
    got = (D @ u[dofs])[list(trunc.cos_orders).index(n_p)]
    assert abs(got - want) < 1e-8 * abs(want)


def test_angular_orthogonality(mesh, trunc):
    # An e^{i2 theta} field must not leak into the m' = 3 projection.
    tr = Truncation(M=3, lamb_modes=trunc.lamb_modes, sh_modes=trunc.sh_modes,
                    cos_orders=trunc.cos_orders, sin_orders=trunc.sin_orders)
    u = boundary_nodal_field(mesh, lambda t, z: np.stack(
        [np.exp(2j * t) * np.cos(t), np.exp(2j * t) * np.sin(t),
         np.exp(2j * t)], axis=1))  # u_r = u_z = e^{i2 theta}, u_theta = 0
    dofs = (3 * mesh.boundary_node_ids[:, None] + np.arange(3)).ravel()
    r3 = build_projection_D(mesh, tr, 3) @ u[dofs]
    r2 = build_projection_D(mesh, tr, 2) @ u[dofs]
    assert np.abs(r3).max() < 1e-10 * np.abs(r2).max()


def test_AB_sin_rows_zero_for_sh_columns(mat, trunc):
    AB = build_AB(trunc, 4 * H, m=1)
    Pc = len(trunc.cos_orders)
    NL = len(trunc.lamb_modes)
    assert np.abs(AB[2 * Pc :, NL:]).max() == 0


def test_AB_lamb_entry_direct_formula(mat, trunc):
    a = 4 * H
    m = 1
    mode = trunc.lamb_modes[0]
    AB = build_AB(trunc, a, m)
    Hk = hankel1(m, mode.k * a)

    import numpy.polynomial.legendre as leg

    x64, w64 = leg.leggauss(64)
    zg = H * x64
    V, _ = lamb_profiles(mode, zg)
    integral = H * np.sum(w64 * V)
    want = (a / mat.mu) * Hk.derivative * integral
    assert AB[0, 0] == pytest.approx(want, rel=1e-12)


def test_conjugate_harmonic_symmetry(mesh, trunc):
    for m in (1, 2):
        Dp = build_projection_D(mesh, trunc, m)
        Dm = build_projection_D(mesh, trunc, -m)
        assert np.abs(Dm - np.conj(Dp)).max() < 1e-12 * np.abs(Dp).max()

        ABp = build_AB(trunc, mesh.a, m)
        ABm = build_AB(trunc, mesh.a, -m)
        Pc, Ps = len(trunc.cos_orders), len(trunc.sin_orders)
        s_row = np.concatenate([np.ones(Pc), -np.ones(Pc), np.ones(Ps)])
        s_col = np.concatenate(
            [np.ones(len(trunc.lamb_modes)), -np.ones(len(trunc.sh_modes))])
        # Radial factors carry |m|, so only the explicit m factors flip:
        # the u_theta rows of Lamb columns and the u_r rows of SH columns.
        expect = s_row[:, None] * ABp * s_col[None, :]
        assert np.abs(ABm - expect).max() < 1e-12 * np.abs(ABp).max()


def test_G_zero_coefficients_and_sh0_zforce(mesh, trunc):
    G = build_G(mesh, trunc, mesh.a, m=1)
    assert np.abs(G @ np.zeros(trunc.n_columns)).max() == 0
    # SH mode n = 0 exerts no z force anywhere.
    sh0_col = len(trunc.lamb_modes) + [
        s.root.n for s in trunc.sh_modes].index(0)
    assert np.abs(G[2::3, sh0_col]).max() == 0


def test_G_net_force_refined_quadrature(mesh, trunc):
    from platescatter.dtn_boundary import _lamb_E

    m = 1
    G = build_G(mesh, trunc, mesh.a, m)
    total_fx = G[0::3, 0].sum()
    theta_g, z_g, w_g, _ = boundary_face_quadrature(mesh, 16)
    e_rr, e_rt, _ = _lamb_E(trunc.lamb_modes[0], m, mesh.a, theta_g, z_g)
    want = np.sum((e_rr * np.cos(theta_g) - e_rt * np.sin(theta_g)) * w_g)
    assert abs(total_fx - want) < 1e-6 * abs(want)


@pytest.fixture(scope="module")
def trunc_prop(trunc):
    # Propagating modes only. The evanescent SH column of the default
    # truncation is exponentially small at r = a, so any sampling error is
    # hugely amplified into that one coefficient; the round-trip accuracy
    # statement concerns a well-conditioned basis.
    sh = tuple(s for s in trunc.sh_modes if s.root.kind == "propagating")
    return Truncation(M=trunc.M, lamb_modes=trunc.lamb_modes, sh_modes=sh,
                      cos_orders=trunc.cos_orders, sin_orders=trunc.sin_orders)


@pytest.fixture(scope="module")
def fine_mesh(mat):
    # Fine boundary sampling for the manufactured round trip; the force map
    # is not assembled on this mesh (its dense block would be huge). The
    # annulus template keeps the interior node count small.
    return generate(4 * H, mat, CavitySpec("cylinder-through", radius=H),
                    MeshResolution(2, 512, 64))


@pytest.fixture(scope="module")
def dtn_fine(fine_mesh, trunc_prop):
    return build_dtn_operator(fine_mesh, trunc_prop, assemble=False)


def test_recover_zero_and_linearity(mesh, trunc):
    dtn = build_dtn_operator(mesh, trunc, assemble=False)
    zero = recover_coefficients(dtn, np.zeros(dtn.n_dofs, dtype=complex))
    assert all(np.abs(v).max() == 0 for v in zero.values())

    rng = np.random.default_rng(2)
    u1 = rng.normal(size=dtn.n_dofs) + 1j * rng.normal(size=dtn.n_dofs)
    u2 = rng.normal(size=dtn.n_dofs) + 1j * rng.normal(size=dtn.n_dofs)
    ca = recover_coefficients(dtn, 0.7 * u1 + 2.0j * u2)
    c1 = recover_coefficients(dtn, u1)
    c2 = recover_coefficients(dtn, u2)
    for m in ca:
        lhs = ca[m]
        rhs = 0.7 * c1[m] + 2.0j * c2[m]
        assert np.abs(lhs - rhs).max() < 1e-12 * max(np.abs(rhs).max(), 1e-300)


def test_manufactured_single_mode_round_trip(fine_mesh, trunc_prop, dtn_fine):
    coeffs = unit_coeffs(trunc_prop, m_active=2, index=0)  # A_{2, mode 0} = 1
    u = sample_scattered_field(fine_mesh, trunc_prop, coeffs)
    rec = recover_coefficients(dtn_fine, u)
    err = 0.0
    for m in rec:
        want = coeffs[m]
        err = max(err, np.abs(rec[m] - want).max())
    assert err < 1e-4


def test_round_trip_convergence_order(mat, trunc_prop):
    errs = []
    for (nc, nt) in [(96, 16), (192, 32)]:
        msh = generate(4 * H, mat, CavitySpec("cylinder-through", radius=H),
                       MeshResolution(2, nc, nt))
        dtn = build_dtn_operator(msh, trunc_prop, assemble=False)
        coeffs = unit_coeffs(trunc_prop, m_active=2, index=0)
        u = sample_scattered_field(msh, trunc_prop, coeffs)
        rec = recover_coefficients(dtn, u)
        errs.append(max(np.abs(rec[m] - coeffs[m]).max() for m in rec))
    assert errs[0] / errs[1] > 3.5  # observed order about 2


def test_fbar_interior_support_and_manufactured_force(mat, trunc):
    # The SH mode of order 0 has a z-constant boundary pattern, so the nodal
    # sample of its field is exact in z and a moderate mesh reaches 1e-4.
    msh = generate(4 * H, mat, None, MeshResolution(2, 192, 4))
    dtn = build_dtn_operator(msh, trunc)

    # Interior dofs never receive force.
    rng = np.random.default_rng(7)
    u = rng.normal(size=dtn.n_dofs) + 1j * rng.normal(size=dtn.n_dofs)
    f = dtn.apply(u)
    mask = np.ones(dtn.n_dofs, dtype=bool)
    mask[dtn.boundary_dofs] = False
    assert np.abs(f[mask]).max() == 0

    # For an exact single-mode displacement the force map returns that
    # mode's analytic nodal forces.
    sh0_col = len(trunc.lamb_modes) + [
        s.root.n for s in trunc.sh_modes].index(0)
    coeffs = unit_coeffs(trunc, m_active=1, index=sh0_col)
    u = sample_scattered_field(msh, trunc, coeffs)
    f = dtn.apply(u)[dtn.boundary_dofs]
    want = dtn.G[1][:, sh0_col]
    assert np.abs(f - want).max() < 1e-4 * np.abs(want).max()


def test_fbar_truncation_convergence(mat, trunc):
    msh = generate(4 * H, mat, None, MeshResolution(2, 64, 8))
    coeffs = unit_coeffs(trunc, m_active=1, index=0)
    u = sample_scattered_field(msh, trunc, coeffs)
    results = []
    for M in (2, 4):
        tr = Truncation(M=M, lamb_modes=trunc.lamb_modes,
                        sh_modes=trunc.sh_modes,
                        cos_orders=trunc.cos_orders,
                        sin_orders=trunc.sin_orders)
        dtn = build_dtn_operator(msh, tr)
        results.append(dtn.apply(u))
    diff = np.abs(results[1] - results[0]).max()
    assert diff < 1e-8 * np.abs(results[0]).max()


def test_truncation_validation(mat, trunc):
    with pytest.raises(DtnError):
        Truncation(M=1, lamb_modes=trunc.lamb_modes, sh_modes=trunc.sh_modes,
                   cos_orders=(1,), sin_orders=(2,))
    with pytest.raises(DtnError):
        Truncation(M=1, lamb_modes=trunc.lamb_modes, sh_modes=trunc.sh_modes,
                   cos_orders=(0,), sin_orders=(0,))
    with pytest.raises(DtnError):
        # One projection row cannot determine three unknowns.
        Truncation(M=1, lamb_modes=trunc.lamb_modes, sh_modes=trunc.sh_modes,
                   cos_orders=(0,), sin_orders=())


def test_aliasing_guard(mat, trunc):
    msh = generate(4 * H, mat, None, MeshResolution(2, 16, 2))
    tr = Truncation(M=4, lamb_modes=trunc.lamb_modes, sh_modes=trunc.sh_modes,
                    cos_orders=trunc.cos_orders, sin_orders=trunc.sin_orders)
    with pytest.raises(DtnError, match="angular divisions"):
        build_projection_D(msh, tr, 0)

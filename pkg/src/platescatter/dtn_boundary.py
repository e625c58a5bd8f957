"""Modal Dirichlet-to-Neumann operator on the virtual cylinder r = a.

For each circumferential harmonic m' the scattered boundary displacement is
projected onto thickness cosines/sines (matrix D), related to the modal
coefficients through the modal boundary values (matrix AB), and mapped back
to equivalent nodal tractions (matrix G). The assembled operator

    Fbar = sum over m' of G_m' . pinv(AB_m') . D_m'

converts scattered boundary displacements directly into scattered nodal
forces. The AB solve uses least squares (QR with column pivoting), which
coincides with the inverse in the square well-conditioned configuration and
degrades gracefully otherwise.

The outgoing basis functions carry the radial factor H^(1) of order |m'|
together with the angular factor e^{i m' theta}. With the unsigned radial
order, mirror symmetry of the scatterer makes the Lamb coefficients even
and the SH coefficients odd in m'.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sparse

from .dispersion import find_lamb_roots, sh_wavenumbers
from .material import PlateMaterial
from .mesh import Mesh, boundary_face_quadrature
from .modes import (
    LambMode,
    ShMode,
    cos_projection_integral,
    lamb_profiles,
    lamb_stress_profiles,
    make_lamb_mode,
    make_sh_mode,
    sh_norm_integral,
    sin_projection_integral,
)
from .specfun import hankel1

log = logging.getLogger(__name__)

CONDITION_WARN = 1e8


class DtnError(ValueError):
    pass


class DtnDegenerateError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class Truncation:
    """Retained harmonics, modes and projection orders."""

    M: int
    lamb_modes: tuple[LambMode, ...]
    sh_modes: tuple[ShMode, ...]
    cos_orders: tuple[int, ...]
    sin_orders: tuple[int, ...]

    def __post_init__(self):
        if self.M < 0:
            raise DtnError("harmonic order M must be nonnegative")
        if any(n % 2 != 0 or n < 0 for n in self.cos_orders):
            raise DtnError("cos projection orders must be even and nonnegative")
        if any(n % 2 != 0 or n < 2 for n in self.sin_orders):
            raise DtnError("sin projection orders must be even and at least 2")
        for sh in self.sh_modes:
            if sh.root.kind == "cutoff":
                raise DtnError("cutoff SH mode (zero wavenumber) cannot be retained")
        if 2 * len(self.cos_orders) + len(self.sin_orders) < self.n_columns:
            raise DtnError("fewer projection rows than modal unknowns")

    @property
    def n_rows(self) -> int:
        return 2 * len(self.cos_orders) + len(self.sin_orders)

    @property
    def n_columns(self) -> int:
        return len(self.lamb_modes) + len(self.sh_modes)

    @classmethod
    def default(cls, material: PlateMaterial, M: int, N: int) -> "Truncation":
        """Square configuration: cos orders {0,2,..,N}, sin orders {2,..,N},
        up to N+1 Lamb roots and the non-cutoff SH modes of order <= N."""
        if N < 0 or N % 2 != 0:
            raise DtnError("thickness order N must be even and nonnegative")
        roots = find_lamb_roots(material)[: N + 1]
        lamb = tuple(make_lamb_mode(material, r) for r in roots)
        sh = tuple(
            make_sh_mode(material, r)
            for r in sh_wavenumbers(material, N)
            if r.kind != "cutoff"
        )
        cos_orders = tuple(range(0, N + 1, 2))
        sin_orders = tuple(range(2, N + 1, 2))
        return cls(M=M, lamb_modes=lamb, sh_modes=sh,
                   cos_orders=cos_orders, sin_orders=sin_orders)


@dataclass
class DtnOperator:
    """Immutable per-harmonic matrices plus the assembled boundary block.

    All boundary-supported matrices are stored restricted to the boundary
    dofs; boundary_dofs maps block indices to global dof numbers.
    """

    trunc: Truncation
    a: float
    boundary_dofs: np.ndarray            # (3 nb,) global dof indices
    D: dict                              # m' -> (rows, 3 nb)
    AB: dict                             # m' -> (rows, cols)
    G: dict                              # m' -> (3 nb, cols)
    fbar_block: np.ndarray | None        # (3 nb, 3 nb); None if not assembled
    conditions: dict                     # m' -> condition estimate
    n_dofs: int

    def apply(self, u: np.ndarray) -> np.ndarray:
        """Fbar . u for a full-length displacement vector."""
        if self.fbar_block is None:
            raise DtnError("force map was not assembled for this operator")
        out = np.zeros(self.n_dofs, dtype=complex)
        out[self.boundary_dofs] = self.fbar_block @ u[self.boundary_dofs]
        return out

    def to_sparse(self) -> sparse.csr_matrix:
        nb = len(self.boundary_dofs)
        rows = np.repeat(self.boundary_dofs, nb)
        cols = np.tile(self.boundary_dofs, nb)
        return sparse.coo_matrix(
            (self.fbar_block.ravel(), (rows, cols)),
            shape=(self.n_dofs, self.n_dofs),
        ).tocsr()


def _boundary_dof_map(mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
    """(boundary_dofs, node index map). node_map[global node] = block node."""
    bnodes = mesh.boundary_node_ids
    node_map = -np.ones(mesh.n_nodes, dtype=np.int64)
    node_map[bnodes] = np.arange(len(bnodes))
    dofs = (3 * bnodes[:, None] + np.arange(3)).ravel()
    return dofs, node_map


def _check_aliasing(mesh: Mesh, trunc: Truncation) -> None:
    t0 = np.unique(np.round(np.mod(mesh.boundary_theta[:, 0], 2 * np.pi), 10))
    n_circ = len(t0)
    if n_circ < 4 * trunc.M + 8:
        raise DtnError(
            f"boundary has {n_circ} angular divisions; "
            f"at least {4 * trunc.M + 8} needed to resolve harmonic M={trunc.M}"
        )


def build_projection_D(mesh: Mesh, trunc: Truncation, m: int) -> np.ndarray:
    """Projection matrix D for harmonic m, shape (rows, 3 nb).

    Row blocks: cos orders against u_r, cos orders against u_theta, sin
    orders against u_z. The radial and tangential rows decompose onto the
    node's Cartesian dofs with (cos, sin) factors at the node's own angular
    coordinate.
    """
    _check_aliasing(mesh, trunc)
    mat = trunc.lamb_modes[0].material if trunc.lamb_modes else trunc.sh_modes[0].material
    mu, h = mat.mu, mat.h
    _, node_map = _boundary_dof_map(mesh)
    nb = int(node_map.max()) + 1
    theta_g, z_g, w_g, N = boundary_face_quadrature(mesh, 4)
    phase = np.exp(-1j * m * theta_g) * w_g / (2.0 * np.pi * mu)  # (F, g)

    bnode = node_map[mesh.boundary_faces]       # (F, 4) block node index
    th_node = mesh.boundary_theta               # (F, 4)
    ct, st = np.cos(th_node), np.sin(th_node)

    Pc, Ps = len(trunc.cos_orders), len(trunc.sin_orders)
    D = np.zeros((2 * Pc + Ps, 3 * nb), dtype=complex)
    for i, n in enumerate(trunc.cos_orders):
        I = np.einsum("fg,gj->fj", phase * np.cos(n * np.pi * z_g / (2 * h)), N)
        # u_r row: u_r at node = u_x cos + u_y sin
        np.add.at(D[i], (3 * bnode).ravel(), (I * ct).ravel())
        np.add.at(D[i], (3 * bnode + 1).ravel(), (I * st).ravel())
        # u_theta row: u_theta at node = -u_x sin + u_y cos
        np.add.at(D[Pc + i], (3 * bnode).ravel(), (-I * st).ravel())
        np.add.at(D[Pc + i], (3 * bnode + 1).ravel(), (I * ct).ravel())
    for i, n in enumerate(trunc.sin_orders):
        I = np.einsum("fg,gj->fj", phase * np.sin(n * np.pi * z_g / (2 * h)), N)
        np.add.at(D[2 * Pc + i], (3 * bnode + 2).ravel(), I.ravel())
    return D


def build_AB(trunc: Truncation, a: float, m: int) -> np.ndarray:
    """Modal boundary-value matrix for harmonic m, shape (rows, cols)."""
    mat = trunc.lamb_modes[0].material if trunc.lamb_modes else trunc.sh_modes[0].material
    mu, h = mat.mu, mat.h
    Pc, Ps = len(trunc.cos_orders), len(trunc.sin_orders)
    NL = len(trunc.lamb_modes)
    AB = np.zeros((2 * Pc + Ps, trunc.n_columns), dtype=complex)
    for j, mode in enumerate(trunc.lamb_modes):
        k = mode.k
        H = hankel1(abs(m), k * a)
        for i, n in enumerate(trunc.cos_orders):
            icos = cos_projection_integral(n, mode)
            AB[i, j] = (a / mu) * H.derivative * icos
            AB[Pc + i, j] = (1j * m * H.value / (mu * k)) * icos
        for i, n in enumerate(trunc.sin_orders):
            AB[2 * Pc + i, j] = (a / mu) * H.value * sin_projection_integral(n, mode)
    for j, sh in enumerate(trunc.sh_modes):
        n = sh.root.n
        l = sh.root.l
        H = hankel1(abs(m), l * a)
        norm = sh_norm_integral(n, n, h)
        for i, n_prime in enumerate(trunc.cos_orders):
            if n_prime != n:
                continue
            AB[i, NL + j] = 1j * m * H.value * norm / (mu * l)
            AB[Pc + i, NL + j] = -(a / mu) * H.derivative * norm
        # sin rows stay zero: the SH family has no z displacement
    return AB


def _lamb_E(mode: LambMode, m: int, a: float, theta: np.ndarray, z: np.ndarray):
    """Stress-pattern functions (E_rr, E_rtheta, E_rz) of one Lamb mode."""
    k = mode.k
    H = hankel1(abs(m), k * a)
    sig_rr, sig_rt, sig_rz = lamb_stress_profiles(mode, z.ravel())
    sig_rr = sig_rr.reshape(z.shape)
    sig_rt = sig_rt.reshape(z.shape)
    sig_rz = sig_rz.reshape(z.shape)
    ph = np.exp(1j * m * theta)
    e_rr = (sig_rr * H.value
            - sig_rt * (H.derivative / a - m * m * H.value / (k * a * a))) * ph
    e_rt = 1j * m * sig_rt * (H.derivative / a - H.value / (k * a * a)) * ph
    e_rz = -sig_rz * H.derivative * ph
    return e_rr, e_rt, e_rz


def _sh_E(sh: ShMode, m: int, a: float, theta: np.ndarray, z: np.ndarray):
    """Stress-pattern functions of one SH mode."""
    mat = sh.material
    mu, h = mat.mu, mat.h
    n = sh.root.n
    l = sh.root.l
    H = hankel1(abs(m), l * a)
    cz = np.cos(n * np.pi * z / (2 * h))
    ph = np.exp(1j * m * theta)
    e_rr = 1j * m * mu * cz * (2 * H.derivative / a - 2 * H.value / (l * a * a)) * ph
    e_rt = mu * cz * (
        2 * H.derivative / a + (l - 2 * m * m / (l * a * a)) * H.value
    ) * ph
    e_rz = (
        -1j * m * mu * (n * np.pi / (2 * h))
        * np.sin(n * np.pi * z / (2 * h)) * H.value / (l * a) * ph
    )
    return e_rr, e_rt, e_rz


def build_G(mesh: Mesh, trunc: Truncation, a: float, m: int) -> np.ndarray:
    """Traction-to-force matrix for harmonic m, shape (3 nb, cols).

    Column j holds the equivalent nodal forces of mode j's unit-coefficient
    traction pattern on the virtual boundary.
    """
    _, node_map = _boundary_dof_map(mesh)
    nb = int(node_map.max()) + 1
    theta_g, z_g, w_g, N = boundary_face_quadrature(mesh, 4)
    ct, st = np.cos(theta_g), np.sin(theta_g)
    bnode = node_map[mesh.boundary_faces]  # (F, 4)

    G = np.zeros((3 * nb, trunc.n_columns), dtype=complex)
    columns = [(_lamb_E, mode) for mode in trunc.lamb_modes]
    columns += [(_sh_E, sh) for sh in trunc.sh_modes]
    for j, (efun, mode) in enumerate(columns):
        e_rr, e_rt, e_rz = efun(mode, m, a, theta_g, z_g)
        tx = (e_rr * ct - e_rt * st) * w_g
        ty = (e_rr * st + e_rt * ct) * w_g
        tz = e_rz * w_g
        fx = np.einsum("fg,gj->fj", tx, N)
        fy = np.einsum("fg,gj->fj", ty, N)
        fz = np.einsum("fg,gj->fj", tz, N)
        np.add.at(G[:, j], (3 * bnode).ravel(), fx.ravel())
        np.add.at(G[:, j], (3 * bnode + 1).ravel(), fy.ravel())
        np.add.at(G[:, j], (3 * bnode + 2).ravel(), fz.ravel())
    return G


def _solve_AB(AB: np.ndarray, rhs: np.ndarray, m: int) -> np.ndarray:
    sol, _, rank, _ = sla.lstsq(AB, rhs, lapack_driver="gelsy")
    if rank < AB.shape[1]:
        # Deeply evanescent modes can underflow to a numerically null
        # column at large radius or high harmonic order; the minimum-norm
        # solution correctly zeroes their coefficients. Rank loss is only
        # an error when columns of ordinary size are involved.
        col_norms = np.linalg.norm(AB, axis=0)
        strong = int(np.sum(col_norms > 1e-12 * col_norms.max()))
        if rank < strong:
            raise DtnDegenerateError(
                f"DtN basis degenerate at this frequency (harmonic m'={m}, "
                f"rank {rank} < {strong} significant columns)"
            )
    return sol


def build_dtn_operator(
    mesh: Mesh, trunc: Truncation, assemble: bool = True
) -> DtnOperator:
    """Build all per-harmonic matrices and assemble the boundary force map.

    With assemble=False only the projection and modal matrices are built,
    which is enough for coefficient recovery and avoids the dense boundary
    block (whose memory grows quadratically in the boundary node count).
    """
    a = mesh.a
    boundary_dofs, _ = _boundary_dof_map(mesh)
    nb3 = len(boundary_dofs)
    D, AB, G, conds = {}, {}, {}, {}
    fbar = np.zeros((nb3, nb3), dtype=complex) if assemble else None
    for m in range(-trunc.M, trunc.M + 1):
        D[m] = build_projection_D(mesh, trunc, m)
        AB[m] = build_AB(trunc, a, m)
        conds[m] = float(np.linalg.cond(AB[m]))
        if conds[m] > CONDITION_WARN:
            warnings.warn(
                f"DtN modal matrix ill-conditioned at m'={m}: "
                f"cond = {conds[m]:.3e}",
                RuntimeWarning,
            )
        log.debug("dtn harmonic m'=%d condition %.3e", m, conds[m])
        if assemble:
            G[m] = build_G(mesh, trunc, a, m)
            fbar += G[m] @ _solve_AB(AB[m], D[m], m)
    return DtnOperator(
        trunc=trunc, a=a, boundary_dofs=boundary_dofs,
        D=D, AB=AB, G=G, fbar_block=fbar, conditions=conds,
        n_dofs=3 * mesh.n_nodes,
    )


def recover_coefficients(dtn: DtnOperator, u: np.ndarray) -> dict:
    """Modal coefficients {m' -> vector of length NL+NS} from a full-length
    scattered displacement vector (interior entries are ignored)."""
    ub = np.asarray(u, dtype=complex)[dtn.boundary_dofs]
    return {m: _solve_AB(dtn.AB[m], dtn.D[m] @ ub, m) for m in dtn.D}


def scattered_displacement(
    trunc: Truncation, coeffs: dict, r, theta, z
) -> np.ndarray:
    """Cylindrical scattered displacement (u_r, u_theta, u_z) at points.

    coeffs maps each harmonic m' to the modal coefficient vector ordered as
    [Lamb modes..., SH modes...]. Shapes of r, theta, z broadcast; the result
    has shape broadcast + (3,).
    """
    r, theta, z = np.broadcast_arrays(
        np.asarray(r, float), np.asarray(theta, float), np.asarray(z, float)
    )
    NL = len(trunc.lamb_modes)
    h = (trunc.lamb_modes[0].material if trunc.lamb_modes
         else trunc.sh_modes[0].material).h
    out = np.zeros(r.shape + (3,), dtype=complex)
    r_vals = np.unique(r)
    for m, c in coeffs.items():
        ph = np.exp(1j * m * theta)
        for j, mode in enumerate(trunc.lamb_modes):
            if not c[j]:
                continue
            k = mode.k
            V, W = lamb_profiles(mode, z.ravel())
            V, W = V.reshape(z.shape), W.reshape(z.shape)
            Hv = np.empty(r.shape, complex)
            Hd = np.empty(r.shape, complex)
            for rv in r_vals:
                Hrv = hankel1(abs(m), k * rv)
                sel = r == rv
                Hv[sel], Hd[sel] = Hrv.value, Hrv.derivative
            out[..., 0] += c[j] * V * Hd * ph
            out[..., 1] += c[j] * 1j * m * V * Hv / (k * r) * ph
            out[..., 2] += c[j] * W * Hv * ph
        for j, sh in enumerate(trunc.sh_modes):
            if not c[NL + j]:
                continue
            n, l = sh.root.n, sh.root.l
            cz = np.cos(n * np.pi * z / (2 * h))
            Hv = np.empty(r.shape, complex)
            Hd = np.empty(r.shape, complex)
            for rv in r_vals:
                Hrv = hankel1(abs(m), l * rv)
                sel = r == rv
                Hv[sel], Hd[sel] = Hrv.value, Hrv.derivative
            out[..., 0] += c[NL + j] * 1j * m * cz * Hv / (l * r) * ph
            out[..., 1] += -c[NL + j] * cz * Hd * ph
    return out


def scattered_traction(
    trunc: Truncation, coeffs: dict, a: float, theta, z
) -> np.ndarray:
    """Cylindrical scattered traction (sigma_r, tau_rtheta, tau_rz) on r = a."""
    theta, z = np.broadcast_arrays(np.asarray(theta, float), np.asarray(z, float))
    NL = len(trunc.lamb_modes)
    out = np.zeros(theta.shape + (3,), dtype=complex)
    for m, c in coeffs.items():
        for j, mode in enumerate(trunc.lamb_modes):
            if not c[j]:
                continue
            e = _lamb_E(mode, m, a, theta, z)
            for comp in range(3):
                out[..., comp] += c[j] * e[comp]
        for j, sh in enumerate(trunc.sh_modes):
            if not c[NL + j]:
                continue
            e = _sh_E(sh, m, a, theta, z)
            for comp in range(3):
                out[..., comp] += c[NL + j] * e[comp]
    return out

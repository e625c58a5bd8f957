"""Element and global stiffness/mass assembly for 3D isotropic elastodynamics.

Trilinear hex8 elements, full 2x2x2 Gauss quadrature for both matrices
(consistent mass). Voigt strain ordering (xx, yy, zz, yz, xz, xy) with
engineering shear strains. Degrees of freedom are node-major: the
displacement vector is (u_x1, u_y1, u_z1, u_x2, ...), matching the
boundary-operator layout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse

from .hexshape import gauss_points_3d, shape_functions, shape_gradients
from .material import PlateMaterial
from .mesh import Mesh


class ElementError(ValueError):
    pass


@dataclass
class GlobalSystem:
    K: sparse.csr_matrix  # (3p, 3p)
    M: sparse.csr_matrix  # (3p, 3p)
    n_nodes: int

    def dof(self, node: int, component: int) -> int:
        return 3 * node + component


def elastic_matrix(material: PlateMaterial) -> np.ndarray:
    """Isotropic 6x6 elasticity matrix in Voigt form."""
    lam, mu = material.lam, material.mu
    D = np.zeros((6, 6))
    D[:3, :3] = lam
    D[np.arange(3), np.arange(3)] += 2.0 * mu
    D[np.arange(3, 6), np.arange(3, 6)] = mu
    return D


def element_matrices_batch(
    coords: np.ndarray, material: PlateMaterial, first_id: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """(k_e, m_e) with shape (E, 24, 24) for a batch of elements (E, 8, 3)."""
    E = coords.shape[0]
    pts, wts = gauss_points_3d(2)
    Nall = shape_functions(pts)
    dNall = shape_gradients(pts)
    D = elastic_matrix(material)
    k_e = np.zeros((E, 24, 24))
    m_e = np.zeros((E, 24, 24))
    for g in range(len(wts)):
        dN = dNall[g]  # (8, 3)
        J = np.einsum("nj,eni->eij", dN, coords)  # J[e, i, j] = dx_i/dxi_j
        detJ = np.linalg.det(J)
        if np.any(detJ <= 0):
            bad = int(np.nonzero(detJ <= 0)[0][0])
            raise ElementError(f"non-positive Jacobian in element {first_id + bad}")
        invJ = np.linalg.inv(J)
        dNdx = np.einsum("nj,eji->eni", dN, invJ)  # dN_n/dx_i
        B = np.zeros((E, 6, 24))
        for n in range(8):
            dx, dy, dz = dNdx[:, n, 0], dNdx[:, n, 1], dNdx[:, n, 2]
            c = 3 * n
            B[:, 0, c] = dx
            B[:, 1, c + 1] = dy
            B[:, 2, c + 2] = dz
            B[:, 3, c + 1] = dz
            B[:, 3, c + 2] = dy
            B[:, 4, c] = dz
            B[:, 4, c + 2] = dx
            B[:, 5, c] = dy
            B[:, 5, c + 1] = dx
        w = wts[g] * detJ
        k_e += np.einsum("eip,ij,ejq,e->epq", B, D, B, w, optimize=True)
        N = Nall[g]
        nn = np.outer(N, N)  # (8, 8)
        for c in range(3):
            m_e[:, c::3, c::3] += material.rho * nn[None, :, :] * w[:, None, None]
    return k_e, m_e


def element_matrices(coords: np.ndarray, material: PlateMaterial):
    """Single-element convenience wrapper: (24, 24) stiffness and mass."""
    k, m = element_matrices_batch(coords[None], material)
    return k[0], m[0]


def assemble(mesh: Mesh, material: PlateMaterial, chunk: int = 10000) -> GlobalSystem:
    """Scatter-add element matrices into global sparse CSR storage.

    Accumulation order is fixed by the element ordering, so repeated
    assembly of the same mesh is bit-identical.
    """
    p = mesh.n_nodes
    ndof = 3 * p
    rows_all, cols_all, kv_all, mv_all = [], [], [], []
    for start in range(0, mesh.elements.shape[0], chunk):
        elems = mesh.elements[start : start + chunk]
        k_e, m_e = element_matrices_batch(mesh.nodes[elems], material, first_id=start)
        edofs = (3 * elems[:, :, None] + np.arange(3)[None, None, :]).reshape(-1, 24)
        rows = np.repeat(edofs, 24, axis=1).ravel()
        cols = np.tile(edofs, (1, 24)).ravel()
        rows_all.append(rows)
        cols_all.append(cols)
        kv_all.append(k_e.ravel())
        mv_all.append(m_e.ravel())
    rows = np.concatenate(rows_all)
    cols = np.concatenate(cols_all)
    K = sparse.coo_matrix((np.concatenate(kv_all), (rows, cols)), shape=(ndof, ndof)).tocsr()
    M = sparse.coo_matrix((np.concatenate(mv_all), (rows, cols)), shape=(ndof, ndof)).tocsr()
    K.sum_duplicates()
    M.sum_duplicates()
    return GlobalSystem(K=K, M=M, n_nodes=p)


def rigid_body_vectors(nodes: np.ndarray) -> np.ndarray:
    """The 6 rigid-body displacement vectors (6, 3p): translations, rotations."""
    p = nodes.shape[0]
    vecs = np.zeros((6, 3 * p))
    for c in range(3):
        vecs[c, c::3] = 1.0
    x, y, z = nodes[:, 0], nodes[:, 1], nodes[:, 2]
    vecs[3, 1::3], vecs[3, 2::3] = -z, y      # rotation about x
    vecs[4, 0::3], vecs[4, 2::3] = z, -x      # rotation about y
    vecs[5, 0::3], vecs[5, 1::3] = -y, x      # rotation about z
    return vecs


def dump_matrix_market(system: GlobalSystem, k_path, m_path) -> None:
    """Debug dump of K and M in Matrix Market coordinate format."""
    from scipy.io import mmwrite

    mmwrite(k_path, system.K.tocoo())
    mmwrite(m_path, system.M.tocoo())

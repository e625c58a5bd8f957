"""Trilinear hex8 shape functions and Gauss quadrature helpers."""

from __future__ import annotations

import numpy as np

# Reference corner signs, matching VTK hexahedron ordering: bottom face
# counterclockwise viewed from +z, then the top face in the same order.
CORNERS = np.array(
    [
        [-1, -1, -1],
        [1, -1, -1],
        [1, 1, -1],
        [-1, 1, -1],
        [-1, -1, 1],
        [1, -1, 1],
        [1, 1, 1],
        [-1, 1, 1],
    ],
    dtype=float,
)


def gauss_1d(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def gauss_points_3d(n: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """Tensor-product Gauss points (g, 3) and weights (g,) on [-1, 1]^3."""
    x, w = gauss_1d(n)
    pts = np.array([(a, b, c) for a in x for b in x for c in x])
    wts = np.array([wa * wb * wc for wa in w for wb in w for wc in w])
    return pts, wts


def shape_functions(xi: np.ndarray) -> np.ndarray:
    """N (g, 8) at reference points xi (g, 3)."""
    xi = np.atleast_2d(xi)
    g = xi.shape[0]
    N = np.empty((g, 8))
    for j in range(8):
        s = CORNERS[j]
        N[:, j] = 0.125 * (1 + s[0] * xi[:, 0]) * (1 + s[1] * xi[:, 1]) * (1 + s[2] * xi[:, 2])
    return N


def shape_gradients(xi: np.ndarray) -> np.ndarray:
    """dN/dxi (g, 8, 3) at reference points xi (g, 3)."""
    xi = np.atleast_2d(xi)
    g = xi.shape[0]
    dN = np.empty((g, 8, 3))
    for j in range(8):
        s = CORNERS[j]
        f0 = 1 + s[0] * xi[:, 0]
        f1 = 1 + s[1] * xi[:, 1]
        f2 = 1 + s[2] * xi[:, 2]
        dN[:, j, 0] = 0.125 * s[0] * f1 * f2
        dN[:, j, 1] = 0.125 * s[1] * f0 * f2
        dN[:, j, 2] = 0.125 * s[2] * f0 * f1
    return dN


def jacobians(coords: np.ndarray, dN: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-element Jacobians and determinants.

    coords: (E, 8, 3) element node coordinates
    dN: (g, 8, 3) reference gradients
    returns J (E, g, 3, 3) with J[e, g, i, j] = d x_i / d xi_j, and det (E, g).
    """
    J = np.einsum("gna,enb->egba", dN, coords)
    return J, np.linalg.det(J)


def quad4_shape_functions(xi: np.ndarray) -> np.ndarray:
    """Bilinear Q4 shape functions N (g, 4) at points xi (g, 2) in [-1, 1]^2.

    Node order: (-1,-1), (1,-1), (1,1), (-1,1).
    """
    xi = np.atleast_2d(xi)
    s = np.array([[-1, -1], [1, -1], [1, 1], [-1, 1]], dtype=float)
    N = np.empty((xi.shape[0], 4))
    for j in range(4):
        N[:, j] = 0.25 * (1 + s[j, 0] * xi[:, 0]) * (1 + s[j, 1] * xi[:, 1])
    return N


def gauss_points_2d(n: int = 4) -> tuple[np.ndarray, np.ndarray]:
    x, w = gauss_1d(n)
    pts = np.array([(a, b) for a in x for b in x])
    wts = np.array([wa * wb for wa in w for wb in w])
    return pts, wts

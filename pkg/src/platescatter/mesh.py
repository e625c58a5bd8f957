"""Structured hexahedral meshing of the truncated cylindrical plate domain.

Two templates cover all cavity shapes:

* annulus: radial sweep from the cavity radius b to the virtual boundary a
  (through-thickness cylindrical cavity);
* O-grid: a square core block mapped onto a disk of interface radius,
  surrounded by the annular sweep (solid plate, partial-depth cavities and
  ellipsoids, which are carved out of the core block).

Element faces on r = a are bilinear Q4 with exact (theta, z) surface
coordinates stored per face.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .hexshape import gauss_points_3d, jacobians, shape_gradients
from .material import PlateMaterial

CAVITY_SHAPES = ("cylinder-through", "cylinder-partial-symmetric", "ellipsoid")


class MeshError(ValueError):
    pass


@dataclass(frozen=True)
class CavitySpec:
    shape: str
    radius: float                 # b
    half_depth: float | None = None  # d, for partial / ellipsoid shapes

    def __post_init__(self):
        if self.shape not in CAVITY_SHAPES:
            raise MeshError(f"unknown cavity shape {self.shape!r}")
        if self.radius <= 0:
            raise MeshError("cavity radius must be positive")
        if self.shape != "cylinder-through":
            if self.half_depth is None or self.half_depth <= 0:
                raise MeshError(f"shape {self.shape!r} requires a positive half-depth")


@dataclass(frozen=True)
class MeshResolution:
    n_radial: int
    n_circumferential: int
    n_thickness: int

    def __post_init__(self):
        if self.n_circumferential < 16 or self.n_circumferential % 4 != 0:
            raise MeshError("n_circumferential must be >= 16 and divisible by 4")
        if self.n_thickness < 2 or self.n_thickness % 2 != 0:
            raise MeshError("n_thickness must be a positive even integer")
        if self.n_radial < 1:
            raise MeshError("n_radial must be >= 1")


@dataclass
class Mesh:
    nodes: np.ndarray            # (p, 3)
    elements: np.ndarray         # (E, 8) hex8, VTK ordering, right-handed
    boundary_faces: np.ndarray   # (F, 4) node ids, outward +r normal
    boundary_theta: np.ndarray   # (F, 4) unwrapped angular coordinate
    boundary_z: np.ndarray       # (F, 4)
    a: float
    h: float

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def boundary_node_ids(self) -> np.ndarray:
        return np.unique(self.boundary_faces)


@dataclass(frozen=True)
class ResolutionReport:
    elements_per_wavelength: float
    max_edge_length: float
    adequate: bool


def _square_to_disk(xi: np.ndarray, eta: np.ndarray, radius: float) -> np.ndarray:
    """Elliptical square-to-disk map of [-1, 1]^2 onto a disk."""
    x = xi * np.sqrt(1.0 - 0.5 * eta**2)
    y = eta * np.sqrt(1.0 - 0.5 * xi**2)
    return radius * np.stack([x, y], axis=-1)


def _core_boundary_walk(n_core: int) -> list[tuple[int, int]]:
    """Grid indices (i_xi, i_eta) of the core boundary, CCW from corner (1, 1)."""
    walk = []
    walk += [(n_core - s, n_core) for s in range(n_core)]       # top edge
    walk += [(0, n_core - s) for s in range(n_core)]            # left edge
    walk += [(s, 0) for s in range(n_core)]                     # bottom edge
    walk += [(n_core, s) for s in range(n_core)]                # right edge
    return walk


def _z_levels(h: float, n_thickness: int, snap_depth: float | None) -> np.ndarray:
    if snap_depth is None or snap_depth >= h * (1 - 1e-12):
        return np.linspace(-h, h, n_thickness + 1)
    d = snap_depth
    n_cav = int(round(n_thickness * d / h))
    n_cav += n_cav % 2
    n_cav = min(max(n_cav, 2), n_thickness - 2)
    n_out = (n_thickness - n_cav) // 2
    inner = np.linspace(-d, d, n_cav + 1)
    upper = np.linspace(d, h, n_out + 1)[1:]
    return np.concatenate([-upper[::-1], inner, upper])


def _layer_2d(
    a: float,
    inner_radius: float,
    res: MeshResolution,
    with_core: bool,
):
    """2D layout shared by all z-levels.

    Returns (points (n2d, 2), quads (Q, 4), quad_is_core (Q,), outer_ring ids,
    outer_thetas (n_circ,)).
    """
    n_circ, n_radial = res.n_circumferential, res.n_radial
    if with_core:
        n_core = n_circ // 4
        xi = np.linspace(-1.0, 1.0, n_core + 1)
        XI, ETA = np.meshgrid(xi, xi, indexing="ij")
        core_pts = _square_to_disk(XI, ETA, inner_radius).reshape(-1, 2)
        cid = lambda i, j: i * (n_core + 1) + j
        walk = _core_boundary_walk(n_core)
        ring0 = np.array([cid(i, j) for i, j in walk])
        theta_in = np.arctan2(core_pts[ring0, 1], core_pts[ring0, 0])
        # Make the CCW walk monotone starting at pi/4.
        for i in range(1, len(theta_in)):
            while theta_in[i] < theta_in[i - 1] - 1e-12:
                theta_in[i] += 2.0 * math.pi
        theta_out = math.pi / 4 + 2.0 * math.pi * np.arange(n_circ) / n_circ
        points = [core_pts]
        offset = core_pts.shape[0]
        quads: list[tuple[int, int, int, int]] = []
        is_core: list[bool] = []
        for i in range(n_core):
            for j in range(n_core):
                quads.append((cid(i, j), cid(i + 1, j), cid(i + 1, j + 1), cid(i, j + 1)))
                is_core.append(True)
    else:
        theta_in = 2.0 * math.pi * np.arange(n_circ) / n_circ
        theta_out = theta_in.copy()
        ring0 = np.arange(n_circ)
        points = [
            inner_radius
            * np.stack([np.cos(theta_in), np.sin(theta_in)], axis=-1)
        ]
        offset = n_circ
        quads, is_core = [], []

    rings = [ring0]
    for l in range(1, n_radial + 1):
        t = l / n_radial
        r = inner_radius + (a - inner_radius) * t
        th = (1.0 - t) * theta_in + t * theta_out
        points.append(r * np.stack([np.cos(th), np.sin(th)], axis=-1))
        rings.append(offset + np.arange(n_circ))
        offset += n_circ
    for l in range(n_radial):
        lo, hi = rings[l], rings[l + 1]
        for j in range(n_circ):
            jn = (j + 1) % n_circ
            quads.append((int(lo[j]), int(hi[j]), int(hi[jn]), int(lo[jn])))
            is_core.append(False)
    return (
        np.concatenate(points, axis=0),
        np.asarray(quads, dtype=np.int64),
        np.asarray(is_core, dtype=bool),
        rings[-1],
        theta_out,
    )


def _check_jacobians(nodes: np.ndarray, elements: np.ndarray) -> None:
    dN = shape_gradients(gauss_points_3d(2)[0])
    # Chunked to bound memory on large meshes.
    for start in range(0, elements.shape[0], 20000):
        chunk = elements[start : start + 20000]
        _, det = jacobians(nodes[chunk], dN)
        bad = np.nonzero(det.min(axis=1) <= 0)[0]
        if bad.size:
            raise MeshError(f"non-positive Jacobian in element {start + int(bad[0])}")


def _compact(nodes, elements, faces):
    used = np.zeros(nodes.shape[0], dtype=bool)
    used[elements.ravel()] = True
    remap = -np.ones(nodes.shape[0], dtype=np.int64)
    remap[used] = np.arange(used.sum())
    return nodes[used], remap[elements], remap[faces]


def generate(
    a: float,
    material: PlateMaterial,
    cavity: CavitySpec | None,
    resolution: MeshResolution,
) -> Mesh:
    """Mesh the truncated cylinder of radius a and thickness 2h with a cavity.

    The outer lateral surface is extracted as Q4 boundary faces with exact
    (theta, z) coordinates; all elements are checked for positive Jacobians.
    """
    h = material.h
    if cavity is not None:
        b = cavity.radius
        if b >= 0.8 * a:
            raise MeshError(f"cavity radius {b} too close to boundary radius {a}")
        if cavity.half_depth is not None and cavity.half_depth > h:
            raise MeshError("cavity half-depth exceeds plate half-thickness")
        if resolution.n_circumferential < 8:
            raise MeshError("fewer than 8 circumferential nodes on the cavity")

    through = cavity is not None and cavity.shape == "cylinder-through"
    inner_radius = cavity.radius if cavity is not None else 0.5 * a
    snap = None
    if cavity is not None and cavity.shape == "cylinder-partial-symmetric":
        snap = cavity.half_depth
    z = _z_levels(h, resolution.n_thickness, snap)
    nz = len(z) - 1

    pts2d, quads, quad_is_core, outer_ring, theta_out = _layer_2d(
        a, inner_radius, resolution, with_core=not through
    )
    n2d = pts2d.shape[0]
    nodes = np.empty((n2d * (nz + 1), 3))
    for k, zk in enumerate(z):
        nodes[k * n2d : (k + 1) * n2d, :2] = pts2d
        nodes[k * n2d : (k + 1) * n2d, 2] = zk

    nq = quads.shape[0]
    elements = np.empty((nq * nz, 8), dtype=np.int64)
    elem_is_core = np.empty(nq * nz, dtype=bool)
    elem_layer = np.empty(nq * nz, dtype=np.int64)
    for k in range(nz):
        lo, hi = k * n2d, (k + 1) * n2d
        sl = slice(k * nq, (k + 1) * nq)
        elements[sl, 0:4] = quads + lo
        elements[sl, 4:8] = quads + hi
        elem_is_core[sl] = quad_is_core
        elem_layer[sl] = k

    # Boundary faces on the outer ring, outward +r normal.
    n_circ = resolution.n_circumferential
    faces, f_theta, f_z = [], [], []
    dtheta = 2.0 * math.pi / n_circ
    for k in range(nz):
        lo, hi = k * n2d, (k + 1) * n2d
        for j in range(n_circ):
            jn = (j + 1) % n_circ
            faces.append(
                (outer_ring[j] + lo, outer_ring[jn] + lo,
                 outer_ring[jn] + hi, outer_ring[j] + hi)
            )
            t0 = theta_out[j]
            t1 = t0 + dtheta
            f_theta.append((t0, t1, t1, t0))
            f_z.append((z[k], z[k], z[k + 1], z[k + 1]))
    faces = np.asarray(faces, dtype=np.int64)
    f_theta = np.asarray(f_theta)
    f_z = np.asarray(f_z)

    # Carve the cavity out of the core block.
    if cavity is not None and not through:
        centroids = nodes[elements].mean(axis=1)
        r_c = np.hypot(centroids[:, 0], centroids[:, 1])
        d = cavity.half_depth
        if cavity.shape == "cylinder-partial-symmetric":
            inside = elem_is_core & (np.abs(centroids[:, 2]) < d * (1 - 1e-12))
        else:  # ellipsoid
            inside = elem_is_core & (
                (r_c / cavity.radius) ** 2 + (centroids[:, 2] / d) ** 2 < 1.0
            )
        elements = elements[~inside]
        if cavity.shape == "ellipsoid":
            # Project exposed nodes still inside the ellipsoid onto its surface.
            used = np.unique(elements)
            r_n = np.hypot(nodes[used, 0], nodes[used, 1])
            rho = (r_n / cavity.radius) ** 2 + (nodes[used, 2] / d) ** 2
            stuck = used[(rho < 1.0 - 1e-12) & (rho > 1e-20)]
            rr = np.hypot(nodes[stuck, 0], nodes[stuck, 1])
            scale = 1.0 / np.sqrt(
                (rr / cavity.radius) ** 2 + (nodes[stuck, 2] / d) ** 2
            )
            nodes[stuck] *= scale[:, None]
        nodes, elements, faces = _compact(nodes, elements, faces)

    _check_jacobians(nodes, elements)

    r_b = np.hypot(nodes[np.unique(faces), 0], nodes[np.unique(faces), 1])
    if np.abs(r_b - a).max() > 1e-10 * a:
        raise MeshError("boundary-face node off the virtual cylinder r = a")

    return Mesh(
        nodes=nodes,
        elements=elements,
        boundary_faces=faces,
        boundary_theta=f_theta,
        boundary_z=f_z,
        a=a,
        h=h,
    )


def mesh_volume(mesh: Mesh) -> float:
    """Total volume by 2x2x2 Gauss quadrature of the Jacobian."""
    pts, wts = gauss_points_3d(2)
    dN = shape_gradients(pts)
    total = 0.0
    for start in range(0, mesh.elements.shape[0], 20000):
        chunk = mesh.elements[start : start + 20000]
        _, det = jacobians(mesh.nodes[chunk], dN)
        total += float(np.einsum("eg,g->", det, wts))
    return total


_HEX_EDGES = np.array(
    [(0, 1), (1, 2), (2, 3), (3, 0),
     (4, 5), (5, 6), (6, 7), (7, 4),
     (0, 4), (1, 5), (2, 6), (3, 7)]
)


def max_edge_length(mesh: Mesh) -> float:
    longest = 0.0
    for start in range(0, mesh.elements.shape[0], 20000):
        chunk = mesh.elements[start : start + 20000]
        xyz = mesh.nodes[chunk]
        d = xyz[:, _HEX_EDGES[:, 0], :] - xyz[:, _HEX_EDGES[:, 1], :]
        longest = max(longest, float(np.linalg.norm(d, axis=2).max()))
    return longest


def wavelength_resolution_report(mesh: Mesh, roots, minimum: float = 10.0) -> ResolutionReport:
    """Minimum elements-per-wavelength over all propagating modes."""
    delta = max_edge_length(mesh)
    epw = math.inf
    for r in roots:
        if getattr(r, "kind", "") != "propagating":
            continue
        k = r.k.real if hasattr(r, "k") else r.l.real
        if k > 0:
            epw = min(epw, (2.0 * math.pi / k) / delta)
    return ResolutionReport(
        elements_per_wavelength=epw,
        max_edge_length=delta,
        adequate=epw >= minimum,
    )


def boundary_face_quadrature(
    mesh: Mesh, gauss_order: int = 4
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Quadrature data for surface integrals over the virtual boundary.

    Returns (theta_g, z_g, w_g, N) where theta_g, z_g, w_g have shape
    (faces, points) and N (points, 4) holds the Q4 shape functions. The
    faces lie exactly on r = a and are parametrized by their stored
    (theta, z) corner values, so the surface element is a * dtheta * dz
    through the bilinear map; w_g already contains that metric and the
    Gauss weights.
    """
    from .hexshape import gauss_points_2d, quad4_shape_functions

    pts2, wts2 = gauss_points_2d(gauss_order)
    N = quad4_shape_functions(pts2)
    g = len(wts2)
    dN_xi = np.empty((g, 4))
    dN_eta = np.empty((g, 4))
    corners = np.array([[-1, -1], [1, -1], [1, 1], [-1, 1]], dtype=float)
    for j in range(4):
        sx, se = corners[j]
        dN_xi[:, j] = 0.25 * sx * (1 + se * pts2[:, 1])
        dN_eta[:, j] = 0.25 * se * (1 + sx * pts2[:, 0])
    th, zz = mesh.boundary_theta, mesh.boundary_z
    theta_g = th @ N.T
    z_g = zz @ N.T
    jac = np.abs((th @ dN_xi.T) * (zz @ dN_eta.T) - (th @ dN_eta.T) * (zz @ dN_xi.T))
    w_g = wts2[None, :] * jac * mesh.a
    return theta_g, z_g, w_g, N

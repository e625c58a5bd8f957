"""Legacy VTK ASCII export (UNSTRUCTURED_GRID, hex8) and a minimal reader
for round-trip checks."""

from __future__ import annotations

import numpy as np

VTK_HEX8 = 12


def write_vtk(path, nodes: np.ndarray, elements: np.ndarray,
              point_vectors: dict[str, np.ndarray] | None = None,
              title: str = "platescatter output") -> None:
    """Write a hex8 mesh with optional per-node vector fields.

    Complex vector fields are split into `<name>_re` / `<name>_im` arrays.
    Coordinates and data use 17 significant digits so a re-read reproduces
    them bit-exactly.
    """
    fields: dict[str, np.ndarray] = {}
    for name, arr in (point_vectors or {}).items():
        arr = np.asarray(arr)
        if arr.shape != (nodes.shape[0], 3):
            raise ValueError(f"field {name!r} must have shape (p, 3)")
        if np.iscomplexobj(arr):
            fields[name + "_re"] = arr.real
            fields[name + "_im"] = arr.imag
        else:
            fields[name] = arr.astype(float)

    try:
        f = open(path, "w")
    except OSError as exc:
        raise OSError(f"cannot write VTK file {path}: {exc}") from exc
    with f:
        f.write("# vtk DataFile Version 3.0\n")
        f.write(title + "\n")
        f.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
        f.write(f"POINTS {nodes.shape[0]} double\n")
        for x, y, z in nodes:
            f.write(f"{x:.17g} {y:.17g} {z:.17g}\n")
        ne = elements.shape[0]
        f.write(f"CELLS {ne} {ne * 9}\n")
        for e in elements:
            f.write("8 " + " ".join(str(int(i)) for i in e) + "\n")
        f.write(f"CELL_TYPES {ne}\n")
        f.write("\n".join([str(VTK_HEX8)] * ne) + "\n")
        if fields:
            f.write(f"POINT_DATA {nodes.shape[0]}\n")
            for name, arr in fields.items():
                f.write(f"VECTORS {name} double\n")
                for x, y, z in arr:
                    f.write(f"{x:.17g} {y:.17g} {z:.17g}\n")


def read_vtk(path):
    """Read back a file written by write_vtk. Returns (nodes, elements, fields)."""
    with open(path) as f:
        lines = f.read().splitlines()
    i = 0
    nodes = elements = None
    fields: dict[str, np.ndarray] = {}
    npts = 0
    while i < len(lines):
        line = lines[i]
        if line.startswith("POINTS"):
            npts = int(line.split()[1])
            nodes = np.array(
                [[float(v) for v in lines[i + 1 + j].split()] for j in range(npts)]
            )
            i += npts
        elif line.startswith("CELLS"):
            ne = int(line.split()[1])
            elements = np.array(
                [[int(v) for v in lines[i + 1 + j].split()[1:]] for j in range(ne)],
                dtype=np.int64,
            )
            i += ne
        elif line.startswith("VECTORS"):
            name = line.split()[1]
            fields[name] = np.array(
                [[float(v) for v in lines[i + 1 + j].split()] for j in range(npts)]
            )
            i += npts
        i += 1
    return nodes, elements, fields

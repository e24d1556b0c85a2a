"""File formats: legacy VTK, plain-text meshes, CSV tables."""
import csv
from pathlib import Path

import numpy as np

from .errors import InvalidArgumentError
from .mesh import TriMesh

VTK_TRIANGLE = 5


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x)) if np.isfinite(x) else str(float(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return str(x)


def fmt17(x):
    """17 significant digits, round-trip exact."""
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return _fmt(x)


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise InvalidArgumentError(f"row has {len(row)} fields, header has {len(header)}")
            w.writerow([fmt17(v) for v in row])
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def write_vtk(path, mesh, point_data=None, title="mixed_stokes"):
    """Legacy ASCII unstructured grid with linear triangles on the vertices.

    ``point_data`` maps names to arrays of shape (V,), (V, 2) or (V, 2, 2);
    they are written as SCALARS, VECTORS (z = 0) and TENSORS (padded to 3x3).
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    V, T = mesh.n_vertices, mesh.n_triangles
    lines = ["# vtk DataFile Version 3.0", title[:255], "ASCII", "DATASET UNSTRUCTURED_GRID",
             f"POINTS {V} double"]
    lines += [f"{fmt17(x)} {fmt17(y)} 0" for x, y in mesh.vertices]
    lines.append(f"CELLS {T} {4 * T}")
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles]
    lines.append(f"CELL_TYPES {T}")
    lines += [str(VTK_TRIANGLE)] * T
    if point_data:
        lines.append(f"POINT_DATA {V}")
        for name, arr in point_data.items():
            arr = np.asarray(arr, dtype=float)
            if arr.shape[0] != V:
                raise InvalidArgumentError(f"point data {name!r} has {arr.shape[0]} rows, expected {V}")
            if arr.ndim == 1:
                lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
                lines += [fmt17(v) for v in arr]
            elif arr.shape[1:] == (2,):
                lines.append(f"VECTORS {name} double")
                lines += [f"{fmt17(a)} {fmt17(b)} 0" for a, b in arr]
            elif arr.shape[1:] == (2, 2):
                lines.append(f"TENSORS {name} double")
                for t in arr:
                    lines += [f"{fmt17(t[0, 0])} {fmt17(t[0, 1])} 0",
                              f"{fmt17(t[1, 0])} {fmt17(t[1, 1])} 0", "0 0 0"]
            else:
                raise InvalidArgumentError(f"unsupported point data shape {arr.shape}")
    path.write_text("\n".join(lines) + "\n")
    return path


def read_vtk(path):
    """Minimal reader for the files written by ``write_vtk``; validates the
    section counts and returns (points, triangles, point_data)."""
    tokens = Path(path).read_text().split("\n")
    if not tokens[0].startswith("# vtk DataFile Version") or tokens[2].strip() != "ASCII" \
            or tokens[3].strip() != "DATASET UNSTRUCTURED_GRID":
        raise InvalidArgumentError("not a legacy ASCII unstructured-grid VTK file")
    words = " ".join(tokens[4:]).split()
    pos = 0

    def take(n):
        nonlocal pos
        out = words[pos:pos + n]
        if len(out) != n:
            raise InvalidArgumentError("truncated VTK file")
        pos += n
        return out

    kw, n, _ = take(3)
    if kw != "POINTS":
        raise InvalidArgumentError("expected POINTS")
    n = int(n)
    pts = np.array(take(3 * n), dtype=float).reshape(n, 3)
    kw, nc, size = take(3)
    if kw != "CELLS":
        raise InvalidArgumentError("expected CELLS")
    cells = np.array(take(int(size)), dtype=np.int64).reshape(int(nc), 4)
    if np.any(cells[:, 0] != 3) or cells[:, 1:].max() >= n or cells[:, 1:].min() < 0:
        raise InvalidArgumentError("invalid cell connectivity")
    kw, nt = take(2)
    types = np.array(take(int(nt)), dtype=int)
    if kw != "CELL_TYPES" or np.any(types != VTK_TRIANGLE):
        raise InvalidArgumentError("expected CELL_TYPES of triangles")
    data = {}
    if pos < len(words):
        kw, nv = take(2)
        if kw != "POINT_DATA" or int(nv) != n:
            raise InvalidArgumentError("bad POINT_DATA header")
        while pos < len(words):
            kind = take(1)[0]
            if kind == "SCALARS":
                name, _, comps = take(3)
                take(2)
                data[name] = np.array(take(n * int(comps)), dtype=float)
            elif kind == "VECTORS":
                name, _ = take(2)
                data[name] = np.array(take(3 * n), dtype=float).reshape(n, 3)
            elif kind == "TENSORS":
                name, _ = take(2)
                data[name] = np.array(take(9 * n), dtype=float).reshape(n, 3, 3)
            else:
                raise InvalidArgumentError(f"unexpected VTK keyword {kind!r}")
    return pts, cells[:, 1:], data


def write_mesh_file(path, mesh):
    """Plain-text mesh: 'nv nt nb', then 'x y', 'i j k', 'i j tag' lines."""
    b = mesh.boundary_triples()
    lines = [f"{mesh.n_vertices} {mesh.n_triangles} {len(b)}"]
    lines += [f"{fmt17(x)} {fmt17(y)}" for x, y in mesh.vertices]
    lines += [f"{i} {j} {k}" for i, j, k in mesh.triangles]
    lines += [f"{i} {j} {t}" for i, j, t in b]
    Path(path).write_text("\n".join(lines) + "\n")
    return Path(path)


def read_mesh_file(path):
    rows = [ln.split() for ln in Path(path).read_text().splitlines()
            if ln.strip() and not ln.lstrip().startswith("#")]
    try:
        nv, nt, nb = (int(v) for v in rows[0])
        if len(rows) != 1 + nv + nt + nb:
            raise ValueError(f"expected {1 + nv + nt + nb} data lines, found {len(rows)}")
        verts = np.array(rows[1:1 + nv], dtype=float)
        tris = np.array(rows[1 + nv:1 + nv + nt], dtype=np.int64)
        bnd = np.array(rows[1 + nv + nt:], dtype=np.int64).reshape(nb, 3)
    except (ValueError, IndexError) as exc:
        raise InvalidArgumentError(f"malformed mesh file {path}: {exc}") from exc
    return TriMesh(verts, tris, bnd)


def write_solution_vtk(path, solution):
    mesh = solution.dofmap.mesh
    V = mesh.n_vertices
    return write_vtk(path, mesh, {
        "velocity": solution.nodal_velocity[:V],
        "pressure": solution.p,
        "viscous_stress": solution.viscous_stress_at_vertices(),
    })

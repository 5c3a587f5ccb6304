"""Readers and writers for the on-disk formats.

Every writer is deterministic: fixed key order, fixed row order, LF line
endings, and floats rendered with repr() (shortest round-trip).  Rerunning
with the same inputs reproduces each file byte for byte.

Index conventions: CSV files that refer to matrix rows or spectrum positions
are 1-based, matching MatrixMarket; files that refer to mesh vertices
("vertex" columns) are 0-based, matching the indices inside the mesh JSON.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import struct
from pathlib import Path
from typing import Any

import numpy as np
import scipy.sparse as sp

from . import __version__
from .analysis import (
    CONTOUR_CLASSES,
    LandscapeVector,
    LocalizationReport,
    PairMatch,
    RegimeReport,
    contour_classes,
)
from .lattice import Mesh, MeshInvariantError, cartesian_coordinates, validate
from .solver import Spectrum

MESH_KEYS = ("level", "vertices", "triangles", "edges", "boundary_vertices")
MM_HEADER = "%%MatrixMarket matrix coordinate real symmetric"
VECTOR_MAGIC = b"SNWV"
VECTOR_VERSION = 1


class FormatError(Exception):
    """A file does not conform to the expected format."""


def _fmt(x: float) -> str:
    # repr of a Python float is the shortest string that round-trips.
    return repr(float(x))


def _plain(obj: Any) -> Any:
    """Recursively convert numpy scalars/arrays so json can serialize them.

    Non-finite floats become null: bare NaN/Infinity tokens are not valid
    JSON and would trip strict parsers downstream.
    """
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        obj = float(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def write_json(obj: dict, path: str | Path) -> None:
    """Pretty-printed JSON with insertion key order and LF newlines."""
    with Path(path).open("w", encoding="utf-8", newline="\n") as f:
        json.dump(_plain(obj), f, indent=2)
        f.write("\n")


# -- mesh ------------------------------------------------------------------

def write_mesh_json(mesh: Mesh, path: str | Path) -> None:
    """One top-level key per line; arrays in compact JSON on that line."""
    compact = {"separators": (",", ":")}
    edges = [[int(i), int(j), "b" if b else "i"]
             for (i, j), b in zip(mesh.edges, mesh.edge_is_boundary)]
    with Path(path).open("w", encoding="utf-8", newline="\n") as f:
        f.write("{\n")
        f.write(f'"level": {mesh.level},\n')
        f.write(f'"vertices": {json.dumps(mesh.vertices.tolist(), **compact)},\n')
        f.write(f'"triangles": {json.dumps(mesh.triangles.tolist(), **compact)},\n')
        f.write(f'"edges": {json.dumps(edges, **compact)},\n')
        bv = mesh.boundary_vertices.tolist()
        f.write(f'"boundary_vertices": {json.dumps(bv, **compact)}\n')
        f.write("}\n")


def read_mesh_json(path: str | Path) -> Mesh:
    """Load a mesh file and re-check every mesh invariant."""
    with Path(path).open("r", encoding="utf-8") as f:
        data = json.load(f)
    if tuple(data.keys()) != MESH_KEYS:
        raise FormatError(f"mesh file keys {tuple(data.keys())}, want {MESH_KEYS}")
    level = data["level"]
    if not isinstance(level, int) or level < 0:
        raise FormatError(f"bad level {level!r}")
    try:
        vertices = np.asarray(data["vertices"], dtype=np.int64).reshape(-1, 2)
        triangles = np.asarray(data["triangles"], dtype=np.int64).reshape(-1, 3)
        raw_edges = data["edges"]
        edges = np.asarray([[e[0], e[1]] for e in raw_edges], dtype=np.int64)
        tags = [e[2] for e in raw_edges]
    except (TypeError, ValueError, IndexError) as exc:
        raise FormatError(f"malformed mesh arrays: {exc}") from exc
    if not all(t in ("b", "i") for t in tags):
        raise FormatError("edge tags must be 'b' or 'i'")
    edge_is_boundary = np.asarray([t == "b" for t in tags], dtype=bool)
    boundary_flags = np.zeros(len(vertices), dtype=bool)
    bv = np.asarray(data["boundary_vertices"], dtype=np.int64)
    if bv.size and (bv.min() < 0 or bv.max() >= len(vertices)):
        raise FormatError("boundary_vertices out of range")
    boundary_flags[bv] = True
    mesh = Mesh(level=level, vertices=vertices, triangles=triangles,
                edges=edges, edge_is_boundary=edge_is_boundary,
                boundary_flags=boundary_flags)
    report = validate(mesh)
    if not report.ok:
        failed = [c.name for c in report.checks if not c.passed]
        raise MeshInvariantError(f"mesh file violates invariants: {failed}")
    return mesh


# -- operator --------------------------------------------------------------

def write_matrix_market(S: sp.spmatrix, path: str | Path) -> None:
    """Lower triangle of a symmetric sparse matrix, 1-based, column-major."""
    d = S.shape[0]
    if S.shape[1] != d:
        raise ValueError(f"matrix not square: {S.shape}")
    low = sp.tril(S, format="coo")
    order = np.lexsort((low.row, low.col))
    rows, cols, vals = low.row[order], low.col[order], low.data[order]
    with Path(path).open("w", encoding="utf-8", newline="\n") as f:
        f.write(MM_HEADER + "\n")
        f.write(f"{d} {d} {len(vals)}\n")
        for i, j, v in zip(rows, cols, vals):
            f.write(f"{i + 1} {j + 1} {_fmt(v)}\n")


def read_matrix_market(path: str | Path) -> sp.csr_matrix:
    """Parse our symmetric coordinate files back to a full CSR matrix."""
    with Path(path).open("r", encoding="utf-8") as f:
        header = f.readline().rstrip("\n")
        if header != MM_HEADER:
            raise FormatError(f"bad MatrixMarket header: {header!r}")
        line = f.readline()
        while line.startswith("%"):
            line = f.readline()
        try:
            nrows, ncols, nnz = (int(t) for t in line.split())
        except ValueError as exc:
            raise FormatError(f"bad size line: {line!r}") from exc
        if nrows != ncols:
            raise FormatError("symmetric matrix must be square")
        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz, dtype=np.float64)
        for k in range(nnz):
            parts = f.readline().split()
            if len(parts) != 3:
                raise FormatError(f"bad entry line {k + 1}")
            rows[k] = int(parts[0]) - 1
            cols[k] = int(parts[1]) - 1
            vals[k] = float(parts[2])
    if nnz and (rows < cols).any():
        raise FormatError("entries above the diagonal in a symmetric file")
    off = rows != cols
    full_rows = np.concatenate([rows, cols[off]])
    full_cols = np.concatenate([cols, rows[off]])
    full_vals = np.concatenate([vals, vals[off]])
    S = sp.coo_matrix((full_vals, (full_rows, full_cols)), shape=(nrows, ncols))
    return S.tocsr()


def write_mass_csv(m: np.ndarray, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as f:
        f.write("index,mass\n")
        for i, v in enumerate(m):
            f.write(f"{i + 1},{_fmt(v)}\n")


def read_mass_csv(path: str | Path) -> np.ndarray:
    return _read_indexed_csv(path, "index,mass", 1)[0]


# -- spectrum --------------------------------------------------------------

def write_eigenvalues_csv(spec: Spectrum, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as f:
        f.write("index,eigenvalue,residual\n")
        for i, (w, r) in enumerate(zip(spec.eigenvalues, spec.residuals)):
            f.write(f"{i + 1},{_fmt(w)},{_fmt(r)}\n")


def read_eigenvalues_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    cols = _read_indexed_csv(path, "index,eigenvalue,residual", 2)
    return cols[0], cols[1]


def _read_indexed_csv(path: str | Path, header: str, ncols: int) -> list[np.ndarray]:
    """Shared reader for 1-based 'index,...' CSVs; checks index contiguity."""
    with Path(path).open("r", encoding="utf-8") as f:
        got = f.readline().rstrip("\n")
        if got != header:
            raise FormatError(f"bad header {got!r}, want {header!r}")
        out: list[list[float]] = [[] for _ in range(ncols)]
        for k, line in enumerate(f):
            parts = line.rstrip("\n").split(",")
            if len(parts) != 1 + ncols or int(parts[0]) != k + 1:
                raise FormatError(f"bad row {k + 1}: {line!r}")
            for c in range(ncols):
                out[c].append(float(parts[1 + c]))
    return [np.asarray(col, dtype=np.float64) for col in out]


def write_vectors(values: np.ndarray, meta: dict, path: str | Path) -> Path:
    """Binary vector block plus JSON sidecar at <path>.json.

    Layout: magic "SNWV", u32 version, u64 dimension d, u64 count k, then
    k*d little-endian float64 values, vector by vector.  `meta` must carry
    kind, level, c0, normalization and sign_rule; extra keys are kept.
    """
    required = ("kind", "level", "c0", "normalization", "sign_rule")
    missing = [k for k in required if k not in meta]
    if missing:
        raise ValueError(f"vector metadata missing {missing}")
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"values must be (d,) or (d, k), got {arr.shape}")
    d, k = arr.shape
    path = Path(path)
    with path.open("wb") as f:
        f.write(VECTOR_MAGIC)
        f.write(struct.pack("<I", VECTOR_VERSION))
        f.write(struct.pack("<Q", d))
        f.write(struct.pack("<Q", k))
        f.write(np.ascontiguousarray(arr.T, dtype="<f8").tobytes())
    sidecar = Path(str(path) + ".json")
    ordered = {key: meta[key] for key in required}
    for key in sorted(meta):
        if key not in ordered:
            ordered[key] = meta[key]
    write_json(ordered, sidecar)
    return sidecar


def write_eigenvectors(spec: Spectrum, path: str | Path) -> Path:
    from .solver import NORMALIZATION, SIGN_RULE

    meta = {"kind": spec.kind, "level": spec.level, "c0": spec.c0,
            "normalization": NORMALIZATION, "sign_rule": SIGN_RULE}
    return write_vectors(spec.eigenvectors, meta, path)


def read_vectors(path: str | Path) -> tuple[np.ndarray, dict]:
    """Return ((d, k) array, sidecar dict); sidecar {} when absent."""
    path = Path(path)
    with path.open("rb") as f:
        magic = f.read(4)
        if magic != VECTOR_MAGIC:
            raise FormatError(f"bad magic {magic!r}")
        (version,) = struct.unpack("<I", f.read(4))
        if version != VECTOR_VERSION:
            raise FormatError(f"unsupported version {version}")
        d, k = struct.unpack("<QQ", f.read(16))
        payload = f.read(8 * d * k)
        if len(payload) != 8 * d * k:
            raise FormatError("truncated vector payload")
    arr = np.frombuffer(payload, dtype="<f8").reshape(k, d).T.copy()
    sidecar = Path(str(path) + ".json")
    meta: dict = {}
    if sidecar.exists():
        with sidecar.open("r", encoding="utf-8") as f:
            meta = json.load(f)
    return arr, meta


# -- analysis reports ------------------------------------------------------

def write_counting_csv(spec: Spectrum, path: str | Path) -> None:
    """Counting-function staircase sampled at the distinct eigenvalues."""
    w = spec.eigenvalues
    xs = np.unique(w)
    counts = np.searchsorted(w, xs, side="right")
    with Path(path).open("w", encoding="utf-8", newline="\n") as f:
        f.write("x,count\n")
        for x, c in zip(xs, counts):
            f.write(f"{_fmt(x)},{int(c)}\n")


def write_regime_json(report: RegimeReport, path: str | Path) -> None:
    write_json(dataclasses.asdict(report), path)


def write_pairing_json(matches: list[PairMatch], path: str | Path) -> None:
    write_json({"pairs": [dataclasses.asdict(p) for p in matches]}, path)


def write_localization_csv(report: LocalizationReport, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as f:
        f.write("index,eigenvalue,bmf\n")
        rows = zip(report.eigenvalues, report.boundary_mass_fraction)
        for i, (w, b) in enumerate(rows):
            f.write(f"{i + 1},{_fmt(w)},{_fmt(b)}\n")


def write_contour_csv(mesh: Mesh, phi: np.ndarray, eps: float,
                      path: str | Path) -> None:
    """Per-vertex sign classes of one full-mesh vector, with xy coordinates."""
    phi = np.asarray(phi, dtype=np.float64)
    if phi.shape != (mesh.num_vertices,):
        raise ValueError(f"vector length {phi.shape} does not cover the mesh")
    xy = cartesian_coordinates(mesh)
    classes = contour_classes(phi, eps)
    with Path(path).open("w", encoding="utf-8", newline="\n") as f:
        f.write("vertex,x,y,value,class\n")
        for v in range(mesh.num_vertices):
            f.write(f"{v},{_fmt(xy[v, 0])},{_fmt(xy[v, 1])},"
                    f"{_fmt(phi[v])},{CONTOUR_CLASSES[classes[v]]}\n")


def write_landscape_csv(vec: LandscapeVector, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as f:
        f.write("vertex,value\n")
        for v, val in enumerate(vec.values):
            f.write(f"{v},{_fmt(val)}\n")


# -- extension -------------------------------------------------------------

def write_boundary_csv(values: np.ndarray, path: str | Path) -> None:
    """Boundary data in mesh order; boundary_index is the 1-based rank of a
    boundary vertex within the sorted full-vertex list."""
    with Path(path).open("w", encoding="utf-8", newline="\n") as f:
        f.write("boundary_index,value\n")
        for i, v in enumerate(values):
            f.write(f"{i + 1},{_fmt(v)}\n")


def read_boundary_csv(path: str | Path) -> np.ndarray:
    return _read_indexed_csv(path, "boundary_index,value", 1)[0]


def write_decay_csv(profile: list[tuple[int, float]], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as f:
        f.write("distance,sup_abs\n")
        for d, s in profile:
            f.write(f"{int(d)},{_fmt(s)}\n")


def write_energy_csv(values: list[float], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as f:
        f.write("level,energy\n")
        for n, e in enumerate(values):
            f.write(f"{n},{_fmt(e)}\n")


# -- run metadata ----------------------------------------------------------

def config_hash(config: dict) -> str:
    canon = json.dumps(_plain(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def write_metadata(config: dict, path: str | Path) -> None:
    """Reproducibility sidecar: tool version plus the hashed run config."""
    obj = {"tool": "snowlab", "version": __version__,
           "config_hash": config_hash(config), "config": _plain(config)}
    write_json(obj, path)

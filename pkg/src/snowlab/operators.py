"""Conductances, vertex measures, graph energy, and the discrete operators.

The level-n graph energy is a sum over unordered adjacent vertex pairs,

    E_n(u) = sum_{p ~ q} c_n(p, q) (u(p) - u(q))^2,

with conductance 1 on interior edges and c0 * 4**n on boundary edges.  The
vertex measure is 9**-n at interior vertices and 4**-n at boundary vertices.
The operator acts by

    (L u)(p) = (2 / m(p)) * sum_q c(p, q) (u(p) - u(q)),

assembled as L = M^-1 S with S_pq = -2 c(p, q), S_pp = 2 sum_q c(p, q).
With this pairing convention <L u, u>_m = 2 E_n(u).  L is positive
semidefinite; eigenvalues are reported nonnegative.

Three operator kinds:
  full       all vertices, all edges;
  dirichlet  the full S and m with boundary rows and columns deleted
             (zero boundary conditions);
  boundary   boundary vertices and boundary edges only (the weighted cycle
             graph carried by the snowflake polygon).

Exactness notes: conductances and masses are dyadic/ternary rationals stored
as doubles.  Powers of two (4**-n, 4**n) are exact; 9**-n is within 1 ulp;
the exact integer reciprocals 9**n and 4**n are kept alongside m so row sums
of |L| can be formed without any rounding at all.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import sparse

from .lattice import Mesh, build_mesh, cartesian_coordinates

KINDS = ("full", "dirichlet", "boundary")


@dataclass(frozen=True)
class OperatorBundle:
    """Stiffness matrix, mass vector, and vertex bookkeeping for one kind.

    S is sparse CSR symmetric.  m holds the vertex measures and inv_m their
    exact reciprocals (integer-valued doubles, exact below 2**53).
    vertex_map gives, for each operator row, the underlying mesh vertex.
    Immutable after assembly; safe to share across threads.
    """

    kind: str
    level: int
    c0: float
    S: sparse.csr_matrix
    m: np.ndarray
    inv_m: np.ndarray
    vertex_map: np.ndarray

    def __post_init__(self):
        for arr in (self.m, self.inv_m, self.vertex_map):
            arr.setflags(write=False)

    @property
    def dimension(self) -> int:
        return self.S.shape[0]


def conductance(mesh: Mesh, p: int, q: int, c0: float = 1.0) -> float:
    """Edge weight between vertices p and q: 1 on an interior edge,
    c0 * 4**n on a boundary edge, 0 for a non-adjacent pair."""
    V = mesh.num_vertices
    if not (0 <= p < V and 0 <= q < V):
        raise IndexError(f"vertex index out of range: ({p}, {q})")
    if p == q:
        return 0.0
    key = (p, q) if p < q else (q, p)
    idx = np.searchsorted(
        mesh.edges[:, 0] * np.int64(V) + mesh.edges[:, 1],
        key[0] * V + key[1])
    if idx >= len(mesh.edges) or tuple(mesh.edges[idx]) != key:
        return 0.0
    if mesh.edge_is_boundary[idx]:
        return c0 * float(4 ** mesh.level)
    return 1.0


def measure(mesh: Mesh, p: int) -> float:
    """Vertex measure: 9**-n interior, 4**-n boundary."""
    if not 0 <= p < mesh.num_vertices:
        raise IndexError(f"vertex index {p} out of range")
    n = mesh.level
    return 1.0 / (4 ** n) if mesh.boundary_flags[p] else 1.0 / (9 ** n)


def edge_conductances(mesh: Mesh, c0: float = 1.0) -> np.ndarray:
    """Per-edge conductance array aligned with mesh.edges."""
    c = np.ones(len(mesh.edges))
    c[mesh.edge_is_boundary] = c0 * float(4 ** mesh.level)
    return c


def _mass_vectors(mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
    n = mesh.level
    m = np.where(mesh.boundary_flags, 1.0 / (4 ** n), 1.0 / (9 ** n))
    inv_m = np.where(mesh.boundary_flags, float(4 ** n), float(9 ** n))
    return m, inv_m


def _stiffness(num_vertices: int, edges: np.ndarray,
               c: np.ndarray) -> sparse.csr_matrix:
    """S_pq = -2c on edges, S_pp = 2 * sum of incident c."""
    i, j = edges[:, 0], edges[:, 1]
    diag = np.zeros(num_vertices)
    np.add.at(diag, i, 2.0 * c)
    np.add.at(diag, j, 2.0 * c)
    rows = np.concatenate([i, j, np.arange(num_vertices)])
    cols = np.concatenate([j, i, np.arange(num_vertices)])
    vals = np.concatenate([-2.0 * c, -2.0 * c, diag])
    return sparse.coo_matrix(
        (vals, (rows, cols)), shape=(num_vertices, num_vertices)).tocsr()


def assemble(mesh: Mesh, kind: str = "full", c0: float = 1.0) -> OperatorBundle:
    """Assemble the stiffness/mass pair for the requested operator kind.

    The dirichlet bundle is literally the full bundle with boundary rows and
    columns deleted, so the two agree entry for entry on the interior block.
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    if not c0 > 0:
        raise ValueError(f"c0 must be positive, got {c0}")

    m, inv_m = _mass_vectors(mesh)

    if kind == "boundary":
        bidx = mesh.boundary_vertices
        pos = np.full(mesh.num_vertices, -1, dtype=np.int64)
        pos[bidx] = np.arange(len(bidx))
        bedges = pos[mesh.edges[mesh.edge_is_boundary]]
        c = np.full(len(bedges), c0 * float(4 ** mesh.level))
        S = _stiffness(len(bidx), bedges, c)
        return OperatorBundle(kind=kind, level=mesh.level, c0=c0, S=S,
                              m=m[bidx].copy(), inv_m=inv_m[bidx].copy(),
                              vertex_map=bidx.copy())

    c = edge_conductances(mesh, c0)
    S = _stiffness(mesh.num_vertices, mesh.edges, c)
    if kind == "full":
        vmap = np.arange(mesh.num_vertices, dtype=np.int64)
        return OperatorBundle(kind=kind, level=mesh.level, c0=c0, S=S,
                              m=m, inv_m=inv_m, vertex_map=vmap)

    iidx = mesh.interior_vertices
    S_int = S[iidx][:, iidx].tocsr()
    return OperatorBundle(kind=kind, level=mesh.level, c0=c0, S=S_int,
                          m=m[iidx].copy(), inv_m=inv_m[iidx].copy(),
                          vertex_map=iidx.copy())


def apply(op: OperatorBundle, u: np.ndarray) -> np.ndarray:
    """L u with L = M^-1 S."""
    u = np.asarray(u, dtype=float)
    if u.shape != (op.dimension,):
        raise ValueError(
            f"vector has shape {u.shape}, operator dimension {op.dimension}")
    return op.inv_m * (op.S @ u)


def energy(mesh: Mesh, u: np.ndarray, c0: float = 1.0) -> float:
    """Graph energy E_n(u) over unordered adjacent pairs."""
    u = np.asarray(u, dtype=float)
    if u.shape != (mesh.num_vertices,):
        raise ValueError(
            f"vector has shape {u.shape}, mesh has {mesh.num_vertices} vertices")
    c = edge_conductances(mesh, c0)
    d = u[mesh.edges[:, 0]] - u[mesh.edges[:, 1]]
    return float(np.sum(c * d * d))


def m_inner(op: OperatorBundle, u: np.ndarray, v: np.ndarray) -> float:
    """Inner product <u, v>_m = sum m(p) u(p) v(p) on the operator's vertices."""
    return float(np.sum(op.m * np.asarray(u) * np.asarray(v)))


ENERGY_PARTS = ("total", "interior", "boundary")


def energy_sequence(f: Callable[[float, float], float], n_max: int,
                    c0: float = 1.0, part: str = "total") -> list[float]:
    """E_n of f sampled on the level-n vertices, for n = 0..n_max.

    A convergence diagnostic: for smooth f the interior part approaches the
    Dirichlet integral of f over the snowflake domain, while the boundary
    part converges only when the boundary restriction has finite boundary
    energy (constants do; generic smooth traces need not).  `part` selects
    which piece to report.
    """
    if part not in ENERGY_PARTS:
        raise ValueError(f"part must be one of {ENERGY_PARTS}, got {part!r}")
    out = []
    for n in range(n_max + 1):
        mesh = build_mesh(n)
        xy = cartesian_coordinates(mesh)
        u = np.array([f(x, y) for x, y in xy])
        c = edge_conductances(mesh, c0)
        d = u[mesh.edges[:, 0]] - u[mesh.edges[:, 1]]
        e = c * d * d
        if part == "interior":
            val = float(np.sum(e[~mesh.edge_is_boundary]))
        elif part == "boundary":
            val = float(np.sum(e[mesh.edge_is_boundary]))
        else:
            val = float(np.sum(e))
        out.append(val)
    return out

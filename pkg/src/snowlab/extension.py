"""Discretely harmonic extension of boundary data and its diagnostics.

The extension of f solves the interior block of the stiffness system,
S_II u_I = -S_IB f, so (L u)(p) = 0 at every interior vertex p.  Edges
incident to an interior vertex are always interior edges (boundary edges
join two boundary vertices), so the extension does not depend on the
boundary coupling c0; c0 is accepted anyway because the energy bookkeeping
around the extension does depend on it.

The interior block is positive definite, so the extension exists and is
unique, is linear in f, satisfies the discrete maximum principle (each
interior value is a convex combination of neighbor values), and minimizes
the interior-edge energy among all extensions of f.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import cg, splu

from .lattice import Mesh, boundary_cycle, boundary_hop_distance
from .operators import assemble, edge_conductances
from .solver import NumericalError

DIRECT_SOLVE_LIMIT = 60000


@dataclass(frozen=True)
class BoundaryData:
    """Values on the boundary vertices, indexed by the mesh's ascending
    boundary vertex list (length 3 * 4**level)."""

    level: int
    values: np.ndarray

    def __post_init__(self):
        expect = 3 * 4 ** self.level
        if self.values.shape != (expect,):
            raise ValueError(
                f"level {self.level} boundary data needs {expect} values, "
                f"got shape {self.values.shape}")
        self.values.setflags(write=False)


def alternating_boundary_data(mesh: Mesh) -> BoundaryData:
    """+1/-1 alternating along the boundary polygon (its length 3 * 4**n is
    even, so the alternation closes up)."""
    cyc = boundary_cycle(mesh)
    pos = {int(v): t for t, v in enumerate(cyc)}
    vals = np.array([1.0 if pos[int(v)] % 2 == 0 else -1.0
                     for v in mesh.boundary_vertices])
    return BoundaryData(level=mesh.level, values=vals)


def random_boundary_data(mesh: Mesh, seed: int = 0) -> BoundaryData:
    rng = np.random.default_rng(seed)
    return BoundaryData(level=mesh.level,
                        values=rng.standard_normal(mesh.num_boundary_vertices))


def _as_values(mesh: Mesh, f) -> np.ndarray:
    if isinstance(f, BoundaryData):
        if f.level != mesh.level:
            raise ValueError(
                f"boundary data is level {f.level}, mesh is level {mesh.level}")
        return np.asarray(f.values, dtype=float)
    vals = np.asarray(f, dtype=float)
    if vals.shape != (mesh.num_boundary_vertices,):
        raise ValueError(
            f"expected {mesh.num_boundary_vertices} boundary values, "
            f"got shape {vals.shape}")
    return vals


def harmonic_extend(mesh: Mesh, f, c0: float = 1.0) -> np.ndarray:
    """Extend boundary data to all vertices with zero Laplacian inside.

    Returns a vector on all mesh vertices equal to f on the boundary.
    Direct sparse factorization up to DIRECT_SOLVE_LIMIT interior vertices,
    conjugate gradients beyond; either way the interior residual is checked.
    """
    vals = _as_values(mesh, f)
    u = np.zeros(mesh.num_vertices)
    bidx = mesh.boundary_vertices
    u[bidx] = vals
    iidx = mesh.interior_vertices
    if len(iidx) == 0:
        return u

    S = assemble(mesh, "full", c0).S
    S_II = S[iidx][:, iidx].tocsc()
    S_IB = S[iidx][:, bidx]
    rhs = -(S_IB @ vals)

    if len(iidx) <= DIRECT_SOLVE_LIMIT:
        u_int = splu(S_II).solve(rhs)
    else:
        u_int, info = cg(S_II.tocsr(), rhs, rtol=1e-13, atol=0.0,
                         maxiter=20 * len(iidx))
        if info != 0:
            raise NumericalError(
                f"conjugate gradients did not converge (info={info})")

    scale = max(1.0, float(np.max(np.abs(rhs))) if len(rhs) else 1.0)
    resid = float(np.max(np.abs(S_II @ u_int - rhs)))
    if resid > 1e-9 * scale:
        raise NumericalError(
            f"interior solve residual {resid:.3e} above tolerance")

    u[iidx] = u_int
    return u


def energy_split(mesh: Mesh, u: np.ndarray, c0: float = 1.0
                 ) -> tuple[float, float]:
    """(interior-edge energy, boundary-edge energy); the two sum to the
    graph energy of u."""
    u = np.asarray(u, dtype=float)
    if u.shape != (mesh.num_vertices,):
        raise ValueError(
            f"vector has shape {u.shape}, mesh has {mesh.num_vertices} vertices")
    c = edge_conductances(mesh, c0)
    d = u[mesh.edges[:, 0]] - u[mesh.edges[:, 1]]
    e = c * d * d
    b = mesh.edge_is_boundary
    return float(np.sum(e[~b])), float(np.sum(e[b]))


def decay_profile(mesh: Mesh, u: np.ndarray) -> list[tuple[int, float]]:
    """Sup of |u| over interior vertices, grouped by graph hop distance to
    the nearest boundary vertex (distance 1 is the first interior shell)."""
    u = np.asarray(u, dtype=float)
    if u.shape != (mesh.num_vertices,):
        raise ValueError(
            f"vector has shape {u.shape}, mesh has {mesh.num_vertices} vertices")
    dist = boundary_hop_distance(mesh)
    out = []
    for d in range(1, int(dist.max()) + 1):
        shell = dist == d
        if shell.any():
            out.append((d, float(np.max(np.abs(u[shell])))))
    return out

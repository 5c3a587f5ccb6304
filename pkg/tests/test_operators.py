import numpy as np
import pytest
import scipy.sparse as sp

from snowlab.lattice import build_mesh
from snowlab.operators import (
    KINDS,
    apply,
    assemble,
    conductance,
    edge_conductances,
    energy,
    energy_sequence,
    m_inner,
    measure,
)


def test_conductance_values(mesh4):
    ib, bb = mesh4.edges[~mesh4.edge_is_boundary][0], mesh4.edges[mesh4.edge_is_boundary][0]
    assert conductance(mesh4, int(ib[0]), int(ib[1])) == 1.0
    assert conductance(mesh4, int(bb[0]), int(bb[1])) == 256.0
    assert conductance(mesh4, int(bb[1]), int(bb[0])) == 256.0
    # non-adjacent: two distinct boundary tips are never neighbors
    deg = mesh4.degrees()
    tips = np.flatnonzero(mesh4.boundary_flags & (deg == 2))[:2]
    assert conductance(mesh4, int(tips[0]), int(tips[1])) == 0.0


def test_conductance_c0_scaling(mesh2):
    bb = mesh2.edges[mesh2.edge_is_boundary][0]
    ib = mesh2.edges[~mesh2.edge_is_boundary][0]
    assert conductance(mesh2, int(bb[0]), int(bb[1]), c0=2.5) == 2.5 * 16.0
    assert conductance(mesh2, int(ib[0]), int(ib[1]), c0=2.5) == 1.0


def test_conductance_index_range(mesh1):
    with pytest.raises(IndexError):
        conductance(mesh1, 0, mesh1.num_vertices)


def test_measure_values(mesh1, mesh4):
    center = int(mesh1.interior_vertices[0])
    assert measure(mesh1, center) == 1.0 / 9.0
    assert measure(mesh4, int(mesh4.boundary_vertices[0])) == 1.0 / 256.0


@pytest.mark.parametrize("level", (1, 2))
@pytest.mark.parametrize("kind", KINDS)
def test_assemble_shapes(level, kind):
    mesh = build_mesh(level)
    op = assemble(mesh, kind)
    expected = {"full": mesh.num_vertices,
                "dirichlet": mesh.num_interior_vertices,
                "boundary": mesh.num_boundary_vertices}[kind]
    assert op.dimension == expected
    assert op.S.shape == (expected, expected)
    assert op.m.shape == (expected,)
    assert np.all(op.m > 0)


@pytest.mark.parametrize("kind", KINDS)
def test_stiffness_structure(mesh2, kind):
    op = assemble(mesh2, kind)
    S = op.S
    assert (S - S.T).nnz == 0
    off = S - sp.diags(S.diagonal())
    assert off.nnz == 0 or off.data.max() <= 0
    if kind in ("full", "boundary"):
        # conductances are integers at c0=1, so row sums cancel exactly
        assert np.abs(S.sum(axis=1)).max() == 0.0
    w = np.linalg.eigvalsh(S.toarray())
    floor = -1e-9 * abs(w[-1])
    assert w[0] >= floor
    if kind == "dirichlet":
        assert w[0] > 0


def test_mass_exact(mesh3):
    op = assemble(mesh3, "full")
    interior = ~mesh3.boundary_flags[op.vertex_map]
    assert np.all(op.m[interior] == 1.0 / 9**3)
    assert np.all(op.m[~interior] == 1.0 / 4**3)
    # inv_m holds the exact integer reciprocals (9^n, 4^n are exact doubles);
    # m is the correctly rounded 1/x, so the product sits within 1 ulp of 1
    assert np.all(op.inv_m[interior] == 729.0)
    assert np.all(op.inv_m[~interior] == 64.0)
    assert np.abs(op.inv_m * op.m - 1.0).max() <= 2.0**-52


def test_dirichlet_is_full_restriction(mesh2):
    full = assemble(mesh2, "full").S.toarray()
    dirich = assemble(mesh2, "dirichlet").S.toarray()
    keep = mesh2.interior_vertices
    assert np.array_equal(dirich, full[np.ix_(keep, keep)])


def test_boundary_kind_edges(mesh2):
    op = assemble(mesh2, "boundary")
    # diagonal: two boundary edges per boundary vertex at weight c0*4^n
    assert np.all(op.S.diagonal() == 4.0 * 16.0)
    assert np.array_equal(op.vertex_map, mesh2.boundary_vertices)


def test_apply_constant_and_indicator(mesh1):
    op = assemble(mesh1, "full")
    z = apply(op, np.ones(op.dimension))
    assert np.abs(z).max() == 0.0
    center = int(mesh1.interior_vertices[0])
    e = np.zeros(op.dimension)
    e[center] = 1.0
    assert apply(op, e)[center] == 108.0


def test_apply_dimension_mismatch(mesh1):
    op = assemble(mesh1, "full")
    with pytest.raises(ValueError):
        apply(op, np.ones(op.dimension + 1))


def test_energy_examples(mesh0):
    assert energy(mesh0, np.ones(3)) == 0.0
    u = np.array([1.0, 0.0, 0.0])
    assert energy(mesh0, u) == 2.0
    assert energy(mesh0, u, c0=2.5) == 5.0


@pytest.mark.parametrize("level", (1, 2, 3))
def test_energy_identity(level, rng):
    # <Lu, u>_m = 2 E_n(u) on random vectors
    mesh = build_mesh(level)
    op = assemble(mesh, "full")
    for _ in range(100):
        u = rng.standard_normal(op.dimension)
        lhs = m_inner(op, apply(op, u), u)
        rhs = 2.0 * energy(mesh, u)
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs))


def test_energy_boundary_part_matches_boundary_kind(mesh2, rng):
    # quadratic form of the boundary bundle = 2 * boundary-edge energy
    op = assemble(mesh2, "boundary")
    u = rng.standard_normal(mesh2.num_vertices)
    c = edge_conductances(mesh2, 1.0)
    bnd = mesh2.edge_is_boundary
    d = u[mesh2.edges[bnd, 0]] - u[mesh2.edges[bnd, 1]]
    e_bd = float(np.sum(c[bnd] * d * d))
    x = u[op.vertex_map]
    quad = float(x @ (op.S @ x))
    assert abs(quad - 2.0 * e_bd) <= 1e-12 * max(1.0, abs(quad))


def test_energy_positive_random(mesh2, rng):
    op = assemble(mesh2, "full")
    for _ in range(20):
        u = rng.standard_normal(op.dimension)
        assert m_inner(op, apply(op, u), u) >= -1e-12


def test_c0_validation(mesh1):
    with pytest.raises(ValueError):
        assemble(mesh1, "full", c0=0.0)
    with pytest.raises(ValueError):
        assemble(mesh1, "full", c0=-1.0)
    with pytest.raises(ValueError):
        assemble(mesh1, "bogus")


def test_energy_sequence_constant():
    assert energy_sequence(lambda x, y: 1.0, 3) == [0.0, 0.0, 0.0, 0.0]


def test_energy_sequence_linear_interior_converges():
    # interior part of E_n(x) approaches sqrt(3) * area = 6/5 geometrically
    seq = energy_sequence(lambda x, y: x, 4, part="interior")
    inc = np.abs(np.diff(seq))
    assert np.all(inc[1:] < inc[:-1])
    assert abs(seq[-1] - 1.2) < 0.05
    total = energy_sequence(lambda x, y: x, 4, part="total")
    bound = energy_sequence(lambda x, y: x, 4, part="boundary")
    assert np.allclose(np.asarray(total), np.asarray(seq) + np.asarray(bound),
                       rtol=1e-12)


def test_energy_sequence_part_validation():
    with pytest.raises(ValueError):
        energy_sequence(lambda x, y: x, 1, part="bogus")

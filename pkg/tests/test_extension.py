import numpy as np
import pytest

from snowlab.extension import (
    BoundaryData,
    alternating_boundary_data,
    decay_profile,
    energy_split,
    harmonic_extend,
    random_boundary_data,
)
from snowlab.lattice import build_mesh
from snowlab.operators import apply, assemble, energy


def test_boundary_data_validation(mesh2):
    with pytest.raises(ValueError):
        BoundaryData(level=2, values=np.ones(5))
    data = BoundaryData(level=2, values=np.ones(48))
    assert data.values.shape == (48,)
    with pytest.raises(ValueError):
        harmonic_extend(mesh2, BoundaryData(level=1, values=np.ones(12)))


def test_alternating_data(mesh2):
    data = alternating_boundary_data(mesh2)
    assert set(np.unique(data.values)) == {-1.0, 1.0}
    assert data.values.sum() == 0.0


def test_random_data_seeded(mesh2):
    a = random_boundary_data(mesh2, seed=5).values
    b = random_boundary_data(mesh2, seed=5).values
    c = random_boundary_data(mesh2, seed=6).values
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_constant_data_extends_constant(mesh2):
    u = harmonic_extend(mesh2, 3.5 * np.ones(mesh2.num_boundary_vertices))
    assert np.abs(u - 3.5).max() <= 1e-12


def test_extension_is_discretely_harmonic(mesh2, rng):
    op = assemble(mesh2, "full")
    f = rng.standard_normal(mesh2.num_boundary_vertices)
    u = harmonic_extend(mesh2, f)
    lap = apply(op, u)
    interior = mesh2.interior_vertices
    scale = max(1.0, np.abs(lap).max())
    assert np.abs(lap[interior]).max() <= 1e-8 * scale
    # boundary values are passed through untouched
    assert np.array_equal(u[mesh2.boundary_vertices], f)


def test_maximum_principle(mesh2, rng):
    for _ in range(10):
        f = rng.standard_normal(mesh2.num_boundary_vertices)
        u = harmonic_extend(mesh2, f)
        inner = u[mesh2.interior_vertices]
        assert inner.max() < f.max() + 1e-12
        assert inner.min() > f.min() - 1e-12


def test_linearity(mesh2, rng):
    f = rng.standard_normal(mesh2.num_boundary_vertices)
    g = rng.standard_normal(mesh2.num_boundary_vertices)
    a, b = 2.5, -1.25
    lhs = harmonic_extend(mesh2, a * f + b * g)
    rhs = a * harmonic_extend(mesh2, f) + b * harmonic_extend(mesh2, g)
    assert np.abs(lhs - rhs).max() <= 1e-12 * max(1.0, np.abs(rhs).max())


def test_energy_minimality(mesh2, rng):
    f = rng.standard_normal(mesh2.num_boundary_vertices)
    u = harmonic_extend(mesh2, f)
    e0 = energy(mesh2, u)
    for _ in range(20):
        v = u.copy()
        v[mesh2.interior_vertices] += 0.1 * rng.standard_normal(
            mesh2.num_interior_vertices)
        assert energy(mesh2, v) >= e0 - 1e-12


def test_energy_split_sums(mesh2, rng):
    u = rng.standard_normal(mesh2.num_vertices)
    e_int, e_bd = energy_split(mesh2, u)
    total = energy(mesh2, u)
    assert e_int >= 0 and e_bd >= 0
    assert abs((e_int + e_bd) - total) <= 1e-12 * max(1.0, total)


def test_energy_split_c0(mesh2, rng):
    u = rng.standard_normal(mesh2.num_vertices)
    e_int1, e_bd1 = energy_split(mesh2, u, c0=1.0)
    e_int2, e_bd2 = energy_split(mesh2, u, c0=2.0)
    assert e_int2 == pytest.approx(e_int1, rel=1e-14)
    assert e_bd2 == pytest.approx(2.0 * e_bd1, rel=1e-14)


def test_alternating_decay_profile(mesh3):
    # oscillating boundary data fades with hop distance from the boundary
    u = harmonic_extend(mesh3, alternating_boundary_data(mesh3))
    profile = decay_profile(mesh3, u)
    dists = [d for d, _ in profile]
    assert dists == sorted(dists)
    assert dists[0] == 1
    sups = [s for _, s in profile]
    assert sups[0] > sups[1] > sups[2]


def test_level0_extension():
    mesh = build_mesh(0)
    f = np.array([1.0, -2.0, 0.5])
    u = harmonic_extend(mesh, f)
    assert np.array_equal(u, f)

import math

import numpy as np
import pytest

from nodal_lab import geometry as geo

from conftest import polar_coords


def test_domain_measures():
    assert geo.DomainSpec.interval(1.0).measure == 2.0
    assert geo.DomainSpec.rectangle(1.0, 2.0).measure == 2.0
    assert geo.DomainSpec.disc(1.0).measure == pytest.approx(math.pi)
    assert geo.DomainSpec.annulus(0.5, 1.0).measure == pytest.approx(0.75 * math.pi)


def test_invalid_specs_rejected():
    with pytest.raises(ValueError):
        geo.DomainSpec.interval(-1.0)
    with pytest.raises(ValueError):
        geo.DomainSpec.rectangle(0.0, 1.0)
    with pytest.raises(ValueError):
        geo.DomainSpec.annulus(1.0, 0.5)
    with pytest.raises(ValueError):
        geo.build_grid(geo.DomainSpec.interval(1.0), 4)
    with pytest.raises(ValueError):
        geo.build_grid(geo.DomainSpec.disc(1.0), (64, 127))  # odd angles


def test_interval_grid_layout():
    g = geo.build_grid(geo.DomainSpec.interval(1.0), 8)
    assert g.n_nodes == 8
    assert np.allclose(g.coords[:, 0] + g.coords[::-1, 0], 0.0)
    assert np.sum(g.weights) == pytest.approx(2.0, rel=1e-14)
    # interior weights uniform, ends half
    assert np.allclose(g.weights[1:-1], g.weights[1])
    assert g.weights[0] == pytest.approx(g.weights[1] / 2)


def test_weight_sums_match_measure(disc_grid, annulus_grid):
    ones = np.ones(disc_grid.n_nodes)
    assert geo.integrate(disc_grid, ones) == pytest.approx(math.pi, rel=1e-12)
    ones = np.ones(annulus_grid.n_nodes)
    assert geo.integrate(annulus_grid, ones) == pytest.approx(0.75 * math.pi, rel=1e-12)


def test_integrate_odd_field_vanishes(disc_grid):
    assert abs(geo.integrate(disc_grid, disc_grid.x1)) <= 1e-12


def test_integrate_x1_squared(disc_grid):
    val = geo.integrate(disc_grid, disc_grid.x1 ** 2)
    assert val == pytest.approx(math.pi / 4, abs=2e-4)


def test_dirichlet_energy_constant_in_kernel(disc_grid):
    assert geo.dirichlet_energy(disc_grid, 3.0 * np.ones(disc_grid.n_nodes)) <= 1e-14


def test_dirichlet_energy_linear_interval():
    g = geo.build_grid(geo.DomainSpec.interval(1.0), 512)
    assert geo.dirichlet_energy(g, g.coords[:, 0]) == pytest.approx(2.0, abs=1e-10)


def test_dirichlet_energy_linear_disc_second_order():
    errs = []
    for res in [(16, 32), (32, 64), (64, 128)]:
        g = geo.build_grid(geo.DomainSpec.disc(1.0), res)
        errs.append(abs(geo.dirichlet_energy(g, g.x1) - math.pi))
    rates = [math.log2(errs[k] / errs[k + 1]) for k in range(2)]
    assert min(rates) >= 1.8


def test_integration_by_parts_exact(disc_grid):
    rng = np.random.default_rng(0)
    for _ in range(3):
        u = rng.standard_normal(disc_grid.n_nodes)
        v = rng.standard_normal(disc_grid.n_nodes)
        lhs = geo.edge_form(disc_grid, u, v)
        rhs = geo.integrate(disc_grid, v * geo.laplacian(disc_grid, u))
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_size_mismatch_rejected(disc_grid):
    with pytest.raises(ValueError):
        geo.integrate(disc_grid, np.ones(3))
    with pytest.raises(ValueError):
        geo.dirichlet_energy(disc_grid, np.ones(3))


def test_reflect_x1_axis(disc_grid):
    hid = disc_grid.polar["n_theta"] // 2    # line at angle pi/2 = {x1 = 0}
    out = geo.reflect(disc_grid, disc_grid.x1, hid)
    assert np.max(np.abs(out + disc_grid.x1)) <= 1e-14


def test_reflect_radial_invariance(disc_grid):
    # exactly ring-constant field (hypot-based radii differ at ulp level)
    r = np.repeat(disc_grid.polar["ring_radii"], disc_grid.polar["n_theta"])
    for hid in (0, 3, 64):
        assert np.array_equal(geo.reflect(disc_grid, 1.0 - r * r, hid), 1.0 - r * r)


def test_reflect_involution_bit_exact(disc_grid):
    rng = np.random.default_rng(5)
    u = rng.standard_normal(disc_grid.n_nodes)
    for hid in (0, 1, 17):
        assert np.array_equal(geo.reflect(disc_grid, geo.reflect(disc_grid, u, hid), hid), u)


def test_reflect_preserves_quadrature_and_energy(disc_grid):
    rng = np.random.default_rng(6)
    u = rng.standard_normal(disc_grid.n_nodes)
    r = geo.reflect(disc_grid, u, 9)
    assert geo.integrate(disc_grid, r) == pytest.approx(
        geo.integrate(disc_grid, u), rel=1e-12, abs=1e-12)
    assert geo.dirichlet_energy(disc_grid, r) == pytest.approx(
        geo.dirichlet_energy(disc_grid, u), rel=1e-12)
    perm = disc_grid.reflection_perm(9)
    assert np.array_equal(disc_grid.weights[perm], disc_grid.weights)


def test_reflect_unsupported_hyperplane(disc_grid, interval_grid):
    with pytest.raises(ValueError):
        geo.reflect(disc_grid, disc_grid.x1, 128)
    with pytest.raises(ValueError):
        geo.reflect(interval_grid, interval_grid.coords[:, 0], 1)


def test_rectangle_grid_and_reflections():
    g = geo.build_grid(geo.DomainSpec.rectangle(1.0, 2.0), (16, 24))
    assert np.sum(g.weights) == pytest.approx(2.0, rel=1e-13)
    x = g.coords[:, 0]
    assert geo.dirichlet_energy(g, x) == pytest.approx(2.0, rel=1e-12)
    assert np.max(np.abs(geo.reflect(g, x, 0) + x)) <= 1e-14
    y = g.coords[:, 1]
    assert np.max(np.abs(geo.reflect(g, y, 1) + y)) <= 1e-14


def test_angular_profiles(disc_grid):
    r, th = polar_coords(disc_grid)
    profiles, means = geo.angular_profiles(disc_grid, r)
    assert np.allclose(profiles, profiles[:, :1])          # radial: rows constant
    profiles, means = geo.angular_profiles(disc_grid, np.cos(th))
    thetas = disc_grid.polar["thetas"]
    assert np.allclose(profiles[10], np.cos(thetas), atol=1e-12)
    _, means = geo.angular_profiles(disc_grid, disc_grid.x1)
    assert np.max(np.abs(means)) <= 1e-12


def test_angular_profiles_wrong_domain(interval_grid):
    with pytest.raises(ValueError):
        geo.angular_profiles(interval_grid, interval_grid.coords[:, 0])


def test_gradient_magnitude_linear(disc_grid):
    gm = geo.gradient_magnitude(disc_grid, disc_grid.x1)
    assert np.max(np.abs(gm - 1.0)) <= 0.02


def test_field_csv_roundtrip(tmp_path, disc_grid, interval_grid):
    rng = np.random.default_rng(1)
    for g in (disc_grid, interval_grid):
        u = rng.standard_normal(g.n_nodes)
        path = tmp_path / f"{g.kind}.csv"
        geo.write_field_csv(g, u, path)
        back = geo.read_field_csv(path)
        assert np.array_equal(back, u)
    header = (tmp_path / "interval.csv").read_text().splitlines()[0]
    assert header == "x,weight,value"
    header = (tmp_path / "disc.csv").read_text().splitlines()[0]
    assert header == "x,y,weight,value"


def test_grid_dict_roundtrip(disc_grid, interval_grid, annulus_grid):
    for g in (disc_grid, interval_grid, annulus_grid):
        g2 = geo.grid_from_dict(g.to_dict())
        assert g2.n_nodes == g.n_nodes
        assert np.array_equal(g2.coords, g.coords)
        assert np.array_equal(g2.weights, g.weights)


def test_disc_node_layout(disc_grid):
    # cell-centered rings (j + 1/2) dr with no node at the origin and the
    # last ring on the boundary (gradient coverage up to the wall)
    nr = disc_grid.polar["n_r"]
    dr = 1.0 / (nr - 0.5)
    rr = disc_grid.polar["ring_radii"]
    assert np.allclose(rr[:-1], (np.arange(nr - 1) + 0.5) * dr, rtol=1e-14)
    assert rr[0] > 0.0
    assert rr[-1] == 1.0

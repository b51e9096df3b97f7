import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import beta as beta_fn

from lavgap.domain_grid import (AnalyticField, Domain, GridFunction, Mesh, build_disk_mesh, gradient,
                                holder_seminorm_estimate, integrate, interpolate, read_field_csv,
                                spherical_quadrature, triangle_rule, write_field_csv)
from lavgap.errors import DivergenceError, GeometryError, ParameterError


def _polygon_area(pts):
    ang = np.arctan2(pts[:, 1], pts[:, 0])
    p = pts[np.argsort(ang)]
    x, y = p[:, 0], p[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


@pytest.mark.parametrize("h", [1 / 4, 1 / 8, 1 / 16])
def test_disk_mesh_geometry(h):
    mesh = build_disk_mesh(1.0, h)
    T = mesh.nodes[mesh.cells]
    edges = np.stack([T[:, 1] - T[:, 0], T[:, 2] - T[:, 1], T[:, 0] - T[:, 2]], 1)
    assert np.linalg.norm(edges, axis=-1).max() <= h + 1e-12
    assert np.all(mesh.signed_areas > 0)
    # the mesh fills the inscribed polygon of its boundary nodes
    b = mesh.nodes[mesh.boundary_nodes]
    assert np.allclose(np.linalg.norm(b, axis=1), 1.0)
    assert mesh.volume == pytest.approx(_polygon_area(b), rel=1e-12)
    assert mesh.interior_nodes.size + mesh.boundary_nodes.size == mesh.n_nodes


def test_graded_mesh_refines_centre():
    g1 = build_disk_mesh(1.0, 1 / 8)
    g3 = build_disk_mesh(1.0, 1 / 8, grading=3.0)
    near = lambda m: np.linalg.norm(m.centroids, axis=1) < 0.1
    assert g3.areas[near(g3)].max() < g1.areas[near(g1)].max()


def test_inverted_cell_rejected():
    nodes = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(GeometryError):
        Mesh(nodes, np.array([[0, 2, 1]]), np.arange(3), 1.5)


def _monomial_integral(a, b):
    # int over the reference triangle of x^a y^b = a! b! / (a + b + 2)!
    return math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)


@pytest.mark.parametrize("order,deg", [(1, 1), (2, 2), (5, 5)])
def test_triangle_rule_exactness(order, deg):
    r = triangle_rule(order)
    for a in range(deg + 1):
        for b in range(deg + 1 - a):
            got = float(np.dot(r.weights, r.points[:, 0] ** a * r.points[:, 1] ** b))
            assert got == pytest.approx(_monomial_integral(a, b), rel=1e-13, abs=1e-15)


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_gradient_of_linear_is_exact(c0, c1, c2):
    mesh = build_disk_mesh(1.0, 1 / 4)
    u = interpolate(mesh, lambda x: c0 + c1 * x[..., 0] + c2 * x[..., 1])
    g = gradient(u)
    assert np.allclose(g, [c1, c2], atol=1e-11 * (1 + abs(c0) + abs(c1) + abs(c2)))


def test_locate_and_evaluate(mesh16):
    cell, bary = mesh16.locate(mesh16.centroids)
    assert np.array_equal(cell, np.arange(mesh16.n_cells))
    assert np.allclose(bary, 1 / 3)
    f = lambda x: 1.0 - 2.0 * x[..., 0] + 0.5 * x[..., 1]
    rng = np.random.default_rng(0)
    pts = rng.uniform(-0.7, 0.7, (500, 2))
    assert np.allclose(mesh16.evaluate(interpolate(mesh16, f).values, pts), f(pts), atol=1e-12)
    out = mesh16.evaluate(np.ones(mesh16.n_nodes), np.array([[2.0, 0.0]]), fill=-7.0)
    assert out[0] == -7.0


def test_integrate_polynomial_on_mesh(mesh16):
    u = GridFunction(mesh16, np.ones(mesh16.n_nodes))
    assert integrate(u, mesh16) == pytest.approx(mesh16.volume, rel=1e-14)
    # int_{B1} x^2 = pi / 4; polygon error is O(h^2)
    assert integrate(lambda x: x[..., 0] ** 2, mesh16) == pytest.approx(math.pi / 4, rel=5e-3)


def test_gridfunction_arithmetic(mesh8):
    u = interpolate(mesh8, lambda x: x[..., 0])
    v = interpolate(mesh8, lambda x: x[..., 1])
    w = 2.0 * (u + v) - v
    assert np.allclose(w.values, 2 * mesh8.nodes[:, 0] + mesh8.nodes[:, 1])
    assert np.allclose(w(mesh8.nodes[:3]), w.values[:3])


def test_spherical_quadrature_radial_singularity():
    # int_0^1 r^-0.5 dr = 2
    val = spherical_quadrature(2, (lambda r: r ** -0.5, lambda t: np.ones_like(t)),
                               angular_ranges=[(0.0, 1.0)], radial_exponent=-0.5, rtol=1e-12)
    assert val == pytest.approx(2.0, rel=1e-10)


def test_spherical_quadrature_angular_singularity():
    # int_{pi/4}^{3pi/4} |cos 2t|^b dt = (1/2) B(1/2, (b+1)/2)
    b = -1 / 3
    sings = [(math.pi / 4, b), (3 * math.pi / 4, b)]
    val = spherical_quadrature(2, (lambda r: np.ones_like(r), lambda t: np.abs(np.cos(2 * t)) ** b),
                               angular_ranges=[(math.pi / 4, 3 * math.pi / 4)],
                               angular_singularities=sings, rtol=1e-12)
    assert val == pytest.approx(0.5 * beta_fn(0.5, (b + 1) / 2), rel=1e-9)


def test_spherical_quadrature_unit_ball_volume():
    val = spherical_quadrature(3, (lambda r: r * r, lambda t: np.ones_like(t), np.sin), rtol=1e-12)
    assert val == pytest.approx(4 * math.pi / 3, rel=1e-12)


def test_spherical_quadrature_divergent():
    with pytest.raises(DivergenceError):
        spherical_quadrature(2, (lambda r: 1 / r, lambda t: np.ones_like(t)), radial_exponent=-1.0)


def _holder_brute(vals, pts, gamma):
    best = 0.0
    for i in range(len(pts)):
        for j in range(len(pts)):
            d = math.dist(pts[i], pts[j])
            if d > 0:
                best = max(best, abs(vals[i] - vals[j]) / d ** gamma)
    return best


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.1, 1.0))
def test_holder_estimate_matches_brute_force(seed, gamma):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1, 1, (30, 2))
    vals = rng.normal(size=30)
    got = holder_seminorm_estimate(vals, gamma, pts)
    assert got == pytest.approx(_holder_brute(vals, pts, gamma), rel=1e-12)


def test_holder_of_abs_is_one(mesh16):
    assert holder_seminorm_estimate(lambda x: np.linalg.norm(x, axis=-1), 1.0, mesh16.nodes) == \
        pytest.approx(1.0, rel=1e-12)
    with pytest.raises(ParameterError):
        holder_seminorm_estimate(np.zeros(3), 1.5, np.zeros((3, 2)))


def test_mesh_json_roundtrip(tmp_path, mesh8):
    p = tmp_path / "m.json"
    mesh8.to_json(p)
    m2 = Mesh.from_json(p)
    assert np.array_equal(m2.nodes, mesh8.nodes) and np.array_equal(m2.cells, mesh8.cells)
    assert np.array_equal(m2.boundary_nodes, mesh8.boundary_nodes)


def test_field_csv_roundtrip(tmp_path, mesh8):
    u = interpolate(mesh8, lambda x: np.sin(3 * x[..., 0]) * x[..., 1])
    p = tmp_path / "u.csv"
    write_field_csv(u, p)
    assert np.array_equal(read_field_csv(mesh8, p).values, u.values)


def test_analytic_field_scaled():
    f = AnalyticField(lambda x: x[..., 0] ** 2, lambda x: np.stack([2 * x[..., 0], 0 * x[..., 0]], -1), "x1^2")
    g = f.scaled(3.0)
    x = np.array([[0.5, 0.1]])
    assert g.value(x)[0] == pytest.approx(0.75)
    assert np.allclose(g.grad(x), [[3.0, 0.0]])


def test_domain_ball():
    d = Domain.ball(2.0)
    assert d.diameter == 4.0

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lavgap.domain_grid import AnalyticField, GridFunction, build_disk_mesh, gradient, interpolate
from lavgap.energy import (DoublePhaseIntegrand, InvalidExponentError, OrthotropicIntegrand, SandwichIntegrand,
                           UnboundedModularError, VariableExponentIntegrand, energy, energy_orthotropic,
                           energy_variable_exponent, log_holder_seminorm, luxemburg_norm, m_eval, modular,
                           modular_distance, regime_classify, sandwich_check, truncate,
                           uniform_integrability_probe)
from lavgap.errors import ParameterError
from lavgap.weights import named_weight, power_weight


@pytest.fixture(scope="module")
def integrand():
    return DoublePhaseIntegrand(2.0, 3.0, power_weight(1.0))


def test_linear_field_energy(mesh32, integrand):
    c = np.array([0.6, -0.8])                       # |c| = 1
    u = interpolate(mesh32, lambda x: x @ c)
    br = energy(integrand, u)
    assert br.p_part == pytest.approx(mesh32.volume, rel=1e-13)
    # int_{B1} |x| dx = 2 pi / 3 (polygon error O(h^2))
    assert br.q_part == pytest.approx(2 * math.pi / 3, rel=3e-3)
    assert br.total == br.p_part + br.q_part


def test_analytic_field_matches_p1_for_linear(mesh16, integrand):
    c = np.array([1.5, 0.5])
    u = interpolate(mesh16, lambda x: x @ c)
    f = AnalyticField(lambda x: x @ c, lambda x: np.broadcast_to(c, x.shape), "linear")
    a, b = energy(integrand, u), energy(integrand, f, mesh16)
    assert a.p_part == pytest.approx(b.p_part, rel=1e-12)
    assert a.q_part == pytest.approx(b.q_part, rel=1e-12)
    with pytest.raises(ParameterError):
        energy(integrand, f)


def test_m_eval(integrand):
    x = np.array([[0.0, 0.5]])
    assert m_eval(integrand, x, np.array([2.0]))[0] == pytest.approx(4.0 + 0.5 * 8.0)
    with pytest.raises(ParameterError):
        m_eval(integrand, x, np.array([-1.0]))
    with pytest.raises(ParameterError):
        DoublePhaseIntegrand(3.0, 2.0, power_weight(1.0))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 1000), st.floats(0.05, 2.0))
def test_truncation_lowers_energy(seed, k):
    mesh = build_disk_mesh(1.0, 1 / 8)
    integrand = DoublePhaseIntegrand(1.5, 4.0, named_weight("cone", 1.0))
    u = GridFunction(mesh, np.random.default_rng(seed).normal(size=mesh.n_nodes))
    assert energy(integrand, truncate(u, k)).total <= energy(integrand, u).total * (1 + 1e-14)


def test_truncation_large_level_is_identity(mesh8, integrand):
    u = interpolate(mesh8, lambda x: x[..., 0])
    assert energy(integrand, truncate(u, 10.0)).total == energy(integrand, u).total
    with pytest.raises(ParameterError):
        truncate(u, 0.0)


def test_luxemburg_unit_ball(mesh16, integrand):
    rng = np.random.default_rng(7)
    for _ in range(10):
        xi = rng.normal(size=(mesh16.n_cells, 2)) * rng.uniform(0.1, 2.0)
        nrm = luxemburg_norm(integrand, xi, mesh16)
        assert (nrm <= 1.0) == (modular(integrand, xi, mesh16) <= 1.0)
        # the modular of xi / ||xi|| sits at 1
        assert modular(integrand, xi / nrm, mesh16) == pytest.approx(1.0, rel=1e-7)


def test_luxemburg_pure_power_closed_form(mesh16):
    ig = DoublePhaseIntegrand.unweighted(3.0)
    xi = np.random.default_rng(2).normal(size=(mesh16.n_cells, 2))
    t = np.linalg.norm(xi, axis=1)
    want = math.fsum(mesh16.areas * t ** 3) ** (1 / 3)
    assert luxemburg_norm(ig, xi, mesh16) == pytest.approx(want, rel=1e-7)
    assert luxemburg_norm(ig, np.zeros_like(xi), mesh16) == 0.0


def test_luxemburg_bracket_exhausted(mesh8, integrand):
    xi = np.ones((mesh8.n_cells, 2)) * 1e20
    with pytest.raises(UnboundedModularError):
        luxemburg_norm(integrand, xi, mesh8, bracket=(1e-12, 1.0))


def test_modular_distance_properties(mesh16, integrand):
    rng = np.random.default_rng(3)
    a, b = rng.normal(size=(2, mesh16.n_cells, 2))
    assert modular_distance(integrand, a, a, mesh16) == 0.0
    assert modular_distance(integrand, a, b, mesh16) == modular_distance(integrand, b, a, mesh16)
    with pytest.raises(ParameterError):
        modular(integrand, np.zeros((3, 2)), mesh16)


def test_uniform_integrability_probe(mesh16):
    dens = np.full(mesh16.n_cells, 2.0)
    out = uniform_integrability_probe([dens], mesh16, (0.1, 0.01))
    assert out[0.1] == pytest.approx(0.2 * mesh16.volume, rel=1e-12)
    assert out[0.01] == pytest.approx(0.02 * mesh16.volume, rel=1e-12)
    # a concentrating family: the worst eps-integral does not shrink with the spike width
    spike = lambda r: np.where(np.linalg.norm(mesh16.centroids, axis=1) < r, 1 / r ** 2, 0.0)
    out = uniform_integrability_probe([spike(0.1), spike(0.2)], mesh16, (0.05,))
    assert out[0.05] > 1.0
    with pytest.raises(ParameterError):
        uniform_integrability_probe([], mesh16)


def test_sandwich_check(integrand):
    rng = np.random.default_rng(0)
    xs = rng.uniform(-0.7, 0.7, (200, 2))
    zs = rng.normal(size=200)
    xis = rng.normal(size=(200, 2))
    good = SandwichIntegrand(lambda x, z, xi: (1 + 0.5 * np.sin(z)) * m_eval(integrand, x, np.linalg.norm(xi, axis=-1)),
                             0.4, 2.0)
    assert sandwich_check(good, integrand, xs, zs, xis)["passed"]
    bad = SandwichIntegrand(lambda x, z, xi: 3 * m_eval(integrand, x, np.linalg.norm(xi, axis=-1)), 0.4, 2.0)
    rep = sandwich_check(bad, integrand, xs, zs, xis)
    assert not rep["passed"] and "witness" in rep
    with pytest.raises(ParameterError):
        SandwichIntegrand(lambda *a: 0, 1.5, 2.0)


def test_variable_exponent_reduces_to_constant(mesh16, integrand):
    u = interpolate(mesh16, lambda x: np.sin(2 * x[..., 0]) + x[..., 1] ** 2)
    ve = VariableExponentIntegrand(lambda x: 2.0, lambda x: 3.0, integrand.a)
    assert energy_variable_exponent(ve, u) == pytest.approx(energy(integrand, u).total, rel=1e-12)
    with pytest.raises(InvalidExponentError):
        energy_variable_exponent(VariableExponentIntegrand(lambda x: 3.0, lambda x: 2.5, integrand.a), u)


def test_log_holder_seminorm(mesh32):
    assert log_holder_seminorm(lambda x: np.full(x.shape[0], 2.0), mesh32) == 0.0
    # sup of d log(1/d) is 1/e at d = 1/e, attained for pairs along the x1 axis
    s = log_holder_seminorm(lambda x: 2.0 + x[:, 0], mesh32)
    assert 0.99 / math.e <= s <= 1 / math.e + 1e-12


def test_orthotropic_explicit(mesh16):
    one = named_weight("one")
    u = interpolate(mesh16, lambda x: x[..., 0] ** 2 - x[..., 1])
    g = gradient(u)
    oi = OrthotropicIntegrand((2.0, 3.0), (4.0, 5.0), (one, one))
    want = math.fsum(mesh16.areas * (g[:, 0] ** 2 + g[:, 0] ** 4 + np.abs(g[:, 1]) ** 3 + np.abs(g[:, 1]) ** 5))
    assert energy_orthotropic(oi, u) == pytest.approx(want, rel=1e-12)


REGIME_VECTORS = [
    ((2, 2, 3, 1, None), "NoGap-I"),
    ((2, 1.5, 4, 1, None), "Gap-Sharpness"),
    ((2, 3, 4.4, 1, None), "NoGap-Morrey"),
    ((2, 2, 4, 1, 0.5), "NoGap-Hölder"),
    ((2, 1.5, 4, 2.5, None), "NoGap-I"),
    ((2, 1.5, 4, 3, None), "NoGap-I"),
]


@pytest.mark.parametrize("args,verdict", REGIME_VECTORS)
def test_regime_vectors(args, verdict):
    assert regime_classify(*args).verdict == verdict


def test_regime_outside_and_invalid():
    assert regime_classify(2, 2.5, 4, 1).verdict == "Outside-Theorems"
    for bad in [(1, 2, 3, 1), (2, 1, 3, 1), (2, 3, 2, 1), (2, 2, 3, 0), (2, 2, 3, 1, 1.5), (2, 2, 3, 1, 0)]:
        with pytest.raises(ParameterError):
            regime_classify(*bad)


@settings(max_examples=300, deadline=None)
@given(st.integers(2, 4), st.floats(1.01, 6), st.floats(0.01, 6), st.floats(0.05, 5),
       st.one_of(st.none(), st.floats(0.01, 1.0)))
def test_regime_total_and_consistent(n, p, dq, kappa, gamma):
    q = p + dq
    v = regime_classify(n, p, q, kappa, gamma)
    assert v.verdict in {"NoGap-I", "NoGap-Hölder", "NoGap-Morrey", "Gap-Sharpness", "Outside-Theorems"}
    assert v == regime_classify(n, p, q, kappa, gamma)
    P, Q, K = (Fraction(str(t)) for t in (p, q, kappa))      # the classifier compares decimals exactly
    if v.verdict == "Gap-Sharpness":
        assert P < n < n + K < Q
    assert (v.verdict == "NoGap-I") == (Q <= P + K)

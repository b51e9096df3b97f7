import numpy as np
import pytest

from lavgap.counterexample import SharpnessInstance
from lavgap.domain_grid import GridFunction, Mesh, build_disk_mesh, interpolate
from lavgap.energy import DoublePhaseIntegrand, energy, regime_classify
from lavgap.errors import ParameterError, PreconditionError
from lavgap.minimize import (DiscreteProblem, harmonic_extension, minimize_energy, mollified_competitor_family,
                             no_gap_experiment)
from lavgap.mollify import test_function as field_named
from lavgap.weights import named_weight, power_weight


@pytest.mark.parametrize("p,q,wname", [(2.0, 3.0, "one"), (1.5, 4.0, "one"), (3.0, 5.0, "one")])
def test_affine_datum_is_exact_minimiser(mesh16, p, q, wname):
    # constant weight: every interior hat function has zero-mean gradient, so u = l is stationary
    integrand = DoublePhaseIntegrand(p, q, named_weight(wname))
    g = lambda x: 0.7 * x[..., 0] - 0.2 * x[..., 1]
    prob = DiscreteProblem.from_function(mesh16, integrand, g)
    res = minimize_energy(prob)
    assert res.converged
    t = np.hypot(0.7, 0.2)
    assert res.energy == pytest.approx((t ** p + t ** q) * mesh16.volume, rel=1e-9)
    assert np.allclose(res.field.values, g(mesh16.nodes), atol=1e-6)


def test_harmonic_extension_reproduces_linear(mesh16):
    g = lambda x: 1.0 + x[..., 0]
    u = harmonic_extension(mesh16, g(mesh16.nodes[mesh16.boundary_nodes]))
    assert np.allclose(u.values, g(mesh16.nodes), atol=1e-12)


def test_dirichlet_energy_of_x1(mesh16):
    integrand = DoublePhaseIntegrand.unweighted(2.0)
    res = minimize_energy(DiscreteProblem.from_function(mesh16, integrand, lambda x: x[..., 0]))
    assert res.energy == pytest.approx(mesh16.volume, rel=1e-12)


def test_trivial_boundary_data(mesh16):
    integrand = DoublePhaseIntegrand(1.5, 4.0, named_weight("cone", 1.0))
    res = minimize_energy(DiscreteProblem.from_function(mesh16, integrand, lambda x: 0 * x[..., 0]))
    assert res.energy == 0.0


def test_minimiser_beats_start_and_weight(mesh16):
    integrand = DoublePhaseIntegrand(2.0, 3.0, power_weight(1.0))
    g = lambda x: x[..., 0] * x[..., 1] + x[..., 0]
    prob = DiscreteProblem.from_function(mesh16, integrand, g)
    start = interpolate(mesh16, g)
    res = minimize_energy(prob, start)
    assert res.converged
    assert res.energy <= energy(integrand, start).total
    # random feasible perturbations never do better
    rng = np.random.default_rng(0)
    for _ in range(5):
        v = res.field.values.copy()
        v[mesh16.interior_nodes] += 1e-3 * rng.normal(size=mesh16.interior_nodes.size)
        assert energy(integrand, GridFunction(mesh16, v)).total >= res.energy - 1e-12


def test_energy_convex_along_segments(mesh16):
    integrand = DoublePhaseIntegrand(1.5, 4.0, named_weight("cone", 1.0))
    rng = np.random.default_rng(4)
    for _ in range(10):
        a, b = (GridFunction(mesh16, rng.normal(size=mesh16.n_nodes)) for _ in range(2))
        mid = 0.5 * (a + b)
        ea, eb, em = (energy(integrand, f).total for f in (a, b, mid))
        assert em <= 0.5 * (ea + eb) + 1e-10


def test_node_reordering_invariance(mesh16):
    integrand = DoublePhaseIntegrand(2.0, 3.0, power_weight(1.0))
    g = lambda x: x[..., 0] ** 2 - x[..., 1]
    e1 = minimize_energy(DiscreteProblem.from_function(mesh16, integrand, g)).energy
    perm = np.random.default_rng(1).permutation(mesh16.n_nodes)
    inv = np.empty_like(perm)
    inv[perm] = np.arange(perm.size)
    m2 = Mesh(mesh16.nodes[perm], inv[mesh16.cells], inv[mesh16.boundary_nodes], mesh16.h,
              mesh16.domain, dict(mesh16.meta))
    e2 = minimize_energy(DiscreteProblem.from_function(m2, integrand, g)).energy
    assert e2 == pytest.approx(e1, abs=1e-8)


def test_bad_inputs(mesh8):
    integrand = DoublePhaseIntegrand.unweighted(2.0)
    with pytest.raises(ParameterError):
        DiscreteProblem(mesh8, integrand, np.zeros(3))
    prob = DiscreteProblem.from_function(mesh8, integrand, lambda x: x[..., 0])
    with pytest.raises(ParameterError):
        minimize_energy(prob, GridFunction(mesh8, np.zeros(mesh8.n_nodes)))


def test_competitors_keep_boundary_values(mesh16):
    integrand = DoublePhaseIntegrand(2.0, 3.0, power_weight(1.0))
    gI = interpolate(mesh16, lambda x: x[..., 0])
    v = field_named("tent", mesh16)
    fam = mollified_competitor_family(v, gI, (0.2, 0.1), integrand)
    assert max(fam.diagnostics["boundary_deviation"]) == 0.0
    with pytest.raises(ParameterError):
        mollified_competitor_family(gI, gI, (0.1,), integrand)


def test_no_gap_control_without_weight():
    zero = DoublePhaseIntegrand.unweighted(2.0).a
    res = no_gap_experiment(2.0, 3.0, 1.0, weight=zero, h_list=(1 / 8, 1 / 16, 1 / 32))
    assert abs(res["final_relative_gap"]) <= 0.05
    for lv in res["levels"]:
        assert lv["relative_gap"] >= -1e-8


def test_no_gap_trivial_data():
    res = no_gap_experiment(2.0, 3.0, 1.0, g=lambda x: 0 * x[..., 0], h_list=(1 / 4, 1 / 8, 1 / 16))
    assert all(lv["discrete_min"] == 0.0 and lv["best_competitor"] == 0.0 for lv in res["levels"])


def test_experiments_refuse_wrong_regime():
    with pytest.raises(PreconditionError):
        no_gap_experiment(1.5, 4.0, 1.0)
    # kappa = 2.5 puts the cone instance on q = p + kappa: the classifier flips and the instance refuses
    assert regime_classify(2, 1.5, 4.0, 2.5).verdict == "NoGap-I"
    with pytest.raises(ParameterError):
        SharpnessInstance(2, 1.5, 4.0, 2.5)

import math

import numpy as np
import pytest
from scipy.special import gamma as G

from lavgap.counterexample import (GapReport, SharpnessInstance, cone_weight, compute_r1, compute_r2, compute_r3,
                                   compute_t0, ell_eval, gap_report, in_cone, lemma3_check, lower_bound_smooth,
                                   r1_closed_form_2d, r2_closed_form_2d, r2_mesh, r2_mesh_interpolant,
                                   threshold, u0_eval, u_star_eval, u_star_field, u_star_grad, upper_bound_W,
                                   young_chain_check)
from lavgap.domain_grid import build_disk_mesh, interpolate
from lavgap.energy import energy
from lavgap.errors import BoundViolation, DivergenceError, ParameterError


@pytest.fixture(scope="module")
def inst():
    return SharpnessInstance(2, 1.5, 4.0, 1.0, 1.1)


def _beta_r1(q, kappa):
    # int_0^1 r^alpha dr * 2 int_{pi/4}^{3pi/4} |cos 2t|^b dt, the angular factor by the Beta function
    alpha = 1 - (q + kappa) / (q - 1)
    b = -kappa / (q - 1)
    return (1 / (alpha + 1)) * 2 * 0.5 * math.gamma(0.5) * G((b + 1) / 2) / G(b / 2 + 1)


@pytest.mark.parametrize("q,kappa", [(4.0, 1.0), (5.0, 2.0), (3.5, 0.5)])
def test_r1_against_beta_function(q, kappa):
    r = compute_r1(2, q, kappa)
    assert r.value == pytest.approx(_beta_r1(q, kappa), rel=1e-8)
    assert r.rel_diff <= 1e-4
    assert r1_closed_form_2d(q, kappa) == pytest.approx(_beta_r1(q, kappa), rel=1e-14)


def test_r1_divergence():
    with pytest.raises(DivergenceError):
        compute_r1(2, 2.5, 1.0)           # q < n + kappa
    with pytest.raises(DivergenceError):
        compute_r1(2, 3.0, 1.0)           # q = n + kappa, radial exponent exactly -1


def test_r1_three_dimensions():
    r = compute_r1(3, 4.0, 0.5)
    assert r.rel_diff <= 1e-4
    # dropping sin(polar) <= 1 and integrating the azimuth over 2 pi gives an upper bound
    assert r.bound_form >= r.value


@pytest.mark.parametrize("p", [1.2, 1.5, 1.9])
def test_r2_against_closed_form(p):
    # |grad u*| = 2 |cos 2t| / r off the cone: r2 = 2^p / (2 - p) * int over two arcs |cos 2t|^p
    ang = 2 * 0.5 * math.gamma(0.5) * G((p + 1) / 2) / G(p / 2 + 1)
    want = 2 ** p / (2 - p) * ang
    assert compute_r2(2, p) == pytest.approx(want, rel=1e-10)
    assert r2_closed_form_2d(p) == pytest.approx(want, rel=1e-14)


def test_r2_on_mesh():
    mesh = build_disk_mesh(1.0, 1 / 32, grading=3.0)
    r2 = compute_r2(2, 1.5)
    assert r2_mesh(1.5, mesh) == pytest.approx(r2, rel=0.01)
    assert r2_mesh_interpolant(1.5, mesh) == pytest.approx(r2, rel=0.01)


def test_r3():
    assert compute_r3(2) == pytest.approx(math.pi, abs=1e-12)
    assert compute_r3(3) == pytest.approx(4 * math.pi * (1 - math.sqrt(2) / 2), rel=1e-10)


def test_ell_and_cone():
    x = np.array([[0.0, 1.0], [1.0, 0.0], [0.3, 0.4], [0.0, 0.0], [0.5, -0.5]])
    assert np.allclose(ell_eval(x), [1.0, 0.0, (0.16 - 0.09) / 0.5, 0.0, 0.0])
    assert list(in_cone(x)) == [True, False, True, False, False]
    w = cone_weight(2.0)
    assert np.allclose(w.values(x), ell_eval(x) ** 2)


def test_u_star_continuous_across_cone():
    t = np.linspace(0.05, 1.0, 20)
    for s1, s2 in [(1, 1), (-1, 1), (1, -1), (-1, -1)]:
        edge = np.column_stack([s1 * t, s2 * t])
        inner = edge * np.array([1 - 1e-9, 1])
        assert np.allclose(u_star_eval(edge), np.sign(s2))
        assert np.allclose(u_star_eval(inner), np.sign(s2), atol=1e-8)
    assert u_star_eval(np.zeros((1, 2)))[0] == 0.0


@pytest.mark.parametrize("n", [2, 3])
def test_u_star_gradient_finite_differences(n):
    rng = np.random.default_rng(n)
    x = rng.uniform(-1, 1, (200, n))
    e = 1e-6
    fd = np.stack([(u_star_eval(x + e * np.eye(n)[i], n) - u_star_eval(x - e * np.eye(n)[i], n)) / (2 * e)
                   for i in range(n)], -1)
    # stay away from the cone surface where u* has a kink
    side = np.linalg.norm(x[:, :-1], axis=1)
    ok = np.abs(np.abs(x[:, -1]) - side) > 1e-3
    assert np.allclose(fd[ok], u_star_grad(x, n)[ok], atol=1e-6)


def test_u0():
    x = np.array([[0.0, 0.5], [0.5, 0.0]])
    assert np.allclose(u0_eval(x, 2.0), [0.5, 0.0])
    with pytest.raises(ParameterError):
        u0_eval(x, -1.0)


def test_threshold_and_t0():
    r1, r2, r3 = 12.0, 10.0, math.pi
    th = threshold(r1, r2, r3, 1.5, 4.0)
    # at the threshold the two bounds meet: t^p r2 = (r3/q)^q ((q-1)/r1)^(q-1) t^q
    lo = (r3 / 4) ** 4 * (3 / r1) ** 3 * th ** 4
    assert lo == pytest.approx(th ** 1.5 * r2, rel=1e-12)
    assert compute_t0(r1, r2, r3, 1.5, 4.0, 1.2) == pytest.approx(1.2 * th)
    with pytest.raises(ParameterError):
        compute_t0(r1, r2, r3, 1.5, 4.0, 0.9)


def test_instance_bounds(inst):
    assert inst.r3 == pytest.approx(math.pi, abs=1e-6)
    ratio = lower_bound_smooth(inst) / upper_bound_W(inst)
    assert ratio == pytest.approx(1.1 ** 2.5, abs=1e-9)
    assert inst.t0 > inst.threshold


@pytest.mark.parametrize("args", [(2, 2.5, 4.0, 1.0), (2, 1.5, 3.0, 1.0), (2, 1.5, 4.0, 2.5), (4, 1.5, 9.0, 1.0)])
def test_instance_hypotheses(args):
    with pytest.raises(ParameterError):
        SharpnessInstance(*args)


def test_q_part_of_t0_ustar_vanishes(inst):
    mesh = build_disk_mesh(1.0, 1 / 16, grading=3.0)
    br = energy(inst.integrand, u_star_field(inst.t0), mesh)
    assert br.q_part <= 1e-10


def test_gap_report_flags_undercut(inst):
    lo = lower_bound_smooth(inst)
    rep = gap_report(inst, [{"label": "ok", "energy": 2 * lo}])
    assert isinstance(rep, GapReport) and rep.verdict
    assert gap_report(inst, [{"label": "edge", "energy": 0.985 * lo}]).verdict
    with pytest.raises(BoundViolation):
        gap_report(inst, [{"label": "cheat", "energy": 0.9 * lo}])


def test_chain_checks_on_u0_interpolant(inst):
    # along each ray in V the datum u0 runs from 0 to +-t0, so the radial variation is t0 r3
    mesh = build_disk_mesh(1.0, 1 / 32)
    w = interpolate(mesh, inst.u0)
    l3 = lemma3_check(w, inst)
    assert l3["passed"] and l3["ratio"] == pytest.approx(1.0, abs=0.01)
    yc = young_chain_check(w, inst)
    assert yc["passed"] and len(yc["rows"]) == 4

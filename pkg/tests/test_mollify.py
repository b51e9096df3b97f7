import math

import mpmath
import numpy as np
import pytest

from lavgap.domain_grid import build_disk_mesh, gradient, interpolate
from lavgap.energy import DoublePhaseIntegrand
from lavgap.errors import ParameterError
from lavgap.mollify import (ShrinkMollifier, apply, gradient_identity_residual, gradient_via_identity,
                            gradient_via_kernel, holder_grad_bound_check, jensen_domination_check,
                            kernel_constants, l1_error, linf_grad_bound_check, make_kernel,
                            support_report, test_function as field_named)
from lavgap.weights import power_weight


def _mp_constants(n):
    bump = lambda r: mpmath.exp(-1 / (1 - r * r))
    slope = lambda r: 2 * r / (1 - r * r) ** 2 * bump(r)
    area = 2 * mpmath.pi if n == 2 else 4 * mpmath.pi
    z = area * mpmath.quad(lambda r: bump(r) * r ** (n - 1), [0, 1])
    g = area * mpmath.quad(lambda r: slope(r) * r ** (n - 1), [0, 1])
    return float(z), float(g / z)


@pytest.mark.parametrize("n", [2, 3])
def test_kernel_constants_against_mpmath(n):
    z, g = _mp_constants(n)
    for method in ("quadpack", "gauss"):
        zz, gg = kernel_constants(n, method)
        assert zz == pytest.approx(z, rel=1e-10)
        assert gg == pytest.approx(g, rel=1e-9)


def test_kernel_peak_below_one():
    k = make_kernel(2)
    assert 0 < k.peak <= 1
    assert k(np.zeros(2)) == pytest.approx(k.peak)
    assert k(np.array([1.0, 0.0])) == 0.0


def test_offsets_normalised():
    m = ShrinkMollifier(0.1)
    pts, w = m.offsets(1 / 32)
    assert math.fsum(w) == pytest.approx(1.0, abs=1e-15)
    assert np.all(np.linalg.norm(pts, axis=1) < 0.1)
    # symmetric rule: first moment vanishes
    assert np.abs(w @ pts).max() < 1e-15


@pytest.mark.parametrize("delta", [0.0, -0.1, 0.25, 0.3])
def test_delta_range_rejected(delta):
    with pytest.raises(ParameterError):
        ShrinkMollifier(delta)


def test_reproduces_affine_fields(mesh16):
    # symmetric kernel: S(l)(x) = l(x0 + (x - x0)/kappa) for affine l, where the ball stays inside
    f = lambda x: 0.3 + 2.0 * x[..., 0] - x[..., 1]
    m = ShrinkMollifier(0.1)
    v = interpolate(mesh16, f)
    x = mesh16.nodes[np.linalg.norm(mesh16.nodes, axis=1) < 0.6]
    want = f(x / m.kappa)
    assert np.allclose(apply(m, v, x), want, atol=1e-12)
    assert np.allclose(gradient_via_identity(m, v, x), np.array([2.0, -1.0]) / m.kappa, atol=1e-12)


def test_gradient_forms_agree_on_smooth_field(mesh32):
    v = field_named("bump", mesh32)
    m = ShrinkMollifier(0.1)
    pts = mesh32.centroids[::20]
    a = gradient_via_kernel(m, v, pts)
    b = gradient_via_identity(m, v, pts)
    assert np.abs(a - b).max() <= 0.03 * np.abs(b).max()


def test_support_stays_inside(mesh32):
    for name in ("tent", "bump", "sqrt", "random"):
        v = field_named(name, mesh32, seed=1)
        for d in (0.2, 0.05):
            rep = support_report(ShrinkMollifier(d), v)
            assert not rep["violations_geometric"]


def test_l1_error_decreases_for_tent(mesh32):
    v = field_named("tent", mesh32)
    errs = [l1_error(ShrinkMollifier(d), v) for d in (0.2, 0.1, 0.05, 0.025)]
    assert all(b < a for a, b in zip(errs[:-1], errs[1:]))


def test_bound_checks_on_random_fields(mesh16):
    viol = 0
    for seed in range(5):
        v = field_named("random", mesh16, seed=seed)
        for d in (0.2, 0.05):
            m = ShrinkMollifier(d)
            viol += not linf_grad_bound_check(m, v).passed
            viol += not holder_grad_bound_check(m, v, 0.5).passed
    assert viol == 0


def test_identity_residual_small_for_smooth_field(mesh32):
    v = field_named("bump", mesh32)
    assert gradient_identity_residual(ShrinkMollifier(0.2), v) < 0.05


def test_jensen_domination(mesh16):
    integrand = DoublePhaseIntegrand(2.0, 3.0, power_weight(1.0))
    v = field_named("tent", mesh16)
    rep = jensen_domination_check(ShrinkMollifier(0.1), v, integrand, C_a=1.0)
    assert rep["passed"] and rep["jensen_p_part_passed"]


def test_unknown_test_function(mesh8):
    with pytest.raises(ParameterError):
        field_named("wavelet", mesh8)

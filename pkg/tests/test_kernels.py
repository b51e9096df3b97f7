"""The compiled and NumPy backends must agree bit for bit on shared inputs."""
import numpy as np
import pytest

from lavgap import kernels
from lavgap.domain_grid import build_disk_mesh, interpolate
from lavgap.mollify import ShrinkMollifier, apply, convolve_cells
from lavgap.weights import power_weight, zk_constant_estimate

try:
    from lavgap import _kernels  # noqa: F401
    HAVE_EXT = True
except ImportError:
    HAVE_EXT = False

needs_ext = pytest.mark.skipif(not HAVE_EXT, reason="compiled extension not built")


@pytest.fixture
def both():
    prev = kernels.BACKEND

    def run(fn):
        out = {}
        for name in ("numpy", "cython"):
            kernels.use_backend(name)
            out[name] = fn()
        return out
    yield run
    kernels.use_backend(prev)


@needs_ext
def test_locate_agrees(both, mesh16):
    rng = np.random.default_rng(1)
    pts = rng.uniform(-1.1, 1.1, (4000, 2))
    r = both(lambda: mesh16.locate(pts))
    assert np.array_equal(r["numpy"][0], r["cython"][0])
    hit = r["numpy"][0] >= 0
    assert np.allclose(r["numpy"][1][hit], r["cython"][1][hit], rtol=0, atol=1e-14)


@needs_ext
def test_convolve_agrees(both, mesh16):
    u = interpolate(mesh16, lambda x: np.cos(3 * x[..., 0]) * (1 - (x * x).sum(-1)))
    m = ShrinkMollifier(0.1)
    r = both(lambda: apply(m, u).values)
    assert np.allclose(r["numpy"], r["cython"], rtol=0, atol=1e-14)
    cells = np.column_stack([mesh16.areas, mesh16.centroids[:, 0]])
    r = both(lambda: convolve_cells(m, mesh16, cells, mesh16.nodes[:200]))
    assert np.allclose(r["numpy"], r["cython"], rtol=0, atol=1e-14)


@needs_ext
@pytest.mark.parametrize("kappa", [0.5, 1.0, 2.0])
def test_pair_max_agrees(both, kappa):
    mesh = build_disk_mesh(1.0, 1 / 8)
    a = power_weight(1.5)
    r = both(lambda: zk_constant_estimate(a, kappa, mesh))
    assert r["numpy"].constant == r["cython"].constant
    assert r["numpy"].witness == r["cython"].witness


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.use_backend("fortran")

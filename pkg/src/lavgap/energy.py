"""Double-phase energies, modulars, Luxemburg norms and the regime classifier.

M(x, t) = t^p + a(x) t^q.  For a P1 field the gradient is constant per cell,
so each energy is a per-cell sum  |T| |g_T|^p + (int_T a) |g_T|^q  with the
weight integrated by the degree-5 triangle rule once per mesh.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .config import DEFAULTS
from .domain_grid import (DEFAULT_RULE, AnalyticField, GridFunction, Mesh, cell_integrals, gradient,
                          triangle_rule)
from .errors import EvaluationError, LavgapError, ParameterError
from .weights import Weight, named_weight

__all__ = [
    "DoublePhaseIntegrand", "EnergyBreakdown", "SandwichIntegrand",
    "VariableExponentIntegrand", "OrthotropicIntegrand", "RegimeVerdict",
    "m_eval", "energy", "cell_energy", "modular", "modular_distance",
    "luxemburg_norm", "uniform_integrability_probe", "truncate", "sandwich_check",
    "energy_variable_exponent", "log_holder_seminorm", "energy_orthotropic",
    "regime_classify", "UnboundedModularError", "InvalidExponentError",
]


class UnboundedModularError(LavgapError):
    """Modular stays infinite over the whole bisection bracket."""


class InvalidExponentError(ParameterError):
    pass


@dataclass(frozen=True)
class DoublePhaseIntegrand:
    p: float
    q: float
    a: Weight

    def __post_init__(self):
        if not 1 < self.p < self.q:
            raise ParameterError(f"need 1 < p < q, got p={self.p}, q={self.q}")

    @classmethod
    def unweighted(cls, p, q=None):
        """a = 0, so M(x, t) = t^p."""
        zero = Weight(lambda x: np.zeros(np.shape(x)[:-1]), 0.0, "0",
                      lambda x: np.zeros(np.shape(x)))
        return cls(p, p + 1.0 if q is None else q, zero)

    def __call__(self, x, t):
        return m_eval(self, x, t)

    def weight_integrals(self, mesh: Mesh) -> np.ndarray:
        """Per-cell integral of a (cached on the mesh)."""
        key = ("a_int", id(self.a))
        hit = mesh.cache.get(key)
        if hit is not None and hit[0] is self.a:
            return hit[1]
        vals = cell_integrals(lambda x: self.a.values(x), mesh, DEFAULT_RULE)
        mesh.cache[key] = (self.a, vals)
        return vals


@dataclass(frozen=True)
class EnergyBreakdown:
    p_part: float
    q_part: float
    total: float

    def as_dict(self):
        return {"p_part": self.p_part, "q_part": self.q_part, "total": self.total}


def m_eval(integrand: DoublePhaseIntegrand, x, t):
    """t^p + a(x) t^q."""
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0):
        raise ParameterError("M(x, t) needs t >= 0")
    a = integrand.a.values(np.asarray(x, dtype=np.float64))
    out = t ** integrand.p + a * t ** integrand.q
    return float(out) if np.ndim(out) == 0 else out


def _cell_field(xi, mesh):
    xi = np.asarray(xi, dtype=np.float64)
    if xi.shape != (mesh.n_cells, 2):
        raise ParameterError("vector fields must be per-cell arrays of shape (T, 2)")
    return xi


def cell_energy(integrand: DoublePhaseIntegrand, g: np.ndarray, mesh: Mesh):
    """Per-cell p-part and q-part for per-cell gradients g (T, 2)."""
    mod = np.sqrt(np.einsum("td,td->t", g, g))
    if not np.all(np.isfinite(mod)):
        raise EvaluationError("non-finite gradient")
    return mesh.areas * mod ** integrand.p, integrand.weight_integrals(mesh) * mod ** integrand.q


def energy(integrand: DoublePhaseIntegrand, u, mesh: Mesh | None = None, rule=DEFAULT_RULE) -> EnergyBreakdown:
    """Both phases of the energy of a P1 field or of an AnalyticField on ``mesh``."""
    if isinstance(u, AnalyticField):
        if mesh is None:
            raise ParameterError("an AnalyticField needs a mesh for quadrature")
        x = mesh.quadrature_points(rule)
        t = np.linalg.norm(np.asarray(u.grad(x), dtype=np.float64), axis=-1)
        if not np.all(np.isfinite(t)):
            raise EvaluationError("non-finite gradient at a quadrature point")
        w2 = 2.0 * mesh.areas
        p_part = math.fsum(w2 * (t ** integrand.p @ rule.weights))
        q_part = math.fsum(w2 * ((integrand.a.values(x) * t ** integrand.q) @ rule.weights))
        return EnergyBreakdown(p_part, q_part, p_part + q_part)
    mesh = u.mesh if mesh is None else mesh
    pp, qq = cell_energy(integrand, gradient(u), mesh)
    p_part, q_part = math.fsum(pp), math.fsum(qq)
    return EnergyBreakdown(p_part, q_part, p_part + q_part)


def modular(integrand: DoublePhaseIntegrand, xi, mesh: Mesh) -> float:
    """int M(x, |xi|) for a per-cell vector field."""
    pp, qq = cell_energy(integrand, _cell_field(xi, mesh), mesh)
    return math.fsum(pp) + math.fsum(qq)


def modular_distance(integrand: DoublePhaseIntegrand, xi1, xi2, mesh: Mesh) -> float:
    """int M(x, |xi1 - xi2|)."""
    return modular(integrand, _cell_field(xi1, mesh) - _cell_field(xi2, mesh), mesh)


def luxemburg_norm(integrand: DoublePhaseIntegrand, xi, mesh: Mesh, *, rtol=None, bracket=None) -> float:
    """inf{lam > 0 : int M(x, |xi| / lam) <= 1} by bisection in log scale."""
    rtol = DEFAULTS["luxemburg_rtol"] if rtol is None else rtol
    lo, hi = DEFAULTS["luxemburg_bracket"] if bracket is None else bracket
    xi = _cell_field(xi, mesh)
    mod = np.sqrt(np.einsum("td,td->t", xi, xi))
    if not mod.any():
        return 0.0
    area = mesh.areas
    aint = integrand.weight_integrals(mesh)
    p, q = integrand.p, integrand.q

    def rho(lam):
        with np.errstate(over="ignore"):
            s = mod / lam
            return math.fsum(area * s ** p) + math.fsum(aint * s ** q)

    if not math.isfinite(rho(hi)) or rho(hi) > 1.0:
        raise UnboundedModularError("modular exceeds 1 on the whole bracket")
    if rho(lo) <= 1.0:
        return lo
    while hi / lo - 1.0 > rtol:
        mid = math.sqrt(lo * hi)
        if rho(mid) <= 1.0:
            hi = mid
        else:
            lo = mid
    return hi


def uniform_integrability_probe(family: Sequence, mesh: Mesh, eps_fractions=(0.1, 0.05, 0.01)) -> dict:
    """Worst integral over sets of measure eps, sup over the family.

    Each member is a per-cell density (value of the integrand on that cell).
    The worst set is filled greedily with the highest-density cells; the last
    cell is taken fractionally so the set has measure exactly eps.
    """
    if len(family) == 0:
        raise ParameterError("family must be nonempty")
    area = mesh.areas
    total = mesh.volume
    out = {}
    for frac in eps_fractions:
        eps = frac * total
        worst = 0.0
        for dens in family:
            dens = np.asarray(dens, dtype=np.float64)
            if dens.shape != (mesh.n_cells,):
                raise ParameterError("family members must be per-cell densities")
            order = np.argsort(-dens, kind="stable")
            cum = np.cumsum(area[order])
            k = int(np.searchsorted(cum, eps))
            full = order[:k]
            val = math.fsum(dens[full] * area[full])
            if k < order.size:
                rest = eps - (cum[k - 1] if k > 0 else 0.0)
                val += dens[order[k]] * rest
            worst = max(worst, val)
        out[float(frac)] = worst
    return out


def truncate(u: GridFunction, k: float) -> GridFunction:
    """Nodal truncation T_k u = min(k, max(-k, u))."""
    if not k > 0:
        raise ParameterError("truncation level must be positive")
    return GridFunction(u.mesh, np.clip(u.values, -k, k))


# ---------------------------------------------------------------------------
# general integrands

@dataclass(frozen=True)
class SandwichIntegrand:
    """G with nu M(x,|xi|) <= G(x,z,xi) <= L (M(x,|xi|) + Lam(x))."""

    G: Callable
    nu: float
    L: float
    Lam: Callable | None = None

    def __post_init__(self):
        if not 0 < self.nu < 1:
            raise ParameterError("nu must lie in (0, 1)")
        if not self.L > 1:
            raise ParameterError("L must exceed 1")


def sandwich_check(G: SandwichIntegrand, integrand: DoublePhaseIntegrand, xs, zs, xis) -> dict:
    """Check both sandwich inequalities on sampled triples; report worst margins."""
    xs = np.asarray(xs, dtype=np.float64)
    zs = np.asarray(zs, dtype=np.float64)
    xis = np.asarray(xis, dtype=np.float64)
    t = np.linalg.norm(xis, axis=-1)
    m = np.asarray(m_eval(integrand, xs, t))
    g = np.asarray(G.G(xs, zs, xis), dtype=np.float64)
    lam = np.zeros_like(m) if G.Lam is None else np.asarray(G.Lam(xs), dtype=np.float64)
    if np.any(lam < 0):
        raise ParameterError("Lam must be nonnegative")
    lower = g - G.nu * m
    upper = G.L * (m + lam) - g
    scale = np.maximum(1.0, np.abs(g))
    lo_i = int(np.argmin(lower / scale))
    up_i = int(np.argmin(upper / scale))
    tol = 1e-12
    passed = bool(lower[lo_i] >= -tol * scale[lo_i] and upper[up_i] >= -tol * scale[up_i])
    rep = {"passed": passed, "worst_lower_margin": float(lower[lo_i]),
           "worst_upper_margin": float(upper[up_i]), "n_samples": int(m.size)}
    if not passed:
        i = lo_i if lower[lo_i] < -tol * scale[lo_i] else up_i
        rep["witness"] = {"x": xs[i].tolist(), "z": float(zs[i]), "xi": xis[i].tolist()}
    return rep


@dataclass(frozen=True)
class VariableExponentIntegrand:
    """b(x,u) (|grad u|^p(x) + a(x) |grad u|^q(x))."""

    p: Callable
    q: Callable
    a: Weight
    b: Callable | None = None
    nu_b: float = 1.0
    L_b: float = 1.0


def _point_values(u: GridFunction, rule):
    xi = rule.points
    lam = np.column_stack([1.0 - xi[:, 0] - xi[:, 1], xi[:, 0], xi[:, 1]])
    return u.values[u.mesh.cells] @ lam.T


def energy_variable_exponent(ve: VariableExponentIntegrand, u: GridFunction, mesh: Mesh | None = None,
                             rule=DEFAULT_RULE) -> float:
    mesh = u.mesh if mesh is None else mesh
    x = mesh.quadrature_points(rule)
    p = np.asarray(ve.p(x), dtype=np.float64) * np.ones(x.shape[:2])
    q = np.asarray(ve.q(x), dtype=np.float64) * np.ones(x.shape[:2])
    if np.any(p <= 1):
        raise InvalidExponentError("p(x) must exceed 1")
    if np.any(q <= p):
        raise InvalidExponentError("q(x) must exceed p(x)")
    t = np.linalg.norm(gradient(u), axis=1)[:, None]
    vals = t ** p + ve.a.values(x) * t ** q
    if ve.b is not None:
        b = np.asarray(ve.b(x, _point_values(u, rule)), dtype=np.float64)
        if np.any(b < ve.nu_b * (1 - 1e-12)) or np.any(b > ve.L_b * (1 + 1e-12)):
            raise ParameterError("b leaves [nu_b, L_b]")
        vals = b * vals
    if not np.all(np.isfinite(vals)):
        raise EvaluationError("non-finite integrand")
    return math.fsum(2.0 * mesh.areas * (vals @ rule.weights))


def log_holder_seminorm(p, mesh: Mesh, *, cutoff: float = 0.5) -> float:
    """sup |p(x) - p(y)| log(1/|x-y|) over node pairs with |x-y| < cutoff."""
    vals = np.asarray(p(mesh.nodes) if callable(p) else p, dtype=np.float64)
    vals = np.ascontiguousarray(vals * np.ones(mesh.n_nodes))
    rows = np.arange(mesh.n_nodes, dtype=np.int64)
    best, _, _ = kernels.pair_max(mesh.nodes, vals, 1.0, 2, rows, float(cutoff))
    return max(0.0, best)


@dataclass(frozen=True)
class OrthotropicIntegrand:
    """Per-coordinate data (p_i, q_i, a_i, b_i)."""

    p: tuple
    q: tuple
    a: tuple
    b: tuple | None = None

    def __post_init__(self):
        if not (len(self.p) == len(self.q) == len(self.a)):
            raise ParameterError("per-coordinate data must have equal length")
        for pi, qi in zip(self.p, self.q):
            if not 1 < pi < qi:
                raise ParameterError("need 1 < p_i < q_i")


def energy_orthotropic(oi: OrthotropicIntegrand, u: GridFunction, mesh: Mesh | None = None,
                       rule=DEFAULT_RULE) -> float:
    mesh = u.mesh if mesh is None else mesh
    g = gradient(u)
    if len(oi.p) != g.shape[1]:
        raise ParameterError("orthotropic data must match the dimension")
    x = mesh.quadrature_points(rule)
    total = []
    for i in range(g.shape[1]):
        t = np.abs(g[:, i])[:, None]
        vals = t ** oi.p[i] + oi.a[i].values(x) * t ** oi.q[i]
        if oi.b is not None and oi.b[i] is not None:
            vals = oi.b[i](x, _point_values(u, rule)) * vals
        total.append(math.fsum(2.0 * mesh.areas * (vals @ rule.weights)))
    return math.fsum(total)


# ---------------------------------------------------------------------------
# regime classifier

@dataclass(frozen=True)
class RegimeVerdict:
    n: int
    p: float
    q: float
    kappa: float
    gamma: float | None
    verdict: str
    condition: str

    def as_dict(self):
        return {"n": self.n, "p": self.p, "q": self.q, "kappa": self.kappa,
                "gamma": self.gamma, "verdict": self.verdict, "condition": self.condition}


def _exact(v) -> Fraction:
    return Fraction(str(v))


def regime_classify(n: int, p, q, kappa, gamma=None) -> RegimeVerdict:
    """Map (n, p, q, kappa, gamma) to the range in which a result applies.

    Comparisons are exact on the decimal values given.
    """
    if int(n) != n or n < 2:
        raise ParameterError("n must be an integer >= 2")
    P, Q, K = _exact(p), _exact(q), _exact(kappa)
    if not (1 < P < Q):
        raise ParameterError("need 1 < p < q")
    if not K > 0:
        raise ParameterError("kappa must be positive")
    G = None
    if gamma is not None:
        G = _exact(gamma)
        if not 0 < G <= 1:
            raise ParameterError("gamma must lie in (0, 1]")
    N = Fraction(int(n))

    def out(verdict, cond):
        return RegimeVerdict(int(n), float(p), float(q), float(kappa),
                             None if gamma is None else float(gamma), verdict, cond)

    if Q <= P + K:
        return out("NoGap-I", "q <= p + kappa")
    if G is not None and K >= (Q - P) * (1 - G):
        return out("NoGap-Hölder", "kappa >= (q - p)(1 - gamma)")
    if Q <= P + K * max(P / N, Fraction(1)):
        return out("NoGap-Morrey", "q <= p + kappa max(p/n, 1)")
    if P < N < N + K < Q:
        return out("Gap-Sharpness", "p < n < n + kappa < q")
    return out("Outside-Theorems", "none")

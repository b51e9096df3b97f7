"""Weights and sampled certification of the classes Z^kappa and Z^omega.

A weight a is in Z^kappa when a(x) <= C (a(y) + |x - y|^kappa) for all
x, y.  Membership cannot be decided from samples, so the estimates below
report the best constant over node pairs and a refinement study of how that
constant grows as the mesh is refined.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .config import DEFAULTS
from .domain_grid import Mesh, build_disk_mesh, holder_seminorm_estimate
from .errors import InvalidModulusError, InvalidWeightError, ParameterError

__all__ = [
    "Weight", "Modulus", "ZkEstimate", "MembershipVerdict", "power_weight",
    "named_weight", "zk_constant_estimate", "zk_membership_verdict",
    "zomega_constant_estimate", "power_rule_check", "root_lipschitz_check",
    "glaeser_check", "WEIGHT_NAMES",
]


@dataclass(frozen=True)
class Weight:
    """Bounded nonnegative weight ``eval(points) -> values`` on (..., 2) arrays."""

    eval: Callable
    sup_bound: float
    label: str
    grad: Callable | None = None

    def __call__(self, points):
        return self.eval(np.asarray(points, dtype=np.float64))

    def values(self, points) -> np.ndarray:
        v = np.asarray(self(points), dtype=np.float64)
        if not np.all(np.isfinite(v)):
            raise InvalidWeightError(f"weight {self.label} is not finite at a sample point")
        if np.any(v < 0):
            raise InvalidWeightError(f"weight {self.label} is negative at a sample point")
        return v

    def power(self, beta: float) -> "Weight":
        if not beta > 0:
            raise ParameterError("beta must be positive")
        f = self.eval
        return Weight(lambda x: np.asarray(f(x)) ** beta, self.sup_bound ** beta,
                      f"({self.label})^{beta:g}")


@dataclass(frozen=True)
class Modulus:
    """Increasing modulus with omega(0) = 0; ``power`` marks omega(t) = t^power."""

    omega: Callable
    label: str
    power: float | None = None

    def __post_init__(self):
        if float(np.asarray(self.omega(np.zeros(1)))[0]) != 0.0:
            raise InvalidModulusError(f"modulus {self.label} does not vanish at 0")
        t = np.linspace(0.0, 4.0, 257)
        w = np.asarray(self.omega(t), dtype=np.float64)
        if not np.all(np.isfinite(w)) or np.any(np.diff(w) < 0):
            raise InvalidModulusError(f"modulus {self.label} is not increasing")

    @classmethod
    def powerlaw(cls, kappa: float) -> "Modulus":
        if not kappa > 0:
            raise ParameterError("kappa must be positive")
        return cls(lambda t: np.asarray(t, dtype=np.float64) ** kappa, f"t^{kappa:g}", float(kappa))

    def __call__(self, t):
        return self.omega(t)


@dataclass
class ZkEstimate:
    kappa: float | None
    constant: float
    witness: tuple
    grid_h: float
    n_pairs: int
    subsampled: bool
    modulus: str = ""

    def as_dict(self):
        return {"kappa": self.kappa, "constant": self.constant,
                "witness": [list(self.witness[0]), list(self.witness[1])],
                "grid_h": self.grid_h, "n_pairs": self.n_pairs,
                "subsampled": self.subsampled, "modulus": self.modulus}


@dataclass
class MembershipVerdict:
    label: str
    kappa: float
    h_values: list
    constants: list
    fitted_exponent: float
    verdict: str
    threshold: float
    estimates: list = field(default_factory=list)

    @property
    def stable(self):
        return self.verdict == "stable"

    def as_dict(self):
        return {"weight": self.label, "kappa": self.kappa, "h": self.h_values,
                "constants": self.constants, "fitted_exponent": self.fitted_exponent,
                "verdict": self.verdict, "threshold": self.threshold,
                "witnesses": [e.as_dict()["witness"] for e in self.estimates]}


# ---------------------------------------------------------------------------
# weight catalogue

def power_weight(kappa: float, x0=(0.0, 0.0), radius: float = 1.0) -> Weight:
    """x -> |x - x0|^kappa, with sup bound taken over the ball of given radius about 0."""
    if not kappa > 0:
        raise ParameterError("kappa must be positive")
    c = np.asarray(x0, dtype=np.float64)

    def f(x):
        return np.linalg.norm(np.asarray(x) - c, axis=-1) ** kappa

    def g(x):
        d = np.asarray(x) - c
        r = np.linalg.norm(d, axis=-1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = kappa * r ** (kappa - 2) * d
        return np.where(r > 0, out, 0.0)

    sup = (radius + float(np.linalg.norm(c))) ** kappa
    return Weight(f, sup, f"|x|^{kappa:g}" if not c.any() else f"|x-x0|^{kappa:g}", g)


def _dist_cone_boundary(x):
    x = np.asarray(x)
    return np.minimum(np.abs(x[..., 1] - x[..., 0]), np.abs(x[..., 1] + x[..., 0])) / math.sqrt(2.0)


def _expdecay(x):
    r2 = (np.asarray(x) ** 2).sum(-1)
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(r2 > 0, np.exp(-1.0 / np.where(r2 > 0, r2, 1.0)), 0.0)


WEIGHT_NAMES = ("one", "abs", "abs2", "cone", "ell", "expdecay", "onepabs", "distcusp")


def named_weight(name: str, kappa: float = 1.0) -> Weight:
    """Shipped example weights; ``kappa`` parametrises 'cone' and 'distcusp'."""
    if name == "one":
        return Weight(lambda x: np.ones(np.shape(x)[:-1]), 1.0, "1",
                      lambda x: np.zeros(np.shape(x)))
    if name == "abs":
        return power_weight(1.0)
    if name == "abs2":
        return power_weight(2.0)
    if name in ("cone", "ell"):
        from .counterexample import cone_weight, ell_eval
        if name == "ell":
            return Weight(lambda x: ell_eval(x), 1.0, "ell")
        return cone_weight(kappa)
    if name == "expdecay":
        return Weight(_expdecay, math.exp(-1.0), "exp(-1/|x|^2)")
    if name == "onepabs":
        return Weight(lambda x: 1.0 + np.linalg.norm(x, axis=-1), 2.0, "1+|x|")
    if name == "distcusp":
        return Weight(lambda x: _dist_cone_boundary(x) ** (0.5 * kappa), 1.0,
                      f"dist(x,dV)^{0.5 * kappa:g}")
    raise ParameterError(f"unknown weight {name!r}; choose from {', '.join(WEIGHT_NAMES)}")


_EXPR_NAMES = {k: getattr(np, k) for k in ("sqrt", "exp", "log", "abs", "sin", "cos",
                                            "maximum", "minimum", "where", "pi")}


def expression_weight(expr: str, sup_bound: float | None = None) -> Weight:
    """Weight from an expression in x1, x2 and r (NumPy functions allowed)."""
    code = compile(expr, "<weight>", "eval")
    for nm in code.co_names:
        if nm not in _EXPR_NAMES and nm not in ("x1", "x2", "r"):
            raise ParameterError(f"name {nm!r} not allowed in a weight expression")

    def f(x):
        x = np.asarray(x, dtype=np.float64)
        env = dict(_EXPR_NAMES, x1=x[..., 0], x2=x[..., 1], r=np.linalg.norm(x, axis=-1))
        return np.broadcast_to(eval(code, {"__builtins__": {}}, env), x.shape[:-1]).astype(float)

    if sup_bound is None:
        th = np.linspace(0, 2 * np.pi, 256, endpoint=False)
        rr = np.linspace(0, 1, 129)
        pts = np.stack(np.broadcast_arrays(rr[:, None] * np.cos(th), rr[:, None] * np.sin(th)), -1)
        sup_bound = float(np.max(f(pts)))
    return Weight(f, float(sup_bound), expr)


# ---------------------------------------------------------------------------
# pair suprema

def _rows(n: int, budget: int | None) -> tuple[np.ndarray, bool]:
    """All rows, or an evenly strided subset keyed by node index over budget."""
    budget = DEFAULTS["pair_budget"] if budget is None else budget
    if n * n <= budget:
        return np.arange(n, dtype=np.int64), False
    stride = math.ceil(n * n / budget)
    return np.arange(0, n, stride, dtype=np.int64), True


def _witness(mesh, i, j):
    return (tuple(float(v) for v in mesh.nodes[i]), tuple(float(v) for v in mesh.nodes[j]))


def zk_constant_estimate(a: Weight, kappa: float, mesh: Mesh, *, budget=None) -> ZkEstimate:
    """max over node pairs of a(x) / (a(y) + |x - y|^kappa), 0/0 read as 1."""
    if not kappa > 0:
        raise ParameterError("kappa must be positive")
    f = np.ascontiguousarray(a.values(mesh.nodes))
    rows, sub = _rows(mesh.n_nodes, budget)
    best, i, j = kernels.pair_max(mesh.nodes, f, float(kappa), 0, rows, 0.0)
    return ZkEstimate(float(kappa), float(best), _witness(mesh, i, j), mesh.h,
                      int(rows.size) * mesh.n_nodes, sub, f"t^{kappa:g}")


def zomega_constant_estimate(a: Weight, omega: Modulus, mesh: Mesh, *, budget=None) -> ZkEstimate:
    """max over node pairs of a(x) / (a(y) + omega(|x - y|)), 0/0 read as 1."""
    if not isinstance(omega, Modulus):
        raise InvalidModulusError("omega must be a Modulus")
    if omega.power is not None:
        est = zk_constant_estimate(a, omega.power, mesh, budget=budget)
        est.modulus = omega.label
        return est
    f = a.values(mesh.nodes)
    pts = mesh.nodes
    rows, sub = _rows(mesh.n_nodes, budget)
    n = mesh.n_nodes
    best, bi, bj = -1.0, -1, -1
    per = max(1, (1 << 20) // n)
    for s in range(0, rows.size, per):
        r = rows[s:s + per]
        d = np.sqrt(((pts[r, None, :] - pts[None, :, :]) ** 2).sum(-1))
        w = np.asarray(omega(d), dtype=np.float64)
        fi = f[r][:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = fi / (f[None, :] + w)
        zz = (d == 0.0) & (f[None, :] == 0.0)
        ratio = np.where(np.broadcast_to(fi == 0.0, ratio.shape), np.where(zz, 1.0, 0.0), ratio)
        flat = int(np.argmax(ratio))
        if ratio.flat[flat] > best:
            best, bi, bj = float(ratio.flat[flat]), int(r[flat // n]), int(flat % n)
    return ZkEstimate(None, best, _witness(mesh, bi, bj), mesh.h, int(rows.size) * n, sub,
                      omega.label)


def _fit_exponent(h_values, constants) -> float:
    x = -np.log(np.asarray(h_values, dtype=np.float64))
    y = np.log(np.asarray(constants, dtype=np.float64))
    return float(np.polyfit(x, y, 1)[0])


def _check_h_list(h_list):
    h = [float(v) for v in h_list]
    if len(h) < 3:
        raise ParameterError("need at least three mesh sizes")
    if any(b >= a for a, b in zip(h[:-1], h[1:])):
        raise ParameterError("h_list must be strictly decreasing")
    return h


def zk_membership_verdict(a: Weight, kappa: float, h_list=(1 / 16, 1 / 32, 1 / 64), *,
                          radius: float = 1.0, threshold=None, budget=None) -> MembershipVerdict:
    """Refinement study: fit C(h) ~ h^-s and call the weight stable iff s <= threshold."""
    h = _check_h_list(h_list)
    threshold = DEFAULTS["verdict_exponent"] if threshold is None else threshold
    ests = [zk_constant_estimate(a, kappa, build_disk_mesh(radius, hh), budget=budget) for hh in h]
    consts = [e.constant for e in ests]
    s = _fit_exponent([e.grid_h for e in ests], consts)
    return MembershipVerdict(a.label, float(kappa), [e.grid_h for e in ests], consts, s,
                             "stable" if s <= threshold else "diverging", threshold, ests)


def power_rule_check(a: Weight, kappa: float, beta: float, h_list=(1 / 8, 1 / 16, 1 / 32), *,
                     radius: float = 1.0) -> dict:
    """Compare verdicts for (a, kappa) and (a^beta, beta*kappa)."""
    if not (kappa > 0 and beta > 0):
        raise ParameterError("kappa and beta must be positive")
    v1 = zk_membership_verdict(a, kappa, h_list, radius=radius)
    v2 = zk_membership_verdict(a.power(beta), beta * kappa, h_list, radius=radius)
    return {"kappa": kappa, "beta": beta, "base": v1.as_dict(), "powered": v2.as_dict(),
            "agree": v1.verdict == v2.verdict}


def root_lipschitz_check(a: Weight, kappa: float, mesh: Mesh) -> float:
    """Sampled Lipschitz seminorm of a^(1/kappa)."""
    if not kappa > 0:
        raise ParameterError("kappa must be positive")
    vals = a.values(mesh.nodes) ** (1.0 / kappa)
    return holder_seminorm_estimate(vals, 1.0, mesh.nodes)


def glaeser_check(a: Weight, alpha: float, mesh: Mesh, *, directions=None) -> float:
    """Smallest C with |d a / d nu| <= C a^(alpha/(1+alpha)) over nodes and directions.

    Returns inf when a vanishes at a node where the directional derivative
    does not.
    """
    if not 0 < alpha <= 1:
        raise ParameterError("alpha must lie in (0, 1]")
    if a.grad is None:
        raise ParameterError(f"weight {a.label} has no gradient oracle")
    nd = DEFAULTS["glaeser_directions"] if directions is None else directions
    ang = 2 * np.pi * np.arange(nd) / nd
    nu = np.column_stack([np.cos(ang), np.sin(ang)])
    vals = a.values(mesh.nodes)
    g = np.asarray(a.grad(mesh.nodes), dtype=np.float64)
    dd = np.abs(g @ nu.T).max(axis=1)
    lhs_scale = vals ** (alpha / (1.0 + alpha))
    zero = lhs_scale == 0.0
    if np.any(zero & (dd > 0.0)):
        return math.inf
    ok = ~zero
    if not ok.any():
        return 0.0
    return float(np.max(dd[ok] / lhs_scale[ok]))

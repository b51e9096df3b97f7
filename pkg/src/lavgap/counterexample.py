"""The cone counterexample: weight, boundary data, constants and bound chain.

V is the double cone where x_n^2 exceeds the sum of the other squares.  The
weight a = ell^kappa lives on V, the boundary profile u* is constant (+-1)
on each half of V and interpolates by sin(2 angle) outside, so the q-phase
never sees the gradient of u*.  Smooth competitors, however, must climb from
-t0 to t0 through V, and that costs at least

    lower = (r3/q)^q ((q-1)/r1)^(q-1) t0^q  >  t0^p r2 = F[t0 u*] = upper

once t0 exceeds the threshold [r2 (q/r3)^q (r1/(q-1))^(q-1)]^(1/(q-p)).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import integrate as sp_integrate
from scipy.special import gamma as gamma_fn

from .config import DEFAULTS
from .domain_grid import AnalyticField, GridFunction, Mesh, build_disk_mesh, gradient, interpolate, spherical_quadrature
from .energy import DoublePhaseIntegrand, EnergyBreakdown, energy
from .errors import BoundViolation, DivergenceError, ParameterError
from .weights import Weight

__all__ = [
    "ell_eval", "cone_weight", "u_star_eval", "u0_eval", "in_cone",
    "compute_r1", "compute_r2", "compute_r3", "compute_t0", "threshold",
    "SharpnessInstance", "GapReport", "upper_bound_W", "upper_bound_mesh_check",
    "lower_bound_smooth", "lemma3_check", "young_chain_check", "gap_report",
    "ell_gradient_sup", "R1Result", "u_star_grad", "u_star_field",
]

QUARTER = math.pi / 4
V_ARCS_2D = ((QUARTER, 3 * QUARTER), (5 * QUARTER, 7 * QUARTER))
COMPLEMENT_ARCS_2D = ((-QUARTER, QUARTER), (3 * QUARTER, 5 * QUARTER))


def _split(x):
    """(|x'|, x_n) for points of shape (..., n)."""
    x = np.asarray(x, dtype=np.float64)
    side = np.linalg.norm(x[..., :-1], axis=-1)
    return side, x[..., -1]


def ell_eval(x):
    """max(x_n^2 - |x'|^2, 0) / |x|, with value 0 at the origin."""
    side, top = _split(x)
    r2 = side * side + top * top
    num = np.maximum(top * top - side * side, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(r2 > 0, num / np.sqrt(np.where(r2 > 0, r2, 1.0)), 0.0)
    return out


def in_cone(x, closed=False):
    side, top = _split(x)
    return np.abs(top) >= side if closed else np.abs(top) > side


def cone_weight(kappa: float) -> Weight:
    """a = ell^kappa, supported in the closure of V."""
    if not kappa > 0:
        raise ParameterError("kappa must be positive")
    return Weight(lambda x: ell_eval(x) ** kappa, 1.0, f"ell^{kappa:g}")


def u_star_eval(x, n: int = 2):
    """Boundary profile: sign(x_n) on V, 2|x'| x_n / |x|^2 elsewhere, 0 at 0.

    In polar form this is sin(2 theta) resp. sin(2 theta - pi) off the
    cone for n = 2, and sin(2 polar angle) for n = 3.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != n:
        raise ParameterError(f"points must have {n} coordinates")
    side, top = _split(x)
    r2 = side * side + top * top
    with np.errstate(invalid="ignore", divide="ignore"):
        smooth = 2.0 * side * top / np.where(r2 > 0, r2, 1.0)
    if n == 3:
        # polar angle measured from the x3 axis: +1 on the upper cap
        out = np.where(np.abs(top) >= side, np.sign(top), smooth)
    else:
        out = np.where(np.abs(top) >= side, np.sign(top), smooth)
    return np.where(r2 > 0, out, 0.0)


def u_star_grad(x, n: int = 2):
    """Gradient of u*: zero on the closed cone, and at the origin by convention."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != n:
        raise ParameterError(f"points must have {n} coordinates")
    side, top = _split(x)
    r2 = side * side + top * top
    off = (np.abs(top) < side) & (r2 > 0)
    safe_r2 = np.where(off, r2, 1.0)
    safe_side = np.where(off, side, 1.0)
    # u = 2 s t / r^2 with s = |x'|, t = x_n
    du_ds = 2 * top / safe_r2 - 4 * side * side * top / safe_r2 ** 2
    du_dt = 2 * side / safe_r2 - 4 * side * top * top / safe_r2 ** 2
    g = np.zeros_like(x)
    g[..., :-1] = (du_ds / safe_side)[..., None] * x[..., :-1]
    g[..., -1] = du_dt
    return np.where(off[..., None], g, 0.0)


def u_star_field(t: float = 1.0, n: int = 2) -> AnalyticField:
    """t u* as a closed-form field."""
    return AnalyticField(lambda x: t * u_star_eval(x, n), lambda x: t * u_star_grad(x, n), f"{t:g} u*")


def u0_eval(x, t0: float, n: int = 2):
    """t0 |x|^2 u*(x)."""
    if not t0 > 0:
        raise ParameterError("t0 must be positive")
    x = np.asarray(x, dtype=np.float64)
    return t0 * (x * x).sum(-1) * u_star_eval(x, n)


# ---------------------------------------------------------------------------
# constants

@dataclass(frozen=True)
class R1Result:
    value: float
    alternative: float
    method: str
    alternative_method: str
    bound_form: float | None = None

    @property
    def rel_diff(self):
        return abs(self.value - self.alternative) / abs(self.value)


def _check_hypothesis_r1(n, q, kappa):
    radial = (n - 1) - ((n - 1) * q + kappa) / (q - 1)
    beta = -kappa / (q - 1)
    if radial <= -1:
        raise DivergenceError(f"radial exponent {radial:.6g} <= -1: r1 is infinite (need q > n + kappa)")
    if beta <= -1:
        raise DivergenceError(f"angular exponent {beta:.6g} <= -1: r1 is infinite (need q > kappa + 1)")
    return radial, beta


def _qaws(f, a, b, alpha, beta_):
    """QUADPACK integral of f(t) (t-a)^alpha (b-t)^beta_ on [a, b]."""
    val, _ = sp_integrate.quad(f, a, b, weight="alg", wvar=(alpha, beta_),
                               epsabs=0.0, epsrel=1e-12, limit=200)
    return val


def _cos_ratio(beta, a, b):
    """|cos 2t|^beta / ((t-a)(b-t))^beta, smooth on arcs between zeros of cos 2t."""
    def f(t):
        den = (t - a) * (b - t)
        c = abs(math.cos(2 * t))
        if den <= 0 or c == 0:
            return 2.0 ** beta * (b - a) ** (-beta) if den <= 0 else 0.0
        return (c / den) ** beta
    return f


def compute_r1(n: int, q: float, kappa: float, *, rtol=1e-10) -> R1Result:
    """r1 = int_V |x|^(-q(n-1)/(q-1)) a^(-1/(q-1)) dx for a = ell^kappa.

    Primary value: substituted product Gauss (spherical_quadrature).
    Alternative: adaptive QUADPACK with algebraic end weights.
    For n = 3 ``bound_form`` is the upper bound obtained by replacing the
    spherical Jacobian rho^2 sin(polar) with rho^2.
    """
    if n not in (2, 3):
        raise ParameterError("n must be 2 or 3")
    alpha, beta = _check_hypothesis_r1(n, q, kappa)
    if n == 2:
        sings = [(s, beta) for s in (QUARTER, 3 * QUARTER, 5 * QUARTER, 7 * QUARTER)]
        val = spherical_quadrature(
            2, (lambda r: r ** alpha, lambda t: np.abs(np.cos(2 * t)) ** beta),
            angular_ranges=V_ARCS_2D, radial_exponent=alpha,
            angular_singularities=sings, rtol=rtol)
        rad = _qaws(lambda r: 1.0, 0.0, 1.0, alpha, 0.0)
        ang = sum(_qaws(_cos_ratio(beta, a, b), a, b, beta, beta) for a, b in V_ARCS_2D)
        return R1Result(val, rad * ang, "substituted-gauss", "quadpack-qaws")
    # n = 3: polar angle phi in (0, pi/4) u (3pi/4, pi), Jacobian rho^2 sin(phi)
    arcs = ((0.0, QUARTER), (3 * QUARTER, math.pi))
    sings = [(QUARTER, beta), (3 * QUARTER, beta)]
    val = spherical_quadrature(
        3, (lambda r: r ** alpha, lambda t: np.ones_like(t),
            lambda ph: np.sin(ph) * np.abs(np.cos(2 * ph)) ** beta),
        angular_ranges=arcs, radial_exponent=alpha, angular_singularities=sings, rtol=rtol)
    rad = _qaws(lambda r: 1.0, 0.0, 1.0, alpha, 0.0)

    def g_hi(t):
        return math.sin(t) * (abs(math.cos(2 * t)) / (QUARTER - t)) ** beta if t < QUARTER else 0.0

    def g_lo(t):
        return math.sin(t) * (abs(math.cos(2 * t)) / (t - 3 * QUARTER)) ** beta if t > 3 * QUARTER else 0.0

    ang = _qaws(g_hi, 0.0, QUARTER, 0.0, beta) + _qaws(g_lo, 3 * QUARTER, math.pi, beta, 0.0)
    bound_ang = spherical_quadrature(
        2, (lambda r: np.ones_like(r), lambda ph: np.abs(np.cos(2 * ph)) ** beta),
        radial_range=(0.0, 1.0), angular_ranges=arcs, radial_exponent=0.0,
        angular_singularities=sings, rtol=rtol)
    bound = 2 * math.pi * rad * bound_ang
    return R1Result(val, 2 * math.pi * rad * ang, "substituted-gauss", "quadpack-qaws", bound)


def r1_closed_form_2d(q: float, kappa: float) -> float:
    """Beta-function value of r1 for n = 2 (used as an oracle)."""
    alpha, beta = _check_hypothesis_r1(2, q, kappa)
    return (1.0 / (alpha + 1.0)) * math.sqrt(math.pi) * gamma_fn((beta + 1) / 2) / gamma_fn(beta / 2 + 1)


def compute_r2(n: int, p: float, *, rtol=1e-10) -> float:
    """r2 = int_{B1} |grad u*|^p via the separated polar form.

    |grad u*| = 2 |cos 2 angle| / rho off the cone, so the radial factor is
    int_0^1 rho^(n-1-p) d rho = 1/(n-p).
    """
    if n not in (2, 3):
        raise ParameterError("n must be 2 or 3")
    if not 1 < p < n:
        raise ParameterError("need 1 < p < n")
    ang_f = lambda t: np.abs(2 * np.cos(2 * t)) ** p  # noqa: E731
    if n == 2:
        return spherical_quadrature(2, (lambda r: r ** (1 - p), ang_f),
                                    angular_ranges=COMPLEMENT_ARCS_2D, radial_exponent=1 - p,
                                    rtol=rtol)
    return spherical_quadrature(3, (lambda r: r ** (2 - p), lambda t: np.ones_like(t),
                                    lambda ph: np.sin(ph) * ang_f(ph)),
                                angular_ranges=((QUARTER, 3 * QUARTER),), radial_exponent=2 - p,
                                rtol=rtol)


def r2_closed_form_2d(p: float) -> float:
    return 2 ** p * math.sqrt(math.pi) * gamma_fn((p + 1) / 2) / gamma_fn(p / 2 + 1) / (2 - p)


def r2_mesh(p: float, mesh: Mesh) -> float:
    """Mesh quadrature of |grad u*|^p with the exact gradient at quadrature points."""
    return energy(DoublePhaseIntegrand.unweighted(p), u_star_field(1.0), mesh).p_part


def r2_mesh_interpolant(p: float, mesh: Mesh) -> float:
    """int |grad I u*|^p for the nodal interpolant I u*."""
    g = gradient(interpolate(mesh, lambda x: u_star_eval(x, 2)))
    return math.fsum(mesh.areas * np.linalg.norm(g, axis=1) ** p)


def compute_r3(n: int) -> float:
    """Surface measure of the closed cone trace on the unit sphere."""
    if n == 2:
        return spherical_quadrature(2, (lambda r: np.ones_like(r), lambda t: np.ones_like(t)),
                                    radial_range=(0.0, 1.0), angular_ranges=V_ARCS_2D,
                                    radial_exponent=0.0)
    if n == 3:
        return spherical_quadrature(2, (lambda r: np.ones_like(r), np.sin),
                                    radial_range=(0.0, 2 * math.pi),
                                    angular_ranges=((0.0, QUARTER), (3 * QUARTER, math.pi)),
                                    radial_exponent=0.0)
    raise ParameterError("n must be 2 or 3")


def threshold(r1, r2, r3, p, q) -> float:
    """[r2 (q/r3)^q (r1/(q-1))^(q-1)]^(1/(q-p)), computed in logs."""
    if q == p:
        raise ParameterError("q must differ from p")
    if min(r1, r2, r3) <= 0:
        raise ParameterError("constants must be positive")
    log_t = (math.log(r2) + q * math.log(q / r3) + (q - 1) * math.log(r1 / (q - 1))) / (q - p)
    return math.exp(log_t)


def compute_t0(r1, r2, r3, p, q, safety_factor=None) -> float:
    """t0 = safety_factor * threshold; safety_factor = 1 is the boundary case."""
    s = DEFAULTS["safety_factor"] if safety_factor is None else safety_factor
    if not s >= 1:
        raise ParameterError("safety_factor must be >= 1")
    return s * threshold(r1, r2, r3, p, q)


@dataclass
class SharpnessInstance:
    n: int
    p: float
    q: float
    kappa: float
    safety_factor: float = 1.1
    r1: float = field(init=False)
    r2: float = field(init=False)
    r3: float = field(init=False)
    threshold: float = field(init=False)
    t0: float = field(init=False)
    r1_detail: R1Result = field(init=False, repr=False)

    def __post_init__(self):
        if self.n not in (2, 3):
            raise ParameterError("n must be 2 or 3")
        P, Q, K, N = (Fraction(str(v)) for v in (self.p, self.q, self.kappa, self.n))
        if not (1 < P < N < N + K < Q):
            raise ParameterError(
                f"need 1 < p < n < n + kappa < q, got p={self.p}, n={self.n}, kappa={self.kappa}, q={self.q}")
        if not self.safety_factor >= 1:
            raise ParameterError("safety_factor must be >= 1")
        self.r1_detail = compute_r1(self.n, self.q, self.kappa)
        self.r1 = self.r1_detail.value
        self.r2 = compute_r2(self.n, self.p)
        self.r3 = compute_r3(self.n)
        self.threshold = threshold(self.r1, self.r2, self.r3, self.p, self.q)
        self.t0 = self.safety_factor * self.threshold

    @property
    def weight(self) -> Weight:
        return cone_weight(self.kappa)

    @property
    def integrand(self) -> DoublePhaseIntegrand:
        return DoublePhaseIntegrand(self.p, self.q, self.weight)

    @property
    def lambda_star(self) -> float:
        q = self.q
        return ((q - 1) * self.t0 * self.r3 / (q * self.r1)) ** (q - 1)

    def u0(self, x):
        return u0_eval(x, self.t0, self.n)

    def as_dict(self):
        return {"n": self.n, "p": self.p, "q": self.q, "kappa": self.kappa,
                "safety_factor": self.safety_factor, "r1": self.r1,
                "r1_alternative": self.r1_detail.alternative, "r1_bound_form": self.r1_detail.bound_form,
                "r2": self.r2, "r3": self.r3, "threshold": self.threshold, "t0": self.t0,
                "lambda_star": self.lambda_star}


def upper_bound_W(inst: SharpnessInstance) -> float:
    """F[t0 u*] = t0^p r2 (the q-part vanishes)."""
    return inst.t0 ** inst.p * inst.r2


def lower_bound_smooth(inst: SharpnessInstance) -> float:
    """(r3/q)^q ((q-1)/r1)^(q-1) t0^q."""
    q = inst.q
    return (inst.r3 / q) ** q * ((q - 1) / inst.r1) ** (q - 1) * inst.t0 ** q


def upper_bound_mesh_check(inst: SharpnessInstance, h: float = 1 / 64, grading: float = 3.0) -> dict:
    """F[t0 u*] by mesh quadrature (exact gradient) on a graded disk mesh."""
    if inst.n != 2:
        raise ParameterError("mesh checks are two-dimensional")
    mesh = build_disk_mesh(1.0, h, grading=grading)
    br = energy(inst.integrand, u_star_field(inst.t0), mesh)
    formula = upper_bound_W(inst)
    return {"mesh_h": mesh.h, "grading": grading, "n_nodes": mesh.n_nodes,
            "mesh_energy": br.total, "p_part": br.p_part, "q_part": br.q_part,
            "formula": formula, "rel_diff": abs(br.total - formula) / formula}


def ell_gradient_sup(mesh: Mesh) -> float:
    """max over cells of |grad I ell|."""
    g = gradient(interpolate(mesh, ell_eval))
    return float(np.linalg.norm(g, axis=1).max())


# ---------------------------------------------------------------------------
# proof-chain checks on discrete competitors

def _exit_radius(mesh: Mesh, theta: np.ndarray) -> np.ndarray:
    """Distance from the centre to the mesh boundary polygon along each ray."""
    c = np.asarray(mesh.meta.get("center", (0.0, 0.0)))
    b = mesh.nodes[mesh.boundary_nodes] - c
    ang = np.mod(np.arctan2(b[:, 1], b[:, 0]), 2 * np.pi)
    order = np.argsort(ang, kind="stable")
    ang, b = ang[order], b[order]
    th = np.mod(theta, 2 * np.pi)
    k = np.searchsorted(ang, th, side="right") - 1
    p0 = b[k % b.shape[0]]
    p1 = b[(k + 1) % b.shape[0]]
    d = np.column_stack([np.cos(th), np.sin(th)])
    e = p1 - p0
    # solve s d = p0 + t e for s
    det = d[:, 0] * (-e[:, 1]) - d[:, 1] * (-e[:, 0])
    s = (p0[:, 0] * (-e[:, 1]) - p0[:, 1] * (-e[:, 0])) / det
    return s


def radial_variation_integral(w: GridFunction, *, n_theta: int = 256, n_rho: int = 4097) -> float:
    """int over V of |x|^-1 |d w / d rho| dx for a P1 field (n = 2).

    Along each ray the integral of |d_rho w| is the total variation of w
    between the centre and the boundary polygon; rays are sampled at Gauss
    points on the two arcs of V.
    """
    mesh = w.mesh
    c = np.asarray(mesh.meta.get("center", (0.0, 0.0)))
    gx, gw = np.polynomial.legendre.leggauss(n_theta)
    total = []
    for a, b in V_ARCS_2D:
        th = 0.5 * (a + b) + 0.5 * (b - a) * gx
        wt = 0.5 * (b - a) * gw
        rexit = _exit_radius(mesh, th) * (1.0 - 1e-13)
        s = np.linspace(0.0, 1.0, n_rho)
        rho = rexit[:, None] * s[None, :]
        pts = c + np.stack([rho * np.cos(th)[:, None], rho * np.sin(th)[:, None]], axis=-1)
        vals = mesh.evaluate(w.values, pts.reshape(-1, 2), fill=np.nan).reshape(rho.shape)
        if np.isnan(vals).any():
            raise ParameterError("ray samples left the mesh")
        tv = np.abs(np.diff(vals, axis=1)).sum(axis=1)
        total.append(math.fsum(wt * tv))
    return math.fsum(total)


def lemma3_check(w: GridFunction, inst: SharpnessInstance, *, tol=None, **kw) -> dict:
    """t0 r3 <= int_V |x|^(1-n) |<x/|x|, grad w>| dx, up to a relative tol."""
    if inst.n != 2:
        raise ParameterError("competitor checks are two-dimensional")
    tol = DEFAULTS["chain_tol"] if tol is None else tol
    rhs = radial_variation_integral(w, **kw)
    lhs = inst.t0 * inst.r3
    return {"lhs": lhs, "rhs": rhs, "ratio": rhs / lhs if lhs else math.inf,
            "passed": bool(rhs >= lhs * (1 - tol))}


def young_chain_check(w: GridFunction, inst: SharpnessInstance, lambdas=None, *, tol=None,
                      F_w: float | None = None) -> dict:
    """r3 lam t0 <= r1 lam^(q/(q-1)) + F[w] for lam in {0.5, 1, 2, lam*}."""
    tol = DEFAULTS["chain_tol"] if tol is None else tol
    lambdas = (0.5, 1.0, 2.0, inst.lambda_star) if lambdas is None else lambdas
    if F_w is None:
        F_w = energy(inst.integrand, w).total
    q = inst.q
    rows = []
    for lam in lambdas:
        if not lam > 0:
            raise ParameterError("lambda must be positive")
        lhs = inst.r3 * lam * inst.t0
        rhs = inst.r1 * lam ** (q / (q - 1)) + F_w
        rows.append({"lambda": float(lam), "lhs": lhs, "rhs": rhs,
                     "passed": bool(lhs <= rhs * (1 + tol))})
    return {"energy": F_w, "rows": rows, "passed": all(r["passed"] for r in rows)}


@dataclass
class GapReport:
    instance: dict
    upper: float
    lower: float
    competitor_energies: list
    verdict: bool
    slack: float
    extras: dict = field(default_factory=dict)

    def as_dict(self):
        return {"instance": self.instance, "upper": self.upper, "lower": self.lower,
                "ratio": self.lower / self.upper, "competitors": self.competitor_energies,
                "verdict": self.verdict, "slack": self.slack, **self.extras}


def gap_report(inst: SharpnessInstance, competitors, *, slack=None, extras=None) -> GapReport:
    """Assemble the bound chain; raise BoundViolation if a competitor undercuts it.

    ``competitors`` is a list of dicts with at least 'label' and 'energy'.
    """
    slack = DEFAULTS["competitor_slack"] if slack is None else slack
    up, lo = upper_bound_W(inst), lower_bound_smooth(inst)
    comps = [dict(c) for c in competitors]
    bad = [c for c in comps if c["energy"] < lo * (1 - slack)]
    if bad:
        raise BoundViolation(
            f"competitor {bad[0]['label']} has energy {bad[0]['energy']:.6g} below the proved bound {lo:.6g}")
    verdict = bool(lo > up)
    return GapReport(inst.as_dict(), up, lo, comps, verdict, slack, extras or {})

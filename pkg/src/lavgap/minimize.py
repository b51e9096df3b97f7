"""Discrete minimisation and the no-gap / gap experiments.

The discrete energy of a P1 field is a sum of convex functions of the cell
gradients.  ``minimize_energy`` runs damped Newton on the interior nodal
values with |g| regularised as sqrt(|g|^2 + eps^2), an Armijo backtracking
line search, and a steepest-descent fallback.  Reported energies are always
the unregularised ones.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .config import DEFAULTS
from .counterexample import (SharpnessInstance, gap_report, lemma3_check, u0_eval, u_star_eval,
                             upper_bound_mesh_check, young_chain_check)
from .domain_grid import GridFunction, Mesh, build_disk_mesh, gradient, interpolate
from .energy import DoublePhaseIntegrand, EnergyBreakdown, energy, modular, modular_distance, regime_classify
from .errors import EvaluationError, ParameterError, PreconditionError
from .mollify import ShrinkMollifier, apply
from .weights import power_weight, zk_membership_verdict

__all__ = [
    "DiscreteProblem", "MinimizerResult", "CompetitorFamily", "minimize_energy",
    "harmonic_extension", "mollified_competitor_family", "density_convergence_experiment",
    "no_gap_experiment", "gap_experiment",
]


@dataclass
class DiscreteProblem:
    mesh: Mesh
    integrand: DoublePhaseIntegrand
    boundary_values: np.ndarray

    def __post_init__(self):
        self.boundary_values = np.asarray(self.boundary_values, dtype=np.float64)
        if self.boundary_values.shape != self.mesh.boundary_nodes.shape:
            raise ParameterError("one boundary value per boundary node expected")

    @classmethod
    def from_function(cls, mesh, integrand, g):
        return cls(mesh, integrand, np.asarray(g(mesh.nodes[mesh.boundary_nodes]), dtype=np.float64))


@dataclass
class MinimizerResult:
    field: GridFunction
    energy: float
    breakdown: EnergyBreakdown
    iterations: int
    residual: float
    converged: bool
    message: str
    history: list = field(default_factory=list)

    def as_dict(self):
        return {"energy": self.energy, "breakdown": self.breakdown.as_dict(),
                "iterations": self.iterations, "residual": self.residual,
                "converged": self.converged, "message": self.message}


class _Assembler:
    """Per-cell energy, gradient and Hessian of the regularised objective."""

    def __init__(self, problem: DiscreteProblem, eps: float):
        mesh = problem.mesh
        self.mesh = mesh
        self.B = mesh.basis_gradients                     # (T, 3, 2)
        self.cp = mesh.areas
        self.cq = problem.integrand.weight_integrals(mesh)
        self.p, self.q = problem.integrand.p, problem.integrand.q
        self.eps2 = eps * eps
        c = mesh.cells
        self.rows = np.repeat(c, 3, axis=1).ravel()
        self.cols = np.tile(c, (1, 3)).ravel()

    def cell_grad(self, u):
        return np.einsum("ti,tid->td", u[self.mesh.cells], self.B)

    def value(self, g):
        s = np.sqrt(np.einsum("td,td->t", g, g) + self.eps2)
        return math.fsum(self.cp * s ** self.p) + math.fsum(self.cq * s ** self.q)

    def derivatives(self, u):
        g = self.cell_grad(u)
        s2 = np.einsum("td,td->t", g, g) + self.eps2
        s = np.sqrt(s2)
        p, q = self.p, self.q
        alpha = self.cp * p * s ** (p - 2) + self.cq * q * s ** (q - 2)
        beta = self.cp * p * (p - 2) * s ** (p - 4) + self.cq * q * (q - 2) * s ** (q - 4)
        flux = alpha[:, None] * g                          # dE/dg per cell
        grad = np.zeros(self.mesh.n_nodes)
        np.add.at(grad, self.mesh.cells.ravel(), np.einsum("tid,td->ti", self.B, flux).ravel())
        BB = np.einsum("tid,tjd->tij", self.B, self.B)
        Bg = np.einsum("tid,td->ti", self.B, g)
        loc = alpha[:, None, None] * BB + beta[:, None, None] * Bg[:, :, None] * Bg[:, None, :]
        n = self.mesh.n_nodes
        H = sp.csr_matrix((loc.ravel(), (self.rows, self.cols)), shape=(n, n))
        return grad, H, g


def _true_energy(problem, u):
    return energy(problem.integrand, GridFunction(problem.mesh, u))


def harmonic_extension(mesh: Mesh, boundary_values) -> GridFunction:
    """Discrete harmonic function with the given boundary values."""
    B = mesh.basis_gradients
    loc = mesh.areas[:, None, None] * np.einsum("tid,tjd->tij", B, B)
    c = mesh.cells
    n = mesh.n_nodes
    K = sp.csr_matrix((loc.ravel(), (np.repeat(c, 3, axis=1).ravel(), np.tile(c, (1, 3)).ravel())),
                      shape=(n, n))
    u = np.zeros(n)
    u[mesh.boundary_nodes] = boundary_values
    I = mesh.interior_nodes
    if I.size:
        rhs = -K[I][:, mesh.boundary_nodes] @ np.asarray(boundary_values, dtype=np.float64)
        u[I] = spla.spsolve(K[I][:, I].tocsc(), rhs)
    return GridFunction(mesh, u)


def minimize_energy(problem: DiscreteProblem, initial: GridFunction | None = None, *, tol=None,
                    max_iter: int = 200, eps=None) -> MinimizerResult:
    """Damped Newton with Armijo backtracking on the interior nodal values."""
    tol = DEFAULTS["solver_tol"] if tol is None else tol
    eps = DEFAULTS["solver_eps"] if eps is None else eps
    mesh = problem.mesh
    if initial is None:
        initial = harmonic_extension(mesh, problem.boundary_values)
    u = np.array(initial.values, dtype=np.float64)
    if not np.allclose(u[mesh.boundary_nodes], problem.boundary_values, rtol=0, atol=1e-12):
        raise ParameterError("initial iterate must match the boundary data")
    u[mesh.boundary_nodes] = problem.boundary_values
    asm = _Assembler(problem, eps)
    I = mesh.interior_nodes
    E = asm.value(asm.cell_grad(u))
    if not math.isfinite(E):
        raise EvaluationError("energy of the initial iterate is not finite")
    start = _true_energy(problem, u)
    best_u, best_E = u.copy(), start.total
    history = [start.total]
    message, converged, residual, it = "max_iter reached", False, math.inf, 0
    if I.size == 0:
        return MinimizerResult(GridFunction(mesh, u), start.total, start, 0, 0.0, True, "no unknowns", history)
    for it in range(1, max_iter + 1):
        grad, H, _ = asm.derivatives(u)
        gI = grad[I]
        residual = float(np.abs(gI).max())
        d = None
        try:
            d = -spla.spsolve(H[I][:, I].tocsc(), gI)
            if not np.all(np.isfinite(d)) or float(gI @ d) >= 0:
                d = None
        except RuntimeError:
            d = None
        if d is None:
            d = -gI
        slope = float(gI @ d)
        decrement = -0.5 * slope
        if decrement <= tol * max(1.0, abs(E)):
            converged, message = True, "converged"
            break
        full_d = np.zeros(mesh.n_nodes)
        full_d[I] = d
        gu = asm.cell_grad(u)
        gd = asm.cell_grad(full_d)
        t = 1.0
        accepted = False
        for _ in range(60):
            E_new = asm.value(gu + t * gd)
            if E_new <= E + 1e-4 * t * slope:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            message = "line search failed"
            break
        u = u + t * full_d
        E = E_new
        true_E = _true_energy(problem, u).total
        history.append(true_E)
        if true_E <= best_E:
            best_u, best_E = u.copy(), true_E
    final = _true_energy(problem, best_u)
    return MinimizerResult(GridFunction(mesh, best_u), final.total, final, it, residual, converged,
                           message, history)


# ---------------------------------------------------------------------------
# mollified competitors

@dataclass
class CompetitorFamily:
    base: GridFunction
    deltas: list
    members: list
    energies: list
    diagnostics: dict

    def rows(self):
        return [{"delta": d, **e.as_dict()} for d, e in zip(self.deltas, self.energies)]


def mollified_competitor_family(v: GridFunction, u0_field: GridFunction, deltas, integrand, *,
                                R: float = 1.0, x0=(0.0, 0.0)) -> CompetitorFamily:
    """w_delta = u0_field + S_delta v for each delta, with energies."""
    mesh = v.mesh
    if np.abs(v.values[mesh.boundary_nodes]).max(initial=0.0) > 0.0:
        raise ParameterError("v must vanish on the boundary nodes")
    members, energies, bdev = [], [], []
    for d in deltas:
        m = ShrinkMollifier(float(d), x0, R)
        w = u0_field + apply(m, v)
        members.append(w)
        energies.append(energy(integrand, w))
        bdev.append(float(np.abs(w.values[mesh.boundary_nodes]
                                 - u0_field.values[mesh.boundary_nodes]).max(initial=0.0)))
    return CompetitorFamily(v, [float(d) for d in deltas], members, energies,
                            {"boundary_deviation": bdev})


def density_convergence_experiment(phi: GridFunction, integrand: DoublePhaseIntegrand, deltas, *,
                                   kappa: float = 1.0, gamma: float | None = None, R: float = 1.0,
                                   certify: bool = True) -> dict:
    """Modular distance between grad S_delta phi and grad phi along a delta sequence."""
    p, q = integrand.p, integrand.q
    reasons = []
    if certify:
        in_range = kappa >= q - p or (gamma is not None and kappa >= (q - p) * (1 - gamma))
        if not in_range:
            reasons.append("exponents outside the density range")
        elif integrand.a.sup_bound > 0:
            verdict = zk_membership_verdict(integrand.a, kappa, (1 / 8, 1 / 16, 1 / 32))
            if not verdict.stable:
                reasons.append(f"weight not certified in Z^{kappa:g}")
    mesh = phi.mesh
    g_phi = gradient(phi)
    scale = modular(integrand, g_phi, mesh)
    base_energy = energy(integrand, phi).total
    rows = []
    for d in deltas:
        m = ShrinkMollifier(float(d), R=R)
        s_phi = apply(m, phi)
        dist = modular_distance(integrand, gradient(s_phi), g_phi, mesh)
        rows.append({"delta": float(d), "modular_distance": dist,
                     "relative": dist / scale if scale else 0.0,
                     "energy_gap": energy(integrand, s_phi).total - base_energy})
    dists = [r["modular_distance"] for r in rows]
    return {"rows": rows, "modular_scale": scale,
            "decreasing": all(b < a for a, b in zip(dists[:-1], dists[1:])),
            "final_relative": rows[-1]["relative"] if rows else None,
            "certified": not reasons, "warnings": reasons}


def no_gap_experiment(p=2.0, q=3.0, kappa=1.0, *, weight=None, g=None, h_list=(1 / 16, 1 / 32, 1 / 64),
                      deltas=(0.2, 0.1, 0.05, 0.025), gamma=None, R: float = 1.0) -> dict:
    """Discrete minimum vs the best mollified competitor, per mesh level."""
    verdict = regime_classify(2, p, q, kappa, gamma)
    if not verdict.verdict.startswith("NoGap"):
        raise PreconditionError(f"parameters fall in regime {verdict.verdict}, not a no-gap range")
    weight = power_weight(kappa) if weight is None else weight
    g = (lambda x: x[..., 0]) if g is None else g
    integrand = DoublePhaseIntegrand(p, q, weight)
    levels = []
    for h in h_list:
        mesh = build_disk_mesh(1.0, h)
        prob = DiscreteProblem.from_function(mesh, integrand, g)
        res = minimize_energy(prob)
        gI = interpolate(mesh, g)
        v = res.field - gI
        v.values[mesh.boundary_nodes] = 0.0
        fam = mollified_competitor_family(v, gI, deltas, integrand, R=R)
        comp = [e.total for e in fam.energies]
        best = min(comp)
        rel = (best - res.energy) / res.energy if res.energy > 0 else abs(best - res.energy)
        levels.append({"h": mesh.h, "n_nodes": mesh.n_nodes, "discrete_min": res.energy,
                       "solver_converged": res.converged, "solver_iterations": res.iterations,
                       "competitors": fam.rows(), "best_competitor": best, "relative_gap": rel})
    rels = [lv["relative_gap"] for lv in levels]
    return {"regime": verdict.as_dict(), "levels": levels, "final_relative_gap": rels[-1],
            "improving": all(b <= a for a, b in zip(rels[:-1], rels[1:]))}


def gap_experiment(inst: SharpnessInstance, *, h: float = 1 / 64, deltas=(0.05, 0.1, 0.2), R: float = 1.0,
                   run_minimizer: bool = True, upper_h: float = 1 / 64, upper_grading: float = 3.0,
                   max_iter: int = 200):
    """Certify the gap for the cone instance with mollified competitors.

    Competitors are w_delta = I u0 + S_delta v with v = I(t0 (1 - |x|^2) u*),
    i.e. mollified approximants of t0 u* carrying the boundary datum u0.
    """
    verdict = regime_classify(inst.n, inst.p, inst.q, inst.kappa)
    if verdict.verdict != "Gap-Sharpness":
        raise PreconditionError(f"parameters fall in regime {verdict.verdict}, not the gap range")
    if inst.n != 2:
        raise ParameterError("competitor experiments run in two dimensions")
    mesh = build_disk_mesh(1.0, h)
    integrand = inst.integrand
    u0f = interpolate(mesh, inst.u0)
    v = interpolate(mesh, lambda x: inst.t0 * (1.0 - (x * x).sum(-1)) * u_star_eval(x, 2))
    v.values[mesh.boundary_nodes] = 0.0
    fam = mollified_competitor_family(v, u0f, deltas, integrand, R=R)
    comps = []
    for d, w, e in zip(fam.deltas, fam.members, fam.energies):
        l3 = lemma3_check(w, inst)
        yc = young_chain_check(w, inst, F_w=e.total)
        comps.append({"label": f"S_delta, delta={d:g}", "delta": d, "energy": e.total,
                      "p_part": e.p_part, "q_part": e.q_part,
                      "lemma3": l3, "young_chain": yc})
    extras = {"upper_mesh_check": upper_bound_mesh_check(inst, upper_h, upper_grading),
              "mesh_h": mesh.h, "n_nodes": mesh.n_nodes,
              "boundary_deviation": fam.diagnostics["boundary_deviation"],
              "regime": verdict.as_dict()}
    if run_minimizer:
        prob = DiscreteProblem(mesh, integrand, u0f.values[mesh.boundary_nodes])
        res = minimize_energy(prob, u0f, max_iter=max_iter)
        extras["fem_minimizer"] = {**res.as_dict(), "note": "diagnostic only, not a bound"}
    rep = gap_report(inst, comps, extras=extras)
    rep.extras["chain_passed"] = all(c["lemma3"]["passed"] and c["young_chain"]["passed"] for c in comps)
    return rep

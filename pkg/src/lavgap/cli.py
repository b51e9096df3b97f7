"""``lavgap`` command line.

Every command resolves its configuration as built-in defaults, then an
optional ``--config`` JSON file, then explicit flags (flags win).  Reports go
to ``--out`` unless ``LAVGAP_OUT`` is set, and each JSON report carries the
resolved config, the tolerance table and the package version.

Exit codes: 0 success, 1 bad parameters or unmet preconditions, 2 a
checked bound or assertion failed.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import __version__, report
from .config import DEFAULTS
from .errors import BoundViolation, LavgapError, ParameterError, PreconditionError

__all__ = ["main", "run", "ExperimentConfig", "COMMANDS"]


class _Parser(argparse.ArgumentParser):
    """Usage errors become ParameterError (exit 1); exit 2 is reserved for failed checks."""

    def error(self, message):
        raise ParameterError(message)


def _num(v) -> float:
    if isinstance(v, (int, float)):
        return float(v)
    return float(Fraction(str(v).strip()))


def _nums(v) -> list:
    if v is None:
        return []
    if isinstance(v, (list, tuple)):
        return [_num(x) for x in v]
    return [_num(x) for x in str(v).split(",") if x.strip()]


@dataclass
class ExperimentConfig:
    """Resolved parameters of one command run."""

    command: str
    params: dict
    out: Path
    seed: int = 0
    sources: dict = field(default_factory=dict)

    def __post_init__(self):
        pr = {k: v for k, v in self.params.items() if v is not None}
        try:
            if "n" in pr and (int(pr["n"]) != pr["n"] or pr["n"] < 2):
                raise ParameterError("n must be an integer >= 2")
            if "p" in pr and "q" in pr and not 1 < pr["p"] < pr["q"]:
                raise ParameterError(f"need 1 < p < q, got p={pr['p']}, q={pr['q']}")
            if "kappa" in pr and not pr["kappa"] > 0:
                raise ParameterError("kappa must be positive")
            g = pr.get("gamma")
            if g is not None and not 0 < g <= 1:
                raise ParameterError("gamma must lie in (0, 1]")
        except TypeError as exc:
            raise ParameterError(f"malformed parameter: {exc}") from None

    def as_dict(self):
        # the output directory is left out so reports do not depend on where they are written
        return {"command": self.command, "params": self.params,
                "seed": self.seed, "sources": self.sources}


# ---------------------------------------------------------------------------
# command definitions: (defaults, converters)

_DEFAULTS = {
    "regimes": {"n": 2, "p": None, "q": None, "kappa": None, "gamma": None, "table": None},
    "weight-check": {"weight": "abs", "kappa": 1.0, "weight_param": None,
                     "h": [1 / 16, 1 / 32, 1 / 64], "radius": 1.0},
    "mollify": {"delta": [0.2, 0.1, 0.05, 0.025], "test_fn": "tent", "h": 1 / 64,
                "gamma": 0.5, "R": 1.0},
    "energy": {"integrand": None, "field": None, "mesh": None},
    "minimize": {"problem": None},
    "no-gap-demo": {"p": 2.0, "q": 3.0, "kappa": 1.0, "gamma": None, "weight": None,
                    "h": [1 / 16, 1 / 32, 1 / 64], "deltas": [0.2, 0.1, 0.05, 0.025],
                    "boundary": "x1", "R": 1.0, "tolerance": 0.10},
    "gap-demo": {"n": 2, "p": 1.5, "q": 4.0, "kappa": 1.0, "safety": DEFAULTS["safety_factor"],
                 "h": 1 / 64, "deltas": [0.05, 0.1, 0.2], "upper_h": 1 / 64, "minimizer": True,
                 "max_iter": 200},
    "counterexample-constants": {"n": 2, "p": 1.5, "q": 4.0, "kappa": 1.0,
                                 "safety": DEFAULTS["safety_factor"]},
}

_LISTS = {"h", "delta", "deltas"}
_FLOATS = {"p", "q", "kappa", "gamma", "radius", "weight_param", "R", "tolerance", "safety",
           "upper_h"}
_INTS = {"n", "max_iter"}


def _coerce(key, value, command):
    if value is None:
        return None
    if key in _LISTS and not (command == "mollify" and key == "h") and not (
            command == "gap-demo" and key == "h"):
        return _nums(value)
    if key in _LISTS or key in _FLOATS:
        return _num(value)
    if key in _INTS:
        f = _num(value)
        if f != int(f):
            raise ParameterError(f"{key} must be an integer")
        return int(f)
    return value


def _add_common(sp):
    sp.add_argument("--config", help="JSON file with parameters (flags override it)")
    sp.add_argument("--out", help="output directory (LAVGAP_OUT takes precedence)")
    sp.add_argument("--seed", type=int, help="seed for stochastic sampling (default 0)")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="lavgap", description="Double-phase energies and Lavrentiev gap experiments.")
    ap.add_argument("--version", action="version", version=f"lavgap {__version__}")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)
    S = argparse.SUPPRESS

    sp = sub.add_parser("regimes", help="classify (n, p, q, kappa, gamma)", argument_default=S)
    for k in ("n", "p", "q", "kappa", "gamma"):
        sp.add_argument(f"--{k}")
    sp.add_argument("--table", help="CSV with columns n,p,q,kappa[,gamma]")
    _add_common(sp)

    sp = sub.add_parser("weight-check", help="Z^kappa refinement study of a weight", argument_default=S)
    sp.add_argument("--weight", help="shipped name or an expression in x1, x2, r")
    sp.add_argument("--kappa", help="class exponent to test")
    sp.add_argument("--weight-param", dest="weight_param",
                    help="exponent inside parametrised weights (default: --kappa)")
    sp.add_argument("--h", help="comma list of mesh sizes, e.g. 1/16,1/32,1/64")
    sp.add_argument("--radius")
    _add_common(sp)

    sp = sub.add_parser("mollify", help="shrinking mollifier sweep", argument_default=S)
    sp.add_argument("--delta", help="comma list of delta values, each < R/4")
    sp.add_argument("--test-fn", dest="test_fn", help="tent, bump, sqrt or random")
    sp.add_argument("--h", help="mesh size")
    sp.add_argument("--gamma", help="Hölder exponent for the gradient bound")
    sp.add_argument("--R")
    _add_common(sp)

    sp = sub.add_parser("energy", help="energy breakdown of a nodal field", argument_default=S)
    sp.add_argument("--integrand", help="JSON: p, q, weight, weight_param, h, radius, grading")
    sp.add_argument("--field", help="CSV with columns node,value")
    sp.add_argument("--mesh", help="mesh JSON (otherwise built from the integrand file)")
    _add_common(sp)

    sp = sub.add_parser("minimize", help="discrete minimiser of a Dirichlet problem", argument_default=S)
    sp.add_argument("--problem", help="JSON: p, q, weight, weight_param, h, radius, boundary, max_iter")
    _add_common(sp)

    sp = sub.add_parser("no-gap-demo", help="discrete minimum vs mollified competitors",
                        argument_default=S)
    for k in ("p", "q", "kappa", "gamma"):
        sp.add_argument(f"--{k}")
    sp.add_argument("--weight", help="weight (default |x|^kappa)")
    sp.add_argument("--h", help="comma list of mesh sizes")
    sp.add_argument("--deltas")
    sp.add_argument("--boundary", help="boundary datum as an expression in x1, x2, r")
    sp.add_argument("--R")
    sp.add_argument("--tolerance", help="allowed relative gap at the finest mesh")
    _add_common(sp)

    sp = sub.add_parser("gap-demo", help="certify the gap on the cone instance", argument_default=S)
    for k in ("n", "p", "q", "kappa", "safety"):
        sp.add_argument(f"--{k}")
    sp.add_argument("--h", help="competitor mesh size")
    sp.add_argument("--deltas")
    sp.add_argument("--upper-h", dest="upper_h", help="mesh size of the upper-bound quadrature check")
    sp.add_argument("--no-minimizer", dest="minimizer", action="store_false",
                    help="skip the diagnostic FEM minimiser")
    sp.add_argument("--max-iter", dest="max_iter")
    _add_common(sp)

    sp = sub.add_parser("counterexample-constants", help="r1, r2, r3, threshold and t0",
                        argument_default=S)
    for k in ("n", "p", "q", "kappa", "safety"):
        sp.add_argument(f"--{k}")
    _add_common(sp)
    return ap


def resolve_config(command: str, flags: dict) -> ExperimentConfig:
    flags = dict(flags)
    file_cfg = {}
    cfg_path = flags.pop("config", None)
    if cfg_path:
        try:
            file_cfg = json.loads(Path(cfg_path).read_text())
        except (OSError, ValueError) as exc:
            raise ParameterError(f"cannot read config {cfg_path}: {exc}") from None
        if not isinstance(file_cfg, dict):
            raise ParameterError("config file must hold a JSON object")
    out_flag = flags.pop("out", None) or file_cfg.pop("out", None)
    seed = flags.pop("seed", None)
    if seed is None:
        seed = file_cfg.pop("seed", 0)
    file_cfg.pop("seed", None)
    base = _DEFAULTS[command]
    unknown = set(file_cfg) - set(base)
    if unknown:
        raise ParameterError(f"unknown config keys for {command}: {sorted(unknown)}")
    params, sources = {}, {}
    for key, default in base.items():
        if key in flags:
            val, src = flags[key], "flag"
        elif key in file_cfg:
            val, src = file_cfg[key], "file"
        else:
            val, src = default, "default"
        try:
            params[key] = _coerce(key, val, command)
        except (ValueError, ZeroDivisionError) as exc:
            raise ParameterError(f"bad value for {key}: {val!r} ({exc})") from None
        sources[key] = src
    return ExperimentConfig(command, params, report.out_dir(out_flag), int(seed), sources)


# ---------------------------------------------------------------------------
# helpers

def _weight(desc, param):
    from .weights import WEIGHT_NAMES, expression_weight, named_weight
    if desc in WEIGHT_NAMES:
        return named_weight(desc, 1.0 if param is None else param)
    try:
        return expression_weight(str(desc))
    except (SyntaxError, ValueError, TypeError) as exc:
        raise ParameterError(f"cannot use weight {desc!r}: {exc}") from None


def _expr_field(expr):
    from .weights import expression_weight
    try:
        w = expression_weight(str(expr), sup_bound=1.0)
    except SyntaxError as exc:
        raise ParameterError(f"cannot parse {expr!r}: {exc}") from None
    return lambda x: w.eval(x)


def _problem_setup(desc: dict):
    from .domain_grid import Mesh, build_disk_mesh
    from .energy import DoublePhaseIntegrand
    try:
        p, q = _num(desc["p"]), _num(desc["q"])
    except KeyError as exc:
        raise ParameterError(f"integrand file lacks {exc}") from None
    wdesc = desc.get("weight", "one")
    integrand = DoublePhaseIntegrand(p, q, _weight(wdesc, desc.get("weight_param")))
    if desc.get("mesh"):
        mesh = Mesh.from_json(str(desc["mesh"]))
    else:
        mesh = build_disk_mesh(_num(desc.get("radius", 1.0)), _num(desc.get("h", 1 / 32)),
                               grading=_num(desc.get("grading", 1.0)))
    return integrand, mesh


def _read_json(path, what):
    if not path:
        raise ParameterError(f"--{what} is required")
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise ParameterError(f"cannot read {what} file {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ParameterError(f"{what} file must hold a JSON object")
    return data


# ---------------------------------------------------------------------------
# commands; each returns (result dict, exit code, extra artifact paths)

def _cmd_regimes(cfg):
    from .energy import regime_classify
    pr = cfg.params
    if pr["table"]:
        rows, code = [], 0
        try:
            fh = open(pr["table"], newline="")
        except OSError as exc:
            raise ParameterError(f"cannot read table {pr['table']}: {exc}") from None
        with fh:
            for rec in csv.DictReader(fh):
                g = rec.get("gamma") or None
                row = {"n": rec.get("n"), "p": rec.get("p"), "q": rec.get("q"),
                       "kappa": rec.get("kappa"), "gamma": g}
                try:
                    v = regime_classify(int(_num(rec["n"])), rec["p"], rec["q"], rec["kappa"], g)
                    row.update(verdict=v.verdict, condition=v.condition)
                except (ParameterError, KeyError, ValueError, TypeError, ZeroDivisionError) as exc:
                    row.update(verdict="invalid", condition=str(exc))
                    code = 1
                rows.append(row)
        path = report.write_csv(cfg.out / "regimes.csv", rows,
                                ["n", "p", "q", "kappa", "gamma", "verdict", "condition"])
        for r in rows:
            print(f"{r['n']},{r['p']},{r['q']},{r['kappa']},{r['gamma'] or ''} -> {r['verdict']}")
        return {"rows": rows}, code, [path]
    if any(pr[k] is None for k in ("p", "q", "kappa")):
        raise ParameterError("give --p, --q and --kappa, or --table")
    v = regime_classify(pr["n"], pr["p"], pr["q"], pr["kappa"], pr["gamma"])
    print(v.verdict)
    return v.as_dict(), 0, []


def _cmd_weight_check(cfg):
    from .weights import zk_membership_verdict
    pr = cfg.params
    param = pr["kappa"] if pr["weight_param"] is None else pr["weight_param"]
    a = _weight(pr["weight"], param)
    v = zk_membership_verdict(a, pr["kappa"], pr["h"], radius=pr["radius"])
    res = v.as_dict()
    res["witness"] = res["witnesses"][-1]
    rows = [{"h": h, "constant": c} for h, c in zip(v.h_values, v.constants)]
    csvp = report.write_csv(cfg.out / "weight-check.csv", rows, ["h", "constant"])
    svg = report.loglog_plot(cfg.out / "weight-check.svg",
                             {f"{a.label}, kappa={pr['kappa']:g}": (v.h_values, v.constants)},
                             xlabel="h", ylabel="C(h)", title="sampled Z^kappa constant")
    print(f"{a.label} kappa={pr['kappa']:g}: {v.verdict} (fitted exponent {v.fitted_exponent:.4f})")
    return res, 0, [csvp, svg]


def _cmd_mollify(cfg):
    from .domain_grid import build_disk_mesh, holder_seminorm_estimate
    from .mollify import (ShrinkMollifier, apply, gradient_identity_residual, holder_grad_bound_check,
                          l1_error, linf_grad_bound_check, support_report, test_function)
    pr = cfg.params
    if not pr["delta"]:
        raise ParameterError("need at least one delta")
    ms = [ShrinkMollifier(d, R=pr["R"]) for d in pr["delta"]]   # range check before any work
    mesh = build_disk_mesh(1.0, pr["h"])
    v = test_function(pr["test_fn"], mesh, seed=cfg.seed)
    semi = holder_seminorm_estimate(v.values, pr["gamma"], mesh.nodes)
    rows, code = [], 0
    for m in ms:
        Sv = apply(m, v)
        lin = linf_grad_bound_check(m, v)
        hol = holder_grad_bound_check(m, v, pr["gamma"], seminorm=semi)
        sup = support_report(m, v, Sv)
        rows.append({"delta": m.delta, "l1_error": l1_error(m, v, Sv),
                     "linf_ratio": lin.ratio, "holder_ratio": hol.ratio,
                     "identity_residual": gradient_identity_residual(m, v),
                     "linf_passed": lin.passed, "holder_passed": hol.passed,
                     "support_violation": sup["violations_geometric"]})
        if not (lin.passed and hol.passed) or sup["violations_geometric"]:
            code = 2
    fields = ["delta", "l1_error", "linf_ratio", "holder_ratio", "identity_residual",
              "linf_passed", "holder_passed", "support_violation"]
    csvp = report.write_csv(cfg.out / "mollify.csv", rows, fields)
    ds = [r["delta"] for r in rows]
    svg = report.loglog_plot(cfg.out / "mollify.svg",
                             {"L1 error": (ds, [r["l1_error"] for r in rows]),
                              "identity residual": (ds, [r["identity_residual"] for r in rows])},
                             xlabel="delta", ylabel="value", title=f"S_delta on {pr['test_fn']}")
    for r in rows:
        print(f"delta={r['delta']:g} L1={r['l1_error']:.4e} linf={r['linf_ratio']:.3f} "
              f"holder={r['holder_ratio']:.3f}")
    return {"mesh_h": mesh.h, "n_nodes": mesh.n_nodes, "holder_seminorm": semi, "rows": rows}, code, [csvp, svg]


def _cmd_energy(cfg):
    from .domain_grid import Mesh, read_field_csv
    from .energy import energy
    pr = cfg.params
    desc = _read_json(pr["integrand"], "integrand")
    if pr["mesh"]:
        desc["mesh"] = pr["mesh"]
    if not pr["field"]:
        raise ParameterError("--field is required")
    integrand, mesh = _problem_setup(desc)
    try:
        u = read_field_csv(mesh, pr["field"])
    except OSError as exc:
        raise ParameterError(f"cannot read field {pr['field']}: {exc}") from None
    br = energy(integrand, u)
    res = {**br.as_dict(), "n_nodes": mesh.n_nodes, "mesh_h": mesh.h}
    print(report.dumps(br.as_dict()), end="")
    return res, 0, []


def _cmd_minimize(cfg):
    from .domain_grid import write_field_csv
    from .minimize import DiscreteProblem, minimize_energy
    desc = _read_json(cfg.params["problem"], "problem")
    integrand, mesh = _problem_setup(desc)
    g = _expr_field(desc.get("boundary", "x1"))
    prob = DiscreteProblem.from_function(mesh, integrand, g)
    res = minimize_energy(prob, max_iter=int(desc.get("max_iter", 200)),
                          tol=desc.get("tol"), eps=desc.get("eps"))
    log = report.write_csv(cfg.out / "minimize_iterates.csv",
                           [{"iteration": i, "energy": e} for i, e in enumerate(res.history)],
                           ["iteration", "energy"])
    fieldp = cfg.out / "minimize_field.csv"
    write_field_csv(res.field, fieldp)
    meshp = cfg.out / "minimize_mesh.json"
    mesh.to_json(meshp)
    print(f"energy={res.energy:.10g} iterations={res.iterations} {res.message}")
    return {**res.as_dict(), "n_nodes": mesh.n_nodes, "mesh_h": mesh.h}, 0, [log, fieldp, meshp]


def _cmd_no_gap(cfg):
    from .minimize import no_gap_experiment
    pr = cfg.params
    weight = None if pr["weight"] is None else _weight(pr["weight"], pr["kappa"])
    res = no_gap_experiment(pr["p"], pr["q"], pr["kappa"], weight=weight,
                            g=_expr_field(pr["boundary"]), h_list=pr["h"], deltas=pr["deltas"],
                            gamma=pr["gamma"], R=pr["R"])
    rows = [{"h": lv["h"], "n_nodes": lv["n_nodes"], "discrete_min": lv["discrete_min"],
             "best_competitor": lv["best_competitor"], "relative_gap": lv["relative_gap"]}
            for lv in res["levels"]]
    csvp = report.write_csv(cfg.out / "no-gap-demo.csv", rows,
                            ["h", "n_nodes", "discrete_min", "best_competitor", "relative_gap"])
    svg = report.loglog_plot(cfg.out / "no-gap-demo.svg",
                             {"relative gap": ([r["h"] for r in rows], [r["relative_gap"] for r in rows])},
                             xlabel="h", ylabel="(best competitor - min) / min", title="no-gap experiment")
    # competitors are P1 fields with the same boundary values, so they cannot beat the minimum
    floor_ok = all(r["relative_gap"] >= -1e-6 for r in rows)
    within = res["final_relative_gap"] <= pr["tolerance"]
    res["checks"] = {"within_tolerance": within, "competitors_above_minimum": floor_ok,
                     "tolerance": pr["tolerance"]}
    print(f"final relative gap {res['final_relative_gap']:.3e} (tolerance {pr['tolerance']:g})")
    return res, 0 if (within and floor_ok) else 2, [csvp, svg]


def _cmd_gap(cfg):
    from .counterexample import SharpnessInstance
    from .energy import regime_classify
    from .minimize import gap_experiment
    pr = cfg.params
    v = regime_classify(pr["n"], pr["p"], pr["q"], pr["kappa"])
    if v.verdict != "Gap-Sharpness":
        raise PreconditionError(f"parameters fall in regime {v.verdict}; the gap construction needs "
                                "p < n < n + kappa < q")
    inst = SharpnessInstance(pr["n"], pr["p"], pr["q"], pr["kappa"], pr["safety"])
    rep = gap_experiment(inst, h=pr["h"], deltas=pr["deltas"], upper_h=pr["upper_h"],
                         run_minimizer=bool(pr["minimizer"]), max_iter=pr["max_iter"])
    res = rep.as_dict()
    rows = [{"label": c["label"], "delta": c["delta"], "energy": c["energy"], "p_part": c["p_part"],
             "q_part": c["q_part"], "lemma3_ratio": c["lemma3"]["ratio"],
             "lemma3_passed": c["lemma3"]["passed"], "young_passed": c["young_chain"]["passed"]}
            for c in rep.competitor_energies]
    arts = [report.write_csv(cfg.out / "gap-demo_competitors.csv", rows,
                             ["label", "delta", "energy", "p_part", "q_part", "lemma3_ratio",
                              "lemma3_passed", "young_passed"])]
    if rows:
        labels = ["upper", "lower"] + [f"delta={r['delta']:g}" for r in rows]
        vals = [rep.upper, rep.lower] + [r["energy"] for r in rows]
        arts.append(report.bar_chart(cfg.out / "gap-demo.svg", labels, vals, ylabel="energy",
                                     title="upper bound, lower bound, smooth competitors",
                                     reference={"lower": rep.lower}))
    ok = rep.verdict and rep.extras.get("chain_passed", True)
    print(f"upper={rep.upper:.6g} lower={rep.lower:.6g} ratio={rep.lower / rep.upper:.12f} "
          f"verdict={rep.verdict} chain={rep.extras.get('chain_passed')}")
    return res, 0 if ok else 2, arts


def _cmd_constants(cfg):
    from .counterexample import (SharpnessInstance, lower_bound_smooth, r1_closed_form_2d,
                                 r2_closed_form_2d, upper_bound_W)
    pr = cfg.params
    inst = SharpnessInstance(pr["n"], pr["p"], pr["q"], pr["kappa"], pr["safety"])
    d = inst.r1_detail
    res = {**inst.as_dict(), "r1_method": d.method, "r1_alternative_method": d.alternative_method,
           "r1_rel_diff": d.rel_diff, "upper": upper_bound_W(inst), "lower": lower_bound_smooth(inst)}
    res["ratio"] = res["lower"] / res["upper"]
    if inst.n == 2:
        res["r1_closed_form"] = r1_closed_form_2d(inst.q, inst.kappa)
        res["r2_closed_form"] = r2_closed_form_2d(inst.p)
    for k in ("r1", "r2", "r3", "threshold", "t0", "upper", "lower", "ratio"):
        print(f"{k} = {res[k]:.12g}")
    return res, 0, []


COMMANDS = {
    "regimes": _cmd_regimes,
    "weight-check": _cmd_weight_check,
    "mollify": _cmd_mollify,
    "energy": _cmd_energy,
    "minimize": _cmd_minimize,
    "no-gap-demo": _cmd_no_gap,
    "gap-demo": _cmd_gap,
    "counterexample-constants": _cmd_constants,
}


def _envelope(cfg, status, result=None, error=None):
    return {"command": cfg.command, "version": __version__, "config": cfg.as_dict(),
            "defaults": DEFAULTS, "status": status, "result": result, "error": error}


def run(command: str, config: ExperimentConfig) -> int:
    """Run one command, write ``<out>/<command>.json`` and return the exit code."""
    if command not in COMMANDS:
        raise ParameterError(f"unknown command {command!r}")
    path = config.out / f"{command}.json"
    try:
        result, code, _ = COMMANDS[command](config)
    except BoundViolation as exc:
        report.write_json(path, _envelope(config, "bound-violation", error=_err(exc)))
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ParameterError, PreconditionError) as exc:
        report.write_json(path, _envelope(config, "invalid", error=_err(exc)))
        print(f"error: {exc}", file=sys.stderr)
        return 1
    status = "pass" if code == 0 else ("invalid" if code == 1 else "check-failed")
    report.write_json(path, _envelope(config, status, result=result))
    return code


def _err(exc):
    return {"type": type(exc).__name__, "message": str(exc)}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        if not ns.command:
            parser.print_help()
            return 1
        flags = {k: v for k, v in vars(ns).items() if k != "command"}
        cfg = resolve_config(ns.command, flags)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        return run(ns.command, cfg)
    except OSError as exc:
        print(f"error: cannot write reports: {exc}", file=sys.stderr)
        return 1
    except LavgapError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

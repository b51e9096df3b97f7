"""Default tolerances and budgets, in one place.

Every module reads its defaults from ``DEFAULTS``; the CLI embeds the
resolved table in each report so a run can be traced back to its numbers.

========================  ==========  ==========================================
key                       value       used by
========================  ==========  ==========================================
quad_rtol                 1e-6        spherical_quadrature relative tolerance
quad_max_level            14          spherical_quadrature refinement cap
pair_budget               3e8         node pairs before row subsampling
verdict_exponent          0.1         stable iff fitted C(h) ~ h^-s has s <= this
glaeser_directions        16          unit directions for glaeser_check
luxemburg_rtol            1e-8        bisection tolerance for the Luxemburg norm
luxemburg_bracket         1e-12,1e12  bisection bracket
bound_tol                 0.05        slack in gradient bound checks
chain_tol                 0.01        lemma/Young chain tolerance
competitor_slack          0.02        competitor may sit 2% under the lower bound
solver_eps                1e-8        |grad u| regularisation inside Newton
solver_tol                1e-9        Newton decrement stopping tolerance
max_nodes                 2e6         node budget of build_disk_mesh
safety_factor             1.1         t0 = safety_factor * threshold
========================  ==========  ==========================================
"""

DEFAULTS = {
    "quad_rtol": 1e-6,
    "quad_max_level": 14,
    "pair_budget": 300_000_000,
    "verdict_exponent": 0.1,
    "glaeser_directions": 16,
    "luxemburg_rtol": 1e-8,
    "luxemburg_bracket": (1e-12, 1e12),
    "bound_tol": 0.05,
    "chain_tol": 0.01,
    "competitor_slack": 0.02,
    "solver_eps": 1e-8,
    "solver_tol": 1e-9,
    "max_nodes": 2_000_000,
    "safety_factor": 1.1,
}

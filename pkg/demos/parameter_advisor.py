"""Certified parameters: what the theory permits vs what tuning uses.

Run with: python demos/parameter_advisor.py
"""

from ddrs import (
    SolverParams,
    advise_parameters,
    ddrs_init,
    ddrs_step,
    neighborhood_report,
    preset,
)
from ddrs.harness import build_run

setup = build_run(preset("synthetic-er06-t10"))
consts = setup.constants

advice = advise_parameters(setup.L, consts.gamma, consts.zeta,
                           setup.W.sigma2, setup.dataset.n, setup.grad0_norm)
print("problem: L=%.4f sigma2=%.4f n=%d" % (setup.L, setup.W.sigma2,
                                            setup.dataset.n))
print("deltas: %.6f %.6f %.6f" % (advice.delta1, advice.delta2, advice.delta3))
print("certified alpha_max = %.5f   (tuned run uses alpha = %.2f)"
      % (advice.alpha_max, setup.params.alpha))
print("certified t_min = %d, clauses %s   (tuned run uses t = %d)"
      % (advice.t_min, advice.t_clauses, setup.params.t))
for note in advice.notes:
    print("note:", note)

# Inside the certified regime the iterates never leave the neighborhoods
# the analysis needs; the report below confirms it on a 200-step run.
params = SolverParams(alpha=advice.alpha_max, t=advice.t_min)
stack = ddrs_init(setup.problem, setup.W, params, setup.x0)
violations = 0
for _ in range(200):
    stack = ddrs_step(stack, setup.problem, setup.W, params)
    if not neighborhood_report(stack, consts, setup.W, params.t).ok:
        violations += 1
report = neighborhood_report(stack, consts, setup.W, params.t)
print("\ncompliant run: %d violations in 200 iterations" % violations)
print("final margins: |xhat-xbar|=%.2e (<= %.3f), |zhat-zbar|=%.2e (<= %.3f),"
      " tube=%.2e (<= %.1f)" % (report.x_dev, report.x_bound, report.z_dev,
                                report.z_bound, report.max_tube,
                                report.tube_bound))

"""
Optimal decay of the gradient function
======================================

Start from an off-center sphere, so v > 1 initially, and watch
v - 1 and coth(u) - 1 decay. Both rates should approach 2/n^p.
With n = 2 and p = 1.5 the target is about 0.7071.
N = 256 keeps this under a minute; the acceptance suite uses N = 512.
"""

from hyperflow import FlowConfig, boundedness_monitor, decay_rate_fit, run

cfg = FlowConfig(n=2, p=1.5, a=0.5, N=256, init="offcenter(1.2,0.5)", T_end=30.0)
res = run(cfg)
print("status:", res.status)
print("   t     v_max - 1     coth u - 1    osc u~     cauchy u~")
for r in res.series[::3]:
    print(f"{r.t:4.0f}  {r.v_max_minus_1:.4e}  {r.coth_u_minus_1_max:.4e}  "
          f"{r.osc_u_tilde:.6f}  {r.cauchy_u_tilde:.3e}")

target = 2.0 / cfg.n**cfg.p
for q in ("v_max_minus_1", "coth_u_minus_1_max"):
    fit = decay_rate_fit(res.series, q, (15.0, 30.0))
    print(f"{q:<20} lambda = {fit.lambda_hat:.6f}  (target {target:.6f}, residual {fit.residual:.1e})")

report = boundedness_monitor(res.series)
print("kappa envelope for t >= 1:", report["kappa_envelope"])

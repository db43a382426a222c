"""
The curvature-function family F_a
=================================

F_a = n (H/n)^(1-na) K^a interpolates between a mean-curvature-like
function (a -> 0) and the Gauss-curvature root n K^(1/n) (a = 1/n).
This script evaluates a few members and estimates the structure
constant epsilon0, which fixes the largest admissible flow exponent.
"""

import numpy as np

from hyperflow import CurvatureFunctionSpec, epsilon0_estimate, eval_F, grad_F

# normalisation: every member gives F(1, ..., 1) = n
for n, a in [(2, 0.5), (2, 0.25), (4, 0.1)]:
    spec = CurvatureFunctionSpec(n, a)
    print(f"n={n} a={a:<5} F(1,...,1) = {eval_F(spec, np.ones(n)):.15g}")

# Euler's relation for a 1-homogeneous function: sum_i F^i kappa_i = F
spec = CurvatureFunctionSpec(3, 0.2)
kappa = np.array([0.3, 1.0, 4.0])
print("F           =", eval_F(spec, kappa))
print("grad F . k  =", grad_F(spec, kappa) @ kappa)

# F vanishes on the boundary of the positive cone, like eps^a
for eps in (1e-2, 1e-4, 1e-8):
    print(f"F(eps, 1) at eps={eps:g}: {eval_F(CurvatureFunctionSpec(2, 0.25), [eps, 1.0]):.6g}")

# epsilon0 is an infimum reached only at the boundary; refining the
# sampling towards the faces brings the estimate down to a
quarter = CurvatureFunctionSpec(2, 0.25)
for r in (2, 4, 8, 12):
    est = epsilon0_estimate(quarter, refinement=r)
    print(f"refinement {r:>2}: epsilon0 ~ {est.epsilon0:.12f}  p0 ~ {est.p0:.10f}")

# Gauss case: epsilon0 = 1/n and p0 = n/(n-1) exactly
print("Gauss n=3:", epsilon0_estimate(CurvatureFunctionSpec.gauss(3)))

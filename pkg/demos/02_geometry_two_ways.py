"""
Principal curvatures of a radial graph, computed two ways
=========================================================

The production path (build_jet) uses closed formulas in polar
coordinates. The oracle embeds the surface in Minkowski space R^{3,1}
and differentiates the embedding numerically. An off-center geodesic
sphere is umbilic with kappa = coth R, which gives an exact target.
"""

import numpy as np

from hyperflow import AxiMesh, GraphField, build_jet, hyperboloid_oracle, offcenter_sphere_graph

R, d = 1.2, 0.5
exact = 1.0 / np.tanh(R)
print(f"target coth({R}) = {exact:.15f}\n")

print("   N   max |kappa - coth R|")
for N in (64, 128, 256, 512):
    jet = build_jet(offcenter_sphere_graph(R, d, AxiMesh(N, 2)))
    err = max(abs(jet.kappa_merid - exact).max(), abs(jet.kappa_par - exact).max())
    print(f"{N:5d}   {err:.3e}")

# a non-umbilic profile: the two paths agree better and better
print("\n   N   build_jet vs oracle at phi ~ pi/3")
for N in (32, 64, 128, 256):
    mesh = AxiMesh(N, 2)
    field = GraphField(mesh, 2.0 + 0.1 * np.cos(mesh.phi))
    j = int(np.argmin(abs(mesh.phi - np.pi / 3)))
    jet = build_jet(field)
    km, kp = hyperboloid_oracle(field, j)
    print(f"{N:5d}   {abs(km - jet.kappa_merid[j]):.3e}  {abs(kp - jet.kappa_par[j]):.3e}")

# a large cos(phi) bump makes the graph non-convex
mesh = AxiMesh(128, 2)
for A in (0.5, 2.0, 3.0):
    jet = build_jet(GraphField(mesh, 4.0 + A * np.cos(mesh.phi)))
    print(f"u = 4 + {A} cos(phi): convex = {jet.convex}, min kappa = {jet.kappa().min():+.4f}")

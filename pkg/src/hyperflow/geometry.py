"""Discrete geometry of axisymmetric radial graphs in hyperbolic space.

A hypersurface is written as ``r = u(phi)`` over a geodesic sphere, where
``phi`` is the polar angle on S^n and the profile is rotationally symmetric
about the polar axis. In geodesic polar coordinates the ambient metric is
``dr^2 + sinh(r)^2 sigma``. Two principal curvatures appear: the meridian
one and the parallel one, the latter with multiplicity ``n - 1``.

The grid is staggered, ``phi_j = (j + 1/2) pi / N``, so no node sits on a
pole. Derivatives use 4th-order central differences with ``u`` extended
evenly across both poles.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import brentq


class SnapshotError(ValueError):
    """Malformed or non-physical snapshot file."""


class DegenerateFrameError(ArithmeticError):
    pass


@dataclass(frozen=True)
class AxiMesh:
    N: int
    n: int

    def __post_init__(self):
        if self.N < 16:
            raise ValueError(f"mesh needs N >= 16 nodes, got {self.N}")
        if self.n < 2:
            raise ValueError(f"hypersurface dimension n must be >= 2, got {self.n}")

    @property
    def dphi(self):
        return np.pi / self.N

    @cached_property
    def phi(self):
        return (np.arange(self.N) + 0.5) * self.dphi

    @cached_property
    def cot_phi(self):
        return 1.0 / np.tan(self.phi)

    @cached_property
    def sin2_phi(self):
        return np.sin(self.phi) ** 2


@dataclass(frozen=True)
class GraphField:
    mesh: AxiMesh
    u: np.ndarray = field(repr=False)

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        if u.shape != (self.mesh.N,):
            raise ValueError(f"u has shape {u.shape}, mesh has {self.mesh.N} nodes")
        if not np.all(np.isfinite(u)) or np.any(u <= 0.0):
            raise ValueError("graph function must be finite and positive")
        object.__setattr__(self, "u", u)

    def with_u(self, u):
        return GraphField(self.mesh, u)

    @classmethod
    def _trusted(cls, mesh, u):
        # caller guarantees a finite positive float array of the right shape
        obj = object.__new__(cls)
        object.__setattr__(obj, "mesh", mesh)
        object.__setattr__(obj, "u", u)
        return obj


def _pad_even(f):
    # mirror images across phi = 0 and phi = pi on the staggered grid
    return np.concatenate([f[1::-1], f, f[:-3:-1]])


def derivatives(f, dphi):
    """First and second phi-derivatives of an even profile, 4th order."""
    p = _pad_even(np.asarray(f, dtype=float))
    fm2, fm1, f0, fp1, fp2 = p[:-4], p[1:-3], p[2:-2], p[3:-1], p[4:]
    d1 = (8.0 * (fp1 - fm1) - (fp2 - fm2)) / (12.0 * dphi)
    d2 = (16.0 * (fp1 + fm1) - (fp2 + fm2) - 30.0 * f0) / (12.0 * dphi**2)
    return d1, d2


def slice_mean_curvature(u):
    """(coth u, 1 - coth^2 u) for the geodesic slice of radius u.

    coth u is H/n of the slice, the second entry is its u-derivative.
    """
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0.0):
        raise ValueError("slice radius must be positive")
    return 1.0 / np.tanh(u), -1.0 / np.sinh(u) ** 2


def _v_minus_1(x):
    # sqrt(1 + x) - 1 without cancellation
    return x / (1.0 + np.sqrt(1.0 + x))


def gradient_v(field):
    """Gradient function v = sqrt(1 + u'^2 / sinh^2 u) at every node."""
    du, _ = derivatives(field.u, field.mesh.dphi)
    return 1.0 + _v_minus_1((du / np.sinh(field.u)) ** 2)


@dataclass
class SurfaceJet:
    """Per-node geometric data of a graph; arrays have one entry per node."""

    field: GraphField
    u: np.ndarray
    du: np.ndarray
    d2u: np.ndarray
    theta: np.ndarray
    dtheta: np.ndarray
    v: np.ndarray
    v_minus_1: np.ndarray
    g_phiphi: np.ndarray
    g_par: np.ndarray
    h_phiphi: np.ndarray
    h_par: np.ndarray
    kappa_merid: np.ndarray
    kappa_par: np.ndarray
    coth_u: np.ndarray
    dcoth_u: np.ndarray

    @property
    def n(self):
        return self.field.mesh.n

    @cached_property
    def convex(self):
        return bool(self.kappa_merid.min() > 0.0 and self.kappa_par.min() > 0.0)

    def kappa(self):
        """Principal curvatures as an (N, n) array, meridian entry first."""
        N, n = self.u.size, self.n
        k = np.empty((N, n))
        k[:, 0] = self.kappa_merid
        k[:, 1:] = self.kappa_par[:, None]
        return k

    def metric_inverse(self):
        """Closed-form g^ij = theta^-2 sigma^ij - theta^-4 u^i u^j / v^2, reduced.

        Returns the (phi phi) entry and the parallel entry (which has no
        gradient correction since u depends on phi only).
        """
        th2 = self.theta**2
        sin2 = self.field.mesh.sin2_phi
        g_inv_phiphi = 1.0 / th2 - self.du**2 / (th2**2 * self.v**2)
        return g_inv_phiphi, 1.0 / (th2 * sin2)


def induced_metric(u, grad_u, sigma):
    """Induced metric g_ij = u_i u_j + sinh(u)^2 sigma_ij and its closed-form inverse.

    ``grad_u`` holds the coordinate components u_i, ``sigma`` the round
    metric in the same chart. The inverse is
    sinh^-2 sigma^ij - sinh^-4 u^i u^j / v^2 with u^i = sigma^ij u_j.
    """
    grad_u = np.asarray(grad_u, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    th2 = np.sinh(u) ** 2
    g = np.outer(grad_u, grad_u) + th2 * sigma
    sigma_inv = np.linalg.inv(sigma)
    up = sigma_inv @ grad_u
    v2 = 1.0 + grad_u @ up / th2
    g_inv = sigma_inv / th2 - np.outer(up, up) / (th2**2 * v2)
    return g, g_inv


def build_jet(field):
    """Metric, normal tilt and second fundamental form of the graph.

    With ``theta = sinh u`` the second fundamental form of a radial graph is

        h_ij = (-u_;ij + theta theta' sigma_ij + 2 (theta'/theta) u_i u_j) / v,

    ``u_;ij`` being the Hessian for the round metric. The outward normal
    convention makes geodesic spheres have kappa = coth R > 0.
    """
    mesh = field.mesh
    u = field.u
    du, d2u = derivatives(u, mesh.dphi)
    theta, dtheta = np.sinh(u), np.cosh(u)
    coth_u, dcoth_u = slice_mean_curvature(u)
    q = (du / theta) ** 2
    vm1 = _v_minus_1(q)
    v = 1.0 + vm1
    cot = mesh.cot_phi
    # divided through by theta^2 to keep late-time magnitudes O(1)
    kappa_merid = (coth_u - d2u / theta**2 + 2.0 * coth_u * q) / v**3
    kappa_par = (coth_u - cot * du / theta**2) / v
    g_phiphi = du**2 + theta**2
    g_par = theta**2 * mesh.sin2_phi
    return SurfaceJet(
        field=field, u=u, du=du, d2u=d2u, theta=theta, dtheta=dtheta,
        v=v, v_minus_1=vm1, g_phiphi=g_phiphi, g_par=g_par,
        h_phiphi=kappa_merid * g_phiphi, h_par=kappa_par * g_par,
        kappa_merid=kappa_merid, kappa_par=kappa_par,
        coth_u=coth_u, dcoth_u=dcoth_u,
    )


def offcenter_sphere_graph(R, d, mesh):
    """Geodesic sphere of radius R whose centre sits a distance d from the origin.

    The centre lies on the ray phi = 0, so u(0) = R + d and u(pi) = R - d.
    Each node solves cosh R = cosh d cosh u - sinh d sinh u cos(phi).
    """
    if not (0.0 <= d < R):
        raise ValueError(f"need 0 <= d < R for a star-shaped graph, got R={R}, d={d}")
    if d == 0.0:
        return GraphField(mesh, np.full(mesh.N, float(R)))
    ch_d, sh_d, ch_R = np.cosh(d), np.sinh(d), np.cosh(R)
    u = np.empty(mesh.N)
    for j, c in enumerate(np.cos(mesh.phi)):
        u[j] = brentq(lambda s: ch_d * np.cosh(s) - sh_d * np.sinh(s) * c - ch_R,
                      R - d, R + d, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    return GraphField(mesh, u)


def perturbed_sphere_graph(r0, amplitude, mode, mesh, phase=0.0):
    """u = r0 + amplitude * cos(mode * phi + phase); even modes about both poles need phase 0."""
    return GraphField(mesh, r0 + amplitude * np.cos(mode * mesh.phi + phase))


# -- hyperboloid-model oracle -------------------------------------------------

_ETA = np.array([-1.0, 1.0, 1.0, 1.0])


def _mink(x, y):
    return np.sum(_ETA * x * y, axis=-1)


def _embed(u, phi, psi):
    om = np.array([np.cos(phi), np.sin(phi) * np.cos(psi), np.sin(phi) * np.sin(psi)])
    return np.concatenate([[np.cosh(u)], np.sinh(u) * om])


def _unit_normal(X, T1, T2):
    # Minkowski-orthogonal complement of span(X, T1, T2) via cofactors
    A = np.vstack([_ETA * X, _ETA * T1, _ETA * T2])
    N = np.array([(-1) ** k * np.linalg.det(np.delete(A, k, axis=1)) for k in range(4)])
    nn = _mink(N, N)
    scale = np.linalg.norm(T1) * np.linalg.norm(T2) * np.linalg.norm(X)
    if not nn > 1e-24 * scale**2:
        raise DegenerateFrameError("tangent frame is numerically degenerate")
    N = N / np.sqrt(nn)
    # outward: positive pairing with the radial direction d/dr
    radial = np.concatenate([[np.sinh(np.arccosh(X[0]))], X[1:] / np.linalg.norm(X[1:]) * X[0]])
    return N if _mink(N, radial) > 0 else -N


# central first-derivative weights on offsets -2..2
_CENTRAL = {2: np.array([0.0, -0.5, 0.0, 0.5, 0.0]),
            4: np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0}


def hyperboloid_oracle(field, j, h_psi=None, order=4):
    """Principal curvatures (meridian, parallel) at node ``j`` from the hyperboloid model.

    Independent of :func:`build_jet`: the surface is embedded in R^{3,1}
    as X = (cosh u, sinh u * Omega) and everything (tangents, the
    Minkowski normal, the shape operator) comes from central differences
    of that embedding, of accuracy ``order`` (2 or 4). The rotational
    direction uses its own step ``h_psi`` (defaults to the mesh spacing).
    The axisymmetric principal curvatures do not depend on n, so the
    3-dimensional hyperboloid is used for every n.
    """
    if order not in _CENTRAL:
        raise ValueError(f"order must be 2 or 4, got {order}")
    mesh = field.mesh
    N = mesh.N
    reach = 2 if order == 2 else 4
    if not (reach <= j <= N - 1 - reach):
        raise ValueError(f"node {j} is closer than {reach} cells to a pole")
    w = _CENTRAL[order]
    offsets = range(-2, 3)
    dphi = mesh.dphi
    h = dphi if h_psi is None else h_psi
    u, phi = field.u, mesh.phi

    def X(k, psi):
        return _embed(u[k], phi[k], psi)

    def d_phi(fn, k, psi):
        return sum(c * fn(k + o, psi) for c, o in zip(w, offsets) if c) / dphi

    def d_psi(fn, k, psi):
        return sum(c * fn(k, psi + o * h) for c, o in zip(w, offsets) if c) / h

    def normal(k, psi):
        T1, T2 = d_phi(X, k, psi), d_psi(X, k, psi)
        return _unit_normal(X(k, psi), T1, T2)

    T1, T2 = d_phi(X, j, 0.0), d_psi(X, j, 0.0)
    # a step that the embedding cannot resolve yields a silently wrong shape operator
    size = np.linalg.norm(X(j, 0.0))
    for step, T in ((dphi, T1), (h, T2)):
        if not step * np.linalg.norm(T) > 1e-7 * size:
            raise DegenerateFrameError("finite-difference step too small to resolve the frame")
    dN1, dN2 = d_phi(normal, j, 0.0), d_psi(normal, j, 0.0)
    T = [T1, T2]
    g = np.array([[_mink(a, b) for b in T] for a in T])
    hh = np.array([[_mink(a, b) for b in T] for a in (dN1, dN2)])
    hh = 0.5 * (hh + hh.T)
    ev, vecs = np.linalg.eig(np.linalg.solve(g, hh))
    ev, vecs = np.real(ev), np.real(vecs)
    i_merid = int(np.argmax(np.abs(vecs[0]) / np.linalg.norm(vecs, axis=0)))
    return float(ev[i_merid]), float(ev[1 - i_merid])


# -- snapshots ----------------------------------------------------------------

def write_snapshot(path, field, t):
    """Plain-text snapshot: header ``n N t`` then one ``phi u`` line per node."""
    lines = [f"{field.mesh.n} {field.mesh.N} {t!r}"]
    lines += [f"{p:.17g} {x:.17g}" for p, x in zip(field.mesh.phi, field.u)]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_snapshot(path):
    """Inverse of :func:`write_snapshot`; returns ``(field, t)``."""
    with open(path, encoding="utf-8") as fh:
        rows = [ln.split() for ln in fh if ln.strip()]
    try:
        n, N, t = int(rows[0][0]), int(rows[0][1]), float(rows[0][2])
        data = np.array([[float(a), float(b)] for a, b in rows[1:]])
    except (IndexError, ValueError) as exc:
        raise SnapshotError(f"unreadable snapshot {path}: {exc}") from exc
    if data.shape != (N, 2):
        raise SnapshotError(f"snapshot {path} declares {N} nodes but holds {len(rows) - 1}")
    try:
        mesh = AxiMesh(N, n)
        if not np.allclose(data[:, 0], mesh.phi, rtol=0.0, atol=1e-13):
            raise SnapshotError(f"snapshot {path} nodes are not the staggered grid")
        return GraphField(mesh, data[:, 1]), t
    except ValueError as exc:
        raise SnapshotError(f"invalid snapshot {path}: {exc}") from exc

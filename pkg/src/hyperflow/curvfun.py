"""Admissible curvature functions on the positive cone.

The implemented family is

    F_a(kappa) = n * (H/n)**(1 - n*a) * K**a,   0 < a <= 1/n,

with H the sum and K the product of the principal curvatures. ``a = 1/n``
is the Gauss-curvature function ``n K**(1/n)``; every member is symmetric,
monotone, concave, 1-homogeneous, normalised to ``F(1,...,1) = n`` and
vanishes on the boundary of the cone.
"""

from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    """Raised when principal curvatures leave the open positive cone."""


@dataclass(frozen=True)
class CurvatureFunctionSpec:
    n: int
    a: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"dimension n must be an integer >= 2, got {self.n!r}")
        if not (self.a > 0.0 and self.n * self.a <= 1.0 + 1e-12):
            raise ValueError(f"exponent a must lie in (0, 1/n] = (0, {1.0 / self.n:.6g}], got {self.a!r}")

    @classmethod
    def gauss(cls, n):
        """The normalised n-th root of the Gauss curvature, n K^(1/n)."""
        return cls(n, 1.0 / n)

    @property
    def is_gauss(self):
        return self.n * self.a == 1.0


@dataclass(frozen=True)
class StructureConstants:
    epsilon0: float
    p0: float


def p0_from_epsilon0(epsilon0):
    """Largest admissible flow exponent 1/(1 - epsilon0).

    Written as m/(m - 1) with m = 1/epsilon0 so that the Gauss values
    epsilon0 = 1/n give n/(n-1) without rounding drift.
    """
    m = 1.0 / epsilon0
    return m / (m - 1.0)


def principal_curvatures(kappa, n=None):
    """Validate ``kappa`` as a (batch of) point(s) in the positive cone."""
    kappa = np.asarray(kappa, dtype=float)
    if kappa.ndim == 0 or kappa.shape[-1] < 2:
        raise DomainError("need at least two principal curvatures")
    if n is not None and kappa.shape[-1] != n:
        raise DomainError(f"expected {n} principal curvatures, got {kappa.shape[-1]}")
    if not np.all(np.isfinite(kappa)) or np.any(kappa <= 0.0):
        raise DomainError("principal curvatures must be finite and strictly positive")
    return kappa


def _log_F(spec, kappa):
    # sorted so that the floating point sums do not depend on entry order
    ks = np.sort(kappa, axis=-1)
    H = np.sum(ks, axis=-1)
    log_K = np.sum(np.log(ks), axis=-1)
    n = spec.n
    return np.log(n) + (1.0 - n * spec.a) * (np.log(H) - np.log(n)) + spec.a * log_K, H


def eval_F(spec, kappa):
    """Evaluate F_a at ``kappa`` (shape ``(..., n)``); K is formed in log space."""
    kappa = principal_curvatures(kappa, spec.n)
    log_F, _ = _log_F(spec, kappa)
    return np.exp(log_F)


def grad_F(spec, kappa):
    """Analytic gradient dF/dkappa_i = F ((1 - n a)/H + a/kappa_i)."""
    kappa = principal_curvatures(kappa, spec.n)
    log_F, H = _log_F(spec, kappa)
    F = np.exp(log_F)[..., None]
    return F * ((1.0 - spec.n * spec.a) / H[..., None] + spec.a / kappa)


def axi_F_and_grad(spec, kappa_merid, kappa_par):
    """F and its two distinct partials for curvatures (k_m, k_p, ..., k_p).

    Fast path for rotationally symmetric surfaces, where the parallel
    curvature has multiplicity n - 1. Inputs must already be positive.
    """
    n, a = spec.n, spec.a
    H = kappa_merid + (n - 1) * kappa_par
    log_F = (np.log(n) + (1.0 - n * a) * (np.log(H) - np.log(n))
             + a * (np.log(kappa_merid) + (n - 1) * np.log(kappa_par)))
    F = np.exp(log_F)
    c = (1.0 - n * a) / H
    return F, F * (c + a / kappa_merid), F * (c + a / kappa_par)


def ratio_field(spec, kappa):
    """Per-entry ratios kappa_i F^i / F, which sum to one by homogeneity.

    Evaluated as the logarithmic derivative (1 - n a) kappa_i / H + a, so
    no value can round below a.
    """
    kappa = principal_curvatures(kappa, spec.n)
    H = np.sum(np.sort(kappa, axis=-1), axis=-1)[..., None]
    return (1.0 - spec.n * spec.a) * kappa / H + spec.a


def _simplex_samples(n, depth, n_random, seed):
    """Points on {sum kappa = n}, refined geometrically towards the faces."""
    rng = np.random.default_rng(seed)
    pts = [np.ones((1, n)), rng.dirichlet(np.ones(n), size=n_random) * n]
    for delta in np.logspace(0, -depth, 4 * depth + 1):
        # k entries pushed to delta, the remaining ones share the rest
        for k in range(1, n):
            p = np.full(n, (n - k * delta) / (n - k))
            p[:k] = delta
            pts.append(p[None, :])
        # one small entry, the others spread unevenly
        q = rng.dirichlet(np.ones(n - 1), size=8) * (n - delta)
        pts.append(np.column_stack([np.full(8, delta), q]))
    return np.vstack(pts)


def epsilon0_estimate(spec, refinement=8, n_random=256, seed=0):
    """Estimate inf over the cone of min_i kappa_i F^i / F.

    By homogeneity the infimum is taken over the simplex sum(kappa) = n.
    For F_a it is approached only as some kappa_i -> 0, so samples are
    pushed to entries as small as ``10**-refinement``. The estimate is an
    upper bound of the true infimum and decreases as ``refinement`` grows.
    """
    if refinement < 1:
        raise ValueError("refinement must be >= 1")
    pts = _simplex_samples(spec.n, refinement, n_random, seed)
    eps = float(np.min(ratio_field(spec, pts)))
    # ratios are bounded by 1/n (they sum to one); clip rounding excess only
    eps = min(eps, 1.0 / spec.n)
    return StructureConstants(epsilon0=eps, p0=p0_from_epsilon0(eps))


def exact_structure_constants(spec):
    """Closed form for the family: epsilon0 = a."""
    return StructureConstants(epsilon0=spec.a, p0=p0_from_epsilon0(spec.a))


@dataclass
class ConcavityReport:
    passed: bool
    worst: float
    worst_direction: np.ndarray


def concavity_check(spec, kappa, num_directions=64, h=1e-3, tol=1e-8, directions=None, seed=0):
    """Probe concavity of F at ``kappa`` by symmetric second differences.

    A direction w passes when F(k + h w) - 2 F(k) + F(k - h w) <= tol * F(k) * h**2.
    ``worst`` is the largest normalised second difference seen, divided by h**2.
    """
    kappa = principal_curvatures(kappa, spec.n)
    if directions is None:
        rng = np.random.default_rng(seed)
        directions = rng.standard_normal((num_directions, spec.n))
    w = np.atleast_2d(np.asarray(directions, dtype=float))
    w = w / np.linalg.norm(w, axis=1, keepdims=True)
    plus, minus = kappa + h * w, kappa - h * w
    if np.any(plus <= 0.0) or np.any(minus <= 0.0):
        raise DomainError("probe points leave the positive cone; reduce h")
    F0 = eval_F(spec, kappa)
    d2 = (eval_F(spec, plus) - 2.0 * F0 + eval_F(spec, minus)) / h**2
    i = int(np.argmax(d2))
    return ConcavityReport(bool(np.all(d2 <= tol * F0)), float(d2[i]), w[i])

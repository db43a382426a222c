"""Decay diagnostics and pointwise identity checks for flow states.

Quantities recorded per output time: the gradient function v, the slice
excess coth u - 1, the principal-curvature envelope, the oscillation and
Cauchy increments of the rescaled graph u - t/n^p, and the squared norm
of the traceless second fundamental form.
"""

from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import brentq

from hyperflow.curvfun import eval_F, grad_F
from hyperflow.geometry import derivatives

CSV_COLUMNS = (
    "t", "u_min", "u_max", "v_max", "v_max_minus_1", "coth_u_minus_1_max",
    "kappa_min", "kappa_max", "osc_u_tilde", "cauchy_u_tilde", "traceless_norm_max", "dt",
)


class InsufficientData(ValueError):
    pass


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    u_min: float
    u_max: float
    v_max: float
    v_max_minus_1: float
    coth_u_minus_1_max: float
    kappa_min: float
    kappa_max: float
    osc_u_tilde: float
    cauchy_u_tilde: float
    traceless_norm_max: float
    dt: float
    F_min: float
    F_max: float

    def csv_row(self):
        return [getattr(self, c) for c in CSV_COLUMNS]

    def as_dict(self):
        return asdict(self)


def traceless_norm_sq(kappa_merid, kappa_par, n):
    """|A|^2 - H^2/n for the axisymmetric pair; equals (n-1)/n (k_m - k_p)^2."""
    return (n - 1.0) / n * (kappa_merid - kappa_par) ** 2


def record(state, prev=None):
    """Assemble a :class:`DiagnosticsRecord` from a flow state's jet.

    ``prev`` is the state of the previous record; without it the Cauchy
    increment of the rescaled graph is NaN.
    """
    jet, n = state.jet, state.field.mesh.n
    u = state.field.u
    ut = state.u_tilde
    kappa = jet.kappa()
    if jet.convex:
        F = eval_F(state.speed.spec, kappa)
        F_min, F_max = float(F.min()), float(F.max())
    else:
        F_min = F_max = float("nan")
    cauchy = float(np.max(np.abs(ut - prev.u_tilde))) if prev is not None else float("nan")
    u_min = float(u.min())
    return DiagnosticsRecord(
        t=float(state.t),
        u_min=u_min,
        u_max=float(u.max()),
        v_max=float(jet.v.max()),
        v_max_minus_1=float(jet.v_minus_1.max()),
        # coth is decreasing, so the maximum sits at min u; 2/(e^{2u}-1) avoids cancellation
        coth_u_minus_1_max=float(2.0 / np.expm1(2.0 * u_min)),
        kappa_min=float(kappa.min()),
        kappa_max=float(kappa.max()),
        osc_u_tilde=float(ut.max() - ut.min()),
        cauchy_u_tilde=cauchy,
        traceless_norm_max=float(traceless_norm_sq(jet.kappa_merid, jet.kappa_par, n).max()),
        dt=float(state.dt_last),
        F_min=F_min,
        F_max=F_max,
    )


def series_column(series, name):
    return np.array([getattr(r, name) for r in series], dtype=float)


@dataclass(frozen=True)
class RateFit:
    lambda_hat: float
    c_hat: float
    window: tuple
    residual: float
    n_points: int

    def as_dict(self):
        return {"lambda_hat": self.lambda_hat, "c_hat": self.c_hat,
                "window": list(self.window), "residual": self.residual}


def decay_rate_fit(series, quantity, window=None, floor=1e-14, min_points=10):
    """Least-squares fit of log(quantity) = log c - lambda t over ``window``.

    ``series`` is a list of records (``quantity`` names a field) or a pair
    of arrays ``(t, q)``. Values at or below ``floor`` are dropped before
    fitting; fewer than ``min_points`` survivors raise InsufficientData.
    """
    if isinstance(series, tuple):
        t, q = (np.asarray(x, dtype=float) for x in series)
    else:
        t, q = series_column(series, "t"), series_column(series, quantity)
    if window is None:
        window = (t[0], t[-1])
    t1, t2 = window
    keep = (t >= t1) & (t <= t2) & np.isfinite(q) & (q > floor)
    if keep.sum() < min_points:
        raise InsufficientData(f"only {int(keep.sum())} usable records of {quantity!r} in "
                               f"[{t1:g}, {t2:g}] (need {min_points})")
    tt, lq = t[keep], np.log(q[keep])
    slope, intercept = np.polyfit(tt, lq, 1)
    resid = float(np.max(np.abs(lq - (intercept + slope * tt))))
    return RateFit(float(-slope), float(np.exp(intercept)), (float(t1), float(t2)), resid, int(keep.sum()))


# -- pointwise identities -----------------------------------------------------

@dataclass(frozen=True)
class MaxPointResult:
    residual: float
    phi_star: float
    vacuous: bool


def _lagrange4(x, xs, ys):
    total = 0.0
    for i in range(4):
        w = 1.0
        for k in range(4):
            if k != i:
                w *= (x - xs[k]) / (xs[i] - xs[k])
        total += w * ys[i]
    return total


def max_point_identity(state, vacuous_tol=1e-6):
    """Check kappa_merid = coth(u)/v where v attains its maximum.

    At an interior maximum of v the gradient of v vanishes, which forces
    the curvature in the direction of Du (the meridian, by symmetry) to
    equal coth(u)/v. The maximiser is located below grid scale as the root
    of a cubic through v' at the four nodes around the discrete argmax,
    and the defect is interpolated there with the same stencil.
    """
    jet = state.jet
    mesh = state.field.mesh
    v = jet.v
    if v.max() <= 1.0 + vacuous_tol:
        return MaxPointResult(float("nan"), float("nan"), True)
    j = int(np.argmax(v))
    if not (2 <= j <= mesh.N - 3):
        raise ValueError("maximum of v is not in the interior of the mesh")
    dv, _ = derivatives(v, mesh.dphi)
    defect = jet.kappa_merid - jet.coth_u / v
    # bracket the sign change of v' next to the discrete maximum
    lo = j - 1 if dv[j] <= 0.0 else j
    idx = np.arange(lo - 1, lo + 3)
    xs, ys, rs = mesh.phi[idx], dv[idx], defect[idx]
    phi_star = brentq(lambda x: _lagrange4(x, xs, ys), xs[1], xs[2], xtol=1e-15)
    return MaxPointResult(abs(float(_lagrange4(phi_star, xs, rs))), float(phi_star), False)


GRAD1_TERMS = (
    "curvature_square",   # -Phi' F^ij h_ik h^k_j v
    "gradient_square",    # -2 v^-1 Phi' F^ij v_i v_j
    "mixed_gradient",     # 2 Phi' F^ij v_i u_j Hbar/n
    "slice_trace",        # -Phi' F^ij g_ij Hbar^2/n^2 v
    "slice_derivative",   # -Phi' F^ij u_i u_j Hbar'/n v
    "du_square",          # Hbar/n (Phi - Phi' F) |Du|^2
    "linear_F",           # 2 Phi' F Hbar/n v^2
)


@dataclass
class Grad1Result:
    lhs: np.ndarray
    terms: dict
    defect: np.ndarray

    @property
    def max_defect(self):
        return float(np.max(np.abs(self.defect)))


def _grad1_parts(state, v_dot):
    jet, mesh, speed = state.jet, state.field.mesh, state.speed
    n = mesh.n
    kappa = jet.kappa()
    F = eval_F(speed.spec, kappa)
    dF = grad_F(speed.spec, kappa)
    Fm, Fp = dF[:, 0], dF[:, 1]
    Phi, dPhi = speed.phi(F), speed.dphi(F)
    km, kp = jet.kappa_merid, jet.kappa_par
    v, du, d2u = jet.v, jet.du, jet.d2u
    coth, dcoth = jet.coth_u, jet.dcoth_u
    gpp = jet.g_phiphi
    dv, d2v = derivatives(v, mesh.dphi)
    # covariant Hessian of v traced against F^ij, meridian + parallel parts
    christoffel = (du * d2u + jet.theta * jet.dtheta * du) / gpp
    log_rho_prime = coth * du + 1.0 / np.tan(mesh.phi)
    elliptic = (Fm * (d2v - christoffel * dv) + (n - 1) * Fp * log_rho_prime * dv) / gpp
    du_sq = jet.v_minus_1 * (v + 1.0)
    terms = {
        "curvature_square": -dPhi * (Fm * km**2 + (n - 1) * Fp * kp**2) * v,
        "gradient_square": -2.0 / v * dPhi * Fm * dv**2 / gpp,
        "mixed_gradient": 2.0 * dPhi * Fm * dv * du / gpp * coth,
        "slice_trace": -dPhi * (Fm + (n - 1) * Fp) * coth**2 * v,
        "slice_derivative": -dPhi * Fm * du**2 / gpp * dcoth * v,
        "du_square": coth * (Phi - dPhi * F) * du_sq,
        "linear_F": 2.0 * dPhi * F * coth * v**2,
    }
    # the identity is for the time derivative along normal trajectories,
    # whose angular velocity is F^-p nu^phi = -F^-p u' / (v theta^2)
    v_dot_normal = v_dot - np.power(F, -speed.p) * du * dv / (v * jet.theta**2)
    return v_dot_normal - dPhi * elliptic, terms


def grad1_residual(state_prev, state, state_next, drop=()):
    """Pointwise defect of the evolution equation of v at the middle state.

    The time derivative is a central difference over the three states at
    fixed phi, corrected by the tangential drift of normal trajectories.
    Names in ``drop`` (see GRAD1_TERMS) are left out of the right-hand
    side, which is how ablation runs are done.
    """
    for s in (state_prev, state, state_next):
        if not s.jet.convex:
            raise ValueError("grad1_residual needs convex states")
    dt = state_next.t - state_prev.t
    if not dt > 0.0:
        raise ValueError("states must be in increasing time order")
    v_dot = (state_next.jet.v - state_prev.jet.v) / dt
    lhs, terms = _grad1_parts(state, v_dot)
    unknown = set(drop) - set(GRAD1_TERMS)
    if unknown:
        raise KeyError(f"unknown Grad1 terms {sorted(unknown)}")
    rhs = sum(val for name, val in terms.items() if name not in drop)
    return Grad1Result(lhs=lhs, terms=terms, defect=lhs - rhs)


# -- boundedness --------------------------------------------------------------

def boundedness_monitor(series, t_from=1.0, rate_window=None, collapse_fraction=1e-3):
    """Bounds used in the decay argument, over a finished run.

    Reports the sup over time of F_max, 1/F_min and v_max, the curvature
    envelope for t >= t_from, and flags a compactness violation when
    kappa_min becomes non-positive or falls below ``collapse_fraction`` of
    its initial value.
    """
    if not series:
        raise InsufficientData("empty diagnostics series")
    t = series_column(series, "t")
    kmin, kmax = series_column(series, "kappa_min"), series_column(series, "kappa_max")
    late = t >= t_from
    F_max, F_min = series_column(series, "F_max"), series_column(series, "F_min")
    # non-convex records carry NaN for F
    finite = np.isfinite(F_max)
    report = {
        "F_max": float(F_max[finite].max()) if finite.any() else float("nan"),
        "inv_F_min": float((1.0 / F_min[finite]).max()) if finite.any() else float("nan"),
        "v_max": float(np.max(series_column(series, "v_max"))),
        "kappa_envelope": [float(np.min(kmin[late])), float(np.max(kmax[late]))] if late.any() else None,
        "kappa_ratio_max": float(np.max(kmax[late] / kmin[late])) if late.any() else None,
    }
    violation = bool(np.any(~(kmin > 0.0)) or np.any(kmin < collapse_fraction * kmin[0]))
    report["compactness_violation"] = violation
    rates = {}
    for q in ("v_max_minus_1", "coth_u_minus_1_max"):
        try:
            rates[q] = decay_rate_fit(series, q, rate_window).as_dict()
        except InsufficientData:
            rates[q] = None
    report["rates"] = rates
    return report

"""Method-of-lines integration of the graph flow du/dt = v F^-p.

The normal speed of the expanding flow is ``F^-p``; with the graph
parametrisation the radial speed is ``v`` times that. Time stepping is
classical RK4 with a parabolic step-size bound recomputed every step.
Geodesic spheres evolve by the ODE u' = (n coth u)^-p, which serves both
as an exact oracle and as inner/outer barriers.
"""

import logging
import math
import re
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import solve_ivp

from hyperflow.curvfun import CurvatureFunctionSpec, axi_F_and_grad, exact_structure_constants
from hyperflow.geometry import (
    AxiMesh,
    GraphField,
    build_jet,
    offcenter_sphere_graph,
    perturbed_sphere_graph,
)

log = logging.getLogger(__name__)


class ConvexityLost(RuntimeError):
    """Some node left the positive cone; F^-p is meaningless there."""


class StabilityError(RuntimeError):
    """Non-finite values, a degenerate step bound or a blow-up of v."""


@dataclass(frozen=True)
class SpeedFunction:
    p: float
    spec: CurvatureFunctionSpec

    def __post_init__(self):
        if not (0.0 < self.p < math.inf):
            raise ValueError(f"flow exponent p must be positive and finite, got {self.p}")

    def phi(self, r):
        """Phi(r) = -r^-p, so that the flow reads x' = -Phi(F) nu."""
        return -np.power(r, -self.p)

    def dphi(self, r):
        return self.p * np.power(r, -self.p - 1.0)

    @property
    def asymptotic_rate(self):
        """Radial speed of very large spheres, n^-p."""
        return float(self.spec.n) ** (-self.p)


@dataclass(frozen=True)
class FlowState:
    t: float
    field: GraphField
    speed: SpeedFunction
    jet: object = field(repr=False, compare=False)
    dt_last: float = 0.0
    convex: bool = True
    barrier_ok: bool = True

    @classmethod
    def initial(cls, field, speed, t=0.0):
        jet = build_jet(field)
        return cls(t=float(t), field=field, speed=speed, jet=jet, convex=jet.convex)

    @property
    def u_tilde(self):
        """Rescaled graph u - t/n^p."""
        return self.field.u - self.t * self.speed.asymptotic_rate


def _speed_from_jet(jet, speed):
    if not jet.convex:
        raise ConvexityLost(f"principal curvatures left the positive cone (min kappa = "
                            f"{min(jet.kappa_merid.min(), jet.kappa_par.min()):.3e})")
    F, _, _ = axi_F_and_grad(speed.spec, jet.kappa_merid, jet.kappa_par)
    return jet.v * np.power(F, -speed.p)


def scalar_speed(state, speed=None):
    """Radial speed v F(kappa)^-p at every node (accepts a FlowState or GraphField)."""
    if isinstance(state, GraphField):
        if speed is None:
            raise ValueError("a bare GraphField needs an explicit speed")
        jet = build_jet(state)
    else:
        speed = speed or state.speed
        jet = state.jet
    return _speed_from_jet(jet, speed)


def _rhs(mesh, u, speed):
    if not np.isfinite(u.sum()):
        raise StabilityError("non-finite values in u")
    if u.min() <= 0.0:
        raise StabilityError("graph function became non-positive")
    return _speed_from_jet(build_jet(GraphField._trusted(mesh, u)), speed)


def step(state, dt, speed=None):
    """Advance one classical RK4 step of size ``dt``."""
    speed = speed or state.speed
    if not dt > 0.0:
        raise ValueError(f"time step must be positive, got {dt}")
    mesh, u = state.field.mesh, state.field.u
    k1 = _speed_from_jet(state.jet, speed)
    k2 = _rhs(mesh, u + 0.5 * dt * k1, speed)
    k3 = _rhs(mesh, u + 0.5 * dt * k2, speed)
    k4 = _rhs(mesh, u + dt * k3, speed)
    u_new = u + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.isfinite(u_new.sum()) or u_new.min() <= 0.0:
        raise StabilityError(f"non-finite or non-positive values after step at t = {state.t:.6g}")
    jet = build_jet(GraphField._trusted(mesh, u_new))
    v_old, v_new = float(state.jet.v.max()), float(jet.v.max())
    if not np.isfinite(v_new) or v_new > 1.1 * v_old:
        raise StabilityError(f"v_max jumped from {v_old:.6g} to {v_new:.6g} in one step at t = {state.t:.6g}")
    return replace(state, t=state.t + dt, field=jet.field, jet=jet, dt_last=dt, convex=jet.convex)


def default_safety(n):
    """CFL safety factor; the pole stencil stiffens with the n-1 parallel directions."""
    return 0.5 / n


def adaptive_dt(state, speed=None, safety=None, dt_cap=math.inf):
    """Explicit parabolic step bound safety * dphi^2 / max D.

    D = Phi'(F) max(F^merid, F^par) g^phiphi is the largest diffusion
    coefficient of the linearised operator at each node.
    """
    speed = speed or state.speed
    if safety is None:
        safety = default_safety(state.field.mesh.n)
    if not safety > 0.0:
        raise ValueError("CFL safety factor must be positive")
    jet = state.jet
    if not jet.convex:
        raise ConvexityLost("cannot bound the step of a non-convex state")
    F, F_merid, F_par = axi_F_and_grad(speed.spec, jet.kappa_merid, jet.kappa_par)
    D = speed.dphi(F) * np.maximum(F_merid, F_par) / jet.g_phiphi
    dt = min(safety * state.field.mesh.dphi**2 / float(D.max()), dt_cap)
    if not (np.isfinite(dt) and dt > 1e-14):
        raise StabilityError(f"step bound underflowed (dt = {dt:.3e})")
    return dt


class SphericalSolution:
    """Radius of a geodesic sphere under the flow, u' = (n coth u)^-p.

    Integrated once with DOP853 at rtol = atol = 1e-12 and evaluated
    through the dense output; times before ``t0`` are not supported.
    """

    def __init__(self, u0, speed, t_end, t0=0.0):
        if not u0 > 0.0:
            raise ValueError("initial radius must be positive")
        self.u0, self.t0, self.speed = float(u0), float(t0), speed
        n, p = speed.spec.n, speed.p
        sol = solve_ivp(lambda t, y: (n / np.tanh(y)) ** (-p), (t0, max(t_end, t0 + 1e-12)), [u0],
                        method="DOP853", rtol=1e-12, atol=1e-12, dense_output=True)
        self._sol = sol.sol
        self.t_end = sol.t[-1]

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < self.t0) or np.any(t > self.t_end * (1 + 1e-12)):
            raise ValueError("time outside the integrated window")
        r = self._sol(t)[0]
        return float(r) if r.ndim == 0 else r


def spherical_solution(u0, speed, t):
    """Radius at time(s) ``t`` of the sphere that starts with radius ``u0``."""
    t_max = float(np.max(t))
    return SphericalSolution(u0, speed, t_max)(t)


def barrier_check(state, u_inner, u_outer, tol=1e-8):
    """True iff u_inner - tol <= u <= u_outer + tol at every node."""
    u = state.field.u
    return bool(np.all(u >= u_inner - tol) and np.all(u <= u_outer + tol))


def integrate_to(state, t_target, safety=None, dt_cap=math.inf):
    """Step adaptively from ``state.t`` and land exactly on ``t_target``."""
    while state.t < t_target:
        dt = adaptive_dt(state, state.speed, safety, dt_cap)
        remaining = t_target - state.t
        if dt >= remaining:
            state = replace(step(state, remaining), t=t_target)
        else:
            # split the tail in two rather than leave a sliver step
            state = step(state, 0.5 * remaining if dt > 0.5 * remaining else dt)
    return state


# -- configuration and driver -------------------------------------------------

_INIT_RE = re.compile(r"^\s*(offcenter|perturbed|sphere)\s*\(([^)]*)\)\s*$")


def parse_init(text):
    """Parse ``offcenter(R,d)``, ``perturbed(r0,amplitude,mode)`` or ``sphere(r0)``."""
    m = _INIT_RE.match(text)
    if not m:
        raise ValueError(f"unknown initial data descriptor {text!r}")
    kind = m.group(1)
    args = tuple(float(x) for x in m.group(2).split(",") if x.strip())
    need = {"offcenter": 2, "perturbed": 3, "sphere": 1}[kind]
    if len(args) != need:
        raise ValueError(f"{kind}(...) takes {need} arguments, got {len(args)}")
    if not args[0] > 0.0:
        raise ValueError(f"{kind}(...) needs a positive radius, got {args[0]}")
    if kind == "offcenter" and not 0.0 <= args[1] < args[0]:
        raise ValueError("offcenter(R,d) needs 0 <= d < R")
    return kind, args


@dataclass(frozen=True)
class FlowConfig:
    n: int
    p: float
    a: float
    N: int = 256
    init: str = "offcenter(1.2,0.5)"
    T_end: float | None = None
    safety: float | None = None
    dt_out: float = 1.0
    fit_window: tuple | None = None
    mode: str = "theorem"
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("theorem", "exploratory"):
            raise ValueError(f"mode must be 'theorem' or 'exploratory', got {self.mode!r}")
        if not self.p > 0.0:
            raise ValueError(f"p must be positive, got {self.p}")
        if not self.dt_out > 0.0:
            raise ValueError("output cadence dt_out must be positive")
        if self.safety is not None and not self.safety > 0.0:
            raise ValueError("CFL safety factor must be positive")
        parse_init(self.init)
        AxiMesh(self.N, self.n)
        spec = CurvatureFunctionSpec(self.n, self.a)
        if self.mode == "theorem":
            p0 = exact_structure_constants(spec).p0
            if not (1.0 < self.p <= p0):
                raise ValueError(f"theorem mode needs 1 < p <= p0 = {p0:.12g} for n={self.n}, a={self.a}; "
                                 f"got p = {self.p}")

    @property
    def spec(self):
        return CurvatureFunctionSpec(self.n, self.a)

    @property
    def speed(self):
        return SpeedFunction(self.p, self.spec)

    @property
    def t_end(self):
        # e^{-2t/n^p} falls by about e^-20 at the default horizon
        return self.T_end if self.T_end is not None else 10.0 * self.n**self.p

    @property
    def window(self):
        return tuple(self.fit_window) if self.fit_window is not None else (0.5 * self.t_end, self.t_end)

    def initial_field(self):
        mesh = AxiMesh(self.N, self.n)
        kind, args = parse_init(self.init)
        if kind == "offcenter":
            return offcenter_sphere_graph(args[0], args[1], mesh)
        if kind == "sphere":
            return GraphField(mesh, np.full(mesh.N, args[0]))
        r0, amp, mode = args
        if mode != int(mode) or mode < 1:
            raise ValueError("perturbation mode must be a positive integer")
        # only phases 0 and pi keep the profile even about both poles
        phase = float(np.random.default_rng(self.seed).integers(2)) * np.pi
        return perturbed_sphere_graph(r0, amp, int(mode), mesh, phase)


@dataclass
class RunResult:
    config: FlowConfig
    series: list
    final: FlowState
    status: str = "ok"
    reason: str = ""
    barrier_ok: bool = True
    convex: bool = True

    @property
    def healthy(self):
        return self.status == "ok" and self.barrier_ok and self.convex


def run(config, initial=None, t0=0.0, on_record=None):
    """Integrate to ``config.t_end`` recording diagnostics every ``dt_out``.

    ``initial`` overrides the configured initial data (used for restarts,
    with ``t0`` the snapshot time). Convexity loss and instabilities stop
    the run; the reason is kept on the result instead of being raised.
    """
    from hyperflow.diagnostics import record

    speed = config.speed
    field0 = initial if initial is not None else config.initial_field()
    state = FlowState.initial(field0, speed, t0)
    t_end = config.t_end
    inner = SphericalSolution(field0.u.min(), speed, t_end, t0)
    outer = SphericalSolution(field0.u.max(), speed, t_end, t0)
    result = RunResult(config, [], state, convex=state.convex)

    def emit(st, prev):
        rec = record(st, prev)
        result.series.append(rec)
        if on_record is not None:
            on_record(rec, st)
        return st

    prev = emit(state, None)
    if not state.convex:
        result.status, result.reason = "convexity_lost", "initial data is not strictly convex"
        return result
    k = int(round(t0 / config.dt_out))
    while state.t < t_end:
        k += 1
        t_next = min(k * config.dt_out, t_end)
        try:
            state = integrate_to(state, t_next, config.safety, 0.1 * config.dt_out)
        except ConvexityLost as exc:
            result.status, result.reason, result.convex = "convexity_lost", str(exc), False
            break
        except StabilityError as exc:
            result.status, result.reason = "unstable", str(exc)
            break
        ok = barrier_check(state, inner(state.t), outer(state.t))
        if not ok:
            log.warning("spherical barrier violated at t = %g", state.t)
        result.barrier_ok &= ok
        state = replace(state, barrier_ok=ok)
        prev = emit(state, prev)
    result.final = state
    return result

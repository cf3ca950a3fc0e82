"""Radial constant Q-curvature profiles on the cylinder.

The fourth-order ODE

    v'''' = c2 v'' - c0 v + c_nl v**p

is integrated as a first-order system in the state (v, v', v'', v''').  Its
periodic solutions (Delaunay profiles) are located by a symmetric shooting
method: starting at a minimum (v, 0, s, 0) the unknown s = v''(0) is tuned so
that the next critical point of v is also a symmetry point (v''' = 0 there).
Reversibility then makes the orbit periodic with period twice that time.

The periodic orbits are hyperbolic in the direction transverse to the energy
level set (the real Floquet pair grows by 1e6 to 1e12 per period), so nothing
here integrates a full period freely.  The orbit over [0, T] is assembled from
one accurately shot half period and its reflection.
"""
from dataclasses import dataclass, field
from functools import lru_cache
import math
import warnings

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import BPoly
from scipy.optimize import brentq

from .dimension import DimensionParams
from .errors import (BlowUpError, ConvergenceError, DomainError,
                     IntegrationError, StepSizeUnderflowError)

__all__ = [
    "CylState", "ToleranceConfig", "Trajectory", "DelaunaySolution",
    "ode_rhs", "hamiltonian", "hamiltonian_array", "integrate_orbit",
    "propagate_orbit", "free_run_defect", "shoot_delaunay", "sphere_limit",
    "hamiltonian_of_necksize", "necksize_of_hamiltonian", "periodicity_defect",
    "clear_caches",
]

DEFAULT_V_MAX = 50.0
# cap on the DOP853 step; keeps dense-output error far below the step error
MAX_STEP = 0.1
DEFAULT_SAMPLES = 1024


@dataclass(frozen=True)
class ToleranceConfig:
    """Integrator and shooting tolerances."""

    ode_rel: float = 1e-10
    ode_abs: float = 1e-12
    shoot_tol: float = 1e-9
    max_iter: int = 100

    def __post_init__(self):
        for name in ("ode_rel", "ode_abs", "shoot_tol"):
            val = getattr(self, name)
            if not (isinstance(val, (int, float)) and val > 0 and math.isfinite(val)):
                raise DomainError(f"{name} must be a positive finite number, got {val!r}")
        if not isinstance(self.max_iter, int) or self.max_iter < 1:
            raise DomainError(f"max_iter must be an integer >= 1, got {self.max_iter!r}")

    def tightened(self, factor):
        """Copy with both integrator tolerances divided by ``factor``."""
        return ToleranceConfig(self.ode_rel / factor, self.ode_abs / factor,
                               self.shoot_tol, self.max_iter)


DEFAULT_TOL = ToleranceConfig()


@dataclass(frozen=True)
class CylState:
    """Profile state (v, v', v'', v''') at cylindrical coordinate ``t``."""

    t: float
    y: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        if y.shape != (4,):
            raise DomainError(f"state must have 4 components, got shape {y.shape}")
        object.__setattr__(self, "y", y)

    @property
    def v(self):
        return self.y[0]


# -- right-hand side and first integral ------------------------------------

def _power(v, p):
    # odd extension keeps trial stages finite when v dips below 0; the
    # integrator terminates at v = 0 before such a step is accepted
    return np.sign(v) * np.abs(v) ** p


def _rhs(t, y, prm):
    v = y[0]
    return np.array([y[1], y[2], y[3],
                     prm.c2 * y[2] - prm.c0 * v + prm.c_nl * _power(v, prm.p_exp)])


def _fifth_derivative(y, prm):
    """d/dt of v'''' along a solution."""
    v = y[0]
    return prm.c2 * y[3] - prm.c0 * y[1] + prm.c_lin * np.abs(v) ** prm.lin_exp * y[1]


def ode_rhs(state, params):
    """Right-hand side of the first-order system at ``state``."""
    if state.y[0] <= 0:
        raise DomainError(f"profile must be positive, got v = {state.y[0]!r}")
    return _rhs(state.t, state.y, params)


def hamiltonian_array(y, params):
    """Vectorised first integral for states stacked along the last axis."""
    y = np.asarray(y, dtype=float)
    v, v1, v2, v3 = y
    return (-v1 * v3 + 0.5 * v2 * v2 + 0.5 * params.c2 * v1 * v1
            - 0.5 * params.c0 * v * v + params.h_coef * np.abs(v) ** params.h_exp)


def hamiltonian(state, params):
    """Conserved energy of the Delaunay ODE at ``state``."""
    if state.y[0] <= 0:
        raise DomainError(f"profile must be positive, got v = {state.y[0]!r}")
    return float(hamiltonian_array(state.y, params))


def sphere_limit(t, params):
    """State of the spherical solution (cosh t)**((4-n)/2) at ``t``."""
    q = (4 - params.n) / 2.0
    at = abs(t)
    log_cosh = at + math.log1p(math.exp(-2.0 * at)) - math.log(2.0)
    v = math.exp(q * log_cosh)
    th = math.tanh(t)
    sech2 = 1.0 - th * th
    v1 = q * v * th
    v2 = q * v * ((q - 1.0) * th * th + 1.0)
    v3 = q * v * th * (q * ((q - 1.0) * th * th + 1.0) + 2.0 * (q - 1.0) * sech2)
    return CylState(float(t), np.array([v, v1, v2, v3]))


# -- integration ------------------------------------------------------------

@dataclass
class Trajectory:
    """Output of :func:`integrate_orbit`.

    ``t`` and ``y`` hold the accepted (or requested) sample points; the
    critical points of v (zeros of v') are polished to ~1e-12 in time.
    Iterating yields :class:`CylState` records.
    """

    t: np.ndarray
    y: np.ndarray
    critical_t: np.ndarray
    critical_y: np.ndarray
    nfev: int = 0
    node_mismatch: np.ndarray | None = None

    def __len__(self):
        return self.t.size

    def __getitem__(self, i):
        return CylState(float(self.t[i]), self.y[:, i].copy())

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    @property
    def final(self):
        return self[len(self) - 1]

    def energies(self, params):
        return hamiltonian_array(self.y, params)


def _solve(y0, t0, t1, prm, tol, events=(), t_eval=None, dense=False, v_max=DEFAULT_V_MAX,
           max_step=None):
    """Thin wrapper around DOP853 mapping failures onto qlab exceptions."""

    def too_big(t, y, *args):
        return y[0] - v_max

    def too_small(t, y, *args):
        return y[0]

    too_big.terminal = True
    too_small.terminal = True
    too_small.direction = -1.0
    sol = solve_ivp(_rhs, (t0, t1), np.asarray(y0, dtype=float), method="DOP853",
                    rtol=tol.ode_rel, atol=tol.ode_abs, args=(prm,),
                    events=[too_big, too_small, *events], t_eval=t_eval,
                    dense_output=dense, max_step=MAX_STEP if max_step is None else max_step)
    if sol.status == -1:
        if "step size" in sol.message:
            raise StepSizeUnderflowError(sol.message)
        raise IntegrationError(sol.message)
    for k, label in ((0, f"v exceeded v_max = {v_max}"), (1, "v reached 0")):
        if sol.t_events[k].size:
            raise BlowUpError(label, t=float(sol.t_events[k][0]),
                              state=sol.y_events[k][0].copy())
    return sol


def _polish_critical(t_start, y_start, t_guess, prm, tol, iters=8):
    """Newton-correct a zero of v' by re-integrating from a nearby accepted state."""
    tight = tol.tightened(10.0) if tol.ode_rel > 1e-12 else tol
    t_e = t_guess
    y_e = None
    for _ in range(iters):
        if t_e == t_start:
            y_e = np.array(y_start, dtype=float)
        else:
            sol = _solve(y_start, t_start, t_e, prm, tight, v_max=np.inf)
            y_e = sol.y[:, -1]
        if y_e[2] == 0.0:
            break
        dt = -y_e[1] / y_e[2]
        t_e += dt
        if abs(dt) < 1e-13 * max(1.0, abs(t_e)):
            break
    sol = _solve(y_start, t_start, t_e, prm, tight, v_max=np.inf) if t_e != t_start else None
    y_e = sol.y[:, -1] if sol is not None else np.array(y_start, dtype=float)
    return t_e, y_e


def _critical_event(t, y, *args):
    return y[1]


def _is_equilibrium(y, prm):
    scale = 4.0 * np.finfo(float).eps * prm.eps_bar
    return abs(y[0] - prm.eps_bar) <= scale and not np.any(y[1:])


def integrate_orbit(ic, t_end, tol=None, params=None, *, v_max=DEFAULT_V_MAX,
                    n_eval=None):
    """Integrate the Delaunay ODE from ``ic`` up to ``t_end``.

    Parameters
    ----------
    ic : CylState
        Initial state; v must be positive.
    t_end : float
        Final time, greater than ``ic.t``.
    tol : ToleranceConfig, optional
    params : DimensionParams
    v_max : float
        Upper cap on v; exceeding it raises :class:`BlowUpError`.
    n_eval : int, optional
        If given, return this many uniformly spaced samples instead of the
        accepted steps.

    Returns
    -------
    Trajectory
    """
    if params is None:
        raise DomainError("params is required")
    tol = tol or DEFAULT_TOL
    if ic.y[0] <= 0:
        raise DomainError(f"initial profile must be positive, got v = {ic.y[0]!r}")
    if not t_end > ic.t:
        raise DomainError(f"t_end = {t_end} must exceed the initial time {ic.t}")
    t_eval = None if n_eval is None else np.linspace(ic.t, t_end, n_eval)
    if _is_equilibrium(ic.y, params):
        # the constant solution is hyperbolic, so integrating it would amplify
        # rounding in the residual at the largest real exponent
        t = t_eval if t_eval is not None else np.linspace(ic.t, t_end, 65)
        return Trajectory(t=t, y=np.repeat(ic.y[:, None], t.size, axis=1),
                          critical_t=np.array([]), critical_y=np.zeros((4, 0)))
    sol = _solve(ic.y, ic.t, t_end, params, tol, events=[_critical_event],
                 t_eval=t_eval, dense=True, v_max=v_max)
    crit_t, crit_y = [], []
    for t_e in sol.t_events[2]:
        if t_e <= ic.t:
            continue
        # restart the polish from the dense state slightly before the event
        t_s = max(ic.t, t_e - 1e-3)
        y_s = sol.sol(t_s) if t_s > ic.t else ic.y
        t_p, y_p = _polish_critical(t_s, y_s, t_e, params, tol)
        crit_t.append(t_p)
        crit_y.append(y_p)
    return Trajectory(t=sol.t, y=sol.y,
                      critical_t=np.array(crit_t),
                      critical_y=np.array(crit_y).T.reshape(4, -1),
                      nfev=sol.nfev)


def propagate_orbit(sol, n_periods, tol=None, *, v_max=DEFAULT_V_MAX,
                    samples_per_half=64):
    """Propagate a Delaunay orbit over several periods by multiple shooting.

    The orbit is hyperbolic transverse to its energy level (the real Floquet
    multiplier is 1e6 to 1e12 per period), so one free forward integration
    over several periods loses all accuracy.  Instead each half period is
    integrated from its adjacent minimum, where the state is (eps, 0, s, 0):
    forward from kT to kT + T/2 and backward from (k+1)T to kT + T/2.  The
    two states meeting at each maximum are compared and the sup-norm
    mismatch is stored in ``node_mismatch``.

    Returns a :class:`Trajectory` whose ``critical_t`` lists the maxima.
    """
    tol = tol or DEFAULT_TOL
    prm = sol.params
    if n_periods < 1:
        raise DomainError("n_periods must be >= 1")
    if sol.is_cylinder:
        t = np.linspace(0.0, n_periods * sol.period, 64 * n_periods + 1)
        y = np.repeat(np.array([[sol.eps], [0.0], [0.0], [0.0]]), t.size, axis=1)
        return Trajectory(t=t, y=y, critical_t=np.array([]),
                          critical_y=np.zeros((4, 0)),
                          node_mismatch=np.zeros(n_periods))
    y_min = np.array([sol.eps, 0.0, sol.vpp0, 0.0])
    ts, ys, crit_t, crit_y, mismatch = [], [], [], [], []
    for k in range(n_periods):
        t_lo = k * sol.period
        t_mid, t_hi = t_lo + sol.half_period, t_lo + sol.period
        fwd = _solve(y_min, t_lo, t_mid, prm, tol, v_max=v_max,
                     t_eval=np.linspace(t_lo, t_mid, samples_per_half + 1))
        bwd = _solve(y_min, t_hi, t_mid, prm, tol, v_max=v_max,
                     t_eval=np.linspace(t_hi, t_mid, samples_per_half + 1))
        y_f, y_b = fwd.y[:, -1], bwd.y[:, -1]
        mismatch.append(float(np.max(np.abs(y_f - y_b))))
        crit_t.append(t_mid)
        crit_y.append(0.5 * (y_f + y_b))
        ts.extend([fwd.t, bwd.t[-2:0:-1]])
        ys.extend([fwd.y, bwd.y[:, -2:0:-1]])
    ts.append(np.array([n_periods * sol.period]))
    ys.append(y_min[:, None])
    return Trajectory(t=np.concatenate(ts), y=np.concatenate(ys, axis=1),
                      critical_t=np.array(crit_t),
                      critical_y=np.array(crit_y).T,
                      node_mismatch=np.array(mismatch))


def free_run_defect(sol, tol=None, *, v_max=DEFAULT_V_MAX):
    """Closure error max|y(T) - y(0)| of one unconstrained forward period.

    Informational only: the error in the initial data is amplified by the
    real Floquet multiplier, so this is not small for eps well below eps_bar.
    Returns ``inf`` if the integration escapes.
    """
    if sol.is_cylinder:
        return 0.0
    tol = tol or sol.tol
    y0 = np.array([sol.eps, 0.0, sol.vpp0, 0.0])
    try:
        run = _solve(y0, 0.0, sol.period, sol.params, tol, v_max=v_max)
    except BlowUpError:
        return math.inf
    return float(np.max(np.abs(run.y[:, -1] - y0)))


# -- periodic orbit ---------------------------------------------------------

class SymmetricOrbit:
    """Periodic interpolant built from samples over half a period.

    Component k (the k-th derivative of v) is a Hermite interpolant matching
    derivatives k..5 of v at every sample, with v'''' and v''''' supplied by
    the ODE; v itself is then C^5 and accurate to O(h^12).  Values outside
    [0, T/2] come from periodicity and evenness v(-t) = v(t).
    """

    def __init__(self, t_half, y_half, prm):
        self.t_half = np.asarray(t_half, dtype=float)
        self.half = float(self.t_half[-1])
        self.period = 2.0 * self.half
        y = np.asarray(y_half, dtype=float)
        d4 = prm.c2 * y[2] - prm.c0 * y[0] + prm.c_nl * y[0] ** prm.p_exp
        d5 = _fifth_derivative(y, prm)
        stack = np.vstack([y, d4, d5])
        self._polys = [BPoly.from_derivatives(self.t_half, stack[k:].T)
                       for k in range(4)]

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        tau = np.mod(t, self.period)
        flip = tau > self.half
        tau = np.where(flip, self.period - tau, tau)
        out = np.array([p(tau) for p in self._polys])
        out[1] = np.where(flip, -out[1], out[1])
        out[3] = np.where(flip, -out[3], out[3])
        return out

    def v(self, t):
        t = np.asarray(t, dtype=float)
        tau = np.mod(t, self.period)
        tau = np.where(tau > self.half, self.period - tau, tau)
        return self._polys[0](tau)


class _ConstantOrbit:
    def __init__(self, eps, period):
        self.eps = eps
        self.period = period
        self.half = period / 2.0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros((4,) + t.shape)
        out[0] = self.eps
        return out

    def v(self, t):
        return np.full(np.shape(t), self.eps, dtype=float)


@dataclass(frozen=True)
class DelaunaySolution:
    """One periodic Delaunay profile v_eps with its minimum at t = 0.

    Attributes
    ----------
    eps : float
        Necksize, the minimum of v.
    vpp0 : float
        v''(0), the shooting unknown.
    period : float
        Period T_eps; by convention 2 pi / sqrt(mu) for the cylinder.
    energy : float
        Hamiltonian of the orbit.
    t, y : ndarray
        Samples over one period [0, T].
    interpolant : callable
        ``interpolant(t)`` returns (v, v', v'', v''') for any t.
    residual : float
        |v'''| at the half period after shooting.
    """

    params: DimensionParams
    eps: float
    vpp0: float
    period: float
    energy: float
    t: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    interpolant: object = field(repr=False)
    residual: float = 0.0
    iterations: int = 0
    tol: ToleranceConfig = DEFAULT_TOL

    @property
    def is_cylinder(self):
        return self.vpp0 == 0.0 and self.eps == self.params.eps_bar

    @property
    def half_period(self):
        return self.period / 2.0

    @property
    def samples(self):
        return [CylState(float(self.t[i]), self.y[:, i].copy()) for i in range(self.t.size)]

    @property
    def v_max(self):
        return float(self.interpolant.v(self.half_period))

    def __call__(self, t):
        return self.interpolant(t)


def _check_necksize(eps, prm):
    if not (isinstance(eps, (int, float, np.floating)) and math.isfinite(eps)):
        raise DomainError(f"necksize must be a finite real, got {eps!r}")
    if not 0.0 < eps <= prm.eps_bar:
        raise DomainError(f"necksize must lie in (0, {prm.eps_bar:.6f}], got {eps!r}")


def _max_event(t, y, *args):
    return y[1]


_max_event.terminal = True
_max_event.direction = -1.0


def _shot(eps, s, prm, tol, v_max, t_limit):
    """Integrate from the minimum with v''(0) = s up to the first maximum.

    Returns (residual, t_star, y_star); residual is +inf when v escapes before
    turning, which happens exactly when s is too large.
    """
    y0 = np.array([eps, 0.0, s, 0.0])
    try:
        sol = _solve(y0, 0.0, t_limit, prm, tol, events=[_max_event], v_max=v_max)
    except BlowUpError as exc:
        if exc.state is not None and exc.state[0] > eps:
            return math.inf, None, None
        raise
    if not sol.t_events[2].size:
        return math.inf, None, None
    t_e = float(sol.t_events[2][0])
    # polish from the last accepted step before the event
    idx = np.searchsorted(sol.t, t_e) - 1
    idx = max(idx, 0)
    t_p, y_p = _polish_critical(float(sol.t[idx]), sol.y[:, idx], t_e, prm, tol)
    return float(y_p[3]), t_p, y_p


def _cylinder_solution(prm, n_samples, tol):
    period = prm.cylinder_period
    t = np.linspace(0.0, period, n_samples + 1)
    y = np.zeros((4, t.size))
    y[0] = prm.eps_bar
    return DelaunaySolution(prm, prm.eps_bar, 0.0, period, prm.cylinder_energy,
                            t, y, _ConstantOrbit(prm.eps_bar, period), 0.0, 0, tol)


def _find_vpp0(eps, prm, tol, v_max, guess):
    # H(eps, s) = 0 at s_zero; the Delaunay family has H < 0
    s_zero = eps * math.sqrt(max(prm.c0 - 2.0 * prm.h_coef * eps ** prm.lin_exp, 0.0))
    t_limit = 200.0
    evals = 0

    def g(s):
        nonlocal evals
        evals += 1
        r, ts, ys = _shot(eps, s, prm, tol, v_max, t_limit)
        return r, ts, ys

    lo, g_lo = 0.0, -math.inf
    hi, g_hi = s_zero, math.inf
    best = None
    if guess is not None and 0.0 < guess < s_zero:
        # expand a bracket geometrically around the guess
        step = 1e-9 * guess
        while step < s_zero:
            a, b = max(guess - step, 0.0), min(guess + step, s_zero)
            ra = g(a)
            rb = g(b)
            if ra[0] < 0 and rb[0] >= 0:
                lo, g_lo, hi, g_hi = a, ra[0], b, rb[0]
                best = min((ra, a), (rb, b), key=lambda z: abs(z[0][0]))
                break
            if ra[0] >= 0:
                guess = a
            elif rb[0] < 0:
                guess = b
            step *= 16.0
    side = 0
    for it in range(tol.max_iter):
        if math.isfinite(g_lo) and math.isfinite(g_hi):
            # Illinois-modified regula falsi
            m = hi - g_hi * (hi - lo) / (g_hi - g_lo)
            if not lo < m < hi:
                m = 0.5 * (lo + hi)
        else:
            m = 0.5 * (lo + hi)
        res = g(m)
        r = res[0]
        if math.isfinite(r) and (best is None or abs(r) < abs(best[0][0])):
            best = (res, m)
        if math.isfinite(r) and abs(r) < tol.shoot_tol:
            return m, res, evals, True
        if r < 0:
            lo, g_lo = m, r
            if side == -1 and math.isfinite(g_hi):
                g_hi *= 0.5
            side = -1
        else:
            hi, g_hi = m, r
            if side == 1 and math.isfinite(g_lo):
                g_lo *= 0.5
            side = 1
        if hi - lo <= 4.0 * np.spacing(hi):
            break
    else:
        raise ConvergenceError(
            f"shooting for eps = {eps!r} did not converge in {tol.max_iter} iterations")
    if best is None:
        raise ConvergenceError(f"shooting for eps = {eps!r} never reached a maximum")
    res, m = best
    warnings.warn(f"shooting bracket for eps = {eps:.6g} collapsed at machine resolution "
                  f"with residual {res[0]:.2e} > shoot_tol", RuntimeWarning, stacklevel=3)
    return m, res, evals, False


@lru_cache(maxsize=1024)
def _vpp0_cached(eps, tol, prm, v_max, guess):
    return _find_vpp0(eps, prm, tol, v_max, guess)


def clear_caches():
    """Forget memoised shooting results (for timing and memory control)."""
    _vpp0_cached.cache_clear()
    _shoot_cached.cache_clear()


@lru_cache(maxsize=256)
def _shoot_cached(eps, tol, prm, n_samples, v_max, guess):
    if eps == prm.eps_bar:
        return _cylinder_solution(prm, n_samples, tol)
    s, (resid, t_star, _), evals, _ = _vpp0_cached(eps, tol, prm, v_max, guess)
    n_half = n_samples // 2
    t_half = np.linspace(0.0, t_star, n_half + 1)
    sol = _solve([eps, 0.0, s, 0.0], 0.0, t_star, prm, tol, t_eval=t_half, v_max=v_max)
    y_half = sol.y.copy()
    # enforce the symmetry conditions at the two turning points
    y_half[1, 0] = y_half[3, 0] = 0.0
    y_half[1, -1] = 0.0
    y_half[3, -1] = 0.0
    orbit = SymmetricOrbit(t_half, y_half, prm)
    period = 2.0 * t_star
    t_full = np.linspace(0.0, period, 2 * n_half + 1)
    y_full = orbit(t_full)
    energy = 0.5 * s * s - 0.5 * prm.c0 * eps * eps + prm.h_coef * eps ** prm.h_exp
    return DelaunaySolution(prm, float(eps), float(s), float(period), float(energy),
                            t_full, y_full, orbit, abs(resid), evals, tol)


def shoot_delaunay(eps, tol=None, params=None, *, n_samples=DEFAULT_SAMPLES,
                   v_max=DEFAULT_V_MAX, vpp0_guess=None):
    """Compute the Delaunay solution with necksize ``eps``.

    The unknown v''(0) is bracketed between 0 (the orbit falls back below its
    starting value) and the zero-energy value (the orbit escapes), then
    refined by an Illinois regula falsi with bisection fallback on the
    residual v'''(t*) at the first maximum t*.

    Parameters
    ----------
    eps : float
        Necksize in (0, eps_bar].  ``eps_bar`` itself returns the constant
        solution with period 2 pi / sqrt(mu).
    tol : ToleranceConfig, optional
    params : DimensionParams
    n_samples : int
        Samples per period (at least 512).
    vpp0_guess : float, optional
        Starting guess for v''(0), e.g. from a nearby necksize.

    Raises
    ------
    DomainError
        eps outside (0, eps_bar].
    ConvergenceError
        No root within ``tol.max_iter`` residual evaluations.
    """
    if params is None:
        raise DomainError("params is required")
    tol = tol or DEFAULT_TOL
    _check_necksize(eps, params)
    if n_samples < 512 or n_samples % 2:
        raise DomainError("n_samples must be an even integer >= 512")
    guess = None if vpp0_guess is None else float(vpp0_guess)
    return _shoot_cached(float(eps), tol, params, int(n_samples), float(v_max), guess)


def periodicity_defect(sol, tol=None):
    """Two-sided closure mismatch of a shot orbit at its half period.

    The half period is reached once forward from the minimum at t = 0 and once
    backward from the minimum at t = T; the sup-norm difference of the two
    states at T/2 vanishes exactly for a periodic orbit.
    """
    if sol.is_cylinder:
        return 0.0
    tol = tol or sol.tol
    prm = sol.params
    y0 = np.array([sol.eps, 0.0, sol.vpp0, 0.0])
    fwd = _solve(y0, 0.0, sol.half_period, prm, tol)
    bwd = _solve(y0, sol.period, sol.half_period, prm, tol)
    return float(np.max(np.abs(fwd.y[:, -1] - bwd.y[:, -1])))


def hamiltonian_of_necksize(eps, params, tol=None, vpp0=None, *, vpp0_guess=None):
    """Energy of the Delaunay orbit with necksize ``eps``.

    Uses v''(0) from shooting unless ``vpp0`` is supplied; only the shooting
    root is computed, not the sampled orbit.
    """
    _check_necksize(eps, params)
    if vpp0 is None and eps == params.eps_bar:
        vpp0 = 0.0
    if vpp0 is None:
        guess = None if vpp0_guess is None else float(vpp0_guess)
        vpp0 = _vpp0_cached(float(eps), tol or DEFAULT_TOL, params, DEFAULT_V_MAX, guess)[0]
    return (0.5 * vpp0 * vpp0 - params.n ** 2 * (params.n - 4) ** 2 / 32.0 * eps * eps
            + params.h_coef * eps ** params.h_exp)


def necksize_of_hamiltonian(H, params, tol=None, *, eps_guess=None):
    """Invert the strictly decreasing map eps -> H_eps.

    Brent's method on a bracket: around ``eps_guess`` (+-0.1 %, widened as
    needed) when given, otherwise [eps_lo, eps_bar] with eps_lo pushed
    towards 0 until it brackets ``H``.
    """
    tol = tol or DEFAULT_TOL
    h_bar = params.cylinder_energy
    if not (math.isfinite(H) and h_bar <= H < 0.0):
        raise DomainError(f"energy {H!r} outside the Delaunay range [{h_bar:.6f}, 0)")
    if H - h_bar <= 1e-15 * abs(h_bar):
        return params.eps_bar
    guess_vpp0 = [None]

    def f(e):
        if e >= params.eps_bar:
            return h_bar - H
        val = hamiltonian_of_necksize(e, params, tol, vpp0_guess=guess_vpp0[0])
        return val - H

    lo = hi = None
    if eps_guess is not None and 0.0 < eps_guess < params.eps_bar:
        guess_vpp0[0] = _vpp0_cached(float(eps_guess), tol, params, DEFAULT_V_MAX, None)[0]
        width = 1e-3 * eps_guess
        while width < params.eps_bar:
            a = max(eps_guess - width, 1e-4 * params.eps_bar)
            b = min(eps_guess + width, params.eps_bar)
            if f(a) > 0.0 > f(b) or f(b) == 0.0:
                lo, hi = a, b
                break
            width *= 8.0
    if lo is None:
        guess_vpp0[0] = None
        lo, hi = 0.05 * params.eps_bar, params.eps_bar
        while f(lo) < 0.0:
            lo *= 0.5
            if lo < 1e-4 * params.eps_bar:
                raise ConvergenceError(f"energy {H!r} too close to 0 to resolve the necksize")
    return brentq(f, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps)

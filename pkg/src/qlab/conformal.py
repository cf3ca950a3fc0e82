"""Gauge changes, flat-gauge Q-curvature, asymptote fitting and weighted norms.

A radial conformal factor u(r) on the punctured ball and its cylindrical
profile v(t) are related by the Emden-Fowler change of variables

    t = -log r,    v(t) = r^{(n-4)/2} u(r).

In t the flat radial bilaplacian factors as

    Delta_0^2 u = e^{4t} D (D + 2) (D - (n-4)) (D - (n-2)) u,    D = d/dt,

so on a log-uniform radial grid it is a constant-coefficient difference
operator.  The metric u^{4/(n-4)} |dx|^2 has Q-curvature
(2/(n-4)) u^{-(n+4)/(n-4)} Delta_0^2 u.
"""

from dataclasses import dataclass, field
import csv
import io
import json
import math
import warnings

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import minimize_scalar
from scipy.special import gamma as gamma_fn

from .cylinder_ode import necksize_of_hamiltonian, shoot_delaunay
from .errors import DomainError
from .linearization import fd_derivative, fd_weights

__all__ = [
    "emden_fowler_forward", "emden_fowler_inverse", "RadialProfile",
    "delaunay_euclidean_profile", "sphere_profile", "QCurvature",
    "q_curvature_radial", "AsymptoteData", "fit_asymptote", "WeightedNorm",
    "weighted_norm", "sphere_area", "read_profile_csv", "write_profile_csv",
    "MIN_POINTS_PER_PERIOD", "log_grid",
]

MIN_POINTS_PER_PERIOD = 9
DEFAULT_POINTS_PER_UNIT_T = 24
# relative energy below which a tail counts as non-singular (H = 0)
ZERO_ENERGY_TOL = 1e-8


# -- gauges -----------------------------------------------------------------

def _positive(x, name):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)) or np.any(x <= 0.0):
        raise DomainError(f"{name} must be positive and finite")
    return x


def emden_fowler_forward(u, r, params):
    """Cylindrical value v = r^{(n-4)/2} u at t = -log r.  Returns (t, v)."""
    u = _positive(u, "u")
    r = _positive(r, "r")
    return -np.log(r), r ** (0.5 * (params.n - 4)) * u


def emden_fowler_inverse(v, t, params):
    """Euclidean value u = r^{(4-n)/2} v at r = e^{-t}.  Returns (r, u)."""
    v = _positive(v, "v")
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)):
        raise DomainError("t must be finite")
    return np.exp(-t), np.exp(0.5 * (params.n - 4) * t) * v


@dataclass(frozen=True)
class RadialProfile:
    """Samples of a radial conformal factor u(r) about one puncture."""

    r: np.ndarray
    u: np.ndarray
    origin: str = "0"

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        u = np.asarray(self.u, dtype=float)
        if r.ndim != 1 or r.shape != u.shape or r.size < 2:
            raise DomainError("r and u must be 1-d arrays of equal length >= 2")
        _positive(r, "r")
        _positive(u, "u")
        d = np.diff(r)
        if not (np.all(d > 0) or np.all(d < 0)):
            raise DomainError("r must be strictly monotone")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "u", u)

    def cylindrical(self, params):
        """(t, v) sorted by increasing t."""
        t, v = emden_fowler_forward(self.u, self.r, params)
        order = np.argsort(t)
        return t[order], v[order]


def log_grid(t_start, t_stop, points_per_unit=DEFAULT_POINTS_PER_UNIT_T):
    """Radii e^{-t} for a uniform t-grid on [t_start, t_stop], decreasing in r."""
    m = max(int(math.ceil((t_stop - t_start) * points_per_unit)), 8)
    return np.exp(-np.linspace(t_start, t_stop, m + 1))


def delaunay_euclidean_profile(sol, r_grid=None, *, shift=0.0, n_periods=2.0):
    """u(r) = r^{(4-n)/2} v_eps(-log r + shift) on ``r_grid``.

    ``shift`` is the translation parameter T: the result equals
    R^{(n-4)/2} u_eps(R r) with R = e^{-T}.  The default grid is log-uniform
    with 24 points per unit of t over ``n_periods`` periods starting at r = 1.
    """
    prm = sol.params
    if r_grid is None:
        r_grid = log_grid(0.0, n_periods * sol.period)
    r = _positive(r_grid, "r_grid")
    t = -np.log(r)
    v = sol.interpolant.v(t + shift)
    _, u = emden_fowler_inverse(v, t, prm)
    return RadialProfile(r, u)


def sphere_profile(r, params):
    """The round-sphere factor ((1 + r^2)/2)^{(4-n)/2}."""
    r = _positive(r, "r")
    return RadialProfile(r, ((1.0 + r * r) / 2.0) ** (0.5 * (4 - params.n)))


# -- Q-curvature ------------------------------------------------------------

def _central(deriv, half):
    return fd_weights(np.arange(-half, half + 1), deriv)


# fourth-order central stencils: 5 points for D, D^2 and 7 points for D^3, D^4
_STENCILS = {1: _central(1, 2), 2: _central(2, 2), 3: _central(3, 3), 4: _central(4, 3)}
MARGIN = 3


def _bilaplacian_poly(n):
    # D (D + 2) (D - (n - 4)) (D - (n - 2)) conjugated by e^{(n-4)t/2}:
    # its roots shift by -(n - 4)/2.  Coefficients of D^4..D^0.
    a = 0.5 * (n - 4)
    roots = np.array([0.0, -2.0, n - 4.0, n - 2.0]) - a
    return np.polynomial.polynomial.polyfromroots(roots)[::-1]


@dataclass(frozen=True)
class QCurvature:
    """Q-curvature at interior grid points (3-point margin dropped)."""

    r: np.ndarray
    q: np.ndarray
    q_target: float
    h: float

    @property
    def max_rel_error(self):
        return float(np.max(np.abs(self.q - self.q_target)) / self.q_target)


def q_curvature_radial(profile, params):
    """Q-curvature of u^{4/(n-4)} |dx|^2 by fourth-order differences in log r.

    With v = r^{(n-4)/2} u and t = -log r the bilaplacian becomes
    Delta_0^2 u = e^{(n+4)t/2} P(D) v for a constant-coefficient quartic P,
    and Q = (2/(n-4)) v^{-(n+4)/(n-4)} P(D) v.  Differencing v instead of u
    avoids the e^{4t} weights and the cancellation they cause.  The grid must
    be log-uniform; warns when fewer than 9 points fall in a cylinder
    oscillation period 2 pi / sqrt(mu).
    """
    t, v = profile.cylindrical(params)
    if t.size < 2 * MARGIN + 1:
        raise DomainError(f"need at least {2 * MARGIN + 1} samples")
    h = np.diff(t)
    if np.max(np.abs(h - h.mean())) > 1e-9 * max(1.0, abs(h.mean())):
        raise DomainError("q_curvature_radial needs a log-uniform radial grid")
    h = float(h.mean())
    if params.cylinder_period / h < MIN_POINTS_PER_PERIOD:
        warnings.warn(f"grid too coarse: {params.cylinder_period / h:.1f} points per "
                      f"oscillation (< {MIN_POINTS_PER_PERIOD})", RuntimeWarning, stacklevel=2)
    coef = _bilaplacian_poly(params.n)
    m = t.size
    inner = slice(MARGIN, m - MARGIN)
    acc = coef[4] * v[inner]
    for k in (1, 2, 3, 4):
        if coef[4 - k] == 0.0:
            continue
        c = _STENCILS[k]
        half = c.size // 2
        d = np.zeros(m - 2 * MARGIN)
        for i, w in enumerate(c):
            off = i - half
            d += w * v[MARGIN + off:m - MARGIN + off]
        acc += coef[4 - k] * d / h ** k
    q = 2.0 / (params.n - 4) * v[inner] ** (-params.p_exp) * acc
    return QCurvature(r=np.exp(-t[inner]), q=q, q_target=params.q_target, h=h)


# -- asymptotes -------------------------------------------------------------

@dataclass(frozen=True)
class AsymptoteData:
    """Fitted Delaunay asymptote: necksize, translation and fit quality.

    ``T`` is reduced to [-T_eps/2, T_eps/2); the model is v(t) = v_eps(t + T).
    """

    eps: float
    T: float
    residual: float
    hamiltonian: float
    period: float
    window: tuple = ()

    def to_dict(self):
        return {"eps": self.eps, "T": self.T, "residual": self.residual,
                "hamiltonian": self.hamiltonian}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


def _hamiltonian_samples(t, v, params):
    h = float(np.mean(np.diff(t)))
    d1 = fd_derivative(v, h)
    d2 = fd_derivative(d1, h)
    d3 = fd_derivative(d2, h)
    return (-d1 * d3 + 0.5 * d2 ** 2 + 0.5 * params.c2 * d1 ** 2
            - 0.5 * params.c0 * v ** 2 + params.h_coef * v ** params.h_exp), d1


def _reduce(x, period):
    return (x + 0.5 * period) % period - 0.5 * period


def fit_asymptote(profile, params, tol=None):
    """Fit (eps, T) so that v(t) ~ v_eps(t + T) near the puncture.

    The energy is the median of H over the last sampled period (derivatives
    by eighth-order differences), giving eps through the inverse energy map.
    T comes from the last minimum of v and is then polished by minimising the
    sup-distance to v_eps(. + T) over the window.

    Raises
    ------
    DomainError
        The tail energy is outside [H_eps_bar, 0), e.g. for a smooth
        (non-singular) profile, or the grid is not log-uniform.
    """
    t, v = profile.cylindrical(params)
    h = np.diff(t)
    if np.max(np.abs(h - h.mean())) > 1e-9 * max(1.0, abs(h.mean())):
        raise DomainError("fit_asymptote needs a log-uniform radial grid")
    energy, d1 = _hamiltonian_samples(t, v, params)
    # pass 1: a period estimate from the spacing of minima
    minima = np.nonzero((d1[:-1] < 0.0) & (d1[1:] >= 0.0))[0]
    span = t[-1] - t[0]
    if minima.size >= 2:
        period_est = float(np.median(np.diff(t[minima])))
    else:
        period_est = 0.5 * span
    lo = max(t[-1] - period_est, t[0] + 0.25 * span)
    margin = 5
    win = (t >= lo) & (np.arange(t.size) < t.size - margin)
    h_fit = float(np.median(energy[win]))
    if h_fit > -ZERO_ENERGY_TOL * abs(params.cylinder_energy):
        raise DomainError(f"tail energy {h_fit:.3e} is not negative: the profile has no "
                          "Delaunay singularity")
    eps_guess = float(np.min(v[win]))
    eps = necksize_of_hamiltonian(h_fit, params, tol, eps_guess=eps_guess)
    sol = shoot_delaunay(eps, tol, params)
    tw, vw = t[win], v[win]
    if sol.is_cylinder:
        return AsymptoteData(eps, 0.0, float(np.max(np.abs(vw - eps))), h_fit,
                             sol.period, (float(tw[0]), float(tw[-1])))
    # last minimum of v inside the window, refined by linear interpolation of v'
    idx = np.nonzero((d1[:-1] < 0.0) & (d1[1:] >= 0.0) & win[:-1])[0]
    if idx.size:
        i = idx[-1]
        t_min = t[i] - d1[i] * (t[i + 1] - t[i]) / (d1[i + 1] - d1[i])
    else:
        t_min = float(tw[np.argmin(vw)])
    shift0 = _reduce(-t_min, sol.period)

    def dist(s):
        return float(np.max(np.abs(vw - sol.interpolant.v(tw + s))))

    step = float(h.mean())
    best = minimize_scalar(dist, bracket=(shift0 - step, shift0, shift0 + step),
                           tol=1e-12)
    shift = shift0
    if best.success and abs(best.x - shift0) < 2.0 * step and best.fun <= dist(shift0):
        shift = float(best.x)
    return AsymptoteData(float(eps), float(_reduce(shift, sol.period)), dist(shift),
                         h_fit, sol.period, (float(tw[0]), float(tw[-1])))


# -- weighted norms ---------------------------------------------------------

def sphere_area(n):
    """Area of the unit sphere S^{n-1}."""
    return 2.0 * math.pi ** (0.5 * n) / gamma_fn(0.5 * n)


@dataclass(frozen=True)
class WeightedNorm:
    """Truncated L^2_delta norm of a radial field and its decay classification.

    ``slope`` is the fitted growth rate of log(per-window squared norm) over
    the second half of the windows; ``exponent = delta + slope / 2`` is the
    effective exponential rate of |v|.  ``status`` is ``"member"`` (windowed
    contributions decay), ``"borderline"`` (flat) or ``"non-member"``.
    """

    value: float
    delta: float
    slope: float
    exponent: float
    status: str
    window_norms: np.ndarray = field(repr=False)

    @property
    def member(self):
        return self.status == "member"


def weighted_norm(v, t, delta, n, *, n_windows=16, slope_tol=0.02):
    """L^2_delta norm (e^{-2 delta t} |v|^2 over [t0, t1] x S^{n-1}) and classifier.

    ``v`` is sampled on the uniform grid ``t``.  The window contributions
    I_k decay geometrically for members, stay flat on the critical weight and
    grow otherwise; ``slope_tol`` is the tolerance on d log I_k / dt.
    """
    v = np.asarray(v, dtype=float)
    t = np.asarray(t, dtype=float)
    if v.shape != t.shape or t.ndim != 1 or t.size < 4 * n_windows:
        raise DomainError("need matching 1-d samples, at least 4 per window")
    area = sphere_area(n)
    f = np.exp(-2.0 * delta * t) * v * v
    value = math.sqrt(area * simpson(f, x=t))
    edges = np.linspace(0, t.size - 1, n_windows + 1).round().astype(int)
    norms, centres = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        norms.append(area * simpson(f[a:b + 1], x=t[a:b + 1]))
        centres.append(0.5 * (t[a] + t[b]))
    norms = np.array(norms)
    centres = np.array(centres)
    tail = slice(n_windows // 2, None)
    with np.errstate(divide="ignore"):
        logs = np.log(np.maximum(norms[tail], np.finfo(float).tiny))
    slope = float(np.polyfit(centres[tail], logs, 1)[0])
    if slope < -slope_tol:
        status = "member"
    elif slope <= slope_tol:
        status = "borderline"
    else:
        status = "non-member"
    return WeightedNorm(value=value, delta=float(delta), slope=slope,
                        exponent=float(delta + 0.5 * slope), status=status,
                        window_norms=norms)


# -- profile I/O ------------------------------------------------------------

def write_profile_csv(profile, path=None):
    """CSV with header ``r,u``; returns the text when ``path`` is None."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["r", "u"])
    for r, u in zip(profile.r, profile.u):
        writer.writerow(["%.17g" % r, "%.17g" % u])
    text = buf.getvalue()
    if path is None:
        return text
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return None


def read_profile_csv(path):
    """Read a ``r,u`` CSV written by :func:`write_profile_csv`."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["r", "u"]:
        raise DomainError("profile CSV must start with the header 'r,u'")
    data = np.array([[float(a), float(b)] for a, b in rows[1:]])
    return RadialProfile(data[:, 0], data[:, 1])

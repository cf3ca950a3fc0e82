"""Linearization about a Delaunay solution and Floquet analysis of its modes.

Separating variables in the linearized constant-Q equation about v_eps gives,
for the j-th spherical harmonic, the fourth-order periodic ODE

    w'''' - b_j w'' + V_j(t) w = 0,
    b_j   = c2 + 2 lambda_j,
    V_j   = c0 + n(n-4)/2 lambda_j + lambda_j**2 - c_lin v_eps**(8/(n-4)).

Its Floquet exponents (Re log(rho) / T over the monodromy multipliers rho) are
the indicial roots of the Jacobi operator on a Delaunay end.

Numerical notes
---------------
The multipliers span up to e^{+-200} for j = 10, so a monodromy matrix formed
by one long integration is useless for the small multipliers.  The period is
cut into K short segments whose propagators are integrated simultaneously
(one vectorised ``solve_ivp`` call over all segments and modes), and the
multipliers are recovered from the eigenvalues of the block-cyclic lift

    C = [[0, ..., 0, N_K], [N_1, 0, ..., 0], ..., [0, ..., N_{K-1}, 0]],

whose eigenvalues are the K-th roots of those of N_K ... N_1.  Each block is
well conditioned, so every exponent is resolved to about 1e-10.
"""

from dataclasses import dataclass, field
import math
import warnings

import numpy as np
from scipy.integrate import solve_ivp

from .cylinder_ode import MAX_STEP, DelaunaySolution, shoot_delaunay
from .dimension import sphere_eigenvalue
from .errors import DomainError, IntegrationError

__all__ = [
    "ModeOperator", "JacobiField", "IndicialRoot", "IndicialSet", "FloquetData",
    "JordanCheck", "mode_operator", "w0_plus", "w0_minus", "w0_cylinder",
    "monodromy", "floquet", "jordan_check", "cylinder_indicial_closed_form",
    "indicial_roots", "verify_mode_nondegeneracy", "fd_derivative",
]

_R = np.diag([1.0, -1.0, 1.0, -1.0])
ZERO_EXPONENT_TOL = 1e-5
MERGE_TOL = 1e-7


# -- mode operator ----------------------------------------------------------

@dataclass(frozen=True)
class ModeOperator:
    """The j-th mode operator w'''' - b_j w'' + V_j(t) w about ``sol``."""

    sol: DelaunaySolution = field(repr=False)
    j: int
    lambda_j: float
    b_j: float
    v_const: float
    convention: str = "geometric"

    @property
    def params(self):
        return self.sol.params

    def potential(self, t):
        """V_j(t); periodic with period T_eps and even in t."""
        prm = self.sol.params
        v = self.sol.interpolant.v(t)
        return self.v_const - prm.c_lin * v ** prm.lin_exp

    def apply(self, w, t):
        """Residual w'''' - b_j w'' + V_j w for stacked derivatives ``w``.

        ``w`` has rows (w, w', w'', w''', w'''') sampled at ``t``.
        """
        w = np.asarray(w, dtype=float)
        return w[4] - self.b_j * w[2] + self.potential(t) * w[0]

    def matrix(self, t):
        """First-order system matrices A(t), shape ``t.shape + (4, 4)``."""
        t = np.asarray(t, dtype=float)
        a = np.zeros(t.shape + (4, 4))
        a[..., 0, 1] = a[..., 1, 2] = a[..., 2, 3] = 1.0
        a[..., 3, 0] = -self.potential(t)
        a[..., 3, 2] = self.b_j
        return a


def _mode_constants(prm, j, convention):
    lam, _ = sphere_eigenvalue(prm.n, j, convention)
    b = prm.c2 + 2.0 * lam
    v_const = prm.c0 + 0.5 * prm.n * (prm.n - 4) * lam + lam * lam
    return lam, b, v_const


def mode_operator(sol, j, convention="geometric"):
    """Build the j-th mode operator about ``sol``.

    ``convention`` selects the sphere eigenvalues; see
    :func:`qlab.dimension.sphere_eigenvalue`.
    """
    if isinstance(j, bool) or not isinstance(j, (int, np.integer)) or j < 0:
        raise DomainError(f"mode index must be a non-negative integer, got {j!r}")
    lam, b, v_const = _mode_constants(sol.params, int(j), convention)
    return ModeOperator(sol=sol, j=int(j), lambda_j=lam, b_j=b, v_const=v_const,
                        convention=convention)


# -- finite differences -----------------------------------------------------

def fd_weights(offsets, deriv=1):
    """Finite-difference weights for the ``deriv``-th derivative at 0.

    ``offsets`` are node positions in units of the grid spacing.
    """
    x = np.asarray(offsets, dtype=float)
    vander = np.vander(x, x.size, increasing=True).T
    rhs = np.zeros(x.size)
    rhs[deriv] = math.factorial(deriv)
    return np.linalg.solve(vander, rhs)


def fd_derivative(f, h, order=8):
    """First derivative of uniformly sampled ``f`` along the last axis.

    Central differences of the given (even) order in the interior and
    one-sided formulas of the same order within ``order/2`` of either end.
    """
    f = np.asarray(f, dtype=float)
    n = f.shape[-1]
    m = order + 1
    half = order // 2
    if order % 2 or order < 2:
        raise DomainError("order must be a positive even integer")
    if n < m:
        raise DomainError(f"need at least {m} samples")
    out = np.zeros_like(f)
    c = fd_weights(np.arange(-half, half + 1))
    for k in range(m):
        out[..., half:n - half] += c[k] * f[..., k:n - order + k]
    for i in range(half):
        w = fd_weights(np.arange(m) - i)
        out[..., i] = f[..., :m] @ w
        out[..., n - 1 - i] = -(f[..., n - m:][..., ::-1] @ w)
    return out / h


# -- Jacobi fields ----------------------------------------------------------

@dataclass(frozen=True)
class JacobiField:
    """Samples of a mode-0 Jacobi field and its first three derivatives.

    Attributes
    ----------
    kind : str
        ``"translation"``, ``"necksize"`` or ``"generic"``.
    t : ndarray
        Uniform sample times.
    w : ndarray
        Shape (4, len(t)): w, w', w'', w'''.
    operator : ModeOperator
        The mode-0 operator the field solves.
    evaluator : callable or None
        Exact evaluation at arbitrary t (same layout as ``w``).
    info : dict
        Extra data, e.g. the shooting derivative s and dT/deps for w0_minus.
    """

    kind: str
    t: np.ndarray = field(repr=False)
    w: np.ndarray = field(repr=False)
    operator: ModeOperator = field(repr=False)
    evaluator: object = field(default=None, repr=False)
    info: dict = field(default_factory=dict)

    def __call__(self, t):
        if self.evaluator is None:
            raise DomainError("this field has no evaluator; use the samples")
        return self.evaluator(t)

    def residual(self):
        """Sup norm of w'''' - b_0 w'' + V_0 w with w'''' differenced from w'''."""
        h = self.t[1] - self.t[0]
        w4 = fd_derivative(self.w[3], h)
        r = w4 - self.operator.b_j * self.w[2] + self.operator.potential(self.t) * self.w[0]
        return float(np.max(np.abs(r)))

    def slope(self):
        """Mean linear-growth rate: least-squares slope of w over the samples."""
        return float(np.polyfit(self.t, self.w[0], 1)[0])


def w0_plus(sol, n_samples=None):
    """Translation field w = v', periodic, sampled over one period."""
    if sol.is_cylinder:
        raise DomainError("v' vanishes on the cylinder; use w0_cylinder")
    op = mode_operator(sol, 0)
    prm = sol.params

    def shift(y):
        d4 = prm.c2 * y[2] - prm.c0 * y[0] + prm.c_nl * y[0] ** prm.p_exp
        return np.array([y[1], y[2], y[3], d4])

    def evaluator(tt):
        return shift(sol.interpolant(tt))

    if n_samples is None:
        # the solution's own integrator samples
        t, w = sol.t, shift(sol.y)
    else:
        t = np.linspace(0.0, sol.period, n_samples)
        w = evaluator(t)
    return JacobiField("translation", t, w, op, evaluator)


def _linear_shoot(sol, op, tol):
    """Integrate the mode-0 fields from (1,0,0,0) and (0,0,1,0) over [0, T/2]."""
    prm = sol.params
    y0 = np.concatenate([[sol.eps, 0.0, sol.vpp0, 0.0],
                         [1.0, 0, 0, 0], [0.0, 0, 1.0, 0]])

    def rhs(t, z):
        v = z[0]
        d = np.empty(12)
        d[0:3] = z[1:4]
        d[3] = prm.c2 * z[2] - prm.c0 * v + prm.c_nl * v ** prm.p_exp
        vk = prm.c_lin * v ** prm.lin_exp
        for k in (4, 8):
            d[k:k + 3] = z[k + 1:k + 4]
            d[k + 3] = prm.c2 * z[k + 2] - (prm.c0 - vk) * z[k]
        return d

    out = solve_ivp(rhs, (0.0, sol.half_period), y0, method="DOP853",
                    rtol=tol.ode_rel, atol=tol.ode_abs, dense_output=True,
                    max_step=MAX_STEP)
    if out.status != 0:
        raise IntegrationError(out.message)
    return out


def _s_linear(sol, lin):
    """v''(0) derivative from the linearized symmetry condition at T/2.

    Differentiating v'(t*) = v'''(t*) = 0 along the family gives
    w'''(t*) v''(t*) - w'(t*) v''''(t*) = 0 for w = y_a + s y_b.
    """
    prm = sol.params
    z = lin.y[:, -1]
    v, v2 = z[0], z[2]
    v4 = prm.c2 * v2 - prm.c0 * v + prm.c_nl * v ** prm.p_exp
    ya, yb = z[4:8], z[8:12]
    return -(ya[3] * v2 - ya[1] * v4) / (yb[3] * v2 - yb[1] * v4)


def _s_richardson(sol, h, tol):
    """d v''(0) / d eps by centred differences with one Richardson level."""
    prm = sol.params

    def cd(step):
        hi = shoot_delaunay(sol.eps + step, tol, prm, vpp0_guess=sol.vpp0)
        lo = shoot_delaunay(sol.eps - step, tol, prm, vpp0_guess=sol.vpp0)
        return (hi.vpp0 - lo.vpp0) / (2.0 * step), (hi.period - lo.period) / (2.0 * step)

    s1, p1 = cd(h)
    s2, p2 = cd(2.0 * h)
    return (4.0 * s1 - s2) / 3.0, (4.0 * p1 - p2) / 3.0


def w0_minus(sol, h=None, tol=None, *, n_periods=2, s_method="linear",
             n_samples=None):
    """Necksize field w = d v_eps / d eps.

    The field starts from (1, 0, s, 0) with s = d v''(0) / d eps and is
    integrated over the first half period.  The rest follows exactly from
    differentiating v_eps(T - t) = v_eps(t) and v_eps(t + T) = v_eps(t):

        w(T - t) = w(t) + T' v'(t),    w(t + T) = w(t) - T' v'(t),

    with T' = dT/deps = -2 w'(T/2) / v''(T/2).  So w = q(t) - (T'/T) t v'(t)
    with q periodic: it grows linearly.

    Parameters
    ----------
    h : float, optional
        Finite-difference step for s; default 1e-4 eps_bar.
    s_method : {"linear", "richardson"}
        ``"linear"`` (default) solves the linearized symmetry condition at
        T/2.  ``"richardson"`` differences shooting results at eps +- h and
        eps +- 2h; its error (about 1e-11) is amplified by the unstable
        Floquet mode, which leaves a kink of that size times sqrt(rho) at T/2.
        Both values, and the finite-difference dT/deps, are stored in
        ``info`` as cross-checks.
    """
    tol = tol or sol.tol
    prm = sol.params
    if sol.is_cylinder:
        raise DomainError("the necksize family degenerates at eps_bar; use w0_cylinder")
    h = 1e-4 * prm.eps_bar if h is None else float(h)
    if not (0.0 < sol.eps - 2.0 * h and sol.eps + 2.0 * h < prm.eps_bar):
        raise DomainError("eps +- 2h must stay inside (0, eps_bar)")
    if s_method not in ("richardson", "linear"):
        raise DomainError(f"unknown s_method {s_method!r}")
    op = mode_operator(sol, 0)
    lin = _linear_shoot(sol, op, tol)
    s_lin = _s_linear(sol, lin)
    s_fd, dT_fd = _s_richardson(sol, h, tol)
    s = s_fd if s_method == "richardson" else s_lin

    def half_eval(tt):
        z = lin.sol(tt)
        return z[4:8] + s * z[8:12]

    half = sol.half_period
    z_end = half_eval(np.array([half]))[:, 0]
    v_end = lin.y[:4, -1]
    v4_end = prm.c2 * v_end[2] - prm.c0 * v_end[0] + prm.c_nl * v_end[0] ** prm.p_exp
    dT = -2.0 * z_end[1] / v_end[2]

    def vdot(tt):
        y = sol.interpolant(tt)
        d4 = prm.c2 * y[2] - prm.c0 * y[0] + prm.c_nl * y[0] ** prm.p_exp
        return np.array([y[1], y[2], y[3], d4])

    def evaluator(tt):
        scalar = np.ndim(tt) == 0
        tt = np.atleast_1d(np.asarray(tt, dtype=float))
        k = np.floor(tt / sol.period)
        tau = tt - k * sol.period
        flip = tau > half
        tau_r = np.where(flip, sol.period - tau, tau)
        base = half_eval(tau_r)
        sign = np.array([1.0, -1.0, 1.0, -1.0])[:, None]
        # w(T - t) = w(t) + T' v'(t): reflect, flipping odd derivatives
        refl = sign * (base + dT * vdot(tau_r))
        out = np.where(flip, refl, base)
        # w(t + kT) = w(t) - k T' v'(t)
        out = out - k * dT * vdot(tt)
        return out[:, 0] if scalar else out

    npts = n_samples or n_periods * (sol.t.size - 1) + 1
    t = np.linspace(0.0, n_periods * sol.period, npts)
    info = {"s": s, "s_linear": s_lin, "s_richardson": s_fd, "h": h,
            "dT_deps": dT, "dT_deps_fd": dT_fd,
            "symmetry_defect": abs(2.0 * z_end[3] + dT * v4_end)}
    return JacobiField("necksize", t, evaluator(t), op, evaluator, info)


def w0_cylinder(params, sign, n_samples=1025):
    """Geometric fields on the cylinder: sin(sqrt(mu) t) (+) or cos(sqrt(mu) t) (-)."""
    if sign not in ("+", "-", +1, -1):
        raise DomainError(f"sign must be '+' or '-', got {sign!r}")
    plus = sign in ("+", +1)
    k = math.sqrt(params.mu)
    sol = shoot_delaunay(params.eps_bar, params=params)
    op = mode_operator(sol, 0)

    def evaluator(tt):
        tt = np.asarray(tt, dtype=float)
        s, c = np.sin(k * tt), np.cos(k * tt)
        if plus:
            return np.array([s, k * c, -k ** 2 * s, -k ** 3 * c])
        return np.array([c, -k * s, -k ** 2 * c, k ** 3 * s])

    t = np.linspace(0.0, params.cylinder_period, n_samples)
    return JacobiField("translation" if plus else "necksize", t, evaluator(t), op,
                       evaluator, {"sqrt_mu": k})


# -- monodromy --------------------------------------------------------------

def _gamma_bound(prm, b, v_const):
    vmin = v_const - prm.c_lin * (prm.eps_bar * 3.0) ** prm.lin_exp
    return math.sqrt(abs(b) + math.sqrt(abs(vmin)) + 1.0)


def _segment_count(sol, ops):
    prm = sol.params
    g = max(_gamma_bound(prm, op.b_j, op.v_const) for op in ops)
    return max(16, int(math.ceil(sol.period * g / 1.5)))


def segment_propagators(sol, ops, n_segments, t_start=0.0, t_stop=None, tol=None):
    """Propagators over K equal segments of [t_start, t_stop] for each mode.

    All segments and modes are integrated in one call after rescaling each
    segment to unit length.  Returns an array of shape (len(ops), K, 4, 4).
    """
    tol = tol or sol.tol
    prm = sol.params
    t_stop = sol.period if t_stop is None else t_stop
    nodes = np.linspace(t_start, t_stop, n_segments + 1)
    dt = nodes[1] - nodes[0]
    b = np.array([op.b_j for op in ops])[:, None]
    vc = np.array([op.v_const for op in ops])[:, None]
    nm, k = len(ops), n_segments
    x0 = np.broadcast_to(np.eye(4), (nm, k, 4, 4)).ravel()

    def rhs(s, x):
        x = x.reshape(nm, k, 4, 4)
        v = sol.interpolant.v(nodes[:-1] + s * dt)
        pot = vc - prm.c_lin * v ** prm.lin_exp
        d = np.empty_like(x)
        d[:, :, 0:3] = x[:, :, 1:4]
        d[:, :, 3] = b[..., None] * x[:, :, 2] - pot[..., None] * x[:, :, 0]
        return (dt * d).ravel()

    out = solve_ivp(rhs, (0.0, 1.0), x0, method="DOP853",
                    rtol=tol.ode_rel, atol=tol.ode_abs)
    if out.status != 0:
        raise IntegrationError(out.message)
    return out.y[:, -1].reshape(nm, k, 4, 4)


def monodromy(sol, j, tol=None, *, convention="geometric", n_segments=None):
    """Fundamental matrix of the mode-j system over one period, from the identity.

    Formed as the ordered product of segment propagators.  For large j the
    entries span many orders of magnitude; use :func:`floquet` for exponents.
    """
    op = mode_operator(sol, j, convention)
    k = n_segments or _segment_count(sol, [op])
    segs = segment_propagators(sol, [op], k, tol=tol)[0]
    m = np.eye(4)
    for n_i in segs:
        m = n_i @ m
    return m


@dataclass(frozen=True)
class FloquetData:
    """Floquet data of one mode.

    ``exponents`` are complex gamma = log(rho)/T sorted by real part, with
    imaginary parts in (-pi/T, pi/T]; ``log_det`` is log det M from the
    segment determinants.
    """

    j: int
    period: float
    exponents: np.ndarray
    multipliers: np.ndarray
    log_det: float
    n_segments: int

    @property
    def real_exponents(self):
        return self.exponents.real

    @property
    def det(self):
        return math.exp(self.log_det)

    def pairing_defect(self):
        """max |gamma_i + gamma_{5-i}| over the sorted real parts."""
        g = np.sort(self.exponents.real)
        return float(np.max(np.abs(g + g[::-1])))


def _cyclic_eigs(segs):
    k = len(segs)
    big = np.zeros((4 * k, 4 * k))
    for i, n_i in enumerate(segs):
        r = ((i + 1) % k) * 4
        big[r:r + 4, 4 * i:4 * i + 4] = n_i
    return np.linalg.eigvals(big)


def _group_segments(segs, per_group):
    """Multiply runs of ``per_group`` consecutive segment propagators."""
    out = []
    for a in range(0, len(segs), per_group):
        m = np.eye(4)
        for n_i in segs[a:a + per_group]:
            m = n_i @ m
        out.append(m)
    return out


def _floquet_from_segments(segs, period, j, growth):
    """Exponents from segment propagators; ``growth`` bounds max |Re gamma|."""
    logdet = float(sum(np.log(abs(np.linalg.det(n_i))) for n_i in segs))
    # blocks with growth up to e^4 keep the cyclic eigenproblem well conditioned
    per_group = max(1, int(4.0 * len(segs) / (growth * period)))
    segs = _group_segments(segs, per_group)
    k = len(segs)
    lam = _cyclic_eigs(segs)
    logmod = np.log(np.abs(lam))
    order = np.argsort(logmod)
    groups = order.reshape(4, k)
    gam_re = np.array([np.median(logmod[g]) for g in groups]) * k / period
    # multiplier phase: rho = lambda^K for any member of the group
    rho = []
    for g, gr in zip(groups, gam_re):
        lam_g = lam[g[np.argmin(np.abs(logmod[g] - gr * period / k))]]
        phase = np.angle(lam_g) * k
        rho.append(np.exp(gr * period + 1j * phase))
    rho = np.array(rho)
    gam = gam_re + 1j * np.angle(rho) / period
    return FloquetData(j=j, period=period, exponents=gam, multipliers=rho,
                       log_det=logdet, n_segments=k)


def floquet(sol, js, tol=None, *, convention="geometric", n_segments=None):
    """Floquet exponents for the modes ``js`` (an int or a sequence).

    Returns a list of :class:`FloquetData` (a single one for an int).
    """
    single = isinstance(js, (int, np.integer))
    js = [int(js)] if single else [int(j) for j in js]
    ops = [mode_operator(sol, j, convention) for j in js]
    k = n_segments or _segment_count(sol, ops)
    segs = segment_propagators(sol, ops, k, tol=tol)
    prm = sol.params
    out = [_floquet_from_segments(s, sol.period, op.j, _gamma_bound(prm, op.b_j, op.v_const))
           for s, op in zip(segs, ops)]
    return out[0] if single else out


@dataclass(frozen=True)
class JordanCheck:
    """Structure of the j = 0 monodromy at the multiplier 1.

    ``sigma_defect`` is |sigma - 2| for sigma = rho + 1/rho of the central
    multiplier pair, obtained from the factorisation
    det(M - I) = (2 - sigma_c)(2 - sigma_big).  A double multiplier 1 means
    sigma_defect = 0; unlike |rho - 1| this measure is not inflated by the
    square-root sensitivity of a Jordan block.
    """

    sigma_defect: float
    rho_split: float
    det: float
    rank_defect: float
    big_multiplier: float

    def passes(self, tol=1e-6, det_tol=1e-8):
        return self.sigma_defect < tol and abs(self.det - 1.0) < det_tol


def jordan_check(sol, tol=None, n_segments=None):
    """Verify the double multiplier 1 of the j = 0 monodromy.

    The orbit is reversible: with R = diag(1, -1, 1, -1) and N the propagator
    over the first half period, M = R N^{-1} R N.  Writing N in even/odd
    blocks, det(M - I) = 16 det(N_eo) det(N_oe), which avoids forming M.
    The second half period is integrated separately (backward from T) so
    that det M is a genuine check of Liouville's formula.
    """
    if sol.is_cylinder:
        raise DomainError("the cylinder has no Jordan block at multiplier 1")
    op = mode_operator(sol, 0)
    k = n_segments or 2 * (_segment_count(sol, [op]) // 2 + 1)
    half = k // 2
    first = segment_propagators(sol, [op], half, 0.0, sol.half_period, tol)[0]
    second = segment_propagators(sol, [op], half, sol.half_period, sol.period, tol)[0]
    n_half = np.eye(4)
    for n_i in first:
        n_half = n_i @ n_half
    m = _R @ np.linalg.solve(n_half, _R @ n_half)
    rho = np.linalg.eigvals(m)
    big = float(rho[np.argmax(np.abs(rho))].real)
    sigma_big = big + 1.0 / big
    p1 = 16.0 * np.linalg.det(n_half[np.ix_([0, 2], [1, 3])]) * \
        np.linalg.det(n_half[np.ix_([1, 3], [0, 2])])
    sigma_c = 2.0 - p1 / (2.0 - sigma_big)
    central = rho[np.argsort(np.abs(np.log(np.abs(rho))))[:2]]
    split = float(np.max(np.abs(central - 1.0)))
    logdet = sum(np.log(abs(np.linalg.det(n_i))) for n_i in np.concatenate([first, second]))
    sv = np.linalg.svd(m - np.eye(4), compute_uv=False)
    return JordanCheck(sigma_defect=abs(sigma_c - 2.0), rho_split=split,
                       det=math.exp(logdet), rank_defect=float(sv[-2] / sv[0]),
                       big_multiplier=big)


# -- indicial roots ---------------------------------------------------------

def cylinder_indicial_closed_form(params, j, convention="geometric"):
    """The four exponents of mode j on the cylinder eps = eps_bar.

    Roots of gamma^4 - b_j gamma^2 + V_j = 0 with constant V_j, returned as a
    complex array sorted by (real, imaginary) part.
    """
    if isinstance(j, bool) or not isinstance(j, (int, np.integer)) or j < 0:
        raise DomainError(f"mode index must be a non-negative integer, got {j!r}")
    lam, b, v_const = _mode_constants(params, int(j), convention)
    c = v_const - params.c_lin * params.eps_bar ** params.lin_exp
    disc = np.sqrt(complex(b * b - 4.0 * c))
    g2 = np.array([(b + disc) / 2.0, (b - disc) / 2.0])
    g = np.sqrt(g2)
    roots = np.concatenate([g, -g])
    return roots[np.lexsort((roots.imag, roots.real))]


@dataclass(frozen=True)
class IndicialRoot:
    gamma: float
    j: int
    multiplicity: int


@dataclass(frozen=True)
class IndicialSet:
    """Positive indicial roots of a Delaunay end up to a cutoff.

    The set is symmetric under gamma -> -gamma; only positive values are
    stored.  ``gamma_1`` is the smallest positive root over all modes and
    ``gamma_1_nonradial`` the smallest one over j >= 1.  The j = 0 zero
    exponent (double, from the translation and necksize fields) is never
    included.
    """

    eps: float
    roots: tuple
    gamma_1: float
    gamma_1_nonradial: float
    j_max: int
    gamma_max: float
    convention: str = "geometric"
    floquet: tuple = field(default=(), repr=False)

    def as_rows(self):
        return [(self.eps, r.j, r.gamma, r.multiplicity) for r in self.roots]


def indicial_roots(sol, j_max=10, gamma_max=10.0, tol=None, *,
                   convention="geometric"):
    """Positive indicial roots Re(log rho)/T for modes j = 0..j_max.

    Each positive real part counts with multiplicity (number of exponents
    with that real part) times the dimension of the j-th eigenspace.  Values
    closer than 1e-7 are merged; the mode label is the smallest j.
    """
    if isinstance(j_max, bool) or not isinstance(j_max, (int, np.integer)) or j_max < 1:
        raise DomainError("j_max must be an integer >= 1")
    data = floquet(sol, list(range(j_max + 1)), tol, convention=convention)
    raw = []
    for fd in data:
        _, mult = sphere_eigenvalue(sol.params.n, fd.j, convention)
        g = np.sort(fd.exponents.real)
        if fd.j >= 1:
            _warn_defective(fd)
        for x in g:
            if x > ZERO_EXPONENT_TOL and x <= gamma_max:
                raw.append([float(x), fd.j, mult])
    raw.sort()
    merged = []
    for x, j, m in raw:
        if merged and abs(x - merged[-1][0]) < MERGE_TOL:
            merged[-1][2] += m
            merged[-1][1] = min(merged[-1][1], j)
        else:
            merged.append([x, j, m])
    roots = tuple(IndicialRoot(x, j, m) for x, j, m in merged)
    nonradial = [r.gamma for r in roots if r.j >= 1]
    return IndicialSet(
        eps=sol.eps, roots=roots,
        gamma_1=roots[0].gamma if roots else math.inf,
        gamma_1_nonradial=min(nonradial) if nonradial else math.inf,
        j_max=int(j_max), gamma_max=float(gamma_max), convention=convention,
        floquet=tuple(data))


def _warn_defective(fd):
    g = fd.exponents
    for a in range(4):
        for b in range(a + 1, 4):
            if abs(g[a] - g[b]) < 1e-8:
                warnings.warn(f"mode {fd.j}: near-defective Floquet multipliers "
                              f"(exponents {g[a]:.6g}, {g[b]:.6g})", RuntimeWarning,
                              stacklevel=3)
                return


def verify_mode_nondegeneracy(sol, j, tol=None, *, threshold=1e-6,
                              convention="geometric"):
    """Check that no multiplier of mode j >= 1 lies on the unit circle.

    Returns ``(ok, margin)`` with margin = min |Re gamma| over the four
    exponents; ``ok`` is ``margin > threshold``.
    """
    if isinstance(j, bool) or not isinstance(j, (int, np.integer)) or j < 1:
        raise DomainError("nondegeneracy is only claimed for modes j >= 1")
    fd = floquet(sol, int(j), tol, convention=convention)
    margin = float(np.min(np.abs(fd.exponents.real)))
    return margin > threshold, margin

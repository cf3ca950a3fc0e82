"""Boundary pairing of radial Jacobi fields and the deficiency-space symplectic matrix.

For two solutions a, b of the mode-0 linearized equation the bilinear form

    S(a, b) = a b''' - b a''' + b' a'' - a' b'' + c2 (b a' - a b')

is independent of t.  On a Delaunay end the pair (w0+, w0-) = (v', dv/deps)
gives A_eps = S(w0+, w0-), and evaluating at t = 0 shows A_eps = -dH_eps/deps,
which is positive because the energy decreases along the family.  The
symplectic matrix on the span of (w0+, w0-) over k ends is block diagonal with
blocks [[0, A_i], [-A_i, 0]].
"""

from dataclasses import dataclass, field
import csv
import io
import json
import warnings

import numpy as np

from .cylinder_ode import hamiltonian_of_necksize, shoot_delaunay
from .errors import DomainError
from .linearization import JacobiField, w0_cylinder, w0_minus, w0_plus

__all__ = [
    "boundary_pairing", "AEpsilon", "a_epsilon", "dH_deps", "EndFields",
    "DeficiencyBasis", "deficiency_basis", "OmegaMatrix", "omega_matrix",
    "isotropic_check", "CONSERVATION_TOL",
]

CONSERVATION_TOL = 1e-6


def _derivs(x, t):
    if isinstance(x, JacobiField):
        return np.asarray(x(t), dtype=float)
    x = np.asarray(x, dtype=float)
    if x.shape[0] != 4:
        raise DomainError("field samples need rows (w, w', w'', w''')")
    return x


def boundary_pairing(a, b, t, params):
    """S(a, b)(t) for Jacobi fields or stacked derivative samples.

    ``a`` and ``b`` are :class:`JacobiField` objects (evaluated at ``t``) or
    arrays whose first axis holds (w, w', w'', w''').  ``t`` may be an array.
    """
    x = _derivs(a, t)
    y = _derivs(b, t)
    return (x[0] * y[3] - y[0] * x[3] + y[1] * x[2] - x[1] * y[2]
            + params.c2 * (y[0] * x[1] - x[0] * y[1]))


@dataclass(frozen=True)
class AEpsilon:
    """The conserved pairing A_eps = S(w0+, w0-) sampled over one period."""

    eps: float
    value: float
    spread: float
    at_zero: float
    t: np.ndarray = field(repr=False)
    samples: np.ndarray = field(repr=False)

    @property
    def relative_spread(self):
        return self.spread / abs(self.value)

    @property
    def conserved(self):
        return self.relative_spread < CONSERVATION_TOL


def _end_fields(sol, h, tol):
    if sol.is_cylinder:
        return w0_cylinder(sol.params, "+"), w0_cylinder(sol.params, "-")
    return w0_plus(sol), w0_minus(sol, h, tol)


def a_epsilon(sol, h=None, n_samples=32, tol=None):
    """Evaluate S(w0+, w0-) at ``n_samples`` points over one period.

    At eps_bar the cylindrical fields sin and cos(sqrt(mu) t) are used.
    Warns when the relative spread exceeds 1e-6, which signals an integration
    error rather than a property of the fields.
    """
    if n_samples < 2:
        raise DomainError("n_samples must be >= 2")
    plus, minus = _end_fields(sol, h, tol)
    t = np.linspace(0.0, sol.period, n_samples, endpoint=False)
    vals = boundary_pairing(plus, minus, t, sol.params)
    mean = float(np.mean(vals))
    spread = float(np.max(np.abs(vals - mean)))
    out = AEpsilon(eps=sol.eps, value=mean, spread=spread, at_zero=float(vals[0]),
                   t=t, samples=vals)
    if not out.conserved:
        warnings.warn(f"A_eps not conserved at eps = {sol.eps:.6g}: relative spread "
                      f"{out.relative_spread:.2e}", RuntimeWarning, stacklevel=2)
    return out


def dH_deps(eps, h=None, params=None, tol=None):
    """dH_eps/deps by centred differences with one Richardson level.

    Uses steps h and 2h, so eps +- 2h must lie inside (0, eps_bar].
    """
    if params is None:
        raise DomainError("params is required")
    h = 1e-4 * params.eps_bar if h is None else float(h)
    if h <= 0.0 or not (0.0 < eps - 2.0 * h and eps + 2.0 * h <= params.eps_bar):
        raise DomainError("eps +- 2h must stay inside (0, eps_bar]")
    guess = shoot_delaunay(eps, tol, params).vpp0 if eps < params.eps_bar else None

    def energy(e):
        return hamiltonian_of_necksize(e, params, tol, vpp0_guess=guess)

    def cd(step):
        return (energy(eps + step) - energy(eps - step)) / (2.0 * step)

    return (4.0 * cd(h) - cd(2.0 * h)) / 3.0


@dataclass(frozen=True)
class EndFields:
    """The translation and necksize fields of one Delaunay end."""

    eps: float
    plus: JacobiField = field(repr=False)
    minus: JacobiField = field(repr=False)
    period: float = 0.0


@dataclass(frozen=True)
class DeficiencyBasis:
    """Geometric Jacobi fields (w0+, w0-) for each of k ends; dimension 2k.

    Basis order is (w0+ end 1, w0- end 1, w0+ end 2, ...).
    """

    ends: tuple

    @property
    def k(self):
        return len(self.ends)

    @property
    def dim(self):
        return 2 * self.k

    @property
    def labels(self):
        return [f"w0{s}[{i}]" for i in range(self.k) for s in ("+", "-")]

    def translation_indices(self):
        return list(range(0, self.dim, 2))

    def necksize_indices(self):
        return list(range(1, self.dim, 2))


def deficiency_basis(eps_list, params, h=None, tol=None):
    """Build the geometric fields for each necksize in ``eps_list``."""
    eps_list = [float(e) for e in eps_list]
    if not eps_list:
        raise DomainError("need at least one end")
    ends = []
    for e in eps_list:
        sol = shoot_delaunay(e, tol, params)
        plus, minus = _end_fields(sol, h, tol)
        ends.append(EndFields(e, plus, minus, sol.period))
    return DeficiencyBasis(tuple(ends))


@dataclass(frozen=True)
class OmegaMatrix:
    """Symplectic matrix on a deficiency basis."""

    k: int
    eps_list: tuple
    blocks: tuple
    entries: np.ndarray
    labels: tuple
    spreads: tuple = ()

    def skew_defect(self):
        return float(np.max(np.abs(self.entries + self.entries.T)))

    def off_block_max(self):
        mask = np.ones_like(self.entries, dtype=bool)
        for i in range(self.k):
            mask[2 * i:2 * i + 2, 2 * i:2 * i + 2] = False
        return float(np.max(np.abs(self.entries[mask]))) if mask.any() else 0.0

    def det(self):
        return float(np.linalg.det(self.entries))

    def to_dict(self):
        return {"k": self.k, "eps_list": list(self.eps_list),
                "blocks": list(self.blocks), "matrix": self.entries.tolist()}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["", *self.labels])
        for label, row in zip(self.labels, self.entries):
            writer.writerow([label, *("%.17g" % x for x in row)])
        return buf.getvalue()


def omega_matrix(eps_list, h=None, params=None, tol=None, n_samples=32):
    """Assemble the 2k x 2k matrix of the pairing on the deficiency basis.

    Each diagonal block is [[0, A_i], [-A_i, 0]] with A_i the conserved
    pairing at eps_i; fields of different ends have disjoint supports, so all
    cross-end entries are zero.
    """
    if params is None:
        raise DomainError("params is required")
    eps_list = tuple(float(e) for e in eps_list)
    if not eps_list:
        raise DomainError("need at least one end")
    for e in eps_list:
        if not 0.0 < e <= params.eps_bar:
            raise DomainError(f"necksize {e!r} outside (0, eps_bar]")
    k = len(eps_list)
    omega = np.zeros((2 * k, 2 * k))
    blocks, spreads = [], []
    for i, e in enumerate(eps_list):
        a = a_epsilon(shoot_delaunay(e, tol, params), h, n_samples, tol)
        omega[2 * i, 2 * i + 1] = a.value
        omega[2 * i + 1, 2 * i] = -a.value
        blocks.append(a.value)
        spreads.append(a.relative_spread)
    labels = tuple(f"w0{s}[{i}]" for i in range(k) for s in ("+", "-"))
    return OmegaMatrix(k, eps_list, tuple(blocks), omega, labels, tuple(spreads))


def isotropic_check(indices, omega, atol=1e-10):
    """True iff omega vanishes on the span of the selected basis vectors."""
    idx = sorted(set(int(i) for i in indices))
    if not idx:
        raise DomainError("empty selection")
    if idx[0] < 0 or idx[-1] >= omega.entries.shape[0]:
        raise DomainError("index out of range")
    if len(idx) > omega.k:
        raise DomainError("an isotropic subspace has dimension at most k")
    sub = omega.entries[np.ix_(idx, idx)]
    return bool(np.all(np.abs(sub) < atol))

"""Dimension-dependent constants.

Every coefficient of the cylindrical fourth-order ODE, its linearization and
the associated Hamiltonian is computed here once, so the rest of the package
never re-derives an n-dependent number.
"""
from dataclasses import dataclass
from math import comb, sqrt
import numbers

from .errors import DomainError

__all__ = ["DimensionParams", "make_params", "sphere_eigenvalue"]


@dataclass(frozen=True)
class DimensionParams:
    """Constants of the constant Q-curvature problem in dimension ``n``.

    Attributes
    ----------
    n : int
        Dimension, at least 5.
    p_exp : float
        Critical exponent (n+4)/(n-4).
    c2, c0, c_nl : float
        Coefficients of ``v'''' = c2 v'' - c0 v + c_nl v**p_exp``.
    c_lin : float
        Potential coefficient of the linearized operator, ``p_exp * c_nl``.
    eps_bar : float
        The nonzero constant solution (largest necksize).
    mu : float
        Squared frequency of the oscillatory Jacobi fields on the cylinder.
    q_target : float
        Q-curvature of the round sphere, n(n^2-4)/8.
    """

    n: int
    p_exp: float
    c2: float
    c0: float
    c_nl: float
    c_lin: float
    eps_bar: float
    mu: float
    q_target: float

    @property
    def h_coef(self):
        """Coefficient of ``v**(2n/(n-4))`` in the Hamiltonian."""
        n = self.n
        return (n - 4) ** 2 * (n * n - 4) / 32.0

    @property
    def h_exp(self):
        return 2.0 * self.n / (self.n - 4)

    @property
    def lin_exp(self):
        """Exponent 8/(n-4) of the linearized potential."""
        return 8.0 / (self.n - 4)

    @property
    def cylinder_energy(self):
        """Hamiltonian of the constant solution, -n(n-4)^2 eps_bar^2 / 8."""
        n = self.n
        return -n * (n - 4) ** 2 * self.eps_bar ** 2 / 8.0

    @property
    def cylinder_period(self):
        """Small-oscillation period 2 pi / sqrt(mu) about the constant solution."""
        from math import pi

        return 2.0 * pi / sqrt(self.mu)


def _check_dimension(n):
    if isinstance(n, bool) or not isinstance(n, numbers.Integral):
        raise DomainError(f"dimension must be an integer, got {n!r}")
    if n <= 4:
        raise DomainError(f"dimension must satisfy n >= 5, got {n}")
    return int(n)


def make_params(n):
    """Build the :class:`DimensionParams` record for dimension ``n >= 5``."""
    n = _check_dimension(n)
    m = n - 4
    c0 = n * n * m * m / 16.0
    c_nl = n * m * (n * n - 4) / 16.0
    disc = n ** 4 - 64 * n + 64
    return DimensionParams(
        n=n,
        p_exp=(n + 4) / m,
        c2=(n * m + 8) / 2.0,
        c0=c0,
        c_nl=c_nl,
        c_lin=n * (n + 4) * (n * n - 4) / 16.0,
        eps_bar=(n * m / (n * n - 4)) ** (m / 8.0),
        mu=(sqrt(disc) - (n * n - 4 * n + 8)) / 4.0,
        q_target=n * (n * n - 4) / 8.0,
    )


def sphere_eigenvalue(n, j, convention="geometric"):
    """Eigenvalue and multiplicity of the j-th eigenspace of -Laplacian on S^(n-1).

    ``convention="geometric"`` returns the Laplace-Beltrami value j(j+n-2).
    ``convention="shifted"`` returns j(n-1+j), a normalisation that appears in
    some published mode tables; it is kept so such tables can be reproduced.
    The multiplicity is the dimension of degree-j spherical
    harmonics in R^n under both conventions.
    """
    n = _check_dimension(n)
    if isinstance(j, bool) or not isinstance(j, numbers.Integral) or j < 0:
        raise DomainError(f"mode index must be a nonnegative integer, got {j!r}")
    j = int(j)
    if convention == "geometric":
        lam = j * (j + n - 2)
    elif convention == "shifted":
        lam = j * (n - 1 + j)
    else:
        raise DomainError(f"unknown eigenvalue convention {convention!r}")
    mult = comb(n - 1 + j, j) - (comb(n - 3 + j, j - 2) if j >= 2 else 0)
    return float(lam), mult

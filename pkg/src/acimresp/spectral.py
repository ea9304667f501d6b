"""Chebyshev collocation on first-kind nodes.

Nodes never touch the endpoints, so functions with poles at -1 and +1 can
be sampled safely; endpoint values of regular functions are recovered by
extrapolating the Chebyshev interpolant.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.polynomial import chebyshev as C

from . import _kernels
from .errors import NoConvergence, SingularMatrix

DEFAULT_N = 48


class ChebGrid:
    """First-kind Chebyshev grid with interpolation, quadrature and D."""

    def __init__(self, N: int = DEFAULT_N):
        if not 8 <= N <= 256:
            raise ValueError(f"N must lie in [8, 256], got {N}")
        self.N = N
        k = np.arange(N)
        self.theta = (2 * k + 1) * np.pi / (2 * N)
        self.nodes = np.cos(self.theta)
        # 1 + x and 1 - x without cancellation near the ends
        self.xp1 = 2 * np.cos(self.theta / 2) ** 2
        self.om1 = 2 * np.sin(self.theta / 2) ** 2
        self.bary_weights = (-1.0) ** k * np.sin(self.theta)
        for a in (self.theta, self.nodes, self.xp1, self.om1, self.bary_weights):
            a.flags.writeable = False

    def __repr__(self):
        return f"ChebGrid(N={self.N})"

    @property
    def gap(self):
        """Distance 1 - |x| of each node to the nearer endpoint."""
        return np.minimum(self.xp1, self.om1)

    @cached_property
    def quad_weights(self) -> np.ndarray:
        # Fejer's first rule
        N = self.N
        j = np.arange(1, N // 2 + 1)
        s = np.cos(2 * np.outer(self.theta, j)) / (4 * j**2 - 1)
        w = (2.0 / N) * (1 - 2 * s.sum(axis=1))
        w.flags.writeable = False
        return w

    @cached_property
    def diff_matrix(self) -> np.ndarray:
        th = self.theta
        # x_i - x_j = -2 sin((t_i + t_j)/2) sin((t_i - t_j)/2)
        dx = -2 * np.sin((th[:, None] + th[None, :]) / 2) * \
            np.sin((th[:, None] - th[None, :]) / 2)
        np.fill_diagonal(dx, 1.0)
        w = self.bary_weights
        D = (w[None, :] / w[:, None]) / dx
        np.fill_diagonal(D, 0.0)
        np.fill_diagonal(D, -D.sum(axis=1))
        D.flags.writeable = False
        return D

    @cached_property
    def coef_matrix(self) -> np.ndarray:
        """Maps node values to Chebyshev coefficients (degree N-1)."""
        N = self.N
        T = np.cos(np.outer(np.arange(N), self.theta)) * (2.0 / N)
        T[0] /= 2
        T.flags.writeable = False
        return T

    def interp_matrix(self, z) -> np.ndarray:
        return _kernels.bary_matrix(self.nodes, self.bary_weights, np.atleast_1d(z))

    def sample(self, func) -> "GridFunction":
        return GridFunction(self, np.asarray(func(self.nodes)))

    def cheb_values(self, coeffs) -> "GridFunction":
        return GridFunction(self, C.chebval(self.nodes, coeffs))


@dataclass(frozen=True)
class GridFunction:
    grid: ChebGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape != (self.grid.N,):
            raise ValueError(f"expected {self.grid.N} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function has non-finite entries")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    # arithmetic ----------------------------------------------------------
    def _wrap(self, v):
        return GridFunction(self.grid, v)

    def __add__(self, other):
        if isinstance(other, GridFunction):
            return self._wrap(self.values + other.values)
        return self._wrap(self.values + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, GridFunction):
            return self._wrap(self.values - other.values)
        return self._wrap(self.values - other)

    def __neg__(self):
        return self._wrap(-self.values)

    def __mul__(self, c):
        if isinstance(c, GridFunction):
            return self._wrap(self.values * c.values)
        return self._wrap(self.values * c)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self._wrap(self.values / c)

    # calculus ------------------------------------------------------------
    @property
    def coeffs(self) -> np.ndarray:
        return self.grid.coef_matrix @ self.values

    def __call__(self, z):
        scalar = np.ndim(z) == 0
        out = self.grid.interp_matrix(z) @ self.values
        return out[0] if scalar else out

    def at_endpoint(self, side: int, derivative: int = 0):
        """Value (or derivative) of the interpolant at x = side = +-1."""
        c = self.coeffs
        if derivative:
            c = C.chebder(c, derivative)
        return C.chebval(float(side), c)

    def derivative(self) -> "GridFunction":
        return self._wrap(self.grid.diff_matrix @ self.values)

    def integral(self):
        return self.grid.quad_weights @ self.values

    def antiderivative(self) -> "GridFunction":
        c = C.chebint(self.coeffs, lbnd=-1)
        return self._wrap(C.chebval(self.grid.nodes, c))

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))


# thin functional aliases ---------------------------------------------------

def interpolate(gf: GridFunction, z):
    return gf(z)


def differentiate(gf: GridFunction) -> GridFunction:
    return gf.derivative()


def integrate(gf: GridFunction):
    return gf.integral()


def antiderivative(gf: GridFunction) -> GridFunction:
    return gf.antiderivative()


# dense linear algebra ------------------------------------------------------

def eig(matrix):
    """All eigenpairs, sorted by descending modulus.

    Eigenvectors are returned as columns, scaled to unit max-norm.
    Conjugate pairs end up adjacent (positive imaginary part first).
    """
    M = np.asarray(matrix)
    try:
        vals, vecs = np.linalg.eig(M)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    order = np.lexsort((-vals.imag, -np.round(np.abs(vals), 12)))
    vals = vals[order]
    vecs = vecs[:, order]
    vecs = vecs / np.max(np.abs(vecs), axis=0)
    return vals, vecs


def eig_residuals(matrix, vals, vecs):
    M = np.asarray(matrix)
    return np.max(np.abs(M @ vecs - vecs * vals[None, :]), axis=0)


def solve(matrix, rhs):
    """Solve ``matrix @ x = rhs`` by LU with partial pivoting."""
    M = np.asarray(matrix)
    b = rhs.values if isinstance(rhs, GridFunction) else np.asarray(rhs)
    cond = np.linalg.cond(M, 1)
    if not np.isfinite(cond) or cond > 1e13:
        raise SingularMatrix(f"condition number {cond:.3g}")
    x = np.linalg.solve(M, b)
    res = np.max(np.abs(M @ x - b))
    scale = np.max(np.abs(M)) * np.max(np.abs(x)) + np.max(np.abs(b))
    if res > 1e-10 * scale:
        raise SingularMatrix(f"residual {res:.3g} too large")
    if isinstance(rhs, GridFunction):
        return GridFunction(rhs.grid, x)
    return x

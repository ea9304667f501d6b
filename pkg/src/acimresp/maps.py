"""Full-branch Markov interval maps represented as Chebyshev polynomials."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Chebyshev, Polynomial

from . import _kernels
from .errors import (EndpointNonvanishing, MarkovBroken, NoConvergence,
                     RootCountMismatch)

CRIT_TOL = 1e-10
SCAN_POINTS = 4096


def _frozen(a):
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class AnalyticMap:
    """A polynomial map f of [-1, 1] with its Markov data.

    ``crit`` holds c_0 = -1 < c_1 < ... < c_m = 1.  Branch j (1-based) is
    [c_{j-1}, c_j] and has orientation (-1)^(j+1).
    """
    coeffs: np.ndarray
    m: int
    crit: np.ndarray
    endpoint_derivs: tuple
    crit_second_derivs: np.ndarray

    @classmethod
    def from_coeffs(cls, coeffs, m: int | None = None, crit=None):
        """Build a map, locating the critical points unless ``crit`` is given.

        With ``m=None`` the branch count is inferred from the number of
        interior critical points (so maps failing the Setup still build and
        can be handed to :func:`validate_markov`).
        """
        coeffs = _frozen(np.trim_zeros(np.asarray(coeffs, float), "b") if np.any(coeffs) else [0.0])
        p = Chebyshev(coeffs)
        if crit is None:
            interior = _interior_roots(p.deriv())
            if m is None:
                m = len(interior) + 1
            elif len(interior) != m - 1:
                raise RootCountMismatch(
                    f"expected {m - 1} interior critical points, found {len(interior)}")
            crit = np.concatenate(([-1.0], interior, [1.0]))
        crit = _frozen(crit)
        d1 = p.deriv()
        d2 = d1.deriv()
        return cls(coeffs=coeffs, m=int(m), crit=crit,
                   endpoint_derivs=(float(d1(-1.0)), float(d1(1.0))),
                   crit_second_derivs=_frozen(d2(crit[1:-1])))

    # evaluation ------------------------------------------------------------
    @property
    def poly(self) -> Chebyshev:
        return Chebyshev(self.coeffs)

    def __call__(self, x):
        return self.poly(x)

    def deriv(self, x, order: int = 1):
        return self.poly.deriv(order)(x)

    @property
    def branch_signs(self) -> np.ndarray:
        return (-1.0) ** (np.arange(1, self.m + 1) + 1)

    @property
    def mu_minus(self) -> float:
        return float(np.sqrt(self.endpoint_derivs[0]))

    @property
    def mu_plus(self) -> float:
        return float(np.sqrt(abs(self.endpoint_derivs[1])))

    def taylor_at(self, x0: float, drop_linear: bool = False) -> np.ndarray:
        """Power coefficients a_1, a_2, ... of f(x0 + t) - f(x0)."""
        p = self.poly.convert(kind=Polynomial)
        shifted = p(Polynomial([x0, 1.0]))
        a = np.array(shifted.coef[1:], dtype=float)
        if a.size == 0:
            a = np.zeros(1)
        if drop_linear:
            a[0] = 0.0
        return a


@dataclass(frozen=True)
class PerturbationField:
    coeffs: np.ndarray
    vanishes_at_endpoints: bool = field(init=False)

    def __post_init__(self):
        c = _frozen(np.atleast_1d(np.asarray(self.coeffs, float)))
        object.__setattr__(self, "coeffs", c)
        ends = Chebyshev(c)(np.array([-1.0, 1.0]))
        object.__setattr__(self, "vanishes_at_endpoints",
                           bool(np.all(np.abs(ends) <= CRIT_TOL)))

    @property
    def poly(self) -> Chebyshev:
        return Chebyshev(self.coeffs)

    def __call__(self, x):
        return self.poly(x)


@dataclass(frozen=True)
class ObservablePoly:
    coeffs: np.ndarray

    def __post_init__(self):
        c = _frozen(np.atleast_1d(np.asarray(self.coeffs, float)))
        if not np.all(np.isfinite(c)):
            raise ValueError("observable coefficients must be finite")
        object.__setattr__(self, "coeffs", c)

    @property
    def poly(self) -> Chebyshev:
        return Chebyshev(self.coeffs)

    def __call__(self, x):
        return self.poly(x)

    def deriv(self, x):
        return self.poly.deriv()(x)


def power_to_cheb(power_coeffs) -> np.ndarray:
    """Chebyshev coefficients of a polynomial given in the monomial basis."""
    return Polynomial(power_coeffs).convert(kind=Chebyshev).coef


# --------------------------------------------------------------------------

def _interior_roots(dp: Chebyshev) -> np.ndarray:
    if not np.any(dp.coef):
        return np.empty(0)
    x = np.linspace(-1.0, 1.0, SCAN_POINTS + 1)
    v = dp(x)
    roots = []
    ddp = dp.deriv()
    for i in range(SCAN_POINTS):
        a, b = x[i], x[i + 1]
        fa, fb = v[i], v[i + 1]
        if fa == 0.0 and 0 < i:
            r = a
        elif fa * fb < 0:
            r = _polish(dp, ddp, a, b)
        else:
            continue
        if -1.0 < r < 1.0:
            roots.append(r)
    return np.array(roots)


def _polish(p, dp, a, b):
    fa = p(a)
    t = 0.5 * (a + b)
    for _ in range(100):
        ft = p(t)
        if ft == 0:
            return t
        if (ft < 0) == (fa < 0):
            a, fa = t, ft
        else:
            b = t
        d = dp(t)
        tn = t - ft / d if d != 0 else 0.5 * (a + b)
        if not min(a, b) <= tn <= max(a, b):
            tn = 0.5 * (a + b)
        if abs(tn - t) <= 2e-16 * max(abs(t), 1e-300):
            return tn
        t = tn
    return t


def critical_points(f: AnalyticMap) -> np.ndarray:
    """c_0 = -1, interior zeros of f', c_m = 1."""
    interior = _interior_roots(f.poly.deriv())
    if len(interior) != f.m - 1:
        raise RootCountMismatch(
            f"expected {f.m - 1} interior critical points, found {len(interior)}")
    return np.concatenate(([-1.0], interior, [1.0]))


def chebyshev_markov_map(m: int) -> AnalyticMap:
    """f = (-1)^(m+1) T_m, whose critical points are the extrema of T_m."""
    if m < 2:
        raise ValueError("m must be >= 2")
    coeffs = np.zeros(m + 1)
    coeffs[m] = (-1.0) ** (m + 1)
    k = np.arange(m + 1)
    crit = np.cos(np.pi * (m - k) / m)
    crit[0], crit[-1] = -1.0, 1.0
    if m % 2 == 0:
        crit[m // 2] = 0.0
    return AnalyticMap.from_coeffs(coeffs, m=m, crit=crit)


def perturbed_map(f: AnalyticMap, X: PerturbationField, t: float) -> AnalyticMap:
    """f_t = f + t X(f).  Critical points and critical values are unchanged."""
    if not X.vanishes_at_endpoints:
        raise EndpointNonvanishing("X must vanish at -1 and 1")
    if t == 0:
        return f
    deg = max(1, (len(f.coeffs) - 1) * max(1, len(X.coeffs) - 1))
    comp = Chebyshev.interpolate(lambda x: X(f(x)), deg)
    coeffs = np.zeros(max(len(f.coeffs), len(comp.coef)))
    coeffs[:len(f.coeffs)] += f.coeffs
    coeffs[:len(comp.coef)] += t * comp.coef
    xs = np.linspace(-1, 1, SCAN_POINTS + 1)
    factor = 1.0 + t * X.poly.deriv()(f(xs))
    if np.any(factor <= 0):
        raise MarkovBroken(f"1 + t X'(f(x)) changes sign at t={t}")
    g = AnalyticMap.from_coeffs(coeffs, m=f.m, crit=f.crit)
    report = validate_markov(g)
    if not report.passed:
        raise MarkovBroken("; ".join(report.failures))
    return g


@dataclass
class ValidationReport:
    critical_value_defect: float
    min_monotone_slope: float
    min_abs_second_deriv: float
    expansion_margin_left: float
    expansion_margin_right: float
    failures: list

    @property
    def passed(self) -> bool:
        return not self.failures

    def as_dict(self):
        return {
            "passed": self.passed,
            "critical_value_defect": self.critical_value_defect,
            "min_monotone_slope": self.min_monotone_slope,
            "min_abs_second_deriv": self.min_abs_second_deriv,
            "expansion_margin_left": self.expansion_margin_left,
            "expansion_margin_right": self.expansion_margin_right,
            "failures": list(self.failures),
        }


def validate_markov(f: AnalyticMap) -> ValidationReport:
    failures = []
    if f.m < 2:
        failures.append(f"m = {f.m} < 2")
    j = np.arange(len(f.crit))
    defect = float(np.max(np.abs(f(f.crit) - (-1.0) ** (j + 1))))
    if defect > CRIT_TOL:
        failures.append(f"critical value defect {defect:.3g} > {CRIT_TOL}")
    if np.any(np.diff(f.crit) <= 0):
        failures.append("critical points not increasing")

    # sign of f' on each branch, away from interior critical points
    slope = np.inf
    for b in range(len(f.crit) - 1):
        a, c = f.crit[b], f.crit[b + 1]
        pad_a = 0.0 if b == 0 else 1e-3 * (c - a)
        pad_c = 0.0 if b == len(f.crit) - 2 else 1e-3 * (c - a)
        xs = np.linspace(a + pad_a, c - pad_c, SCAN_POINTS // max(f.m, 1) + 2)
        sgn = (-1.0) ** (b + 2)
        slope = min(slope, float(np.min(sgn * f.deriv(xs))))
    if slope <= 0:
        failures.append(f"branch monotonicity lost (min signed slope {slope:.3g})")

    second = float(np.min(np.abs(f.crit_second_derivs))) if f.m > 1 else np.inf
    if second == 0:
        failures.append("f'' vanishes at a critical point")
    left = f.endpoint_derivs[0] - 1.0
    right = abs(f.endpoint_derivs[1]) - 1.0
    if left <= 0:
        failures.append(f"f'(-1) = {f.endpoint_derivs[0]:.6g} is not > 1")
    if right <= 0:
        failures.append(f"|f'(1)| = {abs(f.endpoint_derivs[1]):.6g} is not > 1")
    if f.m >= 2 and f.m % 2 == 1 and f.endpoint_derivs[1] <= 0:
        failures.append("odd m requires f'(1) > 0")
    return ValidationReport(defect, slope, second, left, right, failures)


def branch_inverse(f: AnalyticMap, j: int, x):
    """Solve f(y) = x for y in [c_{j-1}, c_j]."""
    if not 1 <= j <= f.m:
        raise ValueError(f"branch index {j} outside 1..{f.m}")
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    if np.any(np.abs(x) > 1):
        raise ValueError("x must lie in [-1, 1]")
    a_end, b_end = f.crit[j - 1], f.crit[j]
    width = b_end - a_end
    va = (-1.0) ** j
    # anchor at whichever branch end has the nearer critical value, so the
    # solve works with the small offset x - f(anchor)
    near_a = np.abs(x - va) <= np.abs(x + va)
    y = np.empty_like(x)
    for anchor, value, sel, lo, hi in ((a_end, va, near_a, 0.0, width),
                                       (b_end, -va, ~near_a, -width, 0.0)):
        n = int(sel.sum())
        if n == 0:
            continue
        a = f.taylor_at(anchor, drop_linear=-1.0 < anchor < 1.0)
        t, _, ok = _kernels.solve_monotone(
            np.tile(a, (n, 1)), x[sel] - value, np.full(n, lo), np.full(n, hi))
        if not np.all(ok):
            raise NoConvergence("branch inverse did not converge")
        y[sel] = anchor + t
    return y[0] if scalar else y

"""The coordinate change omega / varpi and the inverse branches psi_j of
g = varpi o f o omega.

Near the endpoints everything is evaluated in complementary variables
(distances 1 - |y|), because both omega and the branch inverses have
square-root behaviour there and naive evaluation loses half the digits.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels
from .errors import NoConvergence, SingularAtEndpoint
from .maps import AnalyticMap, branch_inverse

HALF_PI = 0.5 * np.pi
_QUINTIC_GAP = np.array([0.0, 1.25, 0.0, -0.3125, 0.0625])  # 1 - omega(1 - xi)


@dataclass(frozen=True)
class Conjugacy:
    variant: str = "sine"

    def __post_init__(self):
        if self.variant not in ("sine", "quintic"):
            raise ValueError(f"unknown conjugacy variant {self.variant!r}")

    @property
    def C(self) -> float:
        return np.pi**2 / 8 if self.variant == "sine" else 1.25

    @property
    def D(self) -> float:
        return np.pi**4 / 384 if self.variant == "sine" else 0.3125

    # plain evaluators (complex-capable for omega, omega') -------------------
    def omega(self, y):
        y = np.asarray(y)
        if self.variant == "sine":
            return np.sin(HALF_PI * y)
        return (25 * y - 10 * y**3 + y**5) / 16

    def omega_prime(self, y):
        y = np.asarray(y)
        if self.variant == "sine":
            return HALF_PI * np.cos(HALF_PI * y)
        return 5 * (y * y - 1) * (y * y - 5) / 16

    def varpi(self, x):
        x = np.asarray(x, dtype=float)
        if self.variant == "sine":
            return np.arcsin(x) / HALF_PI
        return np.sign(x) * (1 - self.gap_inverse(1 - np.abs(x)))

    def varpi_prime(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(np.abs(x) >= 1):
            raise SingularAtEndpoint("varpi' is singular at +-1")
        if self.variant == "sine":
            return 1 / (HALF_PI * np.sqrt((1 - x) * (1 + x)))
        return 1 / self.omega_prime(self.varpi(x))

    # complementary forms ----------------------------------------------------
    def gap(self, xi):
        """1 - omega(1 - xi) for xi in [0, 2]."""
        xi = np.asarray(xi, dtype=float)
        if self.variant == "sine":
            return 2 * np.sin(0.25 * np.pi * xi) ** 2
        return xi * xi * (1.25 - 0.3125 * xi * xi + 0.0625 * xi**3)

    def omega_prime_gap(self, xi):
        """omega'(1 - xi) = omega'(-1 + xi)."""
        xi = np.asarray(xi, dtype=float)
        if self.variant == "sine":
            return HALF_PI * np.sin(HALF_PI * xi)
        return 5 * xi * (2 - xi) * (5 - (1 - xi) ** 2) / 16

    def gap_inverse(self, zeta):
        """xi in [0, 2] with 1 - omega(1 - xi) = zeta."""
        zeta = np.clip(np.asarray(zeta, dtype=float), 0.0, 2.0)
        if self.variant == "sine":
            return np.arcsin(np.sqrt(0.5 * zeta)) / (0.25 * np.pi)
        flat = np.atleast_1d(zeta).ravel()
        n = flat.size
        xi, _, ok = _kernels.solve_monotone(
            np.tile(_QUINTIC_GAP, (n, 1)), flat, np.zeros(n), np.full(n, 2.0))
        if not np.all(ok):
            raise NoConvergence("quintic gap inverse")
        return xi.reshape(np.shape(zeta))

    def omega_diff(self, y, d):
        """omega(y) - omega(d) without cancellation."""
        y = np.asarray(y, dtype=float)
        d = np.asarray(d, dtype=float)
        if self.variant == "sine":
            return 2 * np.cos(0.25 * np.pi * (y + d)) * np.sin(0.25 * np.pi * (y - d))
        q = (d**4 + d**3 * y + d**2 * y**2 - 10 * d**2 + d * y**3
             - 10 * d * y + y**4 - 10 * y**2 + 25)
        return (y - d) * q / 16


def conjugacy_eval(conj: Conjugacy, which: str, s):
    fn = {"omega": conj.omega, "omega_prime": conj.omega_prime,
          "varpi": conj.varpi, "varpi_prime": conj.varpi_prime}[which]
    out = fn(s)
    return out.item() if np.ndim(out) == 0 else out


class BranchValues(NamedTuple):
    y: np.ndarray      # psi_j(s), shape (m, P)
    yp1: np.ndarray    # 1 + psi_j(s)
    om1: np.ndarray    # 1 - psi_j(s)
    dpsi: np.ndarray   # psi_j'(s)


class BranchSystem:
    """Inverse branches psi_j of g = varpi o f o omega."""

    def __init__(self, f: AnalyticMap, conj: Conjugacy | None = None):
        self.map = f
        self.conj = conj or Conjugacy()
        self.m = f.m
        self.d = self.conj.varpi(f.crit)
        self.d[0], self.d[-1] = -1.0, 1.0
        self.signs = f.branch_signs
        deg = len(f.coeffs) - 1
        m = f.m
        # per critical point: Taylor coefficients of f(c + t) - f(c)
        self._taylor = np.zeros((m + 1, max(deg, 1)))
        for i, c in enumerate(f.crit):
            a = f.taylor_at(c, drop_linear=0 < i < m)
            self._taylor[i, :len(a)] = a
        self.crit_values = (-1.0) ** (np.arange(m + 1) + 1)
        # limiting |psi'| at each critical point (closed forms)
        C = self.conj.C
        lim = np.empty(m + 1)
        lim[0] = 1 / np.sqrt(abs(f.endpoint_derivs[0]))
        lim[-1] = 1 / np.sqrt(abs(f.endpoint_derivs[1]))
        if m > 1:
            lim[1:-1] = (np.sqrt(2 * C / np.abs(f.crit_second_derivs))
                         / self.conj.omega_prime(self.d[1:-1]))
        self.limit_slopes = lim

    @property
    def mu_minus(self):
        return self.map.mu_minus

    @property
    def mu_plus(self):
        return self.map.mu_plus

    def limit_slope(self, j: int, end: int) -> float:
        """Signed limit of psi_j' at s = end (+-1), from the closed forms."""
        s_left = self.crit_values[j - 1]
        idx = j - 1 if s_left == end else j
        return float(self.signs[j - 1] * self.limit_slopes[idx])

    # ------------------------------------------------------------------
    def evaluate(self, s, gap=None) -> BranchValues:
        """psi_j(s) and psi_j'(s) for every branch.

        ``gap`` may carry 1 - |s| computed without cancellation.
        """
        s = np.atleast_1d(np.asarray(s, dtype=float))
        xi = 1 - np.abs(s) if gap is None else np.asarray(gap, dtype=float)
        conj, f = self.conj, self.map
        side = np.where(s > 0, 1.0, -1.0)
        eta = conj.gap(xi)
        target = -side * eta
        wps = conj.omega_prime_gap(xi)
        P = s.size
        out = [np.empty((self.m, P)) for _ in range(4)]
        for j in range(1, self.m + 1):
            left = self.crit_values[j - 1] == side
            idx = np.where(left, j - 1, j)
            width = f.crit[j] - f.crit[j - 1]
            lo = np.where(left, 0.0, -width)
            hi = np.where(left, width, 0.0)
            t, fp, ok = _kernels.solve_monotone(self._taylor[idx], target, lo, hi)
            if not np.all(ok):
                raise NoConvergence(f"psi_{j} did not converge")
            anchor = f.crit[idx]
            y = np.empty(P)
            yp1 = np.empty(P)
            om1 = np.empty(P)
            wpy = np.empty(P)
            at_end = (idx == 0) | (idx == self.m)
            if at_end.any():
                xy = conj.gap_inverse(np.abs(t[at_end]))
                b = anchor[at_end]
                y[at_end] = b * (1 - xy)
                yp1[at_end] = np.where(b < 0, xy, 2 - xy)
                om1[at_end] = np.where(b < 0, 2 - xy, xy)
                wpy[at_end] = conj.omega_prime_gap(xy)
            inner = ~at_end
            if inner.any():
                yi = conj.varpi(anchor[inner] + t[inner])
                y[inner] = yi
                yp1[inner] = 1 + yi
                om1[inner] = 1 - yi
                wpy[inner] = conj.omega_prime(yi)
            with np.errstate(divide="ignore", invalid="ignore"):
                dpsi = wps / (fp * wpy)
            lim = xi == 0
            if lim.any():
                dpsi[lim] = self.signs[j - 1] * self.limit_slopes[idx[lim]]
            out[0][j - 1], out[1][j - 1], out[2][j - 1], out[3][j - 1] = y, yp1, om1, dpsi
        return BranchValues(*out)

    def psi(self, j: int, s):
        v = self.evaluate(s)
        return v.y[j - 1] if np.ndim(s) else v.y[j - 1][0]

    def dpsi(self, j: int, s):
        v = self.evaluate(s)
        return v.dpsi[j - 1] if np.ndim(s) else v.dpsi[j - 1][0]

    def psi_naive(self, j: int, s):
        """Reference composition varpi(f_j^{-1}(omega(s))), no endpoint care."""
        return self.conj.varpi(branch_inverse(self.map, j, self.conj.omega(s)))

    # forward map -------------------------------------------------------------
    def forward(self, y, gap=None):
        """g(y), 1 - |g(y)| and g'(y) evaluated in complementary variables."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        ygap = 1 - np.abs(y) if gap is None else np.asarray(gap, dtype=float)
        conj, f, m = self.conj, self.map, self.m
        j = np.clip(np.searchsorted(self.d, y, side="right"), 1, m)
        near_left = np.abs(y - self.d[j - 1]) <= np.abs(self.d[j] - y)
        idx = np.where(near_left, j - 1, j)
        at_end = (idx == 0) | (idx == m)
        # e = omega(y) - c_anchor
        e = np.where(at_end, 0.0, conj.omega_diff(y, self.d[idx]))
        if at_end.any():
            b = np.where(idx == 0, -1.0, 1.0)
            e = np.where(at_end, -b * conj.gap(ygap), e)
        a = self._taylor[idx]
        delta = np.zeros_like(e)
        dfx = np.zeros_like(e)
        for k in range(a.shape[1] - 1, -1, -1):
            dfx = dfx * e + (k + 1) * a[:, k]
            delta = delta * e + a[:, k]
        delta = delta * e
        va = self.crit_values[idx]
        big = np.abs(delta) > 1
        ugap = np.where(big, 2 - np.abs(delta), np.abs(delta))
        uside = np.where(big, -va, va)
        xo = conj.gap_inverse(ugap)
        g = uside * (1 - xo)
        wpy = np.where(at_end, conj.omega_prime_gap(ygap), conj.omega_prime(y))
        with np.errstate(divide="ignore", invalid="ignore"):
            dg = dfx * wpy / conj.omega_prime_gap(xo)
        hit = xo == 0
        if hit.any():
            dg[hit] = self.signs[j[hit] - 1] / self.limit_slopes[idx[hit]]
        return g, xo, dg


def build_branch_system(f: AnalyticMap, conj: Conjugacy | None = None) -> BranchSystem:
    return BranchSystem(f, conj)


def psi_prime_safe(bs: BranchSystem, j: int, s):
    return bs.dpsi(j, s)


# --------------------------------------------------------------------------
# Assumption A diagnostic
# --------------------------------------------------------------------------

@dataclass
class DomainReport:
    r: float
    samples: int
    max_image_param: float
    margin: float
    divergent: int
    passed: bool

    def as_dict(self):
        return dict(r=self.r, samples=self.samples,
                    max_image_param=self.max_image_param, margin=self.margin,
                    divergent=self.divergent, passed=self.passed)


def ellipse_param(w):
    """Bernstein-ellipse parameter rho >= 1 of the complex point(s) w."""
    w = np.asarray(w, dtype=complex)
    return np.abs(w + np.sqrt(w - 1) * np.sqrt(w + 1))


def check_assumption_a(bs: BranchSystem, r: float = 1.5, M: int = 256,
                       steps: int = 32) -> DomainReport:
    """Sample psi_j on the boundary of the Bernstein ellipse E_r.

    Each psi_j(z) is reached by Newton continuation along the segment from
    the nearest real point, solving f(omega(y)) = omega(s) in the entire
    functions f and omega.
    """
    if r <= 1 or M < 64:
        raise ValueError("need r > 1 and M >= 64")
    conj, f = bs.conj, bs.map
    fp = f.poly.deriv()
    th = 2 * np.pi * (np.arange(M) + 0.5) / M
    z = 0.5 * (r * np.exp(1j * th) + np.exp(-1j * th) / r)
    s0 = np.clip(z.real, -1.0, 1.0)
    start = bs.evaluate(s0)
    worst = 1.0
    divergent = 0
    for j in range(bs.m):
        y = start.y[j].astype(complex)
        dy = start.dpsi[j].astype(complex)
        s_prev = s0.astype(complex)
        bad = np.zeros(M, dtype=bool)
        for k in range(1, steps + 1):
            s = s0 + (z - s0) * k / steps
            y = y + dy * (s - s_prev)
            target = conj.omega(s)
            for _ in range(60):
                x = conj.omega(y)
                F = f.poly(x) - target
                J = fp(x) * conj.omega_prime(y)
                step = F / J
                y = y - step
                if np.all(np.abs(step) < 1e-14 * (1 + np.abs(y))):
                    break
            bad |= ~np.isfinite(y) | (np.abs(f.poly(conj.omega(y)) - target) > 1e-9)
            dy = conj.omega_prime(s) / (fp(conj.omega(y)) * conj.omega_prime(y))
            s_prev = s
        divergent += int(bad.sum())
        if (~bad).any():
            worst = max(worst, float(np.max(ellipse_param(y[~bad]))))
    margin = r - worst
    return DomainReport(r=r, samples=M, max_image_param=worst, margin=margin,
                        divergent=divergent, passed=bool(margin > 0 and divergent == 0))

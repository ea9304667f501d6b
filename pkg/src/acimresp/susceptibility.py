"""Susceptibility series Psi(lambda) and its explicit meromorphic
continuation by subtraction of the endpoint poles.

Y(y) = sigma0(y) X(omega y) / omega'(y) has simple poles at +-1.  The
functions Phi_- (and Phi_+ for odd m) are eigenfunctions of L0 carrying
those poles; what remains, Y0, vanishes at +-1, and on such functions the
series can be rewritten with L acting on derivatives, where the spectral
gap makes it converge at lambda = 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (H0DefectTooLarge, IllConditioned, NoDecay, PoleHit,
                     RouteDisagreement)
from .maps import ObservablePoly, PerturbationField
from .spectral import GridFunction, solve
from .transfer import SpectrumData, TransferMatrices

H0_TOL = 1e-6
EIGEN_TOL = 1e-6
SERIES_MAX_TERMS = 500
RAW_MAX_N = 40


@dataclass(frozen=True)
class MeromorphicFn:
    """neg / (z + 1) + pos / (z - 1) + reg(z)."""
    neg: float
    pos: float
    reg: GridFunction

    @classmethod
    def from_values(cls, grid, values, neg, pos):
        reg = np.asarray(values) - neg / grid.xp1 + pos / grid.om1
        return cls(float(neg), float(pos), GridFunction(grid, reg))

    @property
    def grid(self):
        return self.reg.grid

    def node_values(self):
        g = self.grid
        return self.neg / g.xp1 - self.pos / g.om1 + self.reg.values

    def __call__(self, z):
        return self.neg / (z + 1) + self.pos / (z - 1) + self.reg(z)

    def __add__(self, other):
        if isinstance(other, GridFunction):
            return MeromorphicFn(self.neg, self.pos, self.reg + other)
        return MeromorphicFn(self.neg + other.neg, self.pos + other.pos,
                             self.reg + other.reg)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, c):
        return MeromorphicFn(c * self.neg, c * self.pos, self.reg * c)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (1.0 / c)

    def pair(self, Bp_vals) -> float:
        """int self(s) B'(s) ds; B' vanishes at +-1, so the integrand is finite."""
        return float(self.grid.quad_weights @ (self.node_values() * Bp_vals))


def apply_L0_mero(tm: TransferMatrices, F: MeromorphicFn) -> MeromorphicFn:
    """L0 applied to a function with simple poles at +-1.

    Pole parts are evaluated exactly at psi_j(x_i); the new pole
    coefficients come from the branches that reach +-1.
    """
    bs = tm.bs
    ev = tm.branch_values
    vals = tm.L0 @ F.reg.values
    for j in range(bs.m):
        vals = vals + bs.signs[j] * (F.neg / ev.yp1[j] - F.pos / ev.om1[j])
    mum, mup = bs.mu_minus, bs.mu_plus
    if bs.m % 2:
        neg, pos = mum * F.neg, mup * F.pos
    else:
        neg, pos = mum * F.neg + mup * F.pos, 0.0
    return MeromorphicFn.from_values(tm.grid, vals, neg, pos)


def _pole(grid, side):
    """p_-(z) = 1/(z+1) - (z+1)/4  or  p_+(z) = 1/(z-1) - (z-1)/4."""
    x = grid.nodes
    if side < 0:
        return MeromorphicFn(1.0, 0.0, GridFunction(grid, -grid.xp1 / 4))
    return MeromorphicFn(0.0, 1.0, GridFunction(grid, grid.om1 / 4 + 0 * x))


def _endpoint_defect(gf: GridFunction) -> float:
    return max(abs(gf.at_endpoint(-1)), abs(gf.at_endpoint(1)))


@dataclass
class PhiConstruction:
    """Phi = p - w with (L0 - mu) Phi = 0, plus the intermediates."""
    mu: float
    p: MeromorphicFn
    u: GridFunction
    v: GridFunction
    w: GridFunction
    phi: MeromorphicFn
    u_endpoint_defect: float
    v_mass: float
    w_right: float
    eigen_residual: float


def _construct_phi(tm: TransferMatrices, side: int) -> PhiConstruction:
    grid = tm.grid
    mu = tm.bs.mu_minus if side < 0 else tm.bs.mu_plus
    p = _pole(grid, side)
    Lp = apply_L0_mero(tm, p)
    U = Lp - mu * p
    if U.neg != 0 or U.pos != 0:
        raise H0DefectTooLarge(f"pole parts of u did not cancel ({U.neg}, {U.pos})")
    u = U.reg
    ud = _endpoint_defect(u)
    if ud > H0_TOL:
        raise H0DefectTooLarge(f"u(+-1) = {ud:.3g}")
    N = grid.N
    v = solve(tm.L - mu * np.eye(N), u.derivative())
    vm = abs(v.integral())
    if vm > 1e-8:
        raise H0DefectTooLarge(f"int v = {vm:.3g}")
    w = v.antiderivative()
    wr = abs(w.at_endpoint(1))
    if wr > H0_TOL:
        raise H0DefectTooLarge(f"w(1) = {wr:.3g}")
    phi = p - MeromorphicFn(0.0, 0.0, w)
    resid = np.max(np.abs(u.values - (tm.L0 @ w.values - mu * w.values)))
    return PhiConstruction(mu, p, u, v, w, phi, ud, vm, wr, float(resid))


def build_phi_minus(tm: TransferMatrices) -> PhiConstruction:
    return _construct_phi(tm, -1)


@dataclass
class EvenPlus:
    """Even m: Phi_+ = p_+ and L0(Phi_+/mu_+ - Phi_-/mu_-) = Ytilde in H0."""
    mu: float
    phi: MeromorphicFn
    u0: GridFunction
    Ytilde: GridFunction
    Ytilde_endpoint_defect: float
    combination_residual: float


def build_phi_plus(tm: TransferMatrices, minus: PhiConstruction | None = None):
    if tm.m % 2:
        return _construct_phi(tm, +1)
    grid = tm.grid
    minus = minus or build_phi_minus(tm)
    mup, mum = tm.bs.mu_plus, tm.bs.mu_minus
    pp, pm = _pole(grid, +1), _pole(grid, -1)
    U0 = apply_L0_mero(tm, pp) - mup * pm
    if U0.neg != 0 or U0.pos != 0:
        raise H0DefectTooLarge(f"pole parts of u0 did not cancel ({U0.neg}, {U0.pos})")
    u0 = U0.reg
    Yt = u0 / mup + minus.w
    yd = _endpoint_defect(Yt)
    if yd > H0_TOL:
        raise H0DefectTooLarge(f"Ytilde(+-1) = {yd:.3g}")
    combo = apply_L0_mero(tm, pp / mup - minus.phi / mum)
    resid = max(abs(combo.neg), abs(combo.pos),
                float(np.max(np.abs(combo.reg.values - Yt.values))))
    return EvenPlus(mup, pp, u0, Yt, yd, resid)


# --------------------------------------------------------------------------

def build_Y(sd: SpectrumData, X: PerturbationField, conj) -> MeromorphicFn:
    """Y = sigma0 (X o omega) / omega' with its endpoint pole coefficients."""
    sigma = sd.sigma0
    grid = sigma.grid
    wp = conj.omega_prime_gap(grid.gap)
    vals = sigma.values * X(conj.omega(grid.nodes)) / wp
    twoC = 2 * conj.C
    neg = sigma.at_endpoint(-1) * X(-1.0) / twoC
    pos = -sigma.at_endpoint(1) * X(1.0) / twoC
    if X(-1.0) == 0:
        neg = 0.0
    if X(1.0) == 0:
        pos = 0.0
    return MeromorphicFn.from_values(grid, vals, neg, pos)


@dataclass
class Decomposition:
    odd: bool
    c_minus: float          # odd: c_-; even: c_-'
    c_plus: float           # odd: c_+; even: c~
    Y0: GridFunction
    reconstruction_defect: float
    Y0_endpoint_defect: float
    Y0_mass: float

    @property
    def c_tilde(self):
        return None if self.odd else self.c_plus


def decompose_Y(Y: MeromorphicFn, phi_minus: MeromorphicFn, phi_plus: MeromorphicFn,
                odd: bool, mu_minus: float, mu_plus: float) -> Decomposition:
    if odd:
        cm, cp = Y.neg, Y.pos
        poles = cm * phi_minus + cp * phi_plus
    else:
        cp = mu_plus * Y.pos                       # c~
        cm = Y.neg + cp / mu_minus                 # c_-'
        poles = cm * phi_minus + cp * (phi_plus / mu_plus - phi_minus / mu_minus)
    rest = Y - poles
    Y0 = rest.reg
    recon = np.max(np.abs(poles.node_values() + Y0.values - Y.node_values()))
    scale = max(1.0, np.max(np.abs(Y.node_values())))
    yd = _endpoint_defect(Y0)
    mass = abs(Y0.derivative().integral())
    if yd > H0_TOL:
        raise H0DefectTooLarge(f"Y0(+-1) = {yd:.3g}")
    if mass > 1e-8:
        raise H0DefectTooLarge(f"int Y0' = {mass:.3g}")
    return Decomposition(odd, float(cm), float(cp), Y0, float(recon / scale), yd, mass)


def series_H0(tm: TransferMatrices, w: GridFunction, B_vals, lam, gap=None):
    """-sum_n lam^n int (L^n w')(s) B(s) ds for w vanishing at +-1."""
    sd = tm.spectrum()
    gap = sd.gap if gap is None else gap
    if abs(lam) * gap >= 1 - 1e-3:
        raise NoDecay(f"|lambda| = {abs(lam):.6g} outside the radius 1/|mu_1| = {1 / gap:.6g}")
    if _endpoint_defect(w) > H0_TOL:
        raise H0DefectTooLarge("series_H0 needs w(+-1) = 0")
    grid = tm.grid
    qw = grid.quad_weights
    sigma = sd.sigma0.values
    v = w.derivative().values.astype(complex if np.iscomplexobj(lam) else float)
    v = v - (qw @ v) * sigma
    row = qw * np.asarray(B_vals)
    rnorm = np.sum(np.abs(row))
    total = 0.0
    lam_n = 1.0
    for n in range(SERIES_MAX_TERMS):
        total += -lam_n * (row @ v)
        v = tm.L @ v
        lam_n = lam_n * lam
        if n % 50 == 49:
            v = v - (qw @ v) * sigma
        bound = abs(lam_n) * np.max(np.abs(v)) * rnorm
        if bound < 1e-15 * (1 + abs(total)):
            return total
    raise NoDecay(f"series did not converge in {SERIES_MAX_TERMS} terms")


def observable_values(grid, A: ObservablePoly, conj):
    """Node values of B = A o omega and of B' = A'(omega) omega'."""
    x = grid.nodes
    B = A(conj.omega(x))
    Bp = A.deriv(conj.omega(x)) * conj.omega_prime_gap(grid.gap)
    return B, Bp


class Response:
    """Everything needed to evaluate kappa_n and Psi(lambda) for one (f, X, A)."""

    def __init__(self, tm: TransferMatrices, X: PerturbationField, A: ObservablePoly,
                 sd: SpectrumData | None = None):
        self.tm = tm
        self.sd = sd or tm.spectrum()
        self.X, self.A = X, A
        bs = tm.bs
        self.odd = bool(tm.m % 2)
        self.mu_minus, self.mu_plus = bs.mu_minus, bs.mu_plus
        self.B, self.Bp = observable_values(tm.grid, A, bs.conj)
        self.Y = build_Y(self.sd, X, bs.conj)
        self.minus = build_phi_minus(tm)
        self.plus = build_phi_plus(tm, self.minus)
        self.dec = decompose_Y(self.Y, self.minus.phi, self.plus.phi, self.odd,
                               self.mu_minus, self.mu_plus)
        self.I_minus = self.minus.phi.pair(self.Bp)
        self.I_plus = self.plus.phi.pair(self.Bp)
        if self.odd:
            self.I_tilde = None
            self.Ytilde = None
        else:
            combo = self.plus.phi / self.mu_plus - self.minus.phi / self.mu_minus
            self.I_tilde = combo.pair(self.Bp)
            self.Ytilde = self.plus.Ytilde

    @property
    def eigen_residuals(self):
        out = {"phi_minus": self.minus.eigen_residual}
        if self.odd:
            out["phi_plus"] = self.plus.eigen_residual
        else:
            out["combination"] = self.plus.combination_residual
        return out

    def _pair_reg(self, gf_vals):
        return float(self.tm.grid.quad_weights @ (gf_vals * self.Bp))

    # kappa ---------------------------------------------------------------
    def kappas(self, K: int, route: str = "decomposition") -> np.ndarray:
        """kappa_0 .. kappa_K."""
        if route == "raw":
            if K > RAW_MAX_N:
                raise ValueError(f"raw route limited to n <= {RAW_MAX_N}")
            out = np.empty(K + 1)
            F = self.Y
            for n in range(K + 1):
                out[n] = F.pair(self.Bp)
                F = apply_L0_mero(self.tm, F)
            return out
        if route != "decomposition":
            raise ValueError(f"unknown route {route!r}")
        L0 = self.tm.L0
        dec = self.dec
        out = np.empty(K + 1)
        y0 = dec.Y0.values
        yt = None if self.odd else self.Ytilde.values
        for n in range(K + 1):
            k = dec.c_minus * self.mu_minus**n * self.I_minus + self._pair_reg(y0)
            if self.odd:
                k += dec.c_plus * self.mu_plus**n * self.I_plus
            elif n == 0:
                k += dec.c_plus * self.I_tilde
            else:
                k += dec.c_plus * self._pair_reg(yt)
                yt = L0 @ yt
            y0 = L0 @ y0
            out[n] = k
        return out

    def kappa(self, n: int, route: str = "decomposition") -> float:
        return float(self.kappas(n, route)[n])

    def check_routes(self, nmax: int = 12, rtol: float = 1e-7):
        a = self.kappas(nmax, "decomposition")
        b = self.kappas(nmax, "raw")
        for n in range(nmax + 1):
            if abs(a[n] - b[n]) > rtol * (1 + abs(a[n])):
                raise RouteDisagreement(n, a[n], b[n])
        return a, b

    # Psi -----------------------------------------------------------------
    def poles(self):
        """(location, coefficient) of the explicit endpoint poles."""
        out = [(1 / self.mu_minus, self.dec.c_minus * self.I_minus)]
        if self.odd:
            out.append((1 / self.mu_plus, self.dec.c_plus * self.I_plus))
        return out

    def psi(self, lam):
        dec = self.dec
        total = 0.0
        for mu, c, I in ((self.mu_minus, dec.c_minus, self.I_minus),
                         (self.mu_plus, dec.c_plus, self.I_plus)):
            if c == 0:
                continue
            if abs(1 - lam * mu) < 1e-10:
                raise PoleHit(lam, 1 / mu)
            total += c * I / (1 - lam * mu)
            if not self.odd:
                break
        if not self.odd and dec.c_plus != 0:
            total += dec.c_plus * self.I_tilde
            total += dec.c_plus * lam * series_H0(self.tm, self.Ytilde, self.B, lam)
        total += series_H0(self.tm, dec.Y0, self.B, lam)
        return total

    def psi_at_one(self) -> float:
        val = self.psi(1.0)
        if abs(np.imag(val)) > 1e-9:
            raise ValueError(f"Psi(1) has imaginary part {np.imag(val):.3g}")
        return float(np.real(val))

    def raw_partial_sum(self, lam, K: int = RAW_MAX_N):
        k = self.kappas(K, "raw")
        return np.polyval(k[::-1], lam)


def psi(resp: Response, lam):
    return resp.psi(lam)


def psi_at_one(resp: Response) -> float:
    return resp.psi_at_one()


# --------------------------------------------------------------------------
# Pade
# --------------------------------------------------------------------------

@dataclass
class PadeApproximant:
    L: int
    M: int
    num: np.ndarray                  # ascending powers of lambda
    den: np.ndarray
    poles: np.ndarray = field(default_factory=lambda: np.empty(0))
    residues: np.ndarray = field(default_factory=lambda: np.empty(0))
    condition: float = 1.0

    def __call__(self, lam):
        return np.polyval(self.num[::-1], lam) / np.polyval(self.den[::-1], lam)


def pade_poles(series, L: int, M: int, max_condition: float = 1e12) -> PadeApproximant:
    """[L/M] Pade approximant from Taylor coefficients c_0 .. c_{L+M}."""
    c = np.asarray(series, dtype=float)
    if L + M + 1 > len(c):
        raise ValueError("not enough coefficients for this Pade type")
    c = c[:L + M + 1]
    if M == 0:
        return PadeApproximant(L, M, c.copy(), np.ones(1))

    def coef(k):
        return c[k] if k >= 0 else 0.0

    T = np.array([[coef(L + i - k) for k in range(1, M + 1)] for i in range(1, M + 1)])
    rhs = -np.array([coef(L + i) for i in range(1, M + 1)])
    scale = np.max(np.abs(T), axis=0)
    scale[scale == 0] = 1.0
    Ts = T / scale
    cond = float(np.linalg.cond(Ts))
    if not np.isfinite(cond) or cond > max_condition:
        raise IllConditioned(f"Pade system condition {cond:.3g}")
    q = np.concatenate(([1.0], np.linalg.solve(Ts, rhs) / scale))
    p = np.array([sum(q[k] * c[j - k] for k in range(0, min(j, M) + 1)) for j in range(L + 1)])
    roots = np.roots(q[::-1])
    order = np.argsort(np.abs(roots))
    roots = roots[order]
    dq = np.polynomial.polynomial.polyder(q)
    res = np.polyval(p[::-1], roots) / np.polyval(dq[::-1], roots)
    return PadeApproximant(L, M, p, q, roots, res, cond)

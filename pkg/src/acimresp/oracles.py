"""Independent checks: finite differences of t -> rho_t(A), the defining
integral for kappa_n by brute-force quadrature, and closed forms for the
Chebyshev fixtures.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conjugacy import BranchSystem, Conjugacy
from .errors import EndpointNonvanishing, UnsupportedFixture
from .maps import (AnalyticMap, ObservablePoly, PerturbationField,
                   chebyshev_markov_map, perturbed_map)
from .spectral import ChebGrid
from .transfer import LemmaReport, SpectrumData, acim_density, assemble

GAUSS_ORDER = 40


@dataclass
class ResponseEstimate:
    value: float                 # central difference at h
    h: float
    richardson_value: float      # (4 D(h/2) - D(h)) / 3
    discrepancy: float           # |value - richardson_value|
    value_half: float
    value_quarter: float
    halving_ratio: float         # |D(h) - D(h/2)| / |D(h/2) - D(h/4)|

    def tolerance(self) -> float:
        return max(1e-6, 10 * self.h**2)


def observable_mean(f: AnalyticMap, A: ObservablePoly, N: int = 48,
                    conj: Conjugacy | None = None) -> float:
    """rho(A) = int sigma0(y) A(omega y) dy."""
    tm = assemble(BranchSystem(f, conj), ChebGrid(N))
    sigma = tm.spectrum().sigma0
    grid = tm.grid
    return float(grid.quad_weights @ (sigma.values * A(tm.bs.conj.omega(grid.nodes))))


def finite_difference_response(f: AnalyticMap, X: PerturbationField, A: ObservablePoly,
                               h: float = 1e-3, N: int = 48,
                               conj: Conjugacy | None = None) -> ResponseEstimate:
    if not X.vanishes_at_endpoints:
        raise EndpointNonvanishing("finite-difference oracle needs X(+-1) = 0")
    if not 1e-5 <= h <= 1e-2:
        raise ValueError(f"h = {h} outside [1e-5, 1e-2]")
    if not np.any(X.coeffs):
        return ResponseEstimate(0.0, h, 0.0, 0.0, 0.0, 0.0, float("nan"))

    def rho(t):
        return observable_mean(perturbed_map(f, X, t), A, N, conj)

    D = []
    for k in (h, h / 2, h / 4):
        D.append((rho(k) - rho(-k)) / (2 * k))
    rich = (4 * D[1] - D[0]) / 3
    den = abs(D[1] - D[2])
    ratio = abs(D[0] - D[1]) / den if den > 0 else float("inf")
    return ResponseEstimate(D[0], h, rich, abs(D[0] - rich), D[1], D[2], ratio)


def monotone_pieces(bs: BranchSystem, n: int) -> np.ndarray:
    """Sorted breakpoints of g^n: the laps are the intervals between them."""
    pts = np.array([-1.0, 1.0])
    for _ in range(n):
        ys = bs.evaluate(pts).y
        pts = np.unique(np.concatenate([ys.ravel(), [-1.0, 1.0]]))
    return pts


def direct_kappa(f: AnalyticMap, conj: Conjugacy | None, sd: SpectrumData,
                 X: PerturbationField, A: ObservablePoly, n: int,
                 order: int = GAUSS_ORDER) -> float:
    """int sigma0 (X o omega)/omega' * d/dy[A(omega(g^n y))] dy, laps of g^n
    integrated separately by Gauss-Legendre."""
    if not 0 <= n <= 8:
        raise ValueError("direct_kappa supports 0 <= n <= 8")
    conj = conj or Conjugacy()
    if not np.any(X.coeffs):
        return 0.0
    bs = BranchSystem(f, conj)
    brk = monotone_pieces(bs, n)
    t, wt = np.polynomial.legendre.leggauss(order)
    a, b = brk[:-1, None], brk[1:, None]
    half = (b - a) / 2
    y = (a + half * (t + 1)).ravel()
    w = (half * wt).ravel()
    # distances to the nearer endpoint without cancellation on the end laps
    gap = 1 - np.abs(y)
    first = np.zeros_like(a, dtype=bool)
    first[0] = True
    last = np.zeros_like(a, dtype=bool)
    last[-1] = True
    gl = (half * (t + 1)).ravel()
    gr = (half * (1 - t)).ravel()
    gap = np.where(np.repeat(first, order) & (y < 0), gl, gap)
    gap = np.where(np.repeat(last, order) & (y > 0), gr, gap)
    Y = sd.sigma0(y) * X(conj.omega(y)) / conj.omega_prime_gap(gap)
    z, zgap, dz = y, gap, np.ones_like(y)
    for _ in range(n):
        z, zgap, dg = bs.forward(z, zgap)
        dz = dz * dg
    Bp = A.deriv(conj.omega(z)) * conj.omega_prime_gap(zgap)
    return float(w @ (Y * Bp * dz))


def chebyshev_closed_form_checks(m: int, N: int = 48) -> LemmaReport:
    """Known truths for f = (-1)^(m+1) T_m under the sine conjugacy."""
    if m not in (2, 3):
        raise UnsupportedFixture(f"no closed-form table for m = {m}")
    f = chebyshev_markov_map(m)
    conj = Conjugacy("sine")
    tm = assemble(BranchSystem(f, conj), ChebGrid(N))
    sd = tm.spectrum()
    rep = LemmaReport()
    rep.add("sigma0_half", float(np.max(np.abs(sd.sigma0.values - 0.5))), 1e-10)
    rho0 = float(np.atleast_1d(acim_density(sd, conj, 0.0))[0])
    rep.add("rho_at_zero", abs(rho0 - 1 / np.pi), 1e-9)
    rep.add("mu_minus", abs(f.mu_minus - m), 1e-8)
    if m == 3:
        rep.add("mu_plus", abs(f.mu_plus - m), 1e-8)
    expected = [1.0, m**-2.0, m**-4.0]
    if m == 3:
        expected = [1.0, m**-2.0, m**-2.0]
    got = np.sort(np.abs(sd.eigenvalues))[::-1][:len(expected)]
    rep.add("spectrum_tail", float(np.max(np.abs(got - expected))), 1e-7)
    return rep

"""Collocation matrices of L and L0, the invariant density, and the
numerical invariant suite (mass, positivity, spectrum, H1 / H0 closure)."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as C

from .conjugacy import BranchSystem, Conjugacy
from .errors import SingularAtEndpoint, SpectralAnomaly
from .spectral import ChebGrid, GridFunction, eig, eig_residuals


class TransferMatrices:
    """(L Phi)(x_i) = sum_j |psi_j'(x_i)| Phi(psi_j(x_i)),
    (L0 Phi)(x_i) = sum_j (-1)^(j+1) Phi(psi_j(x_i))."""

    def __init__(self, bs: BranchSystem, grid: ChebGrid):
        self.bs = bs
        self.grid = grid
        ev = bs.evaluate(grid.nodes, grid.gap)
        self.branch_values = ev
        N = grid.N
        self.L = np.zeros((N, N))
        self.L0 = np.zeros((N, N))
        for j in range(bs.m):
            P = grid.interp_matrix(ev.y[j])
            self.L += np.abs(ev.dpsi[j])[:, None] * P
            self.L0 += bs.signs[j] * P
        if not (np.all(np.isfinite(self.L)) and np.all(np.isfinite(self.L0))):
            raise SpectralAnomaly("non-finite transfer matrix entries")
        self.L.flags.writeable = False
        self.L0.flags.writeable = False
        self._spectrum = None

    @property
    def m(self):
        return self.bs.m

    def apply_L(self, gf: GridFunction) -> GridFunction:
        return GridFunction(self.grid, self.L @ gf.values)

    def apply_L0(self, gf: GridFunction) -> GridFunction:
        return GridFunction(self.grid, self.L0 @ gf.values)

    def spectrum(self) -> "SpectrumData":
        if self._spectrum is None:
            self._spectrum = spectrum_and_density(self)
        return self._spectrum


def assemble(bs: BranchSystem, grid: ChebGrid) -> TransferMatrices:
    return TransferMatrices(bs, grid)


@dataclass(frozen=True)
class SpectrumData:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)
    sigma0: GridFunction = field(repr=False)
    residuals: np.ndarray = field(repr=False)

    @property
    def gap(self) -> float:
        """|mu_1|, the modulus of the second eigenvalue."""
        return float(np.abs(self.eigenvalues[1]))

    def reliable(self, min_modulus=1e-6, max_residual=1e-8):
        """Indices of eigenpairs that take part in reported checks."""
        ok = (np.abs(self.eigenvalues) > min_modulus) & (self.residuals < max_residual)
        return np.flatnonzero(ok)


def spectrum_and_density(tm: TransferMatrices) -> SpectrumData:
    vals, vecs = eig(tm.L)
    res = eig_residuals(tm.L, vals, vecs)
    mu0 = vals[0]
    if abs(mu0 - 1) > 1e-6:
        raise SpectralAnomaly(f"leading eigenvalue {mu0} is not 1")
    if len(vals) > 1 and abs(vals[1]) >= 1 - 1e-8:
        raise SpectralAnomaly(f"no spectral gap: |mu_1| = {abs(vals[1]):.12g}")
    v = vecs[:, 0]
    k = np.argmax(np.abs(v))
    v = v * (np.conj(v[k]) / abs(v[k]))
    if np.max(np.abs(v.imag)) > 1e-9 * np.max(np.abs(v.real)):
        raise SpectralAnomaly("leading eigenvector is not real")
    v = v.real
    sigma = GridFunction(tm.grid, v)
    sigma = sigma / sigma.integral()
    if np.any(sigma.values <= 0):
        raise SpectralAnomaly("invariant density changes sign")
    return SpectrumData(vals, vecs, sigma, res)


def acim_density(sd: SpectrumData, conj: Conjugacy, x):
    """rho(x) = sigma0(varpi x) varpi'(x) on the open interval."""
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) >= 1):
        raise SingularAtEndpoint("rho is evaluated only on (-1, 1)")
    out = sd.sigma0(conj.varpi(x)) * conj.varpi_prime(x)
    return out.item() if np.ndim(out) == 0 else out


def invariance_defect(sd: SpectrumData, bs: BranchSystem, A_func, quad_n: int = 200):
    """|int sigma0 (A o omega o g) dy - int sigma0 (A o omega) dy|.

    Gauss-Legendre on each branch interval [d_{j-1}, d_j] keeps g smooth
    under the quadrature.
    """
    xg, wg = np.polynomial.legendre.leggauss(quad_n)
    lhs = 0.0
    for j in range(bs.m):
        a, b = bs.d[j], bs.d[j + 1]
        y = 0.5 * (b - a) * xg + 0.5 * (a + b)
        g, _, _ = bs.forward(y)
        lhs += 0.5 * (b - a) * np.sum(wg * sd.sigma0(y) * A_func(bs.conj.omega(g)))
    y = xg
    rhs = np.sum(wg * sd.sigma0(y) * A_func(bs.conj.omega(y)))
    return abs(lhs - rhs)


# --------------------------------------------------------------------------

@dataclass
class Check:
    name: str
    value: float
    tol: float
    passed: bool

    def as_dict(self):
        return {"name": self.name, "value": float(self.value),
                "tol": self.tol, "passed": bool(self.passed)}


@dataclass
class LemmaReport:
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def add(self, name, value, tol, passed=None):
        ok = bool(value <= tol) if passed is None else bool(passed)
        self.checks.append(Check(name, float(value), tol, ok))

    def as_dict(self):
        return {"passed": self.passed, "checks": [c.as_dict() for c in self.checks]}


def lemma_checks(tm: TransferMatrices, sd: SpectrumData | None = None) -> LemmaReport:
    sd = sd or tm.spectrum()
    grid = tm.grid
    x = grid.nodes
    N = grid.N
    rep = LemmaReport([])

    # mass preservation on T_0 .. T_{N/2}
    basis = np.cos(np.outer(np.arange(N // 2 + 1), grid.theta)).T  # columns T_k(x_i)
    w = grid.quad_weights
    mass = np.max(np.abs(w @ (tm.L @ basis) - w @ basis))
    rep.add("mass_preservation", mass, 1e-9)

    # positivity on smooth positive functions
    tests = np.stack([np.ones(N), 1 + x, 1 - x, 1 + x * x, np.exp(x)], axis=1)
    pos = float(np.min(tm.L @ tests))
    rep.add("positivity_min", pos, 0.0, passed=pos > 0)

    # simple eigenvalue 1, gap, zero mass of other eigenfunctions
    vals = sd.eigenvalues
    rep.add("mu0_defect", abs(vals[0] - 1), 1e-9)
    rep.add("gap", sd.gap, 1.0, passed=sd.gap < 1)
    rep.add("sigma0_min", float(np.min(sd.sigma0.values)), 0.0,
            passed=bool(np.all(sd.sigma0.values > 0)))
    idx = [k for k in sd.reliable() if k > 0]
    zm = 0.0
    for k in idx:
        zm = max(zm, abs(w @ sd.eigenvectors[:, k]))
    rep.add("zero_mass_eigenfunctions", zm, 1e-7)

    # H1 closure and sigma0 in H1
    phi1 = GridFunction(grid, (1 - x * x) ** 2)
    Lphi = tm.apply_L(phi1)
    h1 = max(abs(Lphi.at_endpoint(-1, 1)), abs(Lphi.at_endpoint(1, 1)))
    rep.add("H1_closure", h1, 1e-7)
    s1 = max(abs(sd.sigma0.at_endpoint(-1, 1)), abs(sd.sigma0.at_endpoint(1, 1)))
    rep.add("sigma0_endpoint_derivative", s1, 1e-7)

    # H0 closure
    phi0 = GridFunction(grid, 1 - x * x)
    L0phi = tm.apply_L0(phi0)
    h0 = max(abs(L0phi.at_endpoint(-1)), abs(L0phi.at_endpoint(1)))
    rep.add("H0_closure", h0, 1e-8)

    # intertwining (L0 Phi)' = L Phi'
    D = grid.diff_matrix
    lhs = D @ (tm.L0 @ basis)
    rhs = tm.L @ (D @ basis)
    scale = np.maximum(1.0, np.max(np.abs(D @ basis), axis=0))
    inter = float(np.max(np.max(np.abs(lhs - rhs), axis=0) / scale))
    rep.add("intertwining", inter, 1e-8)
    return rep

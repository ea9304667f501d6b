import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from acimresp.errors import IllConditioned, NoDecay, PoleHit
from acimresp.maps import ObservablePoly, PerturbationField
from acimresp.susceptibility import (MeromorphicFn, Response, apply_L0_mero,
                                     build_phi_minus, build_phi_plus, pade_poles)

from conftest import ONE_MINUS_X2

T2 = ObservablePoly([0, 0, 1])
T3 = ObservablePoly([0, 0, 0, 1])
X1 = PerturbationField([1.0])


def test_meromorphic_evaluation(tent_tm):
    g = tent_tm.grid
    F = MeromorphicFn.from_values(g, 2 / g.xp1 + 3 / (-g.om1) + g.nodes**2, 2.0, 3.0)
    assert np.allclose(F.reg.values, g.nodes**2, atol=1e-12)
    assert F(0.5) == pytest.approx(2 / 1.5 + 3 / -0.5 + 0.25)


def test_intertwining_on_poles(cubic_tm):
    """L0 acting on 1/(z+1) carries the pole with factor mu_-."""
    g = cubic_tm.grid
    p = MeromorphicFn(1.0, 0.0, g.cheb_values([0.0]))
    q = apply_L0_mero(cubic_tm, p)
    assert q.neg == pytest.approx(3.0) and q.pos == 0.0


@pytest.mark.parametrize("name", ["tent_tm", "cubic_tm", "perturbed_tm"])
def test_phi_constructions(name, request):
    tm = request.getfixturevalue(name)
    minus = build_phi_minus(tm)
    assert minus.eigen_residual < 1e-9
    assert minus.u_endpoint_defect < 1e-9
    plus = build_phi_plus(tm, minus)
    if tm.m % 2:
        assert plus.eigen_residual < 1e-9
    else:
        assert plus.combination_residual < 1e-9
        assert plus.Ytilde_endpoint_defect < 1e-9


def test_tent_constant_field_kappa(tent_tm):
    """For the tent with X = 1 every kappa_n with n >= 1 vanishes by symmetry."""
    r = Response(tent_tm, X1, T3)
    k = r.kappas(10)
    assert k[0] == pytest.approx(3.0, abs=1e-12)
    assert np.max(np.abs(k[1:])) < 1e-11
    assert abs(r.dec.c_minus) < 1e-14
    assert r.dec.c_tilde == pytest.approx(-4 / np.pi**2, rel=1e-12)


def test_cubic_geometric_kappa(cubic_tm):
    r = Response(cubic_tm, X1, T3)
    k = r.kappas(8)
    assert np.allclose(k, 3.0 * 3.0 ** np.arange(9), rtol=1e-10)
    assert r.psi(0.1) == pytest.approx(3 / 0.7, abs=1e-10)
    assert r.psi_at_one() == pytest.approx(-1.5, abs=1e-9)


@pytest.mark.parametrize("name", ["tent_tm", "cubic_tm", "perturbed_tm"])
@pytest.mark.parametrize("X", [[1.0], [1.0, 1.0], list(ONE_MINUS_X2), [0.3, -0.2, 0.1, 0.4]])
def test_routes_agree(name, X, request):
    r = Response(request.getfixturevalue(name), PerturbationField(X), T3)
    r.check_routes(12, rtol=1e-9)


@pytest.mark.parametrize("lam", [0.1, -0.2, 0.15 + 0.1j])
def test_psi_matches_raw_series(perturbed_tm, lam):
    r = Response(perturbed_tm, PerturbationField([0.3, -0.2, 0.1, 0.4]), T3)
    assert abs(r.psi(lam) - r.raw_partial_sum(lam)) < 1e-9


@settings(max_examples=15, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=1, max_size=4),
       st.lists(st.floats(-1, 1), min_size=1, max_size=4))
def test_psi_linear_in_X(a, b):
    from conftest import pipeline
    from acimresp.maps import chebyshev_markov_map
    tm = pipeline(chebyshev_markov_map(3), 32)
    s = np.zeros(max(len(a), len(b)))
    s[:len(a)] += a
    s[:len(b)] += b
    pa = Response(tm, PerturbationField(a), T2).psi(0.2)
    pb = Response(tm, PerturbationField(b), T2).psi(0.2)
    ps = Response(tm, PerturbationField(s), T2).psi(0.2)
    assert ps == pytest.approx(pa + pb, abs=1e-10)


def test_zero_field(tent_tm):
    r = Response(tent_tm, PerturbationField([0.0]), T3)
    assert np.all(r.kappas(6) == 0)
    assert r.psi_at_one() == 0


def test_pole_hit_and_no_decay(tent_tm, cubic_tm):
    r = Response(tent_tm, PerturbationField([1.0, 1.0]), T3)
    with pytest.raises(PoleHit):
        r.psi(0.5)
    with pytest.raises(NoDecay):
        r.psi(1 / tent_tm.spectrum().gap)


def test_pole_free_at_one(tent_tm):
    """Psi(1) is finite although sum kappa_n diverges (kappa_n ~ 2^n)."""
    r = Response(tent_tm, PerturbationField([1.0, 1.0]), T3)
    k = r.kappas(10)
    assert abs(k[10]) > 1000
    assert np.isfinite(r.psi_at_one())


def test_pade_geometric():
    p = pade_poles(2.0 ** np.arange(3), 1, 1)
    assert p.poles[0] == pytest.approx(0.5)
    assert p.residues[0] == pytest.approx(-0.5)
    assert p(0.1) == pytest.approx(1 / 0.8)


def _taylor(p, n):
    t = np.zeros(n)
    for j in range(n):
        pj = p.num[j] if j < len(p.num) else 0.0
        t[j] = pj - sum(p.den[k] * t[j - k] for k in range(1, min(j, p.M) + 1))
    return t


def test_pade_reproduces_coefficients():
    c = np.array([0.7**k + (-0.4) ** k for k in range(4)])
    p = pade_poles(c, 1, 2)
    assert np.allclose(_taylor(p, 4), c, atol=1e-12)
    assert np.allclose(np.sort(p.poles.real), [-2.5, 1 / 0.7])


def test_pade_ill_conditioned():
    with pytest.raises(IllConditioned):
        pade_poles(2.0 ** np.arange(17), 8, 8)

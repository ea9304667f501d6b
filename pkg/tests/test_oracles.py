import numpy as np
import pytest

from acimresp.errors import EndpointNonvanishing, UnsupportedFixture
from acimresp.maps import ObservablePoly, PerturbationField, chebyshev_markov_map
from acimresp.oracles import (chebyshev_closed_form_checks, direct_kappa,
                              finite_difference_response, monotone_pieces)
from acimresp.susceptibility import Response

from conftest import ONE_MINUS_X2

T2 = ObservablePoly([0, 0, 1])
XQ = PerturbationField(ONE_MINUS_X2)


@pytest.mark.parametrize("m", [2, 3])
def test_closed_forms(m):
    assert chebyshev_closed_form_checks(m).passed


def test_closed_forms_unsupported():
    with pytest.raises(UnsupportedFixture):
        chebyshev_closed_form_checks(4)


def test_fd_trivial_cases():
    f = chebyshev_markov_map(2)
    assert finite_difference_response(f, PerturbationField([0.0]), T2).value == 0
    e = finite_difference_response(f, XQ, ObservablePoly([1.0]))
    assert abs(e.richardson_value) < 1e-12
    with pytest.raises(EndpointNonvanishing):
        finite_difference_response(f, PerturbationField([1.0]), T2)
    with pytest.raises(ValueError):
        finite_difference_response(f, XQ, T2, h=0.1)


@pytest.mark.parametrize("A", [[0, 0, 1], [0, 0, 0, 1], [0.2, 0.5, 0, 0.1, 0.3]])
def test_fd_matches_psi_at_one(perturbed_tm, perturbed_f, A):
    """Odd observables on the symmetric fixture are a weak test; use the
    perturbed map, where the response is generically nonzero."""
    A = ObservablePoly(A)
    X = PerturbationField(np.array(ONE_MINUS_X2) * 0.5)
    est = finite_difference_response(perturbed_f, X, A, 1e-3)
    val = Response(perturbed_tm, X, A).psi_at_one()
    assert abs(val - est.richardson_value) <= est.tolerance()
    assert abs(val - est.richardson_value) <= 1e-9 * (1 + abs(val))


def test_monotone_pieces_count(tent_tm, cubic_tm):
    assert len(monotone_pieces(tent_tm.bs, 4)) == 2**4 + 1
    assert len(monotone_pieces(cubic_tm.bs, 3)) == 3**3 + 1


def test_direct_kappa_odd_integrand(tent_tm):
    sd = tent_tm.spectrum()
    v = direct_kappa(tent_tm.bs.map, None, sd, PerturbationField([1.0]), T2, 0)
    assert abs(v) < 1e-14


@pytest.mark.parametrize("name", ["tent_tm", "cubic_tm", "perturbed_tm"])
def test_direct_kappa_matches_operator(name, request):
    tm = request.getfixturevalue(name)
    sd = tm.spectrum()
    X = PerturbationField([0.3, -0.2, 0.1, 0.4])
    A = ObservablePoly([0.1, 0.2, 0.3, 0.4])
    k = Response(tm, X, A, sd).kappas(6)
    d = np.array([direct_kappa(tm.bs.map, tm.bs.conj, sd, X, A, n) for n in range(7)])
    assert np.all(np.abs(k - d) <= 1e-8 * (1 + np.abs(k)))

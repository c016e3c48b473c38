import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial import hermite
from scipy.linalg import expm

from momentdilation.bargmann import (
    fock_encode, fock_generator, fock_triple, gaussian_fock_coefficients, run_ssh,
    squeeze_displace_fidelity, squeezed_displaced_exponents, ssh_split,
)
from momentdilation.core import FamilyTag, moment_sequence
from momentdilation.families import eigenrelation_residual


def hermite_oracle(theta, n_cut):
    """h_n = H_n(i mu/sqrt2) (i/sqrt2)^n / n! from exp(2xt - t^2) with t = i z/sqrt2."""
    mu = 1 / theta
    x = 1j * mu / math.sqrt(2)
    out = []
    for n in range(n_cut + 1):
        c = np.zeros(n + 1)
        c[n] = 1
        out.append(hermite.hermval(x, c) * (1j / math.sqrt(2)) ** n / math.factorial(n))
    return np.array(out)


def test_recurrence_values():
    enc = fock_encode(0.5, 10)
    np.testing.assert_allclose(enc.h[:4], [1, -2, 5 / 2, -7 / 3], rtol=1e-15)
    assert enc.raw[2] == pytest.approx(math.sqrt(2) * 2.5)
    assert enc.raw[2] == pytest.approx(3.53553, abs=1e-5)
    assert enc.raw[0] == 1


@pytest.mark.parametrize("theta", [0.3, 0.5, 1.0, 2.5])
def test_recurrence_matches_hermite_oracle(theta):
    enc = fock_encode(theta, 25)
    np.testing.assert_allclose(enc.h, hermite_oracle(theta, 25).real, rtol=1e-10, atol=1e-14)


def test_gaussian_expansion_matches_encode():
    enc = fock_encode(0.5, 30)
    g = gaussian_fock_coefficients(0.5, -2.0, 30)
    np.testing.assert_allclose(g.real, enc.raw, rtol=1e-10)
    assert np.abs(g.imag).max() == 0


def test_generator_antisymmetric():
    F = fock_generator(0.5, 10)
    for n in range(10):
        assert F[n + 1, n] == pytest.approx(0.5 * math.sqrt(n + 1))
        assert F[n, n + 1] == -F[n + 1, n]
    np.testing.assert_array_equal(F, -F.T)


def test_triple_pairing_and_tag():
    t = fock_triple(0.5, 30)
    assert t.family_tag is FamilyTag.BARGMANN
    assert abs(t.pairing() - 1) <= 1e-12
    assert t.skew_residual() == 0


def test_moments_n30():
    assert np.abs(moment_sequence(fock_triple(0.5, 30), 5) - 1).max() <= 1e-6


def test_eigen_residual_confined_to_last_row():
    # F r = r holds in every component except the cutoff row
    for n_cut in (10, 20, 30):
        t = fock_triple(0.5, n_cut)
        res = t.F @ t.r - t.r
        assert np.abs(res[:n_cut]).max() <= 1e-12 * np.abs(t.r).max()
        assert abs(res[n_cut]) > 0.1


def test_eigen_residual_grows_with_cutoff():
    # the amplitudes of exp(z^2/2 - 2z) grow, so the truncation residual does not vanish
    res = [eigenrelation_residual(fock_triple(0.5, n)) for n in (10, 20, 30)]
    assert res[0] < res[1] < res[2]


def test_squeezed_gate_cannot_reach_target_quadratic():
    for r in np.linspace(0, 5, 11):
        a, _ = squeezed_displaced_exponents(r, math.pi, 0.3)
        assert abs(a) < 0.5
    a, b = squeezed_displaced_exponents(0.5 * math.log(2), 0.0, -1 / (math.sqrt(2) * 0.5))
    assert a == pytest.approx(-1 / 6)
    assert abs(a - 0.5) > 0.5


def test_squeeze_displace_fidelity_reported():
    f = squeeze_displace_fidelity(0.5, 30)
    assert 0 <= f <= 1
    # matching exponents reproduce the encode state exactly
    g = gaussian_fock_coefficients(0.5, -2.0, 30)
    enc = fock_encode(0.5, 30)
    assert abs(np.vdot(g / np.linalg.norm(g), enc.normalized)) == pytest.approx(1, abs=1e-12)


def test_ssh_split():
    s = ssh_split()
    H = np.array([[0.3, 1, 0, 0], [1, 0, 0.6, 0], [0, 0.6, 0.3, 1], [0, 0, 1, 0]])
    np.testing.assert_array_equal(s.H, H)
    np.testing.assert_array_equal(s.H, s.H.T)
    np.testing.assert_allclose(sorted(np.linalg.eigvalsh(s.K)), [-1 / 16, -1 / 16, 0, 0])


def test_ssh_benchmark_settings_recorded():
    rep = run_ssh(0.5, 5, 0.5, 0.025, "strang-trotter")
    traj = rep.tables["trajectory"]
    assert traj["columns"][:3] == ["t", "rho_edge_dilated", "rho_edge_exact"]
    assert len(traj["rows"]) == 21
    assert rep.results["max_deviation"] < 0.05
    assert rep.column("trajectory", "rho_edge_dilated")[0] == pytest.approx(1.0)


def test_ssh_converged_run():
    rep = run_ssh(0.5, 30, 0.5, 1e-3, "rk4")
    assert rep.results["max_deviation"] <= 1e-3


def test_ssh_gamma_zero_is_schrodinger():
    s = ssh_split(gamma=0.0)
    for n_cut in (5, 12):
        rep = run_ssh(0.5, n_cut, 0.5, 0.01, "rk4", split=s)
        assert rep.results["max_deviation"] <= 1e-9


def test_ssh_cutoff_cauchy():
    # successive differences of the readout trajectory shrink with n_cut
    trajs = [run_ssh(0.5, n, 0.5, 0.025, "strang-trotter").column("trajectory", "rho_edge_dilated")
             for n in (5, 10, 20)]
    d1 = np.abs(trajs[0] - trajs[1]).max()
    d2 = np.abs(trajs[1] - trajs[2]).max()
    assert d2 < d1


def test_ssh_vacuum_readout_identity():
    x0 = np.array([0.6, 0, 0.8j, 0])
    rep = run_ssh(0.5, 8, 0.05, 0.025, x0=x0)
    assert rep.column("trajectory", "rho_edge_dilated")[0] == pytest.approx(0.36, abs=1e-14)


def test_ssh_rejects_nonpositive_T():
    with pytest.raises(ValueError):
        run_ssh(T=0.0)


@settings(max_examples=20, deadline=None)
@given(theta=st.floats(0.2, 3.0), n=st.integers(4, 40))
def test_encode_recurrence_property(theta, n):
    enc = fock_encode(theta, n)
    mu = 1 / theta
    h = enc.h
    for k in range(1, n):
        assert (k + 1) * h[k + 1] == pytest.approx(h[k - 1] - mu * h[k], rel=1e-12, abs=1e-300)
    assert np.linalg.norm(enc.normalized) == pytest.approx(1)

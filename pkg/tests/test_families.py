import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from momentdilation.core import FamilyTag, moment_sequence
from momentdilation.families import (
    difference_triple, eigenrelation_residual, integral_kernel_triple, integral_lambda,
    interpolation_covector, lchs_fourier_dual, lchs_residue, lchs_triple,
    pseudodifferential_branch_check, pseudodifferential_triple, schrodingerization_triple,
    solve_integral_a,
)
from momentdilation.operators import compact_triple


# ---------------------------------------------------------------- Schrodingerization

def test_schrodingerization_moments():
    t = schrodingerization_triple(1.0, 256, 20.0)
    assert t.family_tag is FamilyTag.SCHRODINGERIZATION
    dev = np.abs(moment_sequence(t, 4) - 1)
    h = 20 / 256
    assert dev.max() <= 4 * h ** 2 + math.exp(-20)
    assert abs(t.pairing() - 1) <= 1e-12
    assert t.relative_skew_residual() <= 1e-12


def test_schrodingerization_raw_pairing():
    # e^{p*} times the interpolated e^{-p*}: 1 up to interpolation error
    t = schrodingerization_triple(1.0, 256, 20.0)
    assert abs(t.params["raw_pairing"] - 1) <= 1e-5


def test_schrodingerization_integral_evaluation():
    t = schrodingerization_triple(1.0, 256, 20.0, evaluation="integral")
    assert abs(moment_sequence(t, 0)[0] - 1) <= 1e-12
    # trapezoid integral of e^{-p} on (0, 20)
    assert abs(t.params["raw_pairing"] - 1) <= 1e-3


def test_schrodingerization_refinement_monotone():
    devs = [abs(moment_sequence(schrodingerization_triple(1.0, M, 20.0), 4)[4] - 1)
            for M in (128, 256, 512)]
    assert devs[0] > devs[1] > devs[2]


def test_schrodingerization_bad_pstar():
    with pytest.raises(ValueError):
        schrodingerization_triple(25.0, 64, 20.0)


def test_interpolation_covector_reproduces_cubics():
    x = np.linspace(0, 2, 21)
    l = interpolation_covector(x, 0.537)
    assert l @ (x ** 3 - x) == pytest.approx(0.537 ** 3 - 0.537, abs=1e-13)
    assert interpolation_covector(x, 0.5)[5] == 1


# ---------------------------------------------------------------- LCHS

def test_lchs_pairing_quadrature():
    t = lchs_triple(4096, 2000.0)
    assert abs(t.params["raw_pairing"] - 1) <= 1e-3
    assert abs(t.pairing() - 1) <= 1e-12
    assert t.relative_skew_residual() <= 1e-12


def test_lchs_generator_is_diagonal_ik():
    t = lchs_triple(64, 20.0)
    k = np.linspace(-10, 10, 65)
    np.testing.assert_allclose(t.F.diagonal(), 1j * k)
    np.testing.assert_allclose(t.r * t.params["C_norm"], 1 / (k + 1j))


@pytest.mark.parametrize("n", [0, 1, 2, 3, 5])
def test_lchs_residue_chain(n):
    assert abs(lchs_residue(n) - 1) <= 1e-12


def test_lchs_residue_hand_values():
    # (i k)^n at k = -i equals 1 for every n
    for n in range(3):
        assert (1j * (-1j)) ** n == 1


def test_lchs_fourier_dual():
    p = np.linspace(-3, 3, 601)
    _, expected, err = lchs_fourier_dual(4096, 2000.0, p)
    assert err <= 1e-2
    assert expected[300] == -0.5j


# ---------------------------------------------------------------- integral kernel

def test_solve_integral_a_theta1():
    a = solve_integral_a(1.0)
    assert a == pytest.approx(-0.2253, abs=5e-5)
    assert abs(integral_lambda(a, 1.0) - 1) <= 1e-10


def test_solve_integral_a_theta2_dense_oracle():
    a = solve_integral_a(2.0)
    grid = np.linspace(-2 + 1e-7, -1e-7, 2_000_001)
    lam = integral_lambda(grid, 2.0)
    j = np.argmin(np.abs(lam - 1))
    assert a == pytest.approx(grid[j], abs=2 * (grid[1] - grid[0]))
    assert -2 < a < 0


def test_lambda_at_printed_root():
    lam = integral_lambda(-0.2253, 1.0)
    assert lam == pytest.approx(0.9012 / 0.94924 ** 2, rel=1e-4)
    assert lam == pytest.approx(1.0002, abs=1e-4)


@settings(max_examples=30)
@given(theta=st.floats(0.05, 20))
def test_solve_integral_a_property(theta):
    a = solve_integral_a(theta)
    assert -theta < a < 0
    assert abs(integral_lambda(a, theta) - 1) <= 1e-10


def test_solve_integral_a_rejects():
    with pytest.raises(ValueError):
        solve_integral_a(0.0)


def test_integral_kernel_triple():
    t = integral_kernel_triple(1.0, 1024, 60.0)
    x = np.linspace(-30, 30, 1025)
    window = np.abs(x) <= 15
    assert eigenrelation_residual(t, window) <= 1e-2
    # the global residual is dominated by the truncated left tail, where r peaks
    assert eigenrelation_residual(t) > eigenrelation_residual(t, window)
    assert t.skew_residual() <= 1e-14
    assert t.params["antisym_correction"] > 0
    assert np.abs(moment_sequence(t, 4) - 1).max() <= 1e-3


# ---------------------------------------------------------------- pseudodifferential

@pytest.mark.parametrize("theta", [0.5, 0.75, 1.0])
def test_branch_identity(theta):
    chk = pseudodifferential_branch_check(theta)
    assert chk["passed"]


def test_branch_values():
    chk = pseudodifferential_branch_check(0.5)
    assert chk["xi0"] == pytest.approx(1j)
    assert chk["xi0_sq"] == pytest.approx(-1)
    chk = pseudodifferential_branch_check(1.0)
    assert chk["xi0_sq"] == pytest.approx(1j)


def test_pseudodifferential_multiplier_skew():
    t, rep = pseudodifferential_triple(0.75, 64, 10.0)
    assert rep["symbol_real_part"] == 0
    assert t.skew_residual() <= 1e-12 * np.abs(t.F).max()
    with pytest.raises(ValueError):
        pseudodifferential_triple(0.0)


# ---------------------------------------------------------------- difference

def test_difference_lambda():
    t = difference_triple(1.0, 200)
    assert t.params["lambda"] == 0.5


def test_difference_eigen_identity():
    theta = 0.7
    lam = theta / (1 + theta)
    n = np.arange(1, 30)
    np.testing.assert_allclose(theta * (lam ** (n - 1) - lam ** n), lam ** n, rtol=1e-14)


def test_difference_chain():
    t = difference_triple(1.0, 200)
    assert np.abs(moment_sequence(t, 6) - 1).max() <= 1e-8
    assert eigenrelation_residual(t) <= 1e-8


def test_difference_alternative_evaluation():
    t = difference_triple(1.0, 200, evaluation="e1")
    assert t.params["raw_pairing"] == pytest.approx(1.0)
    assert np.abs(moment_sequence(t, 6) - 1).max() <= 1e-8


def test_difference_skew_reported_not_fixed():
    t = difference_triple(1.0, 50)
    assert t.skew_residual() >= 1.0


def test_difference_refinement_monotone():
    devs = [abs(moment_sequence(difference_triple(0.3, n), 4)[4] - 1) for n in (8, 16, 32)]
    assert devs[0] >= devs[1] >= devs[2]


# ---------------------------------------------------------------- eigen residual

def test_eigen_residual_high_order_compact_interior():
    t = compact_triple(64, 1 / 5.5, m=3)
    interior = slice(4, 64 - 3)
    assert eigenrelation_residual(t, interior) <= 1e-12


def test_eigen_residual_random_r():
    t = difference_triple(1.0, 200)
    rng = np.random.default_rng(2)
    from momentdilation.core import AncillaTriple
    r = rng.normal(size=200)
    bad = AncillaTriple(t.F, r / np.linalg.norm(r), t.l, t.family_tag)
    assert eigenrelation_residual(bad) > 0.1


def test_all_families_pairing():
    triples = [
        compact_triple(64, 2 / 9),
        schrodingerization_triple(),
        lchs_triple(512, 200.0),
        integral_kernel_triple(1.0, 256, 40.0),
        pseudodifferential_triple(0.5, 32)[0],
        difference_triple(),
    ]
    for t in triples:
        assert abs(t.pairing() - 1) <= 1e-12, t.family_tag

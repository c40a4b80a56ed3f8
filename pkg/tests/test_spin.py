import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sublevel_sense.spin import (
    SpinF,
    StateVector,
    basis_state,
    format_m,
    operator_fx,
    operator_fy,
    operator_fz,
    quarter_turn,
    wigner_small_d,
)

from conftest import spins


@pytest.mark.parametrize("raw", [3, 3.0, "3", Fraction(3)])
def test_spin_parsing(raw):
    assert SpinF.of(raw) == SpinF(6)


def test_spin_half_integer_and_labels():
    f = SpinF.of("7/2")
    assert f.dim == 8 and not f.is_integer and str(f) == "7/2"
    assert f.index("-7/2") == 7 and f.index(3.5) == 0
    assert [format_m(t) for t in SpinF(3).twice_ms] == ["+3/2", "+1/2", "-1/2", "-3/2"]
    assert format_m(0) == "0"


@pytest.mark.parametrize("bad", [0, -1, 2.25, "1/3"])
def test_spin_rejects_invalid(bad):
    with pytest.raises(ValueError):
        SpinF.of(bad) if not isinstance(bad, int) else SpinF(bad)


@pytest.mark.parametrize("m", [4, 0.5, "1/3"])
def test_invalid_sublevel(m):
    with pytest.raises(ValueError):
        SpinF(6).index(m)


def test_state_vector_normalization_enforced():
    with pytest.raises(ValueError):
        StateVector(SpinF(2), "z", [1, 1, 0])
    sv = StateVector.normalized(1, "z", [1, 1, 0])
    assert abs(np.linalg.norm(sv.amplitudes) - 1) < 1e-15
    with pytest.raises(ValueError):
        sv.amplitudes[0] = 0


def test_operator_fz_examples():
    np.testing.assert_array_equal(operator_fz(SpinF(1)).real, np.diag([0.5, -0.5]))
    np.testing.assert_array_equal(np.diag(operator_fz(3).real), [3, 2, 1, 0, -1, -2, -3])


def test_operator_fx_spin_half():
    np.testing.assert_allclose(operator_fx(SpinF(1)), [[0, 0.5], [0.5, 0]], atol=1e-15)


@given(spins)
def test_angular_momentum_algebra(f):
    fx, fy, fz = operator_fx(f), operator_fy(f), operator_fz(f)
    assert abs(np.trace(fz)) < 1e-12
    assert np.abs(fx @ fy - fy @ fx - 1j * fz).max() < 1e-12
    casimir = fx @ fx + fy @ fy + fz @ fz
    assert np.abs(casimir - f.value * (f.value + 1) * np.eye(f.dim)).max() < 1e-12


@given(spins)
def test_small_d_identity_at_zero(f):
    np.testing.assert_allclose(wigner_small_d(f, 0.0), np.eye(f.dim), atol=1e-15)


@given(st.floats(-2 * np.pi, 2 * np.pi))
def test_small_d_spin_half_closed_form(beta):
    c, s = math.cos(beta / 2), math.sin(beta / 2)
    np.testing.assert_allclose(wigner_small_d(SpinF(1), beta), [[c, -s], [s, c]], atol=1e-15)


@given(spins)
def test_small_d_at_pi_is_signed_antidiagonal(f):
    d = wigner_small_d(f, math.pi)
    expected = np.zeros((f.dim, f.dim))
    for col, tm in enumerate(f.twice_ms):
        # d_{-m, m}(pi) = (-1)^(F - m)
        expected[f.dim - 1 - col, col] = -1.0 if ((f.twice_f - tm) // 2) % 2 else 1.0
    np.testing.assert_allclose(d, expected, atol=1e-12)


@given(spins)
def test_quarter_turn_symmetry(f):
    d = quarter_turn(f)
    tm = np.array(f.twice_ms)
    # d_{m m'} = (-1)^(m' - m) d_{m' m}
    sign = np.where(((tm[None, :] - tm[:, None]) // 2) % 2, -1.0, 1.0)
    assert np.abs(d - sign * d.T).max() < 1e-12


@given(spins, st.floats(-4, 4), st.floats(-4, 4))
def test_small_d_group_property(f, b1, b2):
    lhs = wigner_small_d(f, b1) @ wigner_small_d(f, b2)
    assert np.abs(lhs - wigner_small_d(f, b1 + b2)).max() < 1e-10


@given(spins, st.floats(-4, 4))
def test_small_d_orthonormal(f, beta):
    d = wigner_small_d(f, beta)
    assert np.abs(d @ d.T - np.eye(f.dim)).max() < 1e-12
    assert np.abs(d.T @ d - np.eye(f.dim)).max() < 1e-12


@given(spins)
def test_quarter_turn_columns_are_fx_eigenvectors(f):
    d = quarter_turn(f)
    assert np.abs(operator_fx(f) @ d - d * f.ms).max() < 1e-10


def test_small_d_matches_matrix_exponential_f3():
    from scipy.linalg import expm

    beta = 0.83
    ref = expm(-1j * beta * operator_fy(3)).real
    np.testing.assert_allclose(wigner_small_d(3, beta), ref, atol=1e-12)


def test_basis_state_examples():
    np.testing.assert_array_equal(basis_state(3, 3, "z").amplitudes, np.eye(7)[0])
    half = basis_state(SpinF(1), 0.5, "x").in_basis("z")
    np.testing.assert_allclose(half, [1 / math.sqrt(2), 1 / math.sqrt(2)], atol=1e-15)


def test_m0_x_state_has_zero_fx_moments():
    z = basis_state(3, 0, "x").in_basis("z")
    np.testing.assert_allclose(z, quarter_turn(3)[:, 3], atol=1e-15)
    fx = operator_fx(3)
    assert abs(np.vdot(z, fx @ z)) < 1e-12
    assert abs(np.vdot(z, fx @ fx @ z)) < 1e-12


@given(spins)
def test_basis_round_trip(f):
    psi = basis_state(f, f.value, "x")
    back = StateVector(f, "z", psi.in_basis("z")).in_basis("x")
    np.testing.assert_allclose(back, psi.amplitudes, atol=1e-12)

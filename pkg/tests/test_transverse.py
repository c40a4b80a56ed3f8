import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sublevel_sense.precession import probabilities_on_grid, sublevel_probabilities, PrecessionSetup
from sublevel_sense.spin import SpinF, basis_state
from sublevel_sense.transverse import (
    TiltedFieldSetup,
    beta_from_phi,
    remapped_populations,
    rotate_vector,
    tilted_on_grid,
    tilted_precession,
)

from conftest import spins

gammas = st.floats(0, math.pi / 2 - 1e-3)


def test_setup_validation():
    start = basis_state(3, 0)
    with pytest.raises(ValueError):
        TiltedFieldSetup(start.f, start, math.pi / 2)
    with pytest.raises(ValueError):
        TiltedFieldSetup(start.f, start, -0.1)
    with pytest.raises(ValueError):
        TiltedFieldSetup(start.f, start, 0.1, azimuth="z")


@given(st.floats(0, math.pi))
def test_beta_without_tilt(phi):
    assert abs(beta_from_phi(phi, 0.0) - phi) < 1e-12


def test_beta_maximum_and_tilted_limit():
    gamma = math.asin(0.1)
    assert abs(beta_from_phi(math.pi, gamma) - (math.pi - 2 * gamma)) < 1e-12
    assert beta_from_phi(1.3, math.pi / 2 - 1e-9) < 1e-8


@given(st.floats(0, 2 * math.pi), gammas)
def test_beta_range_and_symmetry(phi, gamma):
    b = beta_from_phi(phi, gamma)
    assert 0 <= b <= math.pi - 2 * gamma + 1e-12
    assert abs(b - beta_from_phi(2 * math.pi - phi, gamma)) < 1e-9
    assert abs(b - beta_from_phi(phi, -gamma)) < 1e-15


def test_beta_monotone_with_slope_cos_gamma():
    gamma = 0.4
    phis = np.linspace(0, math.pi, 500)
    assert np.all(np.diff(beta_from_phi(phis, gamma)) > 0)
    h = 1e-7
    assert abs(beta_from_phi(h, gamma) / h - math.cos(gamma)) < 1e-6


@given(st.floats(0, 2 * math.pi), gammas)
def test_beta_matches_rodrigues_geometry(phi, gamma):
    x = np.array([1.0, 0.0, 0.0])
    axis = np.array([math.sin(gamma), 0.0, math.cos(gamma)])
    cos_beta = float(np.dot(x, rotate_vector(x, axis, phi)))
    assert abs(cos_beta - math.cos(beta_from_phi(phi, gamma))) < 1e-12


def test_untilted_reduces_to_precession():
    start = basis_state(3, 2)
    phases = np.linspace(0, 2 * math.pi, 33)
    got = tilted_on_grid(TiltedFieldSetup(start.f, start, 0.0), phases)
    np.testing.assert_allclose(got, probabilities_on_grid(start.f, start, phases).p, atol=1e-12)


@given(spins, gammas, st.data())
def test_remap_equivalence_for_every_x_eigenstate(f, gamma, data):
    m = data.draw(st.sampled_from(f.twice_ms)) / 2
    start = basis_state(f, m)
    phases = np.linspace(0, 2 * math.pi, 25)
    got = tilted_on_grid(TiltedFieldSetup(f, start, gamma), phases)
    ref = remapped_populations(f, m, beta_from_phi(phases, gamma))
    assert np.abs(got - ref).max() < 1e-9


def test_tilted_fringe_matches_untilted_outside_band():
    gamma = math.asin(0.1)
    start = basis_state(3, 0)
    phases = np.linspace(0, 2 * math.pi, 2001)
    tilted = tilted_on_grid(TiltedFieldSetup(start.f, start, gamma), phases)
    flat = probabilities_on_grid(start.f, start, phases).p
    diff = np.abs(tilted - flat).max(axis=1)
    inside = np.abs(phases - math.pi) < 2 * gamma
    # the excluded band is where the two disagree most
    assert diff[inside].max() > 10 * diff[phases < 0.5].max()


@given(st.floats(0, 2 * math.pi), gammas)
def test_azimuth_y_keeps_beta_equal_to_phi(phi, gamma):
    start = basis_state(3, 3)
    got = tilted_on_grid(TiltedFieldSetup(start.f, start, gamma, azimuth="y"), [phi])
    b = phi if phi <= math.pi else 2 * math.pi - phi
    assert np.abs(got - remapped_populations(3, 3, [b])).max() < 1e-9


def test_tilted_precession_slope_by_difference():
    start = basis_state(3, 0)
    res = tilted_precession(TiltedFieldSetup(start.f, start, 0.0, phase=0.8))
    ref = sublevel_probabilities(PrecessionSetup(start.f, start, 0.8))
    np.testing.assert_allclose(res.p, ref.p, atol=1e-12)
    np.testing.assert_allclose(res.dp_dphi, ref.dp_dphi, atol=1e-7)

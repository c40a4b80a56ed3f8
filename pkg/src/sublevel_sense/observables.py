"""Composite observables built from sublevel populations.

``even parity``: total population of the even sublevels (even+1/2 for
half-integer F) measured along x.  In the z basis its operator is
``1/2 + (1/2)(-1)^floor(F) J`` with ``J`` the anti-diagonal ``|-m><m|``, so
only odd-in-m terms of a z-diagonal Hamiltonian can move it.

``harmonic``: the weighted sum of populations, starting from ``|F,0>_x``, that
keeps only the DC term and the ``cos(2F phi)`` harmonic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import evolve
from .precession import PrecessionSetup, probabilities_on_grid, z_amplitudes
from .spin import SpinF, StateVector, basis_state, operator_fz, quarter_turn


def even_mask(f) -> np.ndarray:
    """True for the even (integer F) or even+1/2 (half-integer F) sublevels."""
    f = SpinF.of(f)
    offset = 0 if f.is_integer else 1
    return np.array([(tm - offset) % 4 == 0 for tm in f.twice_ms])


@dataclass(frozen=True)
class ParityObservable:
    f: SpinF
    z_form: np.ndarray
    basis_axis: str = "x"

    @classmethod
    def for_spin(cls, f) -> "ParityObservable":
        return cls(SpinF.of(f), parity_z_form(f))


def parity_z_form(f) -> np.ndarray:
    """Closed form of the x-basis even-parity projector written in the z basis."""
    f = SpinF.of(f)
    sign = -1.0 if (f.twice_f // 2) % 2 else 1.0
    anti = np.fliplr(np.eye(f.dim))
    return (0.5 * np.eye(f.dim) + 0.5 * sign * anti).astype(complex)


def parity_projector_direct(f) -> np.ndarray:
    """``sum_e d(pi/2)|e><e|d(pi/2)^T``: the same operator built by rotation."""
    f = SpinF.of(f)
    d = quarter_turn(f)
    cols = d[:, even_mask(f)]
    return (cols @ cols.T).astype(complex)


def even_parity_on_grid(f, initial: StateVector, phases) -> tuple[np.ndarray, np.ndarray]:
    """Even-parity probability and slope by direct summation of x populations."""
    f = SpinF.of(f)
    probs = probabilities_on_grid(f, initial, phases)
    mask = even_mask(f)
    return probs.p[:, mask].sum(axis=-1), probs.dp_dphi[:, mask].sum(axis=-1)


def even_parity_quadratic_form(f, initial: StateVector, phases) -> tuple[np.ndarray, np.ndarray]:
    """Same quantity as ``<psi|P|psi>`` in the z basis with the closed-form ``P``."""
    f = SpinF.of(f)
    psi, dpsi = z_amplitudes(f, initial, phases)
    pz = parity_z_form(f)
    val = np.einsum("ni,ij,nj->n", np.conj(psi), pz, psi).real
    slope = 2.0 * np.einsum("ni,ij,nj->n", np.conj(psi), pz, dpsi).real
    return val, slope


def even_parity_probability(setup: PrecessionSetup) -> tuple[float, float]:
    val, slope = even_parity_on_grid(setup.f, setup.initial, [setup.phase])
    return float(val[0]), float(slope[0])


def parity_expectation(f, psi_z: np.ndarray) -> np.ndarray:
    """``<psi|P|psi>`` for z-basis state(s) ``psi_z`` of shape ``(..., 2F+1)``."""
    f = SpinF.of(f)
    # P = 1/2 + (s/2) J, and <psi|J|psi> = sum_k conj(psi_k) psi_{-k}
    sign = -1.0 if (f.twice_f // 2) % 2 else 1.0
    psi_z = np.asarray(psi_z)
    overlap = np.sum(np.conj(psi_z) * psi_z[..., ::-1], axis=-1).real
    norm = np.sum(np.abs(psi_z) ** 2, axis=-1)
    return 0.5 * norm + 0.5 * sign * overlap


def quadratic_insensitivity_check(f, times, omega: float, coeffs: dict[int, float], states) -> float:
    """Largest change of the even-parity probability caused by extra F_z^n terms.

    The reference Hamiltonian is ``omega F_z`` (Hz); the perturbed one adds
    ``sum_n coeffs[n] F_z^n``.  Both are evolved from each z-basis state in
    ``states`` for each time in ``times``.  Even powers should leave the
    result unchanged; odd powers generally do not.
    """
    f = SpinF.of(f)
    fz = operator_fz(f)
    h0 = omega * fz
    h1 = h0.copy()
    for power, c in coeffs.items():
        if power < 1:
            raise ValueError(f"powers of F_z must be >= 1, got {power}")
        h1 = h1 + c * np.linalg.matrix_power(fz, power)
    states = np.atleast_2d(np.asarray(states, dtype=complex))
    worst = 0.0
    for t in np.atleast_1d(times):
        base = parity_expectation(f, evolve(h0, float(t), states))
        pert = parity_expectation(f, evolve(h1, float(t), states))
        worst = max(worst, float(np.max(np.abs(pert - base))))
    return worst


@dataclass(frozen=True)
class HarmonicWeights:
    """Weights ``alpha_m`` indexed by ``|m| = 0..F`` (symmetric in m)."""

    f: SpinF
    alpha: np.ndarray

    def per_sublevel(self) -> np.ndarray:
        """Expanded to the descending ``m = +F..-F`` ordering."""
        return np.array([self.alpha[abs(tm) // 2] for tm in self.f.twice_ms])


def population_harmonics(f, initial: StateVector | None = None) -> np.ndarray:
    """Cosine coefficients of every x population as a function of phase.

    Returns ``c[k, j]`` with ``p_j(phi) = sum_k c[k, j] cos(k phi)`` (plus sine
    terms, which vanish for the real initial states used here), for
    ``k = 0..2F``.  Computed from products of z amplitudes: the term
    ``m', m''`` of ``|sum_m' d_{m'j} z_m' exp(-i m' phi)|^2`` oscillates at
    ``m' - m''``.
    """
    f = SpinF.of(f)
    if initial is None:
        initial = basis_state(f, 0, "x")
    d = quarter_turn(f)
    z0 = initial.in_basis("z")
    amp = d * z0[:, None]  # amp[m', j] = d_{m'j} z_{m'}
    # outer[m', m'', j]
    outer = amp[:, None, :] * np.conj(amp[None, :, :])
    diff = np.subtract.outer(np.arange(f.dim), np.arange(f.dim))  # index diff = m'' - m'
    coeffs = np.zeros((f.twice_f + 1, f.dim))
    for k in range(f.twice_f + 1):
        # exp(-i(m'-m'')phi) with m' - m'' = -(index diff); k > 0 collects both signs
        plus = outer[diff == k].sum(axis=0)
        if k == 0:
            coeffs[k] = plus.real
        else:
            minus = outer[diff == -k].sum(axis=0)
            coeffs[k] = (plus + minus).real
    return coeffs


def population_harmonics_quadrature(f, initial: StateVector | None = None, samples: int = 4096) -> np.ndarray:
    """Same coefficients by trapezoidal quadrature over one ``2 pi`` period."""
    f = SpinF.of(f)
    if initial is None:
        initial = basis_state(f, 0, "x")
    phases = 2 * np.pi * np.arange(samples) / samples
    p = probabilities_on_grid(f, initial, phases).p
    k = np.arange(f.twice_f + 1)
    basis = np.cos(np.outer(k, phases))
    coeffs = 2.0 * basis @ p / samples
    coeffs[0] /= 2.0
    return coeffs


def harmonic_weights(f) -> HarmonicWeights:
    """Weights that cancel harmonics ``2, 4, ..., 2F-2`` of the ``|F,0>_x`` fringe.

    The cancellation conditions fix the weights only up to scale and a uniform
    offset (populations sum to one, so an offset only moves DC).  Gauge:
    ``alpha_0 = 1`` and ``alpha_F = 0``.  When those two are incompatible with
    the conditions (F = 2, where ``alpha_0 = alpha_2`` is forced) the
    minimum-norm solution with ``alpha_0 = 1`` is returned instead.
    """
    f = SpinF.of(f)
    if not f.is_integer:
        raise ValueError(f"harmonic weights are defined for integer F only, got F = {f}")
    big_f = f.twice_f // 2
    c = population_harmonics(f)
    fold = np.zeros((f.dim, big_f + 1))
    for j, tm in enumerate(f.twice_ms):
        fold[j, abs(tm) // 2] = 1.0
    c_abs = c @ fold  # (harmonic, |m|)
    cancel = np.array([c_abs[2 * k] for k in range(1, big_f)]).reshape(-1, big_f + 1)
    scale = np.abs(c_abs).max()
    gauge0 = np.eye(big_f + 1)[0]
    gauge_f = np.eye(big_f + 1)[big_f]

    system = np.vstack([cancel, gauge0, gauge_f])
    rhs = np.concatenate([np.zeros(len(cancel)), [1.0, 0.0]])
    if np.linalg.cond(system) < 1e10:
        alpha = np.linalg.solve(system, rhs)
    else:
        system = np.vstack([cancel, gauge0])
        rhs = rhs[:-1]
        alpha, *_ = np.linalg.lstsq(system, rhs, rcond=None)
    if np.abs(cancel @ alpha).max(initial=0.0) > 1e-10 * scale:
        raise np.linalg.LinAlgError(f"no weights cancel the intermediate harmonics for F = {f}")
    return HarmonicWeights(f, alpha)


def harmonic_on_grid(f, weights: HarmonicWeights, phases, initial: StateVector | None = None):
    f = SpinF.of(f)
    if weights.f != f:
        raise ValueError(f"weights are for F = {weights.f}, evolution has F = {f}")
    if initial is None:
        initial = basis_state(f, 0, "x")
    probs = probabilities_on_grid(f, initial, phases)
    w = weights.per_sublevel()
    return probs.p @ w, probs.dp_dphi @ w


def harmonic_signal(setup: PrecessionSetup, weights: HarmonicWeights) -> tuple[float, float]:
    val, slope = harmonic_on_grid(setup.f, weights, [setup.phase], setup.initial)
    return float(val[0]), float(slope[0])

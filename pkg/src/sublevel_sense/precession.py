"""Sublevel populations during precession about z and their phase sensitivity.

The initial state is prepared along x and measured along x.  Every quantity
comes with an analytic derivative with respect to the precession phase; the
uncertainty of a projective measurement is its projection noise divided by
that slope.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spin import SpinF, StateVector, basis_state, quarter_turn

SLOPE_FLOOR = 1e-12
PROB_SLACK = 1e-12


@dataclass(frozen=True)
class PrecessionSetup:
    f: SpinF
    initial: StateVector
    phase: float = 0.0

    def __post_init__(self):
        if self.initial.f != self.f:
            raise ValueError(f"initial state has F = {self.initial.f}, setup has F = {self.f}")

    @classmethod
    def from_sublevel(cls, f, m, phase: float = 0.0) -> "PrecessionSetup":
        """Start in the F_x eigenstate ``|F, m>_x``."""
        f = SpinF.of(f)
        return cls(f, basis_state(f, m, "x"), float(phase))

    def at(self, phase: float) -> "PrecessionSetup":
        return PrecessionSetup(self.f, self.initial, float(phase))


@dataclass(frozen=True)
class SublevelProbabilities:
    """``p[..., k]`` and ``dp_dphi[..., k]`` for sublevel index ``k`` (m descending)."""

    p: np.ndarray
    dp_dphi: np.ndarray


def _check_spin(f: SpinF, initial: StateVector) -> None:
    if initial.f != f:
        raise ValueError(f"initial state has F = {initial.f}, evolution has F = {f}")


def x_amplitudes(f: SpinF, initial: StateVector, phases) -> tuple[np.ndarray, np.ndarray]:
    """x-basis amplitudes and their phase derivatives, shape ``(len(phases), 2F+1)``.

    Rotate to z, apply ``exp(-i m phi)``, rotate back.  The phase factor is
    split as ``1 + expm1(-i m phi)`` so that at small phases the identity part
    maps back onto the initial x amplitudes exactly instead of through a sum
    of O(1) terms that cancel.
    """
    _check_spin(f, initial)
    d = quarter_turn(f)
    phases = np.atleast_1d(np.asarray(phases, dtype=float))
    z0 = initial.in_basis("z")
    x0 = initial.in_basis("x")
    arg = -1j * np.outer(phases, f.ms)
    amps = x0 + (np.expm1(arg) * z0) @ d
    damps = (-1j * f.ms * np.exp(arg) * z0) @ d
    return amps, damps


def z_amplitudes(f: SpinF, initial: StateVector, phases) -> tuple[np.ndarray, np.ndarray]:
    _check_spin(f, initial)
    phases = np.atleast_1d(np.asarray(phases, dtype=float))
    rot = np.exp(-1j * np.outer(phases, f.ms)) * initial.in_basis("z")
    return rot, -1j * f.ms * rot


def probabilities_from_amplitudes(amps, damps) -> tuple[np.ndarray, np.ndarray]:
    p = np.abs(amps) ** 2
    if p.size and (p.min() < -PROB_SLACK or p.max() > 1 + PROB_SLACK):
        raise ArithmeticError(f"probability outside [0, 1]: range [{p.min()}, {p.max()}]")
    dp = 2.0 * np.real(np.conj(amps) * damps)
    return np.clip(p, 0.0, 1.0), dp


def probabilities_on_grid(f, initial: StateVector, phases) -> SublevelProbabilities:
    f = SpinF.of(f)
    p, dp = probabilities_from_amplitudes(*x_amplitudes(f, initial, phases))
    return SublevelProbabilities(p, dp)


def sublevel_probabilities(setup: PrecessionSetup) -> SublevelProbabilities:
    grid = probabilities_on_grid(setup.f, setup.initial, [setup.phase])
    return SublevelProbabilities(grid.p[0], grid.dp_dphi[0])


def complement(p: np.ndarray) -> np.ndarray:
    """``1 - p[..., k]`` computed as the sum of the *other* entries.

    Avoids the cancellation of ``1 - p`` when ``p`` is within rounding of 1,
    which is exactly where the projection noise is smallest.
    """
    zero = np.zeros_like(p[..., :1])
    head = np.concatenate([zero, np.cumsum(p[..., :-1], axis=-1)], axis=-1)
    tail = np.concatenate([np.cumsum(p[..., :0:-1], axis=-1)[..., ::-1], zero], axis=-1)
    return head + tail


def inverse_uncertainty(p, q, slope) -> np.ndarray:
    """``|slope| / sqrt(p q)``, zero where the slope vanishes (no information)."""
    p, q, slope = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (p, q, slope)))
    out = np.zeros(p.shape)
    live = np.abs(slope) >= SLOPE_FLOOR
    noise = np.sqrt(np.clip(p * q, 0.0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        out[live] = np.abs(slope[live]) / noise[live]
    return out


def to_uncertainty(inv) -> np.ndarray | float:
    """Map inverse uncertainties to uncertainties, with ``inf`` for zero information."""
    inv = np.asarray(inv, dtype=float)
    with np.errstate(divide="ignore"):
        out = np.where(inv > 0, 1.0 / np.where(inv > 0, inv, 1.0), np.inf)
    return out if out.ndim else float(out)


def single_level_inverse_on_grid(f, initial: StateVector, phases) -> np.ndarray:
    """``1/dphi_m`` for every sublevel at every phase, shape ``(N, 2F+1)``."""
    probs = probabilities_on_grid(f, initial, phases)
    return inverse_uncertainty(probs.p, complement(probs.p), probs.dp_dphi)


def single_level_uncertainty(setup: PrecessionSetup, m) -> float:
    """``sqrt(p - p^2) / |dp/dphi|`` for sublevel ``m``; ``inf`` at zero slope."""
    k = setup.f.index(m)
    inv = single_level_inverse_on_grid(setup.f, setup.initial, [setup.phase])[0, k]
    return to_uncertainty(inv)


@dataclass(frozen=True)
class FxExpectation:
    value: float
    variance: float
    d_value_dphi: float

    @property
    def uncertainty(self) -> float:
        if abs(self.d_value_dphi) < SLOPE_FLOOR:
            return float("inf")
        return float(np.sqrt(max(self.variance, 0.0)) / abs(self.d_value_dphi))


def fx_on_grid(f, initial: StateVector, phases) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    f = SpinF.of(f)
    probs = probabilities_on_grid(f, initial, phases)
    ms = f.ms
    mean = probs.p @ ms
    var = np.sum(probs.p * (ms - mean[:, None]) ** 2, axis=-1)
    return mean, var, probs.dp_dphi @ ms


def expectation_fx(setup: PrecessionSetup) -> FxExpectation:
    mean, var, slope = fx_on_grid(setup.f, setup.initial, [setup.phase])
    return FxExpectation(float(mean[0]), float(var[0]), float(slope[0]))


def fx_inverse_on_grid(f, initial: StateVector, phases) -> np.ndarray:
    mean, var, slope = fx_on_grid(f, initial, phases)
    return inverse_uncertainty(var, 1.0, slope)

"""Full sensitivity of measuring every sublevel, via a chain of collapses.

Measuring all ``2F+1`` populations is treated as a sequence of yes/no
measurements.  After each null outcome the remaining amplitudes are
renormalized, so every later step is independent of the earlier ones and the
step sensitivities add in inverse quadrature.  The last sublevel is found with
certainty and carries no information.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .precession import (
    PrecessionSetup,
    complement,
    inverse_uncertainty,
    single_level_inverse_on_grid,
    to_uncertainty,
    x_amplitudes,
)
from .spin import SpinF, StateVector, basis_state, format_m

EXHAUSTED = 1e-12


@dataclass(frozen=True)
class SequentialStep:
    measured_m: str
    occurrence_weight: float
    conditional_p: float
    conditional_slope: float
    delta_phi: float


@dataclass(frozen=True)
class UncertaintyReport:
    phase: float
    per_level: np.ndarray
    steps: tuple[SequentialStep, ...]
    combined: float

    @property
    def inverse_combined(self) -> float:
        return 0.0 if np.isinf(self.combined) else 1.0 / self.combined


@dataclass(frozen=True)
class SequentialArrays:
    """Vectorised chain results over a phase grid; step axis follows ``order``."""

    order: tuple[int, ...]
    weight: np.ndarray
    conditional_p: np.ndarray
    conditional_slope: np.ndarray
    inverse: np.ndarray

    @property
    def inverse_combined(self) -> np.ndarray:
        return np.sqrt(np.sum(self.inverse**2, axis=-1))


def _order_indices(f: SpinF, order) -> tuple[int, ...]:
    if order is None:
        return tuple(range(f.dim))
    idx = tuple(f.index(m) for m in order)
    if sorted(idx) != list(range(f.dim)):
        raise ValueError(
            f"measurement order must be a permutation of all {f.dim} sublevels of F = {f}, got {list(order)}"
        )
    return idx


def sequential_on_grid(f, initial: StateVector, phases, order=None) -> SequentialArrays:
    """Run the collapse chain at every phase in ``phases``.

    ``order`` lists sublevels ``m`` in measurement order (default ``+F`` down).
    The last entry of every array is the final, certain step (zero information).
    """
    f = SpinF.of(f)
    idx = _order_indices(f, order)
    amps, damps = x_amplitudes(f, initial, phases)
    amps, damps = amps[:, idx], damps[:, idx]
    p = np.abs(amps) ** 2
    dp = 2.0 * np.real(np.conj(amps) * damps)
    n_phase, n = p.shape

    weight = np.zeros((n_phase, n))
    cond_p = np.zeros((n_phase, n))
    cond_slope = np.zeros((n_phase, n))
    inverse = np.zeros((n_phase, n))
    for k in range(n):
        rest = p[:, k:]
        remaining = rest.sum(axis=-1)  # summed over the unmeasured levels, not 1 - sum(measured)
        d_remaining = dp[:, k:].sum(axis=-1)
        alive = remaining > EXHAUSTED
        safe = np.where(alive, remaining, 1.0)
        # collapsed amplitude a' = a / sqrt(R) and its derivative by the quotient rule
        a_c = amps[:, k] / np.sqrt(safe)
        da_c = damps[:, k] / np.sqrt(safe) - amps[:, k] * d_remaining / (2.0 * safe**1.5)
        pc = np.abs(a_c) ** 2
        qc = complement(rest)[:, 0] / safe
        slope = 2.0 * np.real(np.conj(a_c) * da_c)
        weight[:, k] = np.where(alive, remaining, 0.0)
        cond_p[:, k] = np.where(alive, pc, 0.0)
        cond_slope[:, k] = np.where(alive, slope, 0.0)
        if k < n - 1:
            info = inverse_uncertainty(pc, qc, slope) ** 2 * remaining
            inverse[:, k] = np.where(alive, np.sqrt(info), 0.0)
        else:
            cond_p[:, k] = np.where(alive, 1.0, 0.0)
            cond_slope[:, k] = 0.0
    return SequentialArrays(idx, weight, cond_p, cond_slope, inverse)


def sequential_uncertainties(setup: PrecessionSetup, order=None) -> UncertaintyReport:
    return _reports(setup.f, setup.initial, [setup.phase], order)[0]


def combined_uncertainty_scan(setup: PrecessionSetup, phases, order=None) -> list[UncertaintyReport]:
    return _reports(setup.f, setup.initial, phases, order)


def combined_inverse_on_grid(f, initial: StateVector, phases, order=None) -> np.ndarray:
    return sequential_on_grid(f, initial, phases, order).inverse_combined


def _reports(f, initial, phases, order) -> list[UncertaintyReport]:
    f = SpinF.of(f)
    phases = np.atleast_1d(np.asarray(phases, dtype=float))
    seq = sequential_on_grid(f, initial, phases, order)
    per_level = to_uncertainty(single_level_inverse_on_grid(f, initial, phases))
    labels = [format_m(f.twice_ms[k]) for k in seq.order]
    step_dphi = to_uncertainty(seq.inverse)
    combined = to_uncertainty(seq.inverse_combined)
    out = []
    for i, phase in enumerate(phases):
        steps = tuple(
            SequentialStep(
                labels[k],
                float(seq.weight[i, k]),
                float(seq.conditional_p[i, k]),
                float(seq.conditional_slope[i, k]),
                float(step_dphi[i, k]),
            )
            for k in range(f.dim)
        )
        out.append(UncertaintyReport(float(phase), per_level[i], steps, float(combined[i])))
    return out


@dataclass(frozen=True)
class ScalingRow:
    f: SpinF
    larmor: float
    combined: float
    optimal: float

    @property
    def start_m(self) -> str:
        return "0" if self.f.is_integer else "1/2"


GENERIC_PHASE = 0.7


def scaling_table(f_max, phase: float = GENERIC_PHASE) -> list[ScalingRow]:
    """Larmor, combined and optimal uncertainties for every ``F <= f_max``.

    The combined value starts from ``|F,0>_x`` (integer F) or ``|F,1/2>_x``
    (half-integer F) and is evaluated at a single generic phase, where it is
    phase independent.
    """
    f_max = SpinF.of(f_max)
    rows = []
    for twice_f in range(1, f_max.twice_f + 1):
        f = SpinF(twice_f)
        start = basis_state(f, 0 if f.is_integer else 0.5, "x")
        inv = combined_inverse_on_grid(f, start, [phase])[0]
        rows.append(
            ScalingRow(
                f,
                larmor=1.0 / math.sqrt(2 * f.value),
                combined=float(to_uncertainty(inv)),
                optimal=1.0 / (2 * f.value),
            )
        )
    return rows


"""Precession about a field tilted away from z by an angle gamma.

A rotation by ``phi`` about the tilted axis carries the preparation axis x to
some x'.  Measurements in the original x basis only see the angle ``beta``
between x and x', which for a tilt inside the x-z plane obeys
``sin(beta/2) = sin(phi/2) cos(gamma)``.  For a tilt inside the y-z plane the
rotation axis stays perpendicular to x and ``beta = phi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .numerics import evolve
from .precession import SublevelProbabilities, probabilities_from_amplitudes
from .spin import SpinF, StateVector, operator_fx, operator_fy, operator_fz, quarter_turn, wigner_small_d

Azimuth = Literal["x", "y"]


@dataclass(frozen=True)
class TiltedFieldSetup:
    f: SpinF
    initial: StateVector
    gamma: float
    azimuth: Azimuth = "x"
    phase: float = 0.0

    def __post_init__(self):
        if not 0 <= self.gamma < math.pi / 2:
            raise ValueError(f"gamma must lie in [0, pi/2), got {self.gamma}")
        if self.azimuth not in ("x", "y"):
            raise ValueError(f"azimuth must be 'x' or 'y', got {self.azimuth!r}")

    @property
    def axis(self) -> np.ndarray:
        s, c = math.sin(self.gamma), math.cos(self.gamma)
        return np.array([s, 0.0, c]) if self.azimuth == "x" else np.array([0.0, s, c])


def beta_from_phi(phi, gamma: float):
    """Angle between x and its image after rotating by ``phi`` about the x-z tilted axis.

    ``2 arcsin(sin(phi/2) cos(gamma))``, folded into ``[0, pi]``: symmetric
    about ``phi = pi`` and never entering ``(pi - 2 gamma, pi + 2 gamma)``.
    """
    phi = np.asarray(phi, dtype=float)
    s = np.abs(np.sin(phi / 2)) * math.cos(gamma)
    beta = 2.0 * np.arcsin(np.clip(s, 0.0, 1.0))
    return float(beta) if beta.ndim == 0 else beta


def rotate_vector(v, axis, angle: float) -> np.ndarray:
    """Rodrigues rotation of a 3-vector about a unit axis."""
    v, k = np.asarray(v, dtype=float), np.asarray(axis, dtype=float)
    k = k / np.linalg.norm(k)
    return v * math.cos(angle) + np.cross(k, v) * math.sin(angle) + k * np.dot(k, v) * (1 - math.cos(angle))


def tilted_hamiltonian(f, gamma: float, azimuth: Azimuth = "x") -> np.ndarray:
    """``sin(gamma) F_a + cos(gamma) F_z``: unit-frequency precession about the tilted axis."""
    f = SpinF.of(f)
    transverse = operator_fx(f) if azimuth == "x" else operator_fy(f)
    return math.sin(gamma) * transverse + math.cos(gamma) * operator_fz(f)


def tilted_on_grid(setup: TiltedFieldSetup, phases) -> np.ndarray:
    """x-basis populations after rotating by each phase, shape ``(N, 2F+1)``.

    Evolution for unit time under ``(phi / 2 pi) n.F`` rotates by exactly ``phi``.
    """
    f = setup.f
    phases = np.atleast_1d(np.asarray(phases, dtype=float))
    h = tilted_hamiltonian(f, setup.gamma, setup.azimuth)
    stack = phases[:, None, None] / (2 * math.pi) * h
    psi = evolve(stack, 1.0, setup.initial.in_basis("z"))
    amps = psi @ quarter_turn(f)
    p, _ = probabilities_from_amplitudes(amps, np.zeros_like(amps))
    return p


def tilted_precession(setup: TiltedFieldSetup) -> SublevelProbabilities:
    """Populations at ``setup.phase``, with slopes by central differences.

    The exact rotation is built by diagonalization, so the slope here is a
    numerical one (step 1e-6); the analytic slopes live in ``precession``.
    """
    h = 1e-6
    p = tilted_on_grid(setup, [setup.phase - h, setup.phase, setup.phase + h])
    return SublevelProbabilities(p[1], (p[2] - p[0]) / (2 * h))


def remapped_populations(f, m0, betas) -> np.ndarray:
    """``|d^F_{m, m0}(beta)|^2`` for each beta: populations of the untilted fringe at beta."""
    f = SpinF.of(f)
    col = f.index(m0)
    return np.array([wigner_small_d(f, b)[:, col] ** 2 for b in np.atleast_1d(betas)])

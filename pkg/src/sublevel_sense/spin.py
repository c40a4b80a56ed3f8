"""Angular-momentum operators, basis states and Wigner small-d matrices.

Conventions used everywhere in the package:

* sublevels are ordered ``m = +F, F-1, ..., -F`` (index 0 is ``m = +F``);
* half-integers are carried as twice-valued integers (``twice_f``, ``twice_m``);
* rotations about ``y`` are real; complex phases only enter through evolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Literal

import numpy as np

Axis = Literal["x", "z"]


@dataclass(frozen=True, order=True)
class SpinF:
    """Total angular momentum ``F``, stored exactly as ``2F``."""

    twice_f: int

    def __post_init__(self):
        if not isinstance(self.twice_f, (int, np.integer)) or self.twice_f < 1:
            raise ValueError(f"twice_f must be a positive integer, got {self.twice_f!r}")
        object.__setattr__(self, "twice_f", int(self.twice_f))

    @classmethod
    def of(cls, f) -> "SpinF":
        """Build from ``3``, ``1.5``, ``"7/2"`` or ``Fraction(7, 2)``."""
        if isinstance(f, SpinF):
            return f
        return cls(_twice(f, "F"))

    @property
    def dim(self) -> int:
        return self.twice_f + 1

    @property
    def value(self) -> float:
        return self.twice_f / 2

    @property
    def is_integer(self) -> bool:
        return self.twice_f % 2 == 0

    @property
    def twice_ms(self) -> tuple[int, ...]:
        return tuple(range(self.twice_f, -self.twice_f - 1, -2))

    @property
    def ms(self) -> np.ndarray:
        return np.arange(self.twice_f, -self.twice_f - 1, -2) / 2.0

    def index(self, m) -> int:
        """Position of sublevel ``m`` in the descending ordering."""
        twice_m = _twice(m, "m")
        if abs(twice_m) > self.twice_f or (twice_m - self.twice_f) % 2:
            raise ValueError(f"m = {format_m(twice_m)} is not a sublevel of F = {self}")
        return (self.twice_f - twice_m) // 2

    def __str__(self) -> str:
        return format_m(self.twice_f, signed=False)


def _twice(x, name: str) -> int:
    if isinstance(x, (int, np.integer)):
        return 2 * int(x)
    doubled = 2 * (Fraction(x) if isinstance(x, (str, Fraction)) else Fraction(float(x)))
    if doubled.denominator != 1:
        raise ValueError(f"{name} = {x!r} is not an integer or half-integer")
    return int(doubled)


def format_m(twice_m: int, signed: bool = True) -> str:
    """``+3``, ``-1/2``, ``0``; used for CSV column names and messages."""
    if twice_m % 2:
        body = f"{abs(twice_m)}/2"
    else:
        body = str(abs(twice_m) // 2)
    if twice_m == 0 or not signed:
        return body if twice_m >= 0 else "-" + body
    return ("+" if twice_m > 0 else "-") + body


@dataclass(frozen=True)
class StateVector:
    """Normalized amplitudes over the ``2F+1`` sublevels of a given axis."""

    f: SpinF
    basis_axis: Axis
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (self.f.dim,):
            raise ValueError(f"expected {self.f.dim} amplitudes for F = {self.f}, got shape {amps.shape}")
        if self.basis_axis not in ("x", "z"):
            raise ValueError(f"basis_axis must be 'x' or 'z', got {self.basis_axis!r}")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"state is not normalized: sum |a|^2 = {norm!r}")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, f, basis_axis: Axis, amplitudes) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex)
        return cls(SpinF.of(f), basis_axis, amps / np.linalg.norm(amps))

    def in_basis(self, axis: Axis) -> np.ndarray:
        """Amplitudes expressed along ``axis`` (x amplitudes are ``d(pi/2)^T`` z amplitudes)."""
        if axis == self.basis_axis:
            return self.amplitudes.copy()
        d = quarter_turn(self.f)
        if axis == "z":
            return d @ self.amplitudes
        return d.T @ self.amplitudes


def operator_fz(f) -> np.ndarray:
    f = SpinF.of(f)
    return np.diag(f.ms).astype(complex)


def _raising(f: SpinF) -> np.ndarray:
    ms = f.ms
    j = f.value
    up = np.zeros((f.dim, f.dim))
    # <m+1| F_+ |m>: column of m, row one above (index decreases with m)
    for col in range(1, f.dim):
        m = ms[col]
        up[col - 1, col] = math.sqrt(j * (j + 1) - m * (m + 1))
    return up


def operator_fx(f) -> np.ndarray:
    up = _raising(SpinF.of(f))
    return ((up + up.T) / 2).astype(complex)


def operator_fy(f) -> np.ndarray:
    up = _raising(SpinF.of(f))
    return (up - up.T) / 2j


def wigner_small_d(f, beta: float) -> np.ndarray:
    """Real matrix ``d^F_{m'm}(beta)`` from the explicit Wigner sum.

    Rows are indexed by ``m'`` and columns by ``m``, both descending.
    Factorials go through ``lgamma`` so large ``F`` does not overflow, and
    each element's terms are summed with ``math.fsum``.
    """
    f = SpinF.of(f)
    return _small_d(f.twice_f, float(beta)).copy()


@lru_cache(maxsize=256)
def _small_d(twice_f: int, beta: float) -> np.ndarray:
    tj = twice_f
    cos_h, sin_h = math.cos(beta / 2), math.sin(beta / 2)
    tms = range(tj, -tj - 1, -2)
    lf = [math.lgamma(k + 1) for k in range(tj + 1)]
    out = np.zeros((tj + 1, tj + 1))
    for row, tmp in enumerate(tms):
        for col, tm in enumerate(tms):
            # integer versions of j+m', j-m', j+m, j-m
            jpmp, jmmp = (tj + tmp) // 2, (tj - tmp) // 2
            jpm, jmm = (tj + tm) // 2, (tj - tm) // 2
            dm = (tmp - tm) // 2  # m' - m
            root = 0.5 * (lf[jpmp] + lf[jmmp] + lf[jpm] + lf[jmm])
            terms = []
            for k in range(max(0, -dm), min(jpm, jmmp) + 1):
                log_mag = root - (lf[jpm - k] + lf[k] + lf[jmmp - k] + lf[k + dm])
                cos_pow = tj - 2 * k - dm
                sin_pow = 2 * k + dm
                sign = -1.0 if (k + dm) % 2 else 1.0
                terms.append(sign * math.exp(log_mag) * cos_h**cos_pow * sin_h**sin_pow)
            out[row, col] = math.fsum(sorted(terms, key=abs))
    out.flags.writeable = False
    return out


def quarter_turn(f) -> np.ndarray:
    """Cached read-only ``d(pi/2)``; its columns are the F_x eigenstates in the z basis."""
    return _small_d(SpinF.of(f).twice_f, math.pi / 2)


def basis_state(f, m, axis: Axis = "x") -> StateVector:
    f = SpinF.of(f)
    amps = np.zeros(f.dim, dtype=complex)
    amps[f.index(m)] = 1.0
    if axis not in ("x", "z"):
        raise ValueError(f"axis must be 'x' or 'z', got {axis!r}")
    return StateVector(f, axis, amps)

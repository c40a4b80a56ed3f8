"""Zeeman plus tensor-Stark Hamiltonian and the bias-field fringe scan.

The tensor Stark shift is modelled as ``E(m) = e1 m^2`` (zero at ``m = 0``).
A transverse field couples neighbouring sublevels, splits the ``+-m``
degeneracies and distorts the even-parity fringe.  A large bias along z
restores the transverse-free fringe; ``robustness_threshold`` locates where.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Literal

import mpmath
import numpy as np
from scipy.optimize import brentq

from .numerics import ExtremaList, eigh, evolve, find_extrema
from .observables import even_mask, even_parity_on_grid
from .spin import SpinF, basis_state, operator_fx, operator_fy, operator_fz, quarter_turn

Azimuth = Literal["x", "y"]

SAMPLES_PER_PERIOD = 20
GRID_SLACK = 1e-9
THREADS_ENV = "SUBLEVEL_SENSE_THREADS"
_SCAN_CHUNK = 4096


class AmbiguousStretchedPair(ArithmeticError):
    """The eigenvectors no longer single out a ``|+-F>`` pair."""


class ScanTooShort(ValueError):
    """The scan ends before the fringe differences settle."""


@dataclass(frozen=True)
class EdmConfig:
    f: SpinF = SpinF(6)
    stark_e1: float = 5.0
    transverse: float = 10.0
    transverse_azimuth: Azimuth = "x"
    bias: float = 0.0
    tau: float = 3.0

    def __post_init__(self):
        for name in ("stark_e1", "transverse", "bias", "tau"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite, got {getattr(self, name)}")
        if self.tau <= 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.transverse_azimuth not in ("x", "y"):
            raise ValueError(f"transverse_azimuth must be 'x' or 'y', got {self.transverse_azimuth!r}")

    def with_bias(self, bias: float) -> "EdmConfig":
        return EdmConfig(self.f, self.stark_e1, self.transverse, self.transverse_azimuth, float(bias), self.tau)


def stark_energies(f, stark_e1: float) -> np.ndarray:
    if stark_e1 < 0:
        raise ValueError(f"stark_e1 must be >= 0, got {stark_e1}")
    return stark_e1 * SpinF.of(f).ms ** 2


def _transverse_operator(f: SpinF, azimuth: Azimuth) -> np.ndarray:
    return operator_fx(f) if azimuth == "x" else operator_fy(f)


def edm_hamiltonian(cfg: EdmConfig) -> np.ndarray:
    """``bias F_z + transverse F_a + diag(e1 m^2)`` in the z basis (Hz)."""
    f = cfg.f
    return (
        cfg.bias * operator_fz(f)
        + cfg.transverse * _transverse_operator(f, cfg.transverse_azimuth)
        + np.diag(stark_energies(f, cfg.stark_e1))
    )


def eigen_spectrum_scan(f, stark_e1: float, transverse_grid) -> np.ndarray:
    """Sorted eigenvalues of ``e1 m^2 + b F_x`` over ``b`` in ``transverse_grid``, in units of e1."""
    if stark_e1 == 0:
        raise ValueError("stark_e1 must be nonzero to scale the spectrum")
    f = SpinF.of(f)
    grid = np.atleast_1d(np.asarray(transverse_grid, dtype=float))
    stark = np.diag(stark_energies(f, abs(stark_e1))).astype(complex)
    stack = stark + grid[:, None, None] * operator_fx(f)
    return eigh(stack).eigenvalues / stark_e1


def stretched_splitting(f, stark_e1: float, transverse: float, *, dps: int = 50, weight_min: float = 0.5) -> float:
    """Energy gap (Hz) of the eigenpair connected to ``m = +-F``.

    The gap scales as ``transverse^(2F)`` and drops below double-precision
    resolution of the ~``e1 F^2`` eigenvalues well before the small-field
    regime, so the diagonalization runs in ``dps``-digit arithmetic.
    """
    f = SpinF.of(f)
    if transverse < 0 or stark_e1 <= 0:
        raise ValueError(f"need transverse >= 0 and stark_e1 > 0, got {transverse}, {stark_e1}")
    if transverse == 0:
        return 0.0
    n = f.dim
    with mpmath.workdps(dps):
        e1, b = mpmath.mpf(stark_e1), mpmath.mpf(transverse)
        h = mpmath.zeros(n, n)
        for i in range(n):
            m = mpmath.mpf(f.twice_ms[i]) / 2
            h[i, i] = e1 * m * m
            if i + 1 < n:
                # <m|F_x|m-1> = sqrt(F(F+1) - m(m-1)) / 2
                j = mpmath.mpf(f.twice_f) / 2
                h[i, i + 1] = h[i + 1, i] = b * mpmath.sqrt(j * (j + 1) - m * (m - 1)) / 2
        vals, vecs = mpmath.eigsy(h)
        weights = [float(vecs[0, k] ** 2 + vecs[n - 1, k] ** 2) for k in range(n)]
        ranked = sorted(range(n), key=lambda k: -weights[k])
        top, runner = ranked[:2], ranked[2]
        if min(weights[k] for k in top) <= weight_min or weights[runner] > weight_min:
            raise AmbiguousStretchedPair(
                f"stretched pair not identifiable at transverse/e1 = {transverse / stark_e1:g}: "
                f"|+-F> weights {sorted(weights, reverse=True)[:3]}"
            )
        return float(abs(vals[top[0]] - vals[top[1]]))


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    lx, ly = np.log(np.asarray(xs, dtype=float)), np.log(np.asarray(ys, dtype=float))
    return float(np.polyfit(lx, ly, 1)[0])


@dataclass(frozen=True)
class FringeCurve:
    scan_values: np.ndarray
    observable: np.ndarray
    extrema: ExtremaList
    pv_differences: np.ndarray  # (K, 2): bias midpoint, |peak - valley|

    @property
    def pv_midpoints(self) -> np.ndarray:
        return self.pv_differences[:, 0]

    @property
    def pv_values(self) -> np.ndarray:
        return self.pv_differences[:, 1]


def max_grid_step(f, tau: float) -> float:
    """Largest bias step giving 20 samples per period of the fastest (2F-th) fringe harmonic."""
    return 1.0 / (SpinF.of(f).twice_f * tau * SAMPLES_PER_PERIOD)


def auto_bias_grid(cfg: EdmConfig, start: float, stop: float) -> np.ndarray:
    """Bias values from ``start`` to ``stop`` (inclusive when it lands on the grid) at the maximum step."""
    step = max_grid_step(cfg.f, cfg.tau)
    count = int(math.floor((stop - start) / step * (1 + 1e-12))) + 1
    return start + step * np.arange(count)


def _threads(requested: int | None) -> int:
    if requested is not None:
        if requested < 1:
            raise ValueError(f"thread count must be positive, got {requested}")
        return requested
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return os.cpu_count() or 1
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return value


def _validate_grid(cfg: EdmConfig, grid: np.ndarray) -> None:
    if grid.ndim != 1 or grid.size < 3:
        raise ValueError("bias grid needs at least 3 points")
    steps = np.diff(grid)
    if np.any(steps <= 0):
        raise ValueError("bias grid must be strictly increasing")
    limit = max_grid_step(cfg.f, cfg.tau)
    if steps.max() > limit * (1 + GRID_SLACK):
        raise ValueError(
            f"bias grid step {steps.max():.6g} Hz exceeds {limit:.6g} Hz; extrema detection would alias"
        )


def even_parity_after_evolution(cfg: EdmConfig, biases: np.ndarray) -> np.ndarray:
    """Even-parity probability along x after ``tau`` seconds, from ``|F,0>_x``, for each bias."""
    f = cfg.f
    base = edm_hamiltonian(cfg.with_bias(0.0))
    stack = base + biases[:, None, None] * operator_fz(f)
    psi = evolve(stack, cfg.tau, basis_state(f, 0 if f.is_integer else 0.5, "x").in_basis("z"))
    amps_x = psi @ quarter_turn(f)
    return np.sum(np.abs(amps_x[:, even_mask(f)]) ** 2, axis=-1)


def fringe_scan(cfg: EdmConfig, bias_grid, *, threads: int | None = None) -> FringeCurve:
    """Evolve and measure at every bias, then annotate extrema and peak-valley gaps.

    The grid is split into fixed chunks evaluated on a thread pool; results are
    reassembled in grid order so the output does not depend on scheduling.
    """
    grid = np.asarray(bias_grid, dtype=float)
    _validate_grid(cfg, grid)
    chunks = [grid[i : i + _SCAN_CHUNK] for i in range(0, grid.size, _SCAN_CHUNK)]
    workers = min(_threads(threads), len(chunks))
    if workers == 1:
        parts = [even_parity_after_evolution(cfg, c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda c: even_parity_after_evolution(cfg, c), chunks))
    observable = np.clip(np.concatenate(parts), 0.0, 1.0)
    extrema = find_extrema(grid, observable)
    mid, diff = extrema.peak_valley_differences()
    return FringeCurve(grid, observable, extrema, np.column_stack([mid, diff]))


def ideal_fringe_extrema(f) -> tuple[np.ndarray, np.ndarray]:
    """Extrema positions and values of the transverse-free even-parity fringe over one period.

    The fringe from ``|F,0>_x`` is pi-periodic in the phase; its extrema in
    ``[0, pi)`` are roots of the analytic slope, bracketed on a fine grid and
    refined with Brent's method.
    """
    f = SpinF.of(f)
    start = basis_state(f, 0 if f.is_integer else 0.5, "x")

    def slope(phi):
        return float(even_parity_on_grid(f, start, [phi])[1][0])

    n = 64 * f.dim
    # shift off the symmetric points so no root sits exactly on a bracket end
    offset = 0.5 * math.pi / n
    xs = offset + math.pi * np.arange(n + 1) / n
    s = even_parity_on_grid(f, start, xs)[1]
    roots = [brentq(slope, xs[i], xs[i + 1], xtol=1e-15) for i in range(n) if s[i] * s[i + 1] < 0]
    roots = np.sort(np.mod(roots, math.pi))
    values = even_parity_on_grid(f, start, roots)[0]
    return roots, values


def ideal_pv_values(f, tol: float = 1e-9) -> np.ndarray:
    """Distinct adjacent peak-valley differences of the ideal fringe (the cluster centres)."""
    _, values = ideal_fringe_extrema(f)
    cyclic = np.abs(np.diff(np.append(values, values[0])))
    centres: list[float] = []
    for d in np.sort(cyclic):
        if not centres or d - centres[-1] > tol:
            centres.append(float(d))
    return np.array(centres)


def windowed_std(midpoints, values, width: float, start: float | None = None, stop: float | None = None):
    """Sample std-dev of ``values`` within consecutive windows of ``width`` Hz.

    Returns ``(window_starts, std)``; windows with fewer than two points give NaN.
    """
    midpoints, values = np.asarray(midpoints, dtype=float), np.asarray(values, dtype=float)
    lo = midpoints.min() if start is None else start
    hi = midpoints.max() if stop is None else stop
    edges = lo + width * np.arange(int(math.floor((hi - lo) / width + 1e-9)) + 1)
    stds = []
    for a in edges[:-1]:
        sel = values[(midpoints >= a) & (midpoints < a + width)]
        stds.append(float(np.std(sel, ddof=1)) if sel.size >= 2 else float("nan"))
    return edges[:-1], np.array(stds)


def cluster_deviation(values, centres) -> np.ndarray:
    """Relative distance of each value from its nearest centre."""
    values, centres = np.asarray(values, dtype=float), np.asarray(centres, dtype=float)
    nearest = centres[np.argmin(np.abs(values[:, None] - centres[None, :]), axis=1)]
    return np.abs(values - nearest) / nearest


@dataclass(frozen=True)
class ThresholdResult:
    threshold: float
    tolerance: float
    settle_window: float
    centres: np.ndarray
    curve: FringeCurve


def robustness_threshold(
    cfg: EdmConfig,
    bias_grid,
    *,
    tolerance: float = 0.10,
    settle_window: float = 10.0,
    threads: int | None = None,
    curve: FringeCurve | None = None,
) -> ThresholdResult:
    """Smallest bias above which every peak-valley gap is within ``tolerance`` of a centre.

    Centres are the distinct gaps of the transverse-free fringe (the large-bias
    limit).  The scan must end with at least ``settle_window`` Hz of settled
    gaps, otherwise stabilization cannot be told apart from a lull.
    """
    if curve is None:
        curve = fringe_scan(cfg, bias_grid, threads=threads)
    centres = ideal_pv_values(cfg.f)
    mids, vals = curve.pv_midpoints, curve.pv_values
    if mids.size == 0:
        raise ScanTooShort("no peak-valley pairs in the scan")
    bad = cluster_deviation(vals, centres) > tolerance
    scan_start = float(curve.scan_values[0])
    if not bad.any():
        threshold = scan_start
    else:
        threshold = float(mids[np.flatnonzero(bad)[-1]])
    if float(curve.scan_values[-1]) - threshold < settle_window:
        raise ScanTooShort(
            f"gaps settle only after {threshold:.4g} Hz; scan ends at {curve.scan_values[-1]:.4g} Hz "
            f"(need {settle_window:g} Hz of settled scan)"
        )
    return ThresholdResult(threshold, tolerance, settle_window, centres, curve)

"""Small dense linear-algebra kernels shared by the physics modules.

All routines accept a single matrix ``(n, n)`` or a stack ``(..., n, n)``;
stacked inputs are processed in lock-step so that a sweep over thousands of
7x7 Hamiltonians costs a handful of vectorised numpy operations per Jacobi
rotation rather than a Python loop per matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

HERMITIAN_TOL = 1e-12


class NotHermitianError(ValueError):
    pass


class ConvergenceError(ArithmeticError):
    pass


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues (ascending, last axis) and column eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues[..., None, :]) @ np.conj(np.swapaxes(v, -1, -2))


@dataclass(frozen=True)
class ExtremaList:
    positions: np.ndarray
    values: np.ndarray
    kinds: tuple[str, ...]
    indices: np.ndarray

    def __len__(self) -> int:
        return len(self.kinds)

    def peak_valley_differences(self) -> tuple[np.ndarray, np.ndarray]:
        """Midpoints and absolute value differences of adjacent extrema."""
        mid = 0.5 * (self.positions[1:] + self.positions[:-1])
        return mid, np.abs(np.diff(self.values))


def check_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return ``a`` as a complex array, raising if it is not square Hermitian."""
    a = np.asarray(a, dtype=complex)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2] or a.shape[-1] == 0:
        raise NotHermitianError(f"expected a non-empty square matrix, got shape {a.shape}")
    dev = np.abs(a - np.conj(np.swapaxes(a, -1, -2)))
    worst = float(dev.max())
    if not worst < tol:
        idx = [int(i) for i in np.unravel_index(int(np.argmax(dev)), dev.shape)]
        raise NotHermitianError(
            f"matrix is not Hermitian: |A{idx} - conj(A^T){idx}| = {worst:.3e} "
            f"(tolerance {tol:.1e})"
        )
    return a


def eigh(a, *, tol: float = 1e-13, max_sweeps: int = 100) -> EigenDecomposition:
    """Cyclic Jacobi eigendecomposition of Hermitian matrices.

    Each rotation annihilates one off-diagonal pair ``(p, q)``.  The complex
    phase of ``A[p, q]`` is absorbed into the rotation, so each step is the
    real symmetric Jacobi rotation conjugated by a diagonal phase.  Sweeps stop
    once the off-diagonal Frobenius norm of a matrix is below ``tol * ||A||_F``;
    converged members of a stack drop out of later sweeps.

    Raises:
        NotHermitianError: input is not square or not Hermitian within 1e-12.
        ConvergenceError: ``max_sweeps`` sweeps did not reach the threshold.
    """
    a = check_hermitian(a)
    n = a.shape[-1]
    batch_shape = a.shape[:-2]
    flat = a.reshape(-1, n, n)
    parts = [
        _jacobi_stack(flat[i : i + _CHUNK], tol, max_sweeps)
        for i in range(0, flat.shape[0], _CHUNK)
    ]
    vals = np.concatenate([p[0] for p in parts])
    vecs = np.concatenate([p[1] for p in parts])
    return EigenDecomposition(
        vals.reshape(*batch_shape, n), vecs.reshape(*batch_shape, n, n)
    )


# stacks larger than this are split; keeps the working set cache-resident
_CHUNK = 2048


def _jacobi_stack(flat: np.ndarray, tol: float, max_sweeps: int):
    n = flat.shape[-1]
    flat = 0.5 * (flat + np.conj(np.swapaxes(flat, -1, -2)))
    if not np.any(flat.imag):
        flat = flat.real
    # batch on the last axis keeps every row/column slice contiguous
    work = np.ascontiguousarray(np.moveaxis(flat, 0, -1))
    vecs = np.zeros_like(work)
    vecs[np.arange(n), np.arange(n)] = 1.0
    scale = np.sqrt(np.sum(np.abs(work) ** 2, axis=(0, 1)))
    target = tol * scale
    offdiag = ~np.eye(n, dtype=bool)

    pending = np.arange(work.shape[-1])
    for sweep in range(max_sweeps + 1):
        off = np.sqrt(np.sum(np.abs(work[offdiag][:, pending]) ** 2, axis=0))
        still = off > target[pending]
        if not still.any():
            break
        if sweep == max_sweeps:
            worst = float(np.max(off / np.where(scale[pending] > 0, scale[pending], 1.0)))
            raise ConvergenceError(
                f"Jacobi did not converge in {max_sweeps} sweeps "
                f"(worst off-diagonal ratio {worst:.2e})"
            )
        pending = pending[still]
        sub_a = work[:, :, pending]
        sub_v = vecs[:, :, pending]
        _jacobi_sweep(sub_a, sub_v, 1e-6 * target[pending] / n)
        work[:, :, pending] = sub_a
        vecs[:, :, pending] = sub_v

    vals = np.real(np.diagonal(work, axis1=0, axis2=1))  # (N, n)
    vecs = np.moveaxis(vecs, -1, 0).astype(complex)
    order = np.argsort(vals, axis=-1, kind="stable")
    vals = np.take_along_axis(vals, order, axis=-1)
    vecs = np.take_along_axis(vecs, order[:, None, :], axis=-1)
    return vals, vecs


def _jacobi_sweep(work: np.ndarray, vecs: np.ndarray, negligible: np.ndarray) -> None:
    """One cyclic sweep over all pairs, in place, on (n, n, batch) arrays."""
    n = work.shape[0]
    complex_case = np.iscomplexobj(work)
    for p, q in combinations(range(n), 2):
        g = work[p, q]
        mag = np.abs(g)
        active = mag > negligible
        if not active.any():
            continue
        safe = np.where(active, mag, 1.0)
        alpha, beta = work[p, p].real.copy(), work[q, q].real.copy()
        theta = (beta - alpha) / (2.0 * safe)
        t = np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.hypot(theta, 1.0))
        t = np.where(active, t, 0.0)
        c = 1.0 / np.sqrt(1.0 + t * t)
        s = t * c
        if complex_case:
            e = np.where(active, g / safe, 1.0)
            se, sec = s * e, s * np.conj(e)
        else:
            se = sec = s * np.sign(np.where(active, g, 1.0))

        # A <- A U for the two touched columns; Hermiticity gives the rows.
        col_p = work[:, p].copy()
        col_q = work[:, q]
        work[:, p] = c * col_p - sec * col_q
        work[:, q] = se * col_p + c * col_q
        work[p, :] = np.conj(work[:, p]) if complex_case else work[:, p]
        work[q, :] = np.conj(work[:, q]) if complex_case else work[:, q]
        shift = t * mag
        work[p, p] = alpha - shift
        work[q, q] = beta + shift
        work[p, q] = 0.0
        work[q, p] = 0.0

        col_p = vecs[:, p].copy()
        col_q = vecs[:, q]
        vecs[:, p] = c * col_p - sec * col_q
        vecs[:, q] = se * col_p + c * col_q


def evolve(h, t: float, psi, *, decomposition: EigenDecomposition | None = None) -> np.ndarray:
    """Propagate ``psi`` under ``h`` (entries in Hz) for ``t`` seconds.

    Returns ``V exp(-2 pi i Lambda t) V^dagger psi``.  ``h`` may be a stack of
    Hamiltonians, in which case ``psi`` is broadcast against the stack.
    """
    psi = np.asarray(psi, dtype=complex)
    dec = decomposition if decomposition is not None else eigh(h)
    n = dec.eigenvalues.shape[-1]
    if psi.shape[-1] != n:
        raise ValueError(f"state has dimension {psi.shape[-1]}, Hamiltonian has {n}")
    v = dec.eigenvectors
    coeff = np.einsum("...ji,...j->...i", np.conj(v), psi)
    coeff = coeff * np.exp(-2j * np.pi * dec.eigenvalues * t)
    return np.einsum("...ij,...j->...i", v, coeff)


def find_extrema(xs, ys, *, plateau_tol: float = 1e-12) -> ExtremaList:
    """Interior local maxima and minima of a sampled curve.

    Runs of neighbouring samples equal within ``plateau_tol`` are collapsed to
    their middle sample before the three-point comparison.  Extrema touching
    either end of the sample range are never reported.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError(f"xs and ys must be 1-D of equal length, got {xs.shape} and {ys.shape}")
    if len(xs) < 3:
        raise ValueError(f"need at least 3 samples, got {len(xs)}")
    if np.any(np.diff(xs) <= 0):
        raise ValueError("xs must be strictly increasing")

    breaks = np.flatnonzero(np.abs(np.diff(ys)) > plateau_tol) + 1
    starts = np.concatenate(([0], breaks))
    ends = np.concatenate((breaks - 1, [len(ys) - 1]))
    level = ys[starts]
    if len(starts) < 3:
        empty = np.array([], dtype=int)
        return ExtremaList(xs[empty], ys[empty], (), empty)
    inner = slice(1, -1)
    prev, here, nxt = level[:-2], level[1:-1], level[2:]
    is_peak = (here > prev) & (here > nxt)
    is_valley = (here < prev) & (here < nxt)
    keep = is_peak | is_valley
    mids = ((starts[inner] + ends[inner]) // 2)[keep]
    kinds = tuple("peak" if pk else "valley" for pk in is_peak[keep])
    return ExtremaList(xs[mids], ys[mids], kinds, mids)

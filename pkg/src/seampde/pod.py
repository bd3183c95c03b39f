"""Gram-matrix eigenanalysis and rank-1 POD basis extraction.

The eigensolver is a cyclic Jacobi iteration on the (n+1)x(n+1) Gram
matrix of a snapshot block; snapshot counts stay small (n <= 1000 in
every built-in scenario) so a full decomposition is cheap. Rotations
below an absolute threshold tied to the matrix scale are skipped, which
makes sweeps on near-rank-1 Gram matrices essentially free after the
first pass.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from seampde.errors import DegenerateSnapshotError

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    njit = None


def _jacobi_kernel(a, v, tol):
    n = a.shape[0]
    sweeps = 0
    rotated = True
    while rotated and sweeps < 50:
        rotated = False
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= tol:
                    continue
                rotated = True
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if theta >= 0.0:
                    t = 1.0 / (theta + math.sqrt(1.0 + theta * theta))
                else:
                    t = -1.0 / (-theta + math.sqrt(1.0 + theta * theta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
    return sweeps


if njit is not None:
    _jacobi_kernel = njit(cache=True)(_jacobi_kernel)


def jacobi_eigh(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Full symmetric eigendecomposition by cyclic Jacobi rotations.

    Returns (eigenvalues, eigenvectors) in descending eigenvalue order;
    column j of the eigenvector matrix belongs to eigenvalue j.
    """
    a = np.array(matrix, dtype=float, order="C")
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError(f"matrix must be square, got {a.shape}")
    v = np.eye(n)
    scale = np.linalg.norm(a)
    if scale > 0.0:
        _jacobi_kernel(a, v, 1e-15 * scale)
    values = np.diag(a).copy()
    order = np.argsort(values)[::-1]
    return values[order], v[:, order]


@dataclass(frozen=True)
class GramSpectrum:
    """Eigenvalues of one snapshot block's Gram matrix, plus the top eigenvector."""

    segment: int | None
    eigenvalues: np.ndarray  # descending, clamped at zero
    leading_vector: np.ndarray  # unit norm, largest-magnitude entry positive

    def __post_init__(self):
        self.eigenvalues.setflags(write=False)
        self.leading_vector.setflags(write=False)


@dataclass(frozen=True)
class PodBasis:
    """Rank-1 POD basis: unit vector, its eigenvalue, and the Gram weights."""

    vector: np.ndarray
    lam0: float
    weights: np.ndarray
    rank: int = 1

    def __post_init__(self):
        self.vector.setflags(write=False)
        self.weights.setflags(write=False)


def gram(segment: np.ndarray) -> np.ndarray:
    """Exact symmetric product X = segment^T segment."""
    segment = np.asarray(segment, dtype=float)
    if segment.ndim != 2 or segment.shape[1] == 0:
        raise ValueError("segment must be a nonempty 2-d column block")
    return segment.T @ segment


def eig_descending(x: np.ndarray, k: int | None = None,
                   segment: int | None = None) -> GramSpectrum:
    """Descending eigenvalues of a symmetric matrix, clamped at zero.

    Asymmetry beyond 1e-10 relative is rejected; eigenvalues below
    -1e-12 * trace are treated as a numerical fault rather than clamped.
    """
    x = np.asarray(x, dtype=float)
    scale = np.abs(x).max() if x.size else 0.0
    if scale > 0 and np.abs(x - x.T).max() > 1e-10 * scale:
        raise ValueError("matrix is not symmetric")
    if k is not None and not 1 <= k <= x.shape[0]:
        raise ValueError(f"k must be in 1..{x.shape[0]}, got {k}")
    values, vectors = jacobi_eigh(x)
    floor = -1e-12 * max(np.trace(x), 0.0)
    if values.min(initial=0.0) < floor:
        raise ValueError(
            f"eigenvalue {values.min():.3e} below the clamp floor {floor:.3e}; "
            "input is not numerically positive semi-definite"
        )
    values = np.maximum(values, 0.0)
    b0 = vectors[:, 0]
    if b0[np.argmax(np.abs(b0))] < 0:
        b0 = -b0
    if k is not None:
        values = values[:k]
    return GramSpectrum(segment, values, b0.copy())


def pod_basis(segment_data: np.ndarray, spectrum: GramSpectrum | None = None) -> PodBasis:
    """Rank-1 basis (1/sqrt(lam0)) * segment @ b0; unit 2-norm by construction."""
    segment_data = np.asarray(segment_data, dtype=float)
    if spectrum is None:
        spectrum = eig_descending(gram(segment_data))
    lam0 = float(spectrum.eigenvalues[0])
    trace = float(np.einsum("ij,ij->", segment_data, segment_data))
    if lam0 <= np.finfo(float).eps * trace or trace == 0.0:
        raise DegenerateSnapshotError(
            "snapshot block is numerically zero; no POD basis exists"
        )
    beta = segment_data @ spectrum.leading_vector / np.sqrt(lam0)
    return PodBasis(beta, lam0, spectrum.leading_vector)


def projection_residual(segment_data: np.ndarray, basis: PodBasis) -> float:
    """Total squared misfit sum_k ||U_k - (beta . U_k) beta||^2.

    Equals the sum of the non-principal Gram eigenvalues exactly (POD
    optimality identity), which the test suite checks.
    """
    segment_data = np.asarray(segment_data, dtype=float)
    coeffs = basis.vector @ segment_data
    residual = segment_data - np.outer(basis.vector, coeffs)
    return float(np.einsum("ij,ij->", residual, residual))


def export_spectra_csv(spectra, path, head: int | None = None) -> None:
    """Write rows (segment, eigen_index, eigenvalue), optionally top `head` only."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["segment", "index", "eigenvalue"])
        for spectrum in spectra:
            values = spectrum.eigenvalues
            if head is not None:
                values = values[:head]
            for index, value in enumerate(values):
                writer.writerow([spectrum.segment, index, repr(float(value))])

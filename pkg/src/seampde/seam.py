"""Rank-1 reduced time stepping and the segmented parallel driver.

Offline, each snapshot block contributes one basis vector beta and three
scalars: beta' (M + tau S) beta, beta' M beta, and beta' F. Online, every
backward-Euler step collapses to a single scalar division, so replaying a
run costs O(1) work per step instead of a linear solve.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from seampde.assembly import LoadVector, SymmetricSparseOperator
from seampde.errors import SegmentationError
from seampde.hifi import SnapshotMatrix, save_snapshots
from seampde.pod import PodBasis, eig_descending, gram, pod_basis


@dataclass(frozen=True)
class SeamModel:
    """One segment's reduced model: basis plus the scalar recurrence data."""

    basis: PodBasis
    system_coeff: float  # beta' (M + tau S) beta
    mass_coeff: float    # beta' M beta
    load_coeff: float | np.ndarray  # beta' F, per step when the source varies
    alpha0: float
    tau: float

    def __post_init__(self):
        if not self.system_coeff > 0 or not self.mass_coeff > 0:
            raise ValueError(
                "reduced operators must be positive, got "
                f"system={self.system_coeff!r} mass={self.mass_coeff!r}"
            )


@dataclass(frozen=True)
class SeamSolution:
    """Per-segment coefficient sequences with their bases."""

    models: tuple
    alphas: np.ndarray  # (segments, n+1)
    tau: float

    def __post_init__(self):
        self.alphas.setflags(write=False)

    @property
    def segment_steps(self) -> int:
        return self.alphas.shape[1] - 1

    @property
    def num_segments(self) -> int:
        return self.alphas.shape[0]

    @property
    def num_columns(self) -> int:
        return self.alphas.size

    def column(self, j: int) -> np.ndarray:
        cols = self.segment_steps + 1
        segment, offset = divmod(j, cols)
        return self.alphas[segment, offset] * self.models[segment].basis.vector

    def to_matrix(self) -> np.ndarray:
        dofs = len(self.models[0].basis.vector)
        cols = self.segment_steps + 1
        data = np.empty((dofs, self.num_columns), order="F")
        for k, model in enumerate(self.models):
            data[:, k * cols:(k + 1) * cols] = np.outer(model.basis.vector,
                                                        self.alphas[k])
        return data

    def to_snapshots(self) -> SnapshotMatrix:
        return SnapshotMatrix(self.to_matrix(), self.tau)


def _load_values(load) -> np.ndarray:
    return load.values if isinstance(load, LoadVector) else np.asarray(load)


def seam_offline(segment_data: np.ndarray, mass: SymmetricSparseOperator,
                 stiffness: SymmetricSparseOperator, load, tau: float,
                 segment_id: int | None = None) -> SeamModel:
    """Extract the rank-1 basis of a snapshot block and reduce the operators."""
    segment_data = np.asarray(segment_data, dtype=float)
    spectrum = eig_descending(gram(segment_data), segment=segment_id)
    basis = pod_basis(segment_data, spectrum)
    beta = basis.vector
    system_coeff = float(beta @ (mass.matrix @ beta) + tau * (beta @ (stiffness.matrix @ beta)))
    mass_coeff = float(beta @ (mass.matrix @ beta))
    load_coeff = float(beta @ _load_values(load))
    alpha0 = float(beta @ segment_data[:, 0])
    return SeamModel(basis, system_coeff, mass_coeff, load_coeff, alpha0, tau)


def seam_online(model: SeamModel, steps: int) -> np.ndarray:
    """Run the scalar recurrence; returns alpha_0..alpha_steps."""
    g = np.broadcast_to(model.load_coeff, steps)
    alphas = np.empty(steps + 1)
    alphas[0] = model.alpha0
    a = model.system_coeff
    m = model.mass_coeff
    tau = model.tau
    current = model.alpha0
    for k in range(steps):
        current = (m * current + tau * g[k]) / a
        alphas[k + 1] = current
    return alphas


def run_parallel_seam(snapshots: SnapshotMatrix, mass: SymmetricSparseOperator,
                      stiffness: SymmetricSparseOperator, load,
                      segment_steps: int | None = None,
                      threads: int | None = None) -> SeamSolution:
    """Reduce every segment of a snapshot matrix independently.

    The column count must be an exact multiple of segment_steps+1.
    Segments share no mutable state, so they may run on worker threads;
    results are identical for any thread count.
    """
    if segment_steps is None:
        if snapshots.problem is None:
            raise SegmentationError("segment_steps not given and snapshots "
                                    "carry no problem metadata")
        segment_steps = snapshots.problem.segment_steps
    cols = segment_steps + 1
    total = snapshots.num_columns
    if cols < 1 or total % cols != 0:
        raise SegmentationError(
            f"{total} snapshot columns do not split into segments of {cols}"
        )
    segments = total // cols
    tau = snapshots.tau

    def reduce_segment(k: int) -> tuple[SeamModel, np.ndarray]:
        block = snapshots.data[:, k * cols:(k + 1) * cols]
        model = seam_offline(block, mass, stiffness, load, tau, segment_id=k)
        return model, seam_online(model, segment_steps)

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(reduce_segment, range(segments)))
    else:
        results = [reduce_segment(k) for k in range(segments)]

    models = tuple(r[0] for r in results)
    alphas = np.vstack([r[1] for r in results])
    return SeamSolution(models, alphas, tau)


def save_seam(solution: SeamSolution, path) -> None:
    """Reconstructed columns in the snapshot binary format."""
    save_snapshots(solution.to_snapshots(), path)


def export_segment_metadata(solution: SeamSolution, path) -> None:
    """Per-segment CSV: principal eigenvalue and the reduced scalars."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["segment", "lambda0", "system_coeff", "mass_coeff",
                         "alpha0"])
        for k, model in enumerate(solution.models):
            writer.writerow([k, repr(model.basis.lam0),
                             repr(model.system_coeff),
                             repr(model.mass_coeff), repr(model.alpha0)])

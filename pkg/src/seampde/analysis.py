"""Spectral diagnostics for the rank-1 reduction.

Covers the operator norm of the symmetrized evolution operator (via the
generalized eigenproblem, never forming mass-matrix square roots), the
time-step smallness check, the rank-one reference spectrum and its
perturbation distance to the true Gram spectrum, Hoffman-Wielandt
eigenvalue-displacement checks, and the space-time relative L2 error
between a high-fidelity run and its reduced replay.

The rank-one reference grows like |1 - tau*norm|^(2n) and overflows
float64 for the coarser time steps, so reference and perturbation
quantities are carried in extended precision (numpy longdouble).
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from seampde.assembly import SymmetricSparseOperator
from seampde.errors import (
    DegenerateReferenceError,
    SegmentationError,
    StagnationError,
)
from seampde.hifi import SnapshotMatrix, cg_solve
from seampde.pod import GramSpectrum, eig_descending, gram, jacobi_eigh


def operator_norm(mass: SymmetricSparseOperator,
                  stiffness: SymmetricSparseOperator, *,
                  rtol: float = 1e-10, maxiter: int = 10000) -> float:
    """Largest generalized eigenvalue of (S, M) by power iteration.

    Equals the 2-norm of the symmetrized evolution operator. Every
    application solves one mass system with conjugate gradients; the
    start vector is a fixed pseudo-random draw so results are
    deterministic.
    """
    m = mass.matrix
    s = stiffness.matrix
    v = np.random.default_rng(0).standard_normal(m.shape[0])
    v /= np.sqrt(v @ (m @ v))
    estimate = None
    for _ in range(maxiter):
        sv = s @ v
        current = float(v @ sv)
        if estimate is not None and abs(current - estimate) <= rtol * abs(current):
            return current
        estimate = current
        w = cg_solve(m, sv, x0=v * current)
        norm_w = np.sqrt(w @ (m @ w))
        if norm_w == 0.0:
            return 0.0  # stiffness annihilates the iterate: S is zero on it
        v = w / norm_w
    raise StagnationError(
        f"power iteration stagnated after {maxiter} iterations "
        f"(last estimate {estimate!r})"
    )


@dataclass(frozen=True)
class TimeStepCheck:
    """tau * ||A||_2 and whether it sits below one."""

    product: float
    satisfied: bool


def check_time_step_assumption(tau: float, norm_a: float) -> TimeStepCheck:
    """Report the smallness product; never aborts a run."""
    if norm_a <= 0:
        raise ValueError("operator norm must be positive")
    product = tau * norm_a
    return TimeStepCheck(product, product < 1.0)


def reference_matrix(u0: np.ndarray, norm_a: float, tau: float, n: int) -> np.ndarray:
    """Explicit rank-one reference columns (1 - tau*norm)^k u0, k = 0..n.

    Intended for small problems and tests; the closed form below avoids
    building this at scale.
    """
    r = 1.0 - tau * norm_a
    return np.outer(u0, r ** np.arange(n + 1))


def reference_principal_eigenvalue(u0: np.ndarray, norm_a: float, tau: float,
                                   n: int) -> np.longdouble:
    """Principal Gram eigenvalue of the rank-one reference, in closed form.

    The reference has rank at most one, so its Gram spectrum is
    ||u0||^2 * sum_{k=0..n} (1 - tau*norm)^(2k) followed by exact zeros;
    the geometric sum is evaluated in extended precision.
    """
    if not tau * norm_a < 1.0:
        warnings.warn(
            f"tau*||A|| = {tau * norm_a:.3g} >= 1: the rank-one reference "
            "grows instead of decaying",
            stacklevel=2,
        )
    r2 = np.longdouble(1.0 - tau * norm_a) ** 2
    if r2 == 1.0:
        total = np.longdouble(n + 1)
    else:
        total = (r2 ** (n + 1) - 1.0) / (r2 - 1.0)
    u0 = np.asarray(u0, dtype=float)
    return np.longdouble(u0 @ u0) * total


@dataclass(frozen=True)
class PerturbationRecord:
    """Distance of a Gram spectrum from the rank-one reference spectrum."""

    quantity: np.longdouble  # (lam0 - lam0_ref)^2 + sum_{k>=1} lam_k^2
    tail_sum_sq: float       # sum_{k>=1} lam_k^2 alone
    bound_proxy: float       # n^4 tau^2
    ratio: np.longdouble

    def to_json_dict(self) -> dict:
        return {
            "quantity": _json_number(self.quantity),
            "tail_sum_sq": self.tail_sum_sq,
            "bound_proxy": self.bound_proxy,
            "ratio": _json_number(self.ratio),
        }


def perturbation_quantity(spectrum: GramSpectrum, lambda0_ref,
                          n: int, tau: float) -> PerturbationRecord:
    """Squared principal-eigenvalue shift plus the squared trailing tail."""
    values = np.asarray(spectrum.eigenvalues, dtype=float)
    tail = float(np.sum(np.square(values[1:], dtype=float)))
    shift = np.longdouble(values[0]) - np.longdouble(lambda0_ref)
    quantity = shift * shift + np.longdouble(tail)
    proxy = float(n) ** 4 * tau**2
    return PerturbationRecord(quantity, tail, proxy, quantity / np.longdouble(proxy))


@dataclass(frozen=True)
class HoffmanWielandtRecord:
    """Margins of the two eigenvalue-displacement inequalities.

    ``frobenius_margin`` is ||E||_F^2 minus the summed squared eigenvalue
    shifts; ``lower_margin``/``upper_margin`` are the worst-case slack of
    the bracketing by the extreme eigenvalues of the perturbation. All
    three are nonnegative in exact arithmetic.
    """

    sum_sq_shift: float
    frob_sq: float
    frobenius_margin: float
    lower_margin: float
    upper_margin: float

    def holds(self, tol: float = 1e-9) -> bool:
        return (self.frobenius_margin >= -tol and self.lower_margin >= -tol
                and self.upper_margin >= -tol)


def hoffman_wielandt_check(a: np.ndarray, e: np.ndarray) -> HoffmanWielandtRecord:
    """Evaluate both displacement inequalities for symmetric A and E."""
    a = np.asarray(a, dtype=float)
    e = np.asarray(e, dtype=float)
    for name, mat in (("A", a), ("E", e)):
        scale = np.abs(mat).max()
        if scale > 0 and np.abs(mat - mat.T).max() > 1e-10 * scale:
            raise ValueError(f"matrix {name} is not symmetric")
    if a.shape != e.shape:
        raise ValueError("A and E must have the same shape")
    base, _ = jacobi_eigh(a)
    shifted, _ = jacobi_eigh(a + e)
    perturb, _ = jacobi_eigh(e)
    diffs = shifted - base
    sum_sq = float(diffs @ diffs)
    frob_sq = float(np.sum(e * e))
    return HoffmanWielandtRecord(
        sum_sq_shift=sum_sq,
        frob_sq=frob_sq,
        frobenius_margin=frob_sq - sum_sq,
        lower_margin=float((diffs - perturb[-1]).min()),
        upper_margin=float((perturb[0] - diffs).min()),
    )


def _columns(solution) -> np.ndarray:
    if isinstance(solution, SnapshotMatrix):
        return solution.data
    if hasattr(solution, "to_matrix"):
        return solution.to_matrix()
    return np.asarray(solution, dtype=float)


def relative_l2_error(reference, reduced, mass: SymmetricSparseOperator,
                      tau: float) -> float:
    """Space-time relative L2 error of a reduced run against its reference.

    The spatial integral is exact on the FE space through the mass
    matrix; the time integral is a rectangle sum with weight tau over
    every column of the grid.
    """
    ref = _columns(reference)
    red = _columns(reduced)
    if ref.shape != red.shape:
        raise ValueError(f"shape mismatch: {ref.shape} vs {red.shape}")
    diff = ref - red
    num = tau * np.einsum("ij,ij->", diff, mass.matrix @ diff)
    den = tau * np.einsum("ij,ij->", ref, mass.matrix @ ref)
    if den == 0.0:
        raise DegenerateReferenceError("reference solution is identically zero")
    return float(np.sqrt(num / den))


@dataclass(frozen=True)
class SpectralReport:
    """Per-segment eigenvalue heads plus the rank-one-reference diagnostics."""

    spectra: tuple          # GramSpectrum per segment
    head: int
    norm_a: float
    time_step: TimeStepCheck
    lambda0_ref: np.longdouble
    perturbation: PerturbationRecord
    segment_steps: int
    tau: float

    def leading_eigenvalues(self) -> np.ndarray:
        return np.array([s.eigenvalues[0] for s in self.spectra])

    def to_json_dict(self) -> dict:
        return {
            "schema": 1,
            "segments": [
                {"segment": s.segment,
                 "eigenvalues": [float(v) for v in s.eigenvalues[: self.head]]}
                for s in self.spectra
            ],
            "norm_a": self.norm_a,
            "tau_norm_a": self.time_step.product,
            "time_step_assumption_satisfied": self.time_step.satisfied,
            "lambda0_reference": _json_number(self.lambda0_ref),
            "perturbation": self.perturbation.to_json_dict(),
            "segment_steps": self.segment_steps,
            "tau": self.tau,
        }


def build_spectral_report(snapshots: SnapshotMatrix,
                          mass: SymmetricSparseOperator,
                          stiffness: SymmetricSparseOperator,
                          segment_steps: int | None = None,
                          head: int = 5) -> SpectralReport:
    """Eigenanalyze every segment and compare the first one to the reference."""
    if segment_steps is None:
        if snapshots.problem is None:
            raise ValueError("segment_steps not given and snapshots carry "
                             "no problem metadata")
        segment_steps = snapshots.problem.segment_steps
    cols = segment_steps + 1
    if snapshots.num_columns % cols != 0:
        raise SegmentationError(f"{snapshots.num_columns} columns do not split "
                                f"into segments of {cols}")
    segments = snapshots.num_columns // cols
    spectra = []
    for k in range(segments):
        block = snapshots.data[:, k * cols:(k + 1) * cols]
        spectra.append(eig_descending(gram(block), segment=k))
    tau = snapshots.tau
    norm_a = operator_norm(mass, stiffness)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # the check below reports the violation
        lambda0_ref = reference_principal_eigenvalue(
            snapshots.column(0), norm_a, tau, segment_steps)
    record = perturbation_quantity(spectra[0], lambda0_ref, segment_steps, tau)
    return SpectralReport(
        spectra=tuple(spectra),
        head=head,
        norm_a=norm_a,
        time_step=check_time_step_assumption(tau, norm_a),
        lambda0_ref=lambda0_ref,
        perturbation=record,
        segment_steps=segment_steps,
        tau=tau,
    )


def save_report_json(report: SpectralReport, path) -> None:
    with open(path, "w") as fh:
        json.dump(report.to_json_dict(), fh, indent=2)
        fh.write("\n")


def _json_number(value):
    """Finite numbers as floats; extended-precision overflow as a string."""
    as_float = float(value)
    if np.isfinite(as_float):
        return as_float
    return repr(np.longdouble(value))

"""Lifted (stacked) trajectories and tracking-error metrics.

A lifted trajectory stores ``N`` samples of a ``D``-dimensional signal as one
flat vector in sample-major order: element ``n * D + d`` (0-based) holds
variable ``d`` at sample ``n``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateNormalizationError, StructuralError


@dataclass(frozen=True, eq=False)
class LiftedTrajectory:
    """Immutable stacked trajectory of ``num_samples`` samples of ``dim_per_sample`` variables."""

    data: np.ndarray
    dim_per_sample: int
    num_samples: int
    sample_period: float

    def __post_init__(self):
        data = np.array(self.data, dtype=float).reshape(-1)
        if self.dim_per_sample < 1 or self.num_samples < 1:
            raise StructuralError("dim_per_sample and num_samples must be positive")
        if data.size != self.dim_per_sample * self.num_samples:
            raise StructuralError(
                f"data has {data.size} elements, expected "
                f"{self.dim_per_sample} x {self.num_samples}"
            )
        if not self.sample_period > 0:
            raise StructuralError("sample_period must be positive")
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @classmethod
    def from_samples(cls, samples, dt):
        """Build from an ``(N, D)`` array-like (one row per sample)."""
        return interleave(samples, dt)

    @classmethod
    def zeros(cls, dim, num_samples, dt):
        return cls(np.zeros(dim * num_samples), dim, num_samples, dt)

    def samples(self):
        """``(N, D)`` read-only view, one row per sample."""
        return self.data.reshape(self.num_samples, self.dim_per_sample)

    def block(self, var_index):
        return variable_block(self, var_index)

    @property
    def times(self):
        return np.arange(self.num_samples) * self.sample_period

    def with_data(self, data):
        return LiftedTrajectory(data, self.dim_per_sample, self.num_samples, self.sample_period)

    def __len__(self):
        return self.data.size

    def __eq__(self, other):
        if not isinstance(other, LiftedTrajectory):
            return NotImplemented
        return (
            self.dim_per_sample == other.dim_per_sample
            and self.num_samples == other.num_samples
            and self.sample_period == other.sample_period
            and np.array_equal(self.data, other.data)
        )

    __hash__ = None

    def to_csv(self, path):
        write_csv(self, path)


@dataclass(frozen=True)
class TrialRecord:
    """Everything recorded on one trial."""

    trial_index: int
    input: LiftedTrajectory
    states: LiftedTrajectory
    output: LiftedTrajectory
    error: LiftedTrajectory

    def __post_init__(self):
        n = self.input.num_samples
        dt = self.input.sample_period
        for name in ("states", "output", "error"):
            traj = getattr(self, name)
            if traj.num_samples != n or traj.sample_period != dt:
                raise StructuralError(f"{name} does not share N and dt with the input")
        if self.error.dim_per_sample != self.output.dim_per_sample:
            raise StructuralError("error and output dimensions differ")


def interleave(samples, dt):
    """Stack a sequence of per-sample vectors into a `LiftedTrajectory`."""
    rows = [np.atleast_1d(np.asarray(s, dtype=float)) for s in samples]
    if not rows:
        raise StructuralError("at least one sample is required")
    dim = rows[0].shape
    if any(r.ndim != 1 or r.shape != dim for r in rows):
        raise StructuralError("all samples must be vectors of identical dimension")
    return LiftedTrajectory(np.concatenate(rows), dim[0], len(rows), dt)


def deinterleave(traj):
    """Inverse of `interleave`: list of per-sample vectors."""
    return [row.copy() for row in traj.samples()]


def variable_block(traj, var_index):
    """Trajectory of variable ``var_index`` (1-based) across all samples."""
    if not 1 <= var_index <= traj.dim_per_sample:
        raise StructuralError(
            f"variable index {var_index} outside [1, {traj.dim_per_sample}]"
        )
    return traj.data[var_index - 1::traj.dim_per_sample].copy()


def _check_compatible(a, b):
    if (a.dim_per_sample, a.num_samples) != (b.dim_per_sample, b.num_samples):
        raise StructuralError(
            f"shape mismatch: (D={a.dim_per_sample}, N={a.num_samples}) vs "
            f"(D={b.dim_per_sample}, N={b.num_samples})"
        )
    if a.sample_period != b.sample_period:
        raise StructuralError(
            f"sample period mismatch: {a.sample_period} vs {b.sample_period}"
        )


def tracking_error(reference, output):
    """Elementwise ``reference - output``."""
    _check_compatible(reference, output)
    return reference.with_data(reference.data - output.data)


def normalized_error_norm(reference, output_j, output_1):
    """Euclidean error norm of trial j relative to that of the first trial."""
    _check_compatible(reference, output_j)
    _check_compatible(reference, output_1)
    denom = np.linalg.norm(reference.data - output_1.data)
    if denom == 0.0:
        raise DegenerateNormalizationError("first-trial error norm is zero")
    return float(np.linalg.norm(reference.data - output_j.data) / denom)


def write_csv(traj, path):
    header = ["sample"] + [f"var_{d + 1}" for d in range(traj.dim_per_sample)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for n, row in enumerate(traj.samples(), start=1):
            writer.writerow([n] + [format(float(v), ".17g") for v in row])


def read_csv(path, dt):
    """Load a trajectory written by `write_csv`. ``dt`` is not stored in the file."""
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[0] != "sample":
            raise StructuralError(f"{path}: missing 'sample' header column")
        rows = [[float(v) for v in row[1:]] for row in reader if row]
    return interleave(rows, dt)

"""Test-set error metrics and negative-probability correction heuristics.

The headline error is an L1-style sum over a fixed test set of sequences
where each absolute difference is raised to 1/t before summing, implemented
exactly in that printed form, NOT divided by the test-set size and NOT the
usual total variation (which is available under its own name for sanity
checks, never substituted).

neg_prop must always be measured on raw estimates: the correction heuristics
below exist precisely to repair the negative mass it quantifies.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, ValidationError

CORRECTION_MODES = ("none", "clamp", "signflip+clamp")

LEARNERS = ("spectral", "em", "true-model")

METRICS_COLUMNS = (
    "experiment_id",
    "learner",
    "N",
    "m_hyper",
    "trial",
    "seed",
    "l1",
    "neg_prop",
    "loglik",
    "wall_time_ms",
)

_ID_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_.-]*$")


def _as_vector(values, name: str) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise ValidationError(f"{name} must be 1-d, got shape {v.shape}")
    return v


def normalized_l1(true_probs, est_probs, t: int) -> float:
    """Sum over the test set of |true - est| ** (1/t).

    Both lists must be aligned over the same test sequences, all of length t.
    """
    p = _as_vector(true_probs, "true_probs")
    q = _as_vector(est_probs, "est_probs")
    if p.shape != q.shape:
        raise ValidationError(f"length mismatch: {p.shape[0]} vs {q.shape[0]}")
    if t < 1:
        raise ValidationError(f"t must be >= 1, got {t}")
    return float(np.sum(np.abs(p - q) ** (1.0 / t)))


def total_variation(true_probs, est_probs) -> float:
    """Half the plain L1 distance: the conventional metric, kept as a
    separately named diagnostic so it can never be confused with
    normalized_l1."""
    p = _as_vector(true_probs, "true_probs")
    q = _as_vector(est_probs, "est_probs")
    if p.shape != q.shape:
        raise ValidationError(f"length mismatch: {p.shape[0]} vs {q.shape[0]}")
    return float(0.5 * np.sum(np.abs(p - q)))


def neg_prop(est_probs) -> float:
    """Fraction of strictly negative estimates. Call on raw spectral outputs,
    before any correction."""
    q = _as_vector(est_probs, "est_probs")
    if q.size == 0:
        raise ValidationError("est_probs must be non-empty")
    return float(np.count_nonzero(q < 0.0) / q.size)


def clamp_normalize(est_probs, epsilon: float | None = None) -> np.ndarray:
    """Raise every value below epsilon up to epsilon, then normalize to sum 1.

    Default epsilon is 1e-6 of uniform mass over the list (1e-6 / len).
    """
    q = _as_vector(est_probs, "est_probs")
    if q.size == 0:
        raise ValidationError("est_probs must be non-empty")
    if epsilon is None:
        epsilon = 1e-6 / q.size
    if not epsilon > 0:
        raise ValidationError(f"epsilon must be > 0, got {epsilon}")
    out = np.maximum(q, epsilon)
    return out / out.sum()


def sign_flip_heuristic(est_probs) -> np.ndarray:
    """Negate the whole list iff its sum is strictly negative.

    Guards against globally sign-flipped estimates; a zero sum does not flip.
    Intended to run before clamp_normalize.
    """
    q = _as_vector(est_probs, "est_probs")
    if q.size == 0:
        raise ValidationError("est_probs must be non-empty")
    return -q if q.sum() < 0.0 else q.copy()


def apply_correction(est_probs, mode: str) -> np.ndarray:
    """Dispatch on a correction mode name: none | clamp | signflip+clamp."""
    if mode not in CORRECTION_MODES:
        raise ValidationError(f"unknown correction mode {mode!r}, expected one of {CORRECTION_MODES}")
    q = _as_vector(est_probs, "est_probs")
    if mode == "none":
        return q.copy()
    if mode == "clamp":
        return clamp_normalize(q)
    return clamp_normalize(sign_flip_heuristic(q))


@dataclass(frozen=True)
class MetricsRecord:
    """One learner's evaluation on one sweep cell.

    loglik is the training log-likelihood of the learner's model: nan marks
    not-applicable (spectral operators define no normalized likelihood),
    -inf marks an impossible training set.
    """

    experiment_id: str
    learner: str
    N: int
    m_hyper: int
    trial: int
    seed: int
    l1: float
    neg_prop: float
    loglik: float
    wall_time_ms: float

    def __post_init__(self):
        if not _ID_RE.match(self.experiment_id):
            raise ValidationError(f"bad experiment_id {self.experiment_id!r}")
        if self.learner not in LEARNERS:
            raise ValidationError(f"unknown learner {self.learner!r}, expected one of {LEARNERS}")
        if self.N < 1 or self.m_hyper < 1 or self.trial < 0 or self.seed < 0:
            raise ValidationError("N, m_hyper must be >= 1; trial, seed must be >= 0")
        if not (math.isfinite(self.l1) and self.l1 >= 0):
            raise ValidationError(f"l1 must be finite and >= 0, got {self.l1}")
        if not (0.0 <= self.neg_prop <= 1.0):
            raise ValidationError(f"neg_prop must lie in [0, 1], got {self.neg_prop}")
        if math.isinf(self.loglik) and self.loglik > 0:
            raise ValidationError("loglik cannot be +inf")
        if not (math.isfinite(self.wall_time_ms) and self.wall_time_ms >= 0):
            raise ValidationError(f"wall_time_ms must be finite and >= 0, got {self.wall_time_ms}")


def write_metrics_csv(records, path) -> None:
    """Write records in their given order with the pinned column set.

    Floats are serialized with repr() so values round-trip exactly and
    identical records always produce identical bytes.
    """
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(METRICS_COLUMNS)
        for r in records:
            w.writerow([
                r.experiment_id,
                r.learner,
                r.N,
                r.m_hyper,
                r.trial,
                r.seed,
                repr(float(r.l1)),
                repr(float(r.neg_prop)),
                repr(float(r.loglik)),
                repr(float(r.wall_time_ms)),
            ])


def read_metrics_csv(path) -> list[MetricsRecord]:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        if tuple(header) != METRICS_COLUMNS:
            raise FormatError(
                f"{path}: header {header} does not match {list(METRICS_COLUMNS)}"
            )
        out = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(METRICS_COLUMNS):
                raise FormatError(f"{path}: line {lineno} has {len(row)} fields")
            try:
                out.append(MetricsRecord(
                    experiment_id=row[0],
                    learner=row[1],
                    N=int(row[2]),
                    m_hyper=int(row[3]),
                    trial=int(row[4]),
                    seed=int(row[5]),
                    l1=float(row[6]),
                    neg_prop=float(row[7]),
                    loglik=float(row[8]),
                    wall_time_ms=float(row[9]),
                ))
            except (ValueError, ValidationError) as e:
                raise FormatError(f"{path}: line {lineno}: {e}") from None
    return out

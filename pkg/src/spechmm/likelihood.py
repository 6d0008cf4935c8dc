"""Likelihood curves of the single-parameter symmetric 2-state HMM, and the
EM-vs-true-parameters consistency experiment.

The model under study has one free parameter theta, the self-transition
probability: T = [[theta, 1-theta], [1-theta, theta]], with a symmetric
emission channel that reports the hidden state correctly with a fixed
probability (0.7 by default) and a uniform initial distribution.
Likelihood curves over theta are evaluated pointwise by the exact forward
recursion on a grid; each grid value is an exact probability, so the curves
are oracle-checkable against hidden-path enumeration.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .em import EmConfig, dataset_log_likelihood, em_fit
from .errors import FormatError, ValidationError
from .hmm import HmmParams, joint_probability_forward, sample_sequences, validate_params
from .seeding import STREAM_DATA, STREAM_EM, derive_seed


@dataclass(frozen=True)
class SymmetricHmmSpec:
    """theta = Pr(stay in current hidden state); emission_correct =
    Pr(observed symbol equals hidden state's symbol)."""

    theta: float
    emission_correct: float = 0.7
    initial: tuple[float, float] = (0.5, 0.5)

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ValidationError(f"theta must lie in [0, 1], got {self.theta}")
        if not 0.0 <= self.emission_correct <= 1.0:
            raise ValidationError(
                f"emission_correct must lie in [0, 1], got {self.emission_correct}"
            )
        if len(self.initial) != 2 or abs(sum(self.initial) - 1.0) > 1e-9 or min(self.initial) < 0:
            raise ValidationError(f"initial must be a 2-point distribution, got {self.initial}")

    def to_params(self) -> HmmParams:
        th, p = self.theta, self.emission_correct
        T = np.array([[th, 1.0 - th], [1.0 - th, th]])
        O = np.array([[p, 1.0 - p], [1.0 - p, p]])
        return validate_params(np.array(self.initial, dtype=np.float64), T, O)


@dataclass(frozen=True)
class LikelihoodCurve:
    """Unnormalized likelihood Pr(sequence | theta) sampled on a theta grid."""

    thetas: np.ndarray
    values: np.ndarray = field(repr=False)
    sequence_length: int

    def __post_init__(self):
        th = np.asarray(self.thetas, dtype=np.float64)
        v = np.asarray(self.values, dtype=np.float64)
        if th.ndim != 1 or th.shape != v.shape:
            raise ValidationError(
                f"thetas and values must be matching 1-d arrays, got {th.shape}, {v.shape}"
            )
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValidationError("curve values must be non-negative and finite")
        if self.sequence_length < 1:
            raise ValidationError(f"sequence_length must be >= 1, got {self.sequence_length}")
        th.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "thetas", th)
        object.__setattr__(self, "values", v)


def likelihood_at(spec: SymmetricHmmSpec, sequence) -> float:
    """Exact Pr(x_1..x_t | theta) for a 2-symbol sequence via the forward
    recursion on the induced 2-state model."""
    return joint_probability_forward(spec.to_params(), sequence)


def likelihood_curve(spec_template: SymmetricHmmSpec, sequence, grid_size: int = 1001) -> LikelihoodCurve:
    """Evaluate likelihood_at on a uniform theta grid over [0, 1] inclusive.

    spec_template fixes the emission channel and initial distribution; its
    theta is ignored in favor of the grid.
    """
    if grid_size < 2:
        raise ValidationError(f"grid_size must be >= 2, got {grid_size}")
    seq = np.asarray(sequence, dtype=np.int64)
    thetas = np.linspace(0.0, 1.0, grid_size)
    values = np.array([
        likelihood_at(replace(spec_template, theta=float(th)), seq) for th in thetas
    ])
    return LikelihoodCurve(thetas=thetas, values=values, sequence_length=int(seq.size))


def count_unimodal_modes(curve: LikelihoodCurve) -> int:
    """Number of local maxima of the sampled curve.

    Equal-value runs are collapsed first, so a plateau counts once; the grid
    endpoints are eligible maxima. A constant curve is a single plateau and
    counts as one mode.
    """
    v = np.asarray(curve.values, dtype=np.float64)
    if v.size < 3:
        raise ValidationError(f"need at least 3 curve points, got {v.size}")
    r = v[np.r_[True, v[1:] != v[:-1]]]
    if r.size == 1:
        return 1
    d = np.sign(np.diff(r))  # all entries +-1 after collapsing
    count = int(np.sum((d[:-1] == 1.0) & (d[1:] == -1.0)))
    if d[0] == -1.0:
        count += 1
    if d[-1] == 1.0:
        count += 1
    return count


def write_curve_csv(curve: LikelihoodCurve, path) -> None:
    """Export with columns theta, likelihood, t."""
    with open(path, "w") as f:
        f.write("theta,likelihood,t\n")
        for th, v in zip(curve.thetas, curve.values):
            f.write(f"{float(th)!r},{float(v)!r},{curve.sequence_length}\n")


@dataclass(frozen=True)
class ConsistencyCell:
    """One (sample size, trial) outcome of the EM consistency experiment."""

    N: int
    trial: int
    seed: int
    em_loglik: float
    true_loglik: float


def em_consistency_experiment(
    true_params: HmmParams,
    sample_sizes,
    trials: int,
    em_config: EmConfig,
    sequence_length: int = 10,
    base_seed: int = 0,
) -> list[ConsistencyCell]:
    """For each (N, trial): sample N training sequences from true_params, fit
    EM, and record the training log-likelihood of the fitted model and of the
    true parameters on the same data.

    Dataset seeds derive from base_seed, EM restart seeds from
    em_config.seed, both keyed by (size index, trial) so cells are
    independent and reproducible in isolation. The recorded seed column is
    the dataset seed.
    """
    if true_params.m != 2 or true_params.n != 2:
        raise ValidationError(
            f"expected a 2-state/2-symbol model, got m={true_params.m}, n={true_params.n}"
        )
    sizes = [int(N) for N in sample_sizes]
    if not sizes or any(N < 1 for N in sizes):
        raise ValidationError(f"sample_sizes must be non-empty and positive, got {sizes}")
    if trials < 1:
        raise ValidationError(f"trials must be >= 1, got {trials}")
    rows = []
    for ni, N in enumerate(sizes):
        for trial in range(trials):
            data_seed = derive_seed(base_seed, STREAM_DATA, ni, trial)
            dataset = sample_sequences(true_params, N, sequence_length, data_seed)
            cell_config = replace(
                em_config, seed=derive_seed(em_config.seed, STREAM_EM, ni, trial)
            )
            result = em_fit(dataset, cell_config)
            rows.append(ConsistencyCell(
                N=N,
                trial=trial,
                seed=data_seed,
                em_loglik=float(result.loglik_trace[-1]),
                true_loglik=dataset_log_likelihood(true_params, dataset.sequences),
            ))
    return rows


def write_consistency_csv(rows, path) -> None:
    """Export with columns N, trial, seed, em_loglik, true_loglik."""
    with open(path, "w") as f:
        f.write("N,trial,seed,em_loglik,true_loglik\n")
        for r in rows:
            f.write(
                f"{r.N},{r.trial},{r.seed},"
                f"{float(r.em_loglik)!r},{float(r.true_loglik)!r}\n"
            )


def read_consistency_csv(path) -> list[ConsistencyCell]:
    with open(path) as f:
        lines = f.read().splitlines()
    if not lines or lines[0] != "N,trial,seed,em_loglik,true_loglik":
        raise FormatError(f"{path}: bad or missing consistency CSV header")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 5:
            raise FormatError(f"{path}: line {lineno} has {len(parts)} fields, expected 5")
        try:
            rows.append(ConsistencyCell(
                N=int(parts[0]),
                trial=int(parts[1]),
                seed=int(parts[2]),
                em_loglik=float(parts[3]),
                true_loglik=float(parts[4]),
            ))
        except ValueError as e:
            raise FormatError(f"{path}: line {lineno}: {e}") from None
    return rows

"""Spectral learning of HMM observable operators from low-order moments.

Pipeline: estimate the first-, second- and third-order observation moments
from data, take the top singular subspace U of the pair matrix, then form

    b1 = U^T P1,   b_inf = ((U^T P21)^+)^T P1,   B_x = U^T P3x1(x) (U^T P21)^+

With exact moments of a full-rank model and the matching rank these operators
reproduce every joint probability; with sampled moments or a wrong rank the
predicted values are raw reals and can dip below zero. No clamping happens
here: correction heuristics live in the metrics module so the negative mass
can be measured first.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, ValidationError
from .hmm import Dataset, ExactMoments, HmmParams, _format_row, _freeze, _parse_floats

# Relative singular-value cutoff for the pseudoinverse; directly controls how
# much sampling noise the inversion is allowed to amplify.
PINV_RCOND = 1e-10

_MOMENT_SUM_TOL = 1e-9


@dataclass(frozen=True)
class MomentEstimates:
    """Empirical P1, P21, P3x1 moments over an alphabet of n symbols.

    Indexing matches ExactMoments: P21_hat[j-1, i-1] estimates
    Pr(x_2 = j, x_1 = i) and P3x1_hat[x-1][k-1, i-1] estimates
    Pr(x_3 = k, x_2 = x, x_1 = i).
    """

    P1_hat: np.ndarray           # (n,)
    P21_hat: np.ndarray          # (n, n)
    P3x1_hat: np.ndarray = field(repr=False)  # (n, n, n)
    sample_count: int

    def __post_init__(self):
        P1 = np.asarray(self.P1_hat, dtype=np.float64)
        P21 = np.asarray(self.P21_hat, dtype=np.float64)
        P3 = np.asarray(self.P3x1_hat, dtype=np.float64)
        n = P1.shape[0] if P1.ndim == 1 else 0
        if n < 1 or P21.shape != (n, n) or P3.shape != (n, n, n):
            raise ValidationError(
                f"inconsistent moment shapes {P1.shape}, {P21.shape}, {P3.shape}"
            )
        if self.sample_count < 1:
            raise ValidationError(f"sample_count must be >= 1, got {self.sample_count}")
        for name, block in (("P1_hat", P1), ("P21_hat", P21), ("P3x1_hat", P3)):
            if np.any(block < 0) or not np.all(np.isfinite(block)):
                raise ValidationError(f"{name} must be non-negative and finite")
            if abs(block.sum() - 1.0) > _MOMENT_SUM_TOL:
                raise ValidationError(
                    f"{name} entries sum to {block.sum():.12g}, expected 1"
                )
        object.__setattr__(self, "P1_hat", _freeze(P1))
        object.__setattr__(self, "P21_hat", _freeze(P21))
        object.__setattr__(self, "P3x1_hat", _freeze(P3))

    @property
    def n(self) -> int:
        return self.P1_hat.shape[0]


def moments_from_exact(exact: ExactMoments) -> MomentEstimates:
    """Wrap population moments so learn_spectral can consume them.

    sample_count is reported as 1; it is bookkeeping only.
    """
    return MomentEstimates(
        P1_hat=exact.P1.copy(),
        P21_hat=exact.P21.copy(),
        P3x1_hat=exact.P3x1.copy(),
        sample_count=1,
    )


def estimate_moments(dataset: Dataset, sliding_window: bool = False) -> MomentEstimates:
    """Empirical moments from a dataset of sequences with length >= 3.

    Default policy takes one triple per sequence (its first three symbols)
    matching the i.i.d.-triple assumption behind the estimator's theory.
    sliding_window=True pools every consecutive triple instead; more data per
    sequence, but the pooled windows are only identically distributed when
    the chain is stationary, so expect bias otherwise.
    """
    if dataset.length < 3:
        raise ValidationError(
            f"moment estimation needs sequences of length >= 3, got {dataset.length}"
        )
    n = dataset.n
    seqs = dataset.sequences
    if sliding_window:
        w = seqs.shape[1] - 2
        x1 = (seqs[:, 0:w] - 1).ravel()
        x2 = (seqs[:, 1:w + 1] - 1).ravel()
        x3 = (seqs[:, 2:w + 2] - 1).ravel()
    else:
        x1 = seqs[:, 0] - 1
        x2 = seqs[:, 1] - 1
        x3 = seqs[:, 2] - 1
    count = x1.shape[0]
    P1 = np.bincount(x1, minlength=n) / count
    P21 = np.bincount(x2 * n + x1, minlength=n * n).reshape(n, n) / count
    P3 = np.bincount((x2 * n + x3) * n + x1, minlength=n ** 3).reshape(n, n, n) / count
    return MomentEstimates(P1_hat=P1, P21_hat=P21, P3x1_hat=P3, sample_count=count)


def compute_subspace(P21_hat: np.ndarray, m_hyper: int) -> tuple[np.ndarray, np.ndarray]:
    """Top m_hyper left singular vectors of P21_hat plus their singular values.

    Warns (does not fail) when the numerical rank of P21_hat falls below
    m_hyper; deliberately over-ranked runs are part of the method's story.
    """
    P21_hat = np.asarray(P21_hat, dtype=np.float64)
    if P21_hat.ndim != 2 or P21_hat.shape[0] != P21_hat.shape[1]:
        raise ValidationError(f"P21_hat must be square, got shape {P21_hat.shape}")
    n = P21_hat.shape[0]
    if not 1 <= m_hyper <= n:
        raise ValidationError(f"need 1 <= m_hyper <= {n}, got {m_hyper}")
    U, s, _ = np.linalg.svd(P21_hat)
    numerical_rank = int(np.sum(s > PINV_RCOND * s[0])) if s[0] > 0 else 0
    if numerical_rank < m_hyper:
        warnings.warn(
            f"P21_hat has numerical rank {numerical_rank} < m_hyper={m_hyper}; "
            "the retained subspace includes noise directions",
            RuntimeWarning,
            stacklevel=2,
        )
    return U[:, :m_hyper], s[:m_hyper]


@dataclass(frozen=True)
class ObservableOperators:
    """Learned operator family (U, b1, b_inf, {B_x}) of rank m_hyper."""

    m_hyper: int
    n: int
    U: np.ndarray                # (n, m_hyper), orthonormal columns
    b1: np.ndarray               # (m_hyper,)
    b_inf: np.ndarray            # (m_hyper,)
    B: np.ndarray = field(repr=False)  # (n, m_hyper, m_hyper)
    # Retained spectrum of P21_hat; None on operators read back from file,
    # where the diagnostic is not stored.
    singular_values: np.ndarray | None = None
    rank_deficient: bool = False

    def __post_init__(self):
        n, m = self.n, self.m_hyper
        if not 1 <= m <= n:
            raise ValidationError(f"need 1 <= m_hyper <= n, got m_hyper={m}, n={n}")
        U = np.asarray(self.U, dtype=np.float64)
        b1 = np.asarray(self.b1, dtype=np.float64)
        b_inf = np.asarray(self.b_inf, dtype=np.float64)
        B = np.asarray(self.B, dtype=np.float64)
        if U.shape != (n, m) or b1.shape != (m,) or b_inf.shape != (m,):
            raise ValidationError("operator shapes inconsistent with (n, m_hyper)")
        if B.shape != (n, m, m):
            raise ValidationError(f"B must hold {n} matrices of shape ({m}, {m})")
        if np.max(np.abs(U.T @ U - np.eye(m))) > 1e-10:
            raise ValidationError("U columns are not orthonormal within 1e-10")
        for name, a in (("U", U), ("b1", b1), ("b_inf", b_inf), ("B", B)):
            if not np.all(np.isfinite(a)):
                raise ValidationError(f"{name} contains non-finite entries")
        object.__setattr__(self, "U", _freeze(U))
        object.__setattr__(self, "b1", _freeze(b1))
        object.__setattr__(self, "b_inf", _freeze(b_inf))
        object.__setattr__(self, "B", _freeze(B))
        if self.singular_values is not None:
            sv = np.asarray(self.singular_values, dtype=np.float64)
            if sv.shape != (m,):
                raise ValidationError(f"singular_values must have length {m}")
            object.__setattr__(self, "singular_values", _freeze(sv))


def learn_spectral(moments: MomentEstimates, m_hyper: int) -> ObservableOperators:
    """Build observable operators from moment estimates at rank m_hyper.

    The pseudoinverse of U^T P21_hat is taken via SVD with singular values
    below PINV_RCOND times the largest treated as zero. If that truncation
    bites (numerical rank < m_hyper) the result carries rank_deficient=True
    but is still returned: wrong-rank behavior is a subject of study, not
    a failure.
    """
    n = moments.n
    if not 1 <= m_hyper <= n:
        raise ValidationError(f"need 1 <= m_hyper <= n={n}, got m_hyper={m_hyper}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        U, sv = compute_subspace(moments.P21_hat, m_hyper)
    UP21 = U.T @ moments.P21_hat
    s_inner = np.linalg.svd(UP21, compute_uv=False)
    deficient = bool(s_inner[0] <= 0 or np.sum(s_inner > PINV_RCOND * s_inner[0]) < m_hyper)
    pinv = np.linalg.pinv(UP21, rcond=PINV_RCOND)
    b1 = U.T @ moments.P1_hat
    b_inf = pinv.T @ moments.P1_hat
    B = np.stack([U.T @ moments.P3x1_hat[x] @ pinv for x in range(n)])
    return ObservableOperators(
        m_hyper=m_hyper,
        n=n,
        U=U,
        b1=b1,
        b_inf=b_inf,
        B=B,
        singular_values=sv,
        rank_deficient=deficient,
    )


def predict_joint(operators: ObservableOperators, sequence) -> float:
    """Raw operator product b_inf^T B_{x_t} ... B_{x_1} b1.

    The output is an estimate of Pr(x_1..x_t) but is NOT a probability: it
    can be negative or exceed 1. The empty sequence gives b_inf^T b1.
    """
    seq = np.asarray(sequence, dtype=np.int64)
    if seq.ndim != 1:
        raise ValidationError(f"sequence must be 1-d, got shape {seq.shape}")
    if seq.size and (seq.min() < 1 or seq.max() > operators.n):
        raise ValidationError(f"symbols must lie in 1..{operators.n}")
    v = operators.b1
    for x in seq:
        v = operators.B[x - 1] @ v
    return float(operators.b_inf @ v)


def predict_joint_batch(operators: ObservableOperators, sequences) -> np.ndarray:
    """predict_joint over a (K, t) batch; one pass per time step.

    Grouping rows by the symbol emitted at each step turns the operator
    product into a handful of dense matmuls per step.
    """
    seqs = np.asarray(sequences, dtype=np.int64)
    if seqs.ndim != 2:
        raise ValidationError(f"sequences must be (K, t), got shape {seqs.shape}")
    if seqs.size and (seqs.min() < 1 or seqs.max() > operators.n):
        raise ValidationError(f"symbols must lie in 1..{operators.n}")
    V = np.tile(operators.b1, (seqs.shape[0], 1))
    for k in range(seqs.shape[1]):
        xs = seqs[:, k]
        for x in np.unique(xs):
            rows = xs == x
            V[rows] = V[rows] @ operators.B[x - 1].T
    return V @ operators.b_inf


# ---------------------------------------------------------------------------
# Operator file format:
#
#   ops <n> <m_hyper>
#   <U: n rows of m_hyper floats>
#   <b1: m_hyper floats>
#   <b_inf: m_hyper floats>
#   <B_1 .. B_n: n blocks of m_hyper rows>
#
# Singular values are a fit-time diagnostic and are not persisted.
# ---------------------------------------------------------------------------


def write_operators(operators: ObservableOperators, path) -> None:
    n, m = operators.n, operators.m_hyper
    lines = [f"ops {n} {m}"]
    lines += [_format_row(operators.U[i]) for i in range(n)]
    lines.append(_format_row(operators.b1))
    lines.append(_format_row(operators.b_inf))
    for x in range(n):
        lines += [_format_row(operators.B[x][i]) for i in range(m)]
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def read_operators(path) -> ObservableOperators:
    with open(path) as f:
        lines = [ln for ln in (raw.strip() for raw in f) if ln]
    if not lines or not lines[0].startswith("ops"):
        raise FormatError(f"{path}: expected 'ops <n> <m_hyper>' header")
    header = lines[0].split()
    if len(header) != 3:
        raise FormatError(f"{path}: malformed header {lines[0]!r}")
    try:
        n, m = int(header[1]), int(header[2])
    except ValueError:
        raise FormatError(f"{path}: header sizes must be integers") from None
    if n < 1 or m < 1:
        raise FormatError(f"{path}: sizes must be positive, got n={n}, m_hyper={m}")
    expected = 1 + n + 2 + n * m
    if len(lines) != expected:
        raise FormatError(f"{path}: expected {expected} non-empty lines, got {len(lines)}")
    p = str(path)
    U = np.stack([_parse_floats(lines[1 + i], m, p, f"U row {i}") for i in range(n)])
    b1 = _parse_floats(lines[1 + n], m, p, "b1")
    b_inf = _parse_floats(lines[2 + n], m, p, "b_inf")
    B = np.empty((n, m, m))
    base = 3 + n
    for x in range(n):
        for i in range(m):
            B[x, i] = _parse_floats(lines[base + x * m + i], m, p, f"B_{x + 1} row {i}")
    try:
        return ObservableOperators(m_hyper=m, n=n, U=U, b1=b1, b_inf=b_inf, B=B)
    except ValidationError as e:
        raise FormatError(f"{path}: {e}") from None

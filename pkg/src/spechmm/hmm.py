"""Ground-truth discrete HMMs: validation, sampling, exact inference, moments.

Conventions used throughout the package:

* Matrices are column-stochastic. ``T[i, j]`` is the probability of moving
  to hidden state ``i`` given the current state is ``j``; ``O[x, j]`` is the
  probability of emitting symbol ``x`` from state ``j``. Columns sum to one.
* Hidden states are 0-based internally. Observation symbols are 1-based
  integers in ``1..n`` everywhere a user sees them (datasets, files, CLI).
* All probability arrays are float64 and frozen (read-only views).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, ValidationError

# Tolerance for column sums of stochastic matrices.
STOCHASTIC_TOL = 1e-9

# Guard for all_sequences: n**t grows fast, refuse absurd enumerations.
MAX_ENUMERATION = 10_000_000

_FLOAT_FMT = "%.17g"  # round-trips float64 exactly


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class HmmParams:
    """A validated discrete HMM (m hidden states, n observation symbols)."""

    m: int
    n: int
    pi: np.ndarray  # (m,) initial distribution
    T: np.ndarray   # (m, m) column-stochastic transitions
    O: np.ndarray   # (n, m) column-stochastic emissions


def validate_params(pi, T, O) -> HmmParams:
    """Check shapes, non-negativity and column sums; return a frozen HmmParams.

    Raises ValidationError with a message naming the offending block when a
    column sum is off by more than 1e-9, any entry is negative, or the
    dimensions are inconsistent.
    """
    pi = np.asarray(pi, dtype=np.float64)
    T = np.asarray(T, dtype=np.float64)
    O = np.asarray(O, dtype=np.float64)

    if pi.ndim != 1:
        raise ValidationError(f"pi must be 1-d, got shape {pi.shape}")
    m = pi.shape[0]
    if m < 1:
        raise ValidationError("pi must have at least one entry")
    if T.shape != (m, m):
        raise ValidationError(f"T must be ({m}, {m}) to match pi, got {T.shape}")
    if O.ndim != 2 or O.shape[1] != m:
        raise ValidationError(f"O must have {m} columns to match pi, got shape {O.shape}")
    n = O.shape[0]
    if n < 1:
        raise ValidationError("O must have at least one row")

    for name, block in (("pi", pi), ("T", T), ("O", O)):
        if not np.all(np.isfinite(block)):
            raise ValidationError(f"{name} contains non-finite entries")
        if np.any(block < 0):
            raise ValidationError(f"{name} contains negative entries")

    if abs(pi.sum() - 1.0) > STOCHASTIC_TOL:
        raise ValidationError(f"pi sums to {pi.sum():.12g}, expected 1 within {STOCHASTIC_TOL}")
    for name, block in (("T", T), ("O", O)):
        sums = block.sum(axis=0)
        bad = np.nonzero(np.abs(sums - 1.0) > STOCHASTIC_TOL)[0]
        if bad.size:
            j = int(bad[0])
            raise ValidationError(
                f"column {j} of {name} sums to {sums[j]:.12g}, expected 1 within {STOCHASTIC_TOL}"
            )

    return HmmParams(m=m, n=n, pi=_freeze(pi.copy()), T=_freeze(T.copy()), O=_freeze(O.copy()))


def random_hmm(m: int, n: int, seed: int, concentration: float = 1.0) -> HmmParams:
    """Draw a random HMM with Dirichlet(concentration) columns.

    pi, each column of T and each column of O are independent symmetric
    Dirichlet draws. concentration=1 is uniform on the simplex; smaller
    values give spikier (better-conditioned for spectral work) columns.
    """
    if m < 1 or n < 1:
        raise ValidationError(f"need m >= 1 and n >= 1, got m={m}, n={n}")
    if not concentration > 0:
        raise ValidationError(f"concentration must be positive, got {concentration}")
    rng = np.random.default_rng(seed)
    alpha_m = np.full(m, concentration)
    alpha_n = np.full(n, concentration)
    pi = rng.dirichlet(alpha_m)
    T = np.column_stack([rng.dirichlet(alpha_m) for _ in range(m)])
    O = np.column_stack([rng.dirichlet(alpha_n) for _ in range(m)])
    return validate_params(pi, T, O)


@dataclass(frozen=True)
class Dataset:
    """N observation sequences of equal length t, symbols 1-based in 1..n."""

    sequences: np.ndarray = field(repr=False)  # (N, t) int64
    n: int
    seed: int | None = None

    def __post_init__(self):
        seqs = np.asarray(self.sequences, dtype=np.int64)
        if seqs.ndim != 2:
            raise ValidationError(f"sequences must be (N, t), got shape {seqs.shape}")
        if seqs.shape[0] < 1 or seqs.shape[1] < 1:
            raise ValidationError(f"dataset must be non-empty, got shape {seqs.shape}")
        if self.n < 1:
            raise ValidationError(f"alphabet size must be >= 1, got {self.n}")
        if seqs.min() < 1 or seqs.max() > self.n:
            raise ValidationError(
                f"symbols must lie in 1..{self.n}, got range "
                f"[{seqs.min()}, {seqs.max()}]"
            )
        object.__setattr__(self, "sequences", _freeze(seqs))

    @property
    def count(self) -> int:
        return self.sequences.shape[0]

    @property
    def length(self) -> int:
        return self.sequences.shape[1]


def sample_sequences(params: HmmParams, count: int, length: int, seed: int) -> Dataset:
    """Sample a Dataset of `count` i.i.d. sequences of `length` symbols.

    Fully vectorized over sequences; same (params, count, length, seed)
    always yields byte-identical output.
    """
    if count < 1 or length < 1:
        raise ValidationError(f"need count >= 1 and length >= 1, got {count}, {length}")
    rng = np.random.default_rng(seed)
    # Cumulative tables once; states advance via inverse-CDF per step. One
    # uniform block per step keeps the draw order fixed regardless of m, n.
    cpi = np.cumsum(params.pi)
    cT = np.cumsum(params.T, axis=0)   # (m, m): column j is the CDF from state j
    cO = np.cumsum(params.O, axis=0)
    out = np.empty((count, length), dtype=np.int64)
    h = np.clip(np.searchsorted(cpi, rng.random(count), side="right"), 0, params.m - 1)
    for k in range(length):
        if k > 0:
            u = rng.random(count)
            h = np.clip((cT.T[h] <= u[:, None]).sum(axis=1), 0, params.m - 1)
        u = rng.random(count)
        out[:, k] = np.clip((cO.T[h] <= u[:, None]).sum(axis=1), 0, params.n - 1) + 1
    return Dataset(sequences=out, n=params.n, seed=seed)


def _check_sequence(seq, n: int, allow_empty: bool = False) -> np.ndarray:
    seq = np.asarray(seq, dtype=np.int64)
    if seq.ndim != 1:
        raise ValidationError(f"sequence must be 1-d, got shape {seq.shape}")
    if seq.size == 0:
        if allow_empty:
            return seq
        raise ValidationError("sequence must be non-empty")
    if seq.min() < 1 or seq.max() > n:
        raise ValidationError(f"symbols must lie in 1..{n}")
    return seq


def joint_probability_forward(params: HmmParams, sequence) -> float:
    """Exact Pr(x_1..x_t) via the forward recursion (no scaling needed here:
    joint probabilities of short sequences stay in float64 range)."""
    seq = _check_sequence(sequence, params.n)
    alpha = params.pi * params.O[seq[0] - 1]
    for x in seq[1:]:
        alpha = params.O[x - 1] * (params.T @ alpha)
    return float(alpha.sum())


def joint_probability_forward_batch(params: HmmParams, sequences) -> np.ndarray:
    """Forward recursion over a (K, t) batch of sequences; returns (K,)."""
    seqs = np.asarray(sequences, dtype=np.int64)
    if seqs.ndim != 2 or seqs.shape[1] < 1:
        raise ValidationError(f"sequences must be (K, t) with t >= 1, got {seqs.shape}")
    if seqs.min() < 1 or seqs.max() > params.n:
        raise ValidationError(f"symbols must lie in 1..{params.n}")
    alpha = params.pi[None, :] * params.O[seqs[:, 0] - 1]
    for k in range(1, seqs.shape[1]):
        alpha = params.O[seqs[:, k] - 1] * (alpha @ params.T.T)
    return alpha.sum(axis=1)


def observable_operator(params: HmmParams, symbol: int) -> np.ndarray:
    """A_x = T @ diag(O[x, :]): propagate one step while emitting symbol x."""
    if not 1 <= symbol <= params.n:
        raise ValidationError(f"symbol must lie in 1..{params.n}, got {symbol}")
    return params.T * params.O[symbol - 1][None, :]


def joint_probability_operators(params: HmmParams, sequence) -> float:
    """Pr(x_1..x_t) = 1^T A_{x_t} ... A_{x_1} pi, the operator form of the
    forward recursion (the trailing T inside A_{x_t} is invisible to 1^T).
    Agrees with joint_probability_forward to ~1e-15."""
    seq = _check_sequence(sequence, params.n)
    v = params.pi
    for x in seq:
        v = observable_operator(params, int(x)) @ v
    return float(v.sum())


@dataclass(frozen=True)
class ExactMoments:
    """Population observation moments of an HMM.

    P1[x-1]        = Pr(x_1 = x)
    P21[j-1, i-1]  = Pr(x_2 = j, x_1 = i)
    P3x1[x-1][k-1, i-1] = Pr(x_3 = k, x_2 = x, x_1 = i)
    """

    P1: np.ndarray    # (n,)
    P21: np.ndarray   # (n, n)
    P3x1: np.ndarray  # (n, n, n), indexed by the middle symbol


def exact_moments(params: HmmParams) -> ExactMoments:
    """Closed-form P1, P21, P3x1 from the parameters.

    P1 = O pi, P21 = O T diag(pi) O^T, P3x1(x) = O A_x T diag(pi) O^T.
    """
    O, T, pi = params.O, params.T, params.pi
    core = T @ np.diag(pi) @ O.T          # (m, n): Pr(h_2 = ., x_1 = .)
    P1 = O @ pi
    P21 = O @ core
    P3x1 = np.empty((params.n, params.n, params.n))
    for x in range(1, params.n + 1):
        A_x = observable_operator(params, x)
        P3x1[x - 1] = O @ A_x @ core
    return ExactMoments(P1=_freeze(P1), P21=_freeze(P21), P3x1=_freeze(P3x1))


def all_sequences(n: int, t: int) -> np.ndarray:
    """Enumerate all n**t length-t sequences in lexicographic order, (n**t, t).

    Refuses enumerations above MAX_ENUMERATION cells.
    """
    if n < 1 or t < 1:
        raise ValidationError(f"need n >= 1 and t >= 1, got n={n}, t={t}")
    total = n ** t
    if total > MAX_ENUMERATION:
        raise ValidationError(
            f"refusing to enumerate {n}**{t} = {total} sequences (limit {MAX_ENUMERATION})"
        )
    grids = np.meshgrid(*([np.arange(1, n + 1)] * t), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1).astype(np.int64)


# ---------------------------------------------------------------------------
# Text formats. Models:
#
#   hmm <n> <m>
#   <pi: m floats>
#   <T: m rows of m floats>
#   <O: n rows of m floats>
#
# Datasets:
#
#   dataset <n> <N> <t>
#   <N lines of t space-separated 1-based symbols>
#
# Floats are written with %.17g so float64 round-trips exactly.
# ---------------------------------------------------------------------------


def _format_row(row) -> str:
    return " ".join(_FLOAT_FMT % v for v in np.atleast_1d(row))


def _parse_floats(line: str, count: int, path: str, what: str) -> np.ndarray:
    parts = line.split()
    if len(parts) != count:
        raise FormatError(f"{path}: expected {count} values for {what}, got {len(parts)}")
    try:
        return np.array([float(p) for p in parts], dtype=np.float64)
    except ValueError as e:
        raise FormatError(f"{path}: bad float in {what}: {e}") from None


def write_model(params: HmmParams, path) -> None:
    lines = [f"hmm {params.n} {params.m}", _format_row(params.pi)]
    lines += [_format_row(params.T[i]) for i in range(params.m)]
    lines += [_format_row(params.O[x]) for x in range(params.n)]
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def read_model(path) -> HmmParams:
    with open(path) as f:
        lines = [ln for ln in (raw.strip() for raw in f) if ln]
    if not lines or not lines[0].startswith("hmm"):
        raise FormatError(f"{path}: expected 'hmm <n> <m>' header")
    header = lines[0].split()
    if len(header) != 3:
        raise FormatError(f"{path}: malformed header {lines[0]!r}")
    try:
        n, m = int(header[1]), int(header[2])
    except ValueError:
        raise FormatError(f"{path}: header sizes must be integers") from None
    if n < 1 or m < 1:
        raise FormatError(f"{path}: sizes must be positive, got n={n}, m={m}")
    expected = 1 + 1 + m + n
    if len(lines) != expected:
        raise FormatError(f"{path}: expected {expected} non-empty lines, got {len(lines)}")
    pi = _parse_floats(lines[1], m, str(path), "pi")
    T = np.stack([_parse_floats(lines[2 + i], m, str(path), f"T row {i}") for i in range(m)])
    O = np.stack([_parse_floats(lines[2 + m + x], m, str(path), f"O row {x}") for x in range(n)])
    try:
        return validate_params(pi, T, O)
    except ValidationError as e:
        raise FormatError(f"{path}: {e}") from None


def write_dataset(dataset: Dataset, path) -> None:
    with open(path, "w") as f:
        f.write(f"dataset {dataset.n} {dataset.count} {dataset.length}\n")
        for row in dataset.sequences:
            f.write(" ".join(str(int(v)) for v in row) + "\n")


def read_dataset(path) -> Dataset:
    with open(path) as f:
        lines = [ln for ln in (raw.strip() for raw in f) if ln]
    if not lines or not lines[0].startswith("dataset"):
        raise FormatError(f"{path}: expected 'dataset <n> <N> <t>' header")
    header = lines[0].split()
    if len(header) != 4:
        raise FormatError(f"{path}: malformed header {lines[0]!r}")
    try:
        n, N, t = int(header[1]), int(header[2]), int(header[3])
    except ValueError:
        raise FormatError(f"{path}: header sizes must be integers") from None
    if len(lines) != 1 + N:
        raise FormatError(f"{path}: expected {N} data lines, got {len(lines) - 1}")
    seqs = np.empty((N, t), dtype=np.int64)
    for i in range(N):
        parts = lines[1 + i].split()
        if len(parts) != t:
            raise FormatError(f"{path}: line {i + 2} has {len(parts)} symbols, expected {t}")
        try:
            seqs[i] = [int(p) for p in parts]
        except ValueError:
            raise FormatError(f"{path}: line {i + 2} has a non-integer symbol") from None
    try:
        return Dataset(sequences=seqs, n=n)
    except ValidationError as e:
        raise FormatError(f"{path}: {e}") from None

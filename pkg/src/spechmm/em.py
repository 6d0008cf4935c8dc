"""Baum-Welch EM with random restarts for discrete HMMs.

All inference runs in scaled linear space: the forward pass renormalizes at
every step and accumulates the scaling factors' logs, so log-likelihoods are
exact while alphas stay O(1). Datasets hold equal-length sequences, which
lets the E-step batch the whole forward-backward sweep as dense matrix work
over all sequences at once (chunked to bound memory).

No regularization anywhere: zero-count M-step denominators leave the previous
column untouched instead of smoothing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .hmm import Dataset, HmmParams, validate_params

# Per-step slack for the monotonicity invariant of EM traces.
TRACE_SLACK = 1e-9

# Target float64 cells per forward-pass chunk (~32 MB of alphas).
_CHUNK_CELLS = 4_000_000


@dataclass(frozen=True)
class EmConfig:
    """Baum-Welch settings. Defaults finish desk-scale sweeps in minutes."""

    m_hyper: int
    max_iterations: int = 200
    rel_tolerance: float = 1e-6
    restarts: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.m_hyper < 1:
            raise ValidationError(f"m_hyper must be >= 1, got {self.m_hyper}")
        if self.max_iterations < 1:
            raise ValidationError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if not self.rel_tolerance > 0:
            raise ValidationError(f"rel_tolerance must be > 0, got {self.rel_tolerance}")
        if self.restarts < 1:
            raise ValidationError(f"restarts must be >= 1, got {self.restarts}")
        if self.seed < 0:
            raise ValidationError(f"seed must be non-negative, got {self.seed}")


@dataclass(frozen=True)
class EmResult:
    """Best-restart outcome of em_fit.

    loglik_trace[i] is the training log-likelihood of the parameters at the
    start of iteration i of the winning restart; the final entry is the
    log-likelihood of the returned params. converged reports whether that
    restart hit the relative-improvement tolerance before max_iterations.
    """

    params: HmmParams
    loglik_trace: np.ndarray = field(repr=False)
    restart_logliks: np.ndarray
    converged: bool

    def __post_init__(self):
        trace = np.asarray(self.loglik_trace, dtype=np.float64)
        rl = np.asarray(self.restart_logliks, dtype=np.float64)
        if trace.ndim != 1 or trace.size < 1:
            raise ValidationError("loglik_trace must be a non-empty 1-d array")
        if rl.ndim != 1 or rl.size < 1:
            raise ValidationError("restart_logliks must be a non-empty 1-d array")
        if np.any(np.diff(trace) < -TRACE_SLACK):
            worst = float(np.min(np.diff(trace)))
            raise ValidationError(
                f"loglik_trace decreased by {-worst:.3e} (> {TRACE_SLACK} slack)"
            )
        trace.setflags(write=False)
        rl.setflags(write=False)
        object.__setattr__(self, "loglik_trace", trace)
        object.__setattr__(self, "restart_logliks", rl)


def _chunk_size(t: int, m: int) -> int:
    return max(1, _CHUNK_CELLS // (t * m))


def dataset_log_likelihood(params: HmmParams, sequences) -> float:
    """Total log Pr of a (N, t) batch under params; -inf if any sequence is
    impossible."""
    seqs = np.asarray(sequences, dtype=np.int64)
    if seqs.ndim != 2 or seqs.shape[1] < 1:
        raise ValidationError(f"sequences must be (N, t), got shape {seqs.shape}")
    if seqs.min() < 1 or seqs.max() > params.n:
        raise ValidationError(f"symbols must lie in 1..{params.n}")
    total = 0.0
    step = _chunk_size(seqs.shape[1], params.m)
    for lo in range(0, seqs.shape[0], step):
        X = seqs[lo:lo + step] - 1
        a = params.O[X[:, 0], :] * params.pi[None, :]
        c = a.sum(axis=1)
        if np.any(c == 0.0):
            return float("-inf")
        with np.errstate(divide="ignore"):
            acc = np.log(c).sum()
        a = a / c[:, None]
        for k in range(1, X.shape[1]):
            a = params.O[X[:, k], :] * (a @ params.T.T)
            c = a.sum(axis=1)
            if np.any(c == 0.0):
                return float("-inf")
            acc += np.log(c).sum()
            a = a / c[:, None]
        total += acc
    return float(total)


def forward_backward(params: HmmParams, sequence):
    """Scaled forward-backward posteriors for one sequence.

    Returns (gamma, xi, log_likelihood) where gamma[k, i] = Pr(h_k = i | x)
    and xi[k, i, j] = Pr(h_{k+1} = i, h_k = j | x) for k < t-1. A sequence
    with zero probability under params returns (None, None, -inf), the
    impossible-sequence signal.
    """
    seq = np.asarray(sequence, dtype=np.int64)
    if seq.ndim != 1 or seq.size < 1:
        raise ValidationError("sequence must be a non-empty 1-d array")
    if seq.min() < 1 or seq.max() > params.n:
        raise ValidationError(f"symbols must lie in 1..{params.n}")
    X = seq - 1
    t, m = seq.size, params.m
    alpha = np.empty((t, m))
    c = np.empty(t)
    a = params.O[X[0]] * params.pi
    c[0] = a.sum()
    if c[0] == 0.0:
        return None, None, float("-inf")
    alpha[0] = a / c[0]
    for k in range(1, t):
        a = params.O[X[k]] * (params.T @ alpha[k - 1])
        c[k] = a.sum()
        if c[k] == 0.0:
            return None, None, float("-inf")
        alpha[k] = a / c[k]
    beta = np.empty((t, m))
    beta[t - 1] = 1.0
    for k in range(t - 2, -1, -1):
        w = params.O[X[k + 1]] * beta[k + 1] / c[k + 1]
        beta[k] = w @ params.T
    gamma = alpha * beta
    xi = np.empty((t - 1, m, m))
    for k in range(t - 1):
        w = params.O[X[k + 1]] * beta[k + 1] / c[k + 1]
        xi[k] = params.T * np.outer(w, alpha[k])
    return gamma, xi, float(np.log(c).sum())


def _e_step(pi, T, O, seqs):
    """Accumulated expected counts over an equal-length batch.

    Returns (pi_acc, T_num, O_num, loglik): pi_acc[i] sums the position-0
    posteriors, T_num[i, j] the expected i<-j transition counts, O_num[x, j]
    the expected emission counts. Chunked over sequences; the backward pass
    folds the emission/scale weights into running products so only alphas
    are stored per chunk.
    """
    m = pi.shape[0]
    n = O.shape[0]
    N, t = seqs.shape
    pi_acc = np.zeros(m)
    T_num = np.zeros((m, m))
    O_num = np.zeros((n, m))
    loglik = 0.0
    step = _chunk_size(t, m)
    for lo in range(0, N, step):
        X = seqs[lo:lo + step] - 1
        rows = X.shape[0]
        alpha = np.empty((rows, t, m))
        c = np.empty((rows, t))
        a = O[X[:, 0], :] * pi[None, :]
        c[:, 0] = a.sum(axis=1)
        a = a / c[:, 0][:, None]
        alpha[:, 0] = a
        for k in range(1, t):
            a = O[X[:, k], :] * (a @ T.T)
            c[:, k] = a.sum(axis=1)
            a = a / c[:, k][:, None]
            alpha[:, k] = a
        b = np.ones((rows, m))
        g = alpha[:, t - 1] * b
        for j in range(m):
            O_num[:, j] += np.bincount(X[:, t - 1], weights=g[:, j], minlength=n)
        for k in range(t - 2, -1, -1):
            w = O[X[:, k + 1], :] * b / c[:, k + 1][:, None]
            T_num += T * (w.T @ alpha[:, k])
            b = w @ T
            g = alpha[:, k] * b
            for j in range(m):
                O_num[:, j] += np.bincount(X[:, k], weights=g[:, j], minlength=n)
        pi_acc += g.sum(axis=0)  # g holds the k=0 posteriors after the loop
        loglik += np.log(c).sum()
    return pi_acc, T_num, O_num, float(loglik)


def em_fit(dataset: Dataset, config: EmConfig) -> EmResult:
    """Baum-Welch from `restarts` Dirichlet(1) initializations.

    Each restart iterates E and M steps until the relative log-likelihood
    improvement drops to rel_tolerance or max_iterations is exhausted; the
    restart with the highest final log-likelihood wins, earliest index on
    ties. Deterministic: restart r draws its initialization from
    default_rng([seed, r]).
    """
    m, n = config.m_hyper, dataset.n
    seqs = dataset.sequences
    best_trace = None
    best_converged = False
    best_params = None
    restart_lls = np.empty(config.restarts)
    for r in range(config.restarts):
        rng = np.random.default_rng([config.seed, r])
        pi = rng.dirichlet(np.ones(m))
        T = np.column_stack([rng.dirichlet(np.ones(m)) for _ in range(m)])
        O = np.column_stack([rng.dirichlet(np.ones(n)) for _ in range(m)])
        ll_prev = None
        trace = []
        converged = False
        for _ in range(config.max_iterations):
            pi_acc, T_num, O_num, ll = _e_step(pi, T, O, seqs)
            trace.append(ll)
            if ll_prev is not None and ll - ll_prev <= config.rel_tolerance * max(abs(ll_prev), 1.0):
                converged = True
                break
            T_col = T_num.sum(axis=0)
            O_col = O_num.sum(axis=0)
            pi = pi_acc / pi_acc.sum()
            T = np.where(T_col > 0, T_num / np.where(T_col > 0, T_col, 1.0), T)
            O = np.where(O_col > 0, O_num / np.where(O_col > 0, O_col, 1.0), O)
            ll_prev = ll
        if not converged:
            # params moved after the last traced E-step; evaluate them so the
            # trace ends at the returned model's log-likelihood
            trace.append(dataset_log_likelihood(validate_params(pi, T, O), seqs))
        restart_lls[r] = trace[-1]
        if best_trace is None or trace[-1] > best_trace[-1]:
            best_trace = trace
            best_converged = converged
            best_params = (pi, T, O)
    params = validate_params(*best_params)
    return EmResult(
        params=params,
        loglik_trace=np.array(best_trace),
        restart_logliks=restart_lls,
        converged=best_converged,
    )


def write_loglik_trace(trace, path) -> None:
    """Export a log-likelihood trace as CSV with columns iteration, loglik."""
    trace = np.asarray(trace, dtype=np.float64)
    with open(path, "w") as f:
        f.write("iteration,loglik\n")
        for i, v in enumerate(trace):
            f.write(f"{i},{float(v)!r}\n")

"""Brute-force oracles for pinning expected values.

Everything here is deliberately naive (explicit sums over hidden paths with
no scaling, no SVD, no recursions shared with the library) so agreement
with the package is meaningful evidence, not tautology.
"""

import itertools

import numpy as np


def joint_prob_paths(pi, T, O, seq):
    """Pr(seq) as an explicit sum over all m**t hidden paths."""
    m = len(pi)
    total = 0.0
    for path in itertools.product(range(m), repeat=len(seq)):
        p = pi[path[0]] * O[seq[0] - 1, path[0]]
        for k in range(1, len(seq)):
            p *= T[path[k], path[k - 1]] * O[seq[k] - 1, path[k]]
        total += p
    return total


def joint_prob_paths_batch(pi, T, O, seqs):
    """Path enumeration vectorized over a (K, t) batch of sequences."""
    seqs = np.asarray(seqs)
    m = len(pi)
    K, t = seqs.shape
    paths = np.array(list(itertools.product(range(m), repeat=t)), dtype=np.int64)
    w = pi[paths[:, 0]].copy()
    for k in range(1, t):
        w = w * T[paths[:, k], paths[:, k - 1]]
    em = np.ones((K, paths.shape[0]))
    for k in range(t):
        em = em * O[(seqs[:, k] - 1)[:, None], paths[:, k][None, :]]
    return em @ w


def moments_by_paths(pi, T, O):
    """(P1, P21, P3x1) built purely from path-enumerated joint probabilities."""
    n = O.shape[0]
    P1 = np.array([joint_prob_paths(pi, T, O, [i]) for i in range(1, n + 1)])
    P21 = np.array([
        [joint_prob_paths(pi, T, O, [i, j]) for i in range(1, n + 1)]
        for j in range(1, n + 1)
    ])
    P3x1 = np.array([
        [
            [joint_prob_paths(pi, T, O, [i, x, k]) for i in range(1, n + 1)]
            for k in range(1, n + 1)
        ]
        for x in range(1, n + 1)
    ])
    return P1, P21, P3x1


def posteriors_by_paths(pi, T, O, seq):
    """(gamma, xi, loglik) from explicit path enumeration.

    gamma[k, i] = Pr(h_k = i | seq); xi[k, i, j] = Pr(h_{k+1} = i, h_k = j | seq).
    """
    m = len(pi)
    t = len(seq)
    gamma = np.zeros((t, m))
    xi = np.zeros((t - 1, m, m))
    total = 0.0
    for path in itertools.product(range(m), repeat=t):
        p = pi[path[0]] * O[seq[0] - 1, path[0]]
        for k in range(1, t):
            p *= T[path[k], path[k - 1]] * O[seq[k] - 1, path[k]]
        total += p
        for k in range(t):
            gamma[k, path[k]] += p
        for k in range(t - 1):
            xi[k, path[k + 1], path[k]] += p
    return gamma / total, xi / total, np.log(total)


def random_stochastic(rng, rows, cols):
    """Column-stochastic matrix with i.i.d. uniform columns (not Dirichlet,
    to stay independent of the library's generator)."""
    M = rng.random((rows, cols)) + 1e-3
    return M / M.sum(axis=0)

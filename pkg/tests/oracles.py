"""Reference implementations written independently of the engine.

Each oracle takes a different route from the engine: explicit loops over
elements, pairs or rankings, least squares on an augmented system, or
iterative descent. Tests compare engine output against these.
"""

from __future__ import annotations

import numpy as np


def ridge_normal_equations(Z, y, pi, lam):
    """Weighted ridge with unpenalized intercept via hand-assembled normal equations.

    Builds A = sum_i pi_i x_i x_i^T + lam * diag(0, 1, ..., 1) and b = sum_i pi_i y_i x_i
    element by element with x_i = (1, z_i), then solves with least squares.
    Returns (weights, intercept).
    """
    Z = [[float(v) for v in row] for row in Z]
    n, d = len(Z), len(Z[0])
    p = d + 1
    A = [[0.0] * p for _ in range(p)]
    b = [0.0] * p
    for i in range(n):
        x = [1.0] + Z[i]
        for r in range(p):
            b[r] += pi[i] * y[i] * x[r]
            for c in range(p):
                A[r][c] += pi[i] * x[r] * x[c]
    for r in range(1, p):
        A[r][r] += lam
    sol = np.linalg.lstsq(np.array(A), np.array(b), rcond=None)[0]
    return sol[1:], sol[0]


def ridge_augmented_lstsq(Z, y, pi, lam):
    """Same problem posed as ordinary least squares on sqrt-weighted rows plus penalty rows."""
    Z = np.asarray(Z, dtype=float)
    n, d = Z.shape
    sw = np.sqrt(np.asarray(pi, dtype=float))
    X = np.hstack([np.ones((n, 1)), Z]) * sw[:, None]
    t = np.asarray(y, dtype=float) * sw
    pen = np.hstack([np.zeros((d, 1)), np.sqrt(lam) * np.eye(d)])
    sol = np.linalg.lstsq(np.vstack([X, pen]), np.concatenate([t, np.zeros(d)]), rcond=None)[0]
    return sol[1:], sol[0]


def ridge_gradient_descent(Z, y, pi, lam, steps=50000, tol=1e-13):
    """Batched accelerated gradient descent on the ridge objective for a stack of systems.

    Z: (S, N, d), y: (S, N), pi: (S, N), lam: (S,). Step 1/L and Nesterov momentum
    from each system's Hessian spectrum; iterates until every gradient is below tol.
    Returns (weights (S, d), intercepts (S,)).
    """
    Z, y, pi, lam = (np.asarray(a, dtype=float) for a in (Z, y, pi, lam))
    S, N, d = Z.shape
    X = np.concatenate([np.ones((S, N, 1)), Z], axis=2)
    P = np.zeros((S, d + 1, d + 1))
    P[:, 1:, 1:] = lam[:, None, None] * np.eye(d)
    H = np.einsum("sn,sni,snj->sij", pi, X, X) + P
    g0 = np.einsum("sn,sn,sni->si", pi, y, X)
    eig = np.linalg.eigvalsh(H)
    L, mu = eig[:, -1], eig[:, 0]
    root = np.sqrt(L / mu)
    momentum = ((root - 1) / (root + 1))[:, None]
    step = (1.0 / L)[:, None]
    theta = np.zeros((S, d + 1))
    prev = theta.copy()
    for _ in range(steps):
        look = theta + momentum * (theta - prev)
        grad = np.einsum("sij,sj->si", H, look) - g0
        prev, theta = theta, look - step * grad
        if np.max(np.abs(np.einsum("sij,sj->si", H, theta) - g0)) < tol:
            break
    return theta[:, 1:], theta[:, 0]


def pairwise_roc_auc(scores, labels):
    """Count every positive-negative pair: 1 if the positive is higher, 1/2 on ties."""
    pos = [s for s, l in zip(scores, labels) if l == 1]
    neg = [s for s, l in zip(scores, labels) if l == 0]
    total = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                total += 1.0
            elif p == q:
                total += 0.5
    return total / (len(pos) * len(neg))


def brute_force_ranks(scores):
    """Rank of each token (1-based): higher score first, then lower index, found by pair comparisons."""
    d = len(scores)
    ranks = []
    for j in range(d):
        ahead = sum(1 for k in range(d) if scores[k] > scores[j] or (scores[k] == scores[j] and k < j))
        ranks.append(ahead + 1)
    return ranks


def brute_force_average_precision(scores, labels):
    """Mean over positives of (positives at or above its rank) / rank, accumulated in rank order."""
    ranks = brute_force_ranks(scores)
    order = sorted(range(len(scores)), key=lambda j: ranks[j])
    total = 0.0
    for j in order:
        if labels[j] == 1:
            hits = sum(1 for k in range(len(scores)) if labels[k] == 1 and ranks[k] <= ranks[j])
            total += hits / ranks[j]
    return total / sum(labels)


def hashed_bow_cosine(count_a: dict, count_b: dict) -> float:
    """Cosine between two count vectors (bucket -> count) written out by hand."""
    dot = sum(count_a[k] * count_b.get(k, 0) for k in count_a)
    na = sum(v * v for v in count_a.values()) ** 0.5
    nb = sum(v * v for v in count_b.values()) ** 0.5
    return dot / (na * nb)

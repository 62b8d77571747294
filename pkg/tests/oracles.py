"""Straight-loop reference implementations used to cross-check the package."""
from __future__ import annotations

import itertools
import math

import numpy as np


def brute_rows(q, k, multiset):
    rows = []
    for t in itertools.product(range(q), repeat=k):
        if multiset and list(t) != sorted(t):
            continue
        rows.append(t)
    return rows


def brute_selection(rows, q, k):
    A = np.zeros((len(rows), q * k), dtype=int)
    for i, t in enumerate(rows):
        for node, level in enumerate(t):
            A[i, node * q + level] = 1
    return A


def brute_pairs(outputs, eps):
    out = []
    for i in range(len(outputs)):
        for j in range(i + 1, len(outputs)):
            if outputs[i] != outputs[j]:
                out.append((i, j, eps * (outputs[i] - outputs[j]) ** 2))
    return out


def brute_received(A, x, C):
    M, N = A.shape
    L = C.shape[1]
    V = np.zeros((M, L), dtype=complex)
    for i in range(M):
        for l in range(L):
            s = 0j
            for n in range(N):
                s += A[i, n] * x[n] * C[n, l]
            V[i, l] = s
    return V


def brute_min_ones(D, delta, L):
    """Exhaustive minimum total ones over every binary n x L code (tiny n*L only)."""
    n = D.shape[1]
    best = None
    for bits in itertools.product((0, 1), repeat=n * L):
        C = np.array(bits).reshape(n, L)
        ones = int(C.sum())
        if best is not None and ones >= best:
            continue
        vals = np.sum(np.abs(D @ C) ** 2, axis=1)
        if np.all(vals >= delta * (1 - 1e-9)):
            best = ones
    return best


def loop_nmse(est, truth):
    total, used = 0.0, 0
    for e, f in zip(est, truth):
        if f == 0:
            continue
        total += (f - e) ** 2 / abs(f)
        used += 1
    return total / used


def cvx_trace_sdp(B, delta):
    """Reference min-trace SDP optimum from a conic solver."""
    import cvxpy as cp

    n = B.shape[1]
    W = cp.Variable((n, n), symmetric=True)
    cons = [W >> 0] + [cp.trace(B[p] @ W) >= delta[p] for p in range(len(delta))]
    prob = cp.Problem(cp.Minimize(cp.trace(W)), cons)
    prob.solve(solver=cp.CLARABEL)
    return prob.value, W.value


def multinomial(counts):
    return math.factorial(sum(counts)) // math.prod(math.factorial(c) for c in counts)

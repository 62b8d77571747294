"""Slot-code update: minimum-weight binary code meeting every pair requirement.

For a fixed design vector u, requirement p reads
``sum_l |d_p^H c_l|^2 >= delta_p`` with ``d_p = diffs_p . u`` and binary
columns c_l. Variables are flattened row-major, index ``a * L + l``.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

log = logging.getLogger(__name__)

FEAS_RTOL = 1e-9


@dataclass
class CodeStep:
    C: np.ndarray | None
    status: str
    ones: int
    method: str
    nodes: int = 0


def _slack(delta: np.ndarray) -> np.ndarray:
    return FEAS_RTOL * delta


def code_values(D: np.ndarray, C: np.ndarray) -> np.ndarray:
    """``sum_l |D_p . c_l|^2`` for one code (n x L) or a batch (S x n x L)."""
    C = np.asarray(C, dtype=float)
    if C.ndim == 2:
        return np.sum(np.abs(D @ C) ** 2, axis=1)
    s = np.einsum("pa,sal->spl", D, C)
    return np.sum(np.abs(s) ** 2, axis=2)


def code_feasible(D: np.ndarray, delta: np.ndarray, C: np.ndarray) -> bool:
    return bool(np.all(code_values(D, C) >= delta - _slack(delta)))


def _trivially_infeasible(D: np.ndarray, delta: np.ndarray, L: int) -> bool:
    ub = L * np.sum(np.abs(D), axis=1) ** 2
    return bool(np.any(ub < delta - _slack(delta)))


def exhaustive_code(
    D: np.ndarray, delta: np.ndarray, L: int, incumbent: np.ndarray | None = None, chunk: int = 2048
) -> CodeStep:
    """Exact minimum by enumerating codes in order of weight, then lexicographically.

    The first feasible code met is optimal. A feasible ``incumbent`` wins
    ties at its own weight; otherwise ties go to the code whose sorted
    support is lexicographically smallest.
    """
    P, n = D.shape
    nv = n * L
    if P == 0:
        return CodeStep(np.zeros((n, L), dtype=np.int8), "feasible", 0, "exhaustive")
    if _trivially_infeasible(D, delta, L):
        return CodeStep(None, "infeasible", -1, "exhaustive")
    need = delta - _slack(delta)
    # screen each batch on the hardest requirements first
    hard = np.argsort(-(delta / np.maximum(np.sum(np.abs(D), axis=1) ** 2, 1e-300)), kind="stable")[:64]
    inc_ones = -1
    if incumbent is not None and code_feasible(D, delta, incumbent):
        inc_ones = int(np.sum(incumbent))
    for k in range(nv + 1):
        if k == inc_ones:
            return CodeStep(np.asarray(incumbent, dtype=np.int8).copy(), "feasible", k, "exhaustive")
        combos = itertools.combinations(range(nv), k)
        while True:
            block = list(itertools.islice(combos, chunk))
            if not block:
                break
            S = len(block)
            flat = np.zeros((S, nv), dtype=np.int8)
            if k:
                flat[np.repeat(np.arange(S), k), np.asarray(block).ravel()] = 1
            Cb = flat.reshape(S, n, L)
            alive = np.all(code_values(D[hard], Cb) >= need[hard], axis=1)
            if not np.any(alive):
                continue
            for s in np.flatnonzero(alive):
                if np.all(code_values(D, Cb[s]) >= need):
                    return CodeStep(Cb[s].copy(), "feasible", k, "exhaustive")
    return CodeStep(None, "infeasible", -1, "exhaustive")


class _McCormickBound:
    """LP lower bound on code weight from McCormick envelopes of c_a c_b.

    Each slot gets product variables y_ab (a < b) with
    ``y <= c_a, y <= c_b, y >= c_a + c_b - 1, y >= 0`` and the requirement
    ``sum_l [sum_a |d_a|^2 c_al + 2 sum_{a<b} Re(d_a conj d_b) y_abl] >= delta``
    becomes linear. Any subset of requirements yields a valid bound.
    """

    def __init__(self, n: int, L: int):
        self.n, self.L = n, L
        self.ia, self.ib = np.triu_indices(n, k=1)
        npair = len(self.ia)
        self.nc = n * L
        self.ny = npair * L
        rows, cols, vals = [], [], []
        r = 0
        for l in range(L):
            for t in range(npair):
                y = self.nc + l * npair + t
                ca = self.ia[t] * L + l
                cb = self.ib[t] * L + l
                rows += [r, r, r + 1, r + 1, r + 2, r + 2, r + 2]
                cols += [y, ca, y, cb, ca, cb, y]
                vals += [1, -1, 1, -1, 1, 1, -1]
                r += 3
        self.env = sp.csr_matrix((vals, (rows, cols)), shape=(r, self.nc + self.ny))
        self.env_rhs = np.tile([0.0, 0.0, 1.0], r // 3)

    def bound(self, D: np.ndarray, delta: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> float:
        n, L = self.n, self.L
        diag = np.abs(D) ** 2  # P x n
        cross = 2 * np.real(D[:, self.ia] * np.conj(D[:, self.ib]))  # P x npair
        P = len(delta)
        req = np.zeros((P, self.nc + self.ny))
        for l in range(L):
            req[:, np.arange(n) * L + l] = diag
            req[:, self.nc + l * len(self.ia): self.nc + (l + 1) * len(self.ia)] = cross
        A = sp.vstack([self.env, sp.csr_matrix(-req)], format="csr")
        b = np.concatenate([self.env_rhs, -delta])
        cost = np.concatenate([np.ones(self.nc), np.zeros(self.ny)])
        bounds = np.concatenate([np.stack([lo, hi], 1), np.tile([0.0, 1.0], (self.ny, 1))])
        res = linprog(cost, A_ub=A, b_ub=b, bounds=bounds, method="highs")
        if res.status == 2:
            return np.inf
        if res.status != 0:
            return -np.inf
        return float(res.fun)


def branch_and_bound_code(
    D: np.ndarray,
    delta: np.ndarray,
    L: int,
    incumbent: np.ndarray | None = None,
    node_limit: int = 200000,
    lp_min_free: int = 6,
    lp_rows: int = 40,
) -> CodeStep:
    """Exact depth-first branch and bound on the code weight.

    Nodes are pruned by weight against the incumbent, by a triangle-inequality
    feasibility test, and by the McCormick LP bound on a subset of violated
    requirements. Branching picks the free variable with the largest
    normalized contribution to the violated requirements (lowest index on
    ties) and explores its 0-branch first.
    """
    P, n = D.shape
    nv = n * L
    if P == 0:
        return CodeStep(np.zeros((n, L), dtype=np.int8), "feasible", 0, "bnb")
    if _trivially_infeasible(D, delta, L):
        return CodeStep(None, "infeasible", -1, "bnb")
    need = delta - _slack(delta)
    absD = np.abs(D)
    absD2 = absD**2
    lp = _McCormickBound(n, L) if lp_min_free is not None else None

    best = None
    best_ones = nv + 1
    if incumbent is not None and code_feasible(D, delta, incumbent):
        best = np.asarray(incumbent, dtype=np.int8).copy()
        best_ones = int(best.sum())

    stack = [np.full(nv, -1, dtype=np.int8)]
    nodes = 0
    exhausted = False
    while stack:
        if nodes >= node_limit:
            exhausted = True
            break
        z = stack.pop()
        nodes += 1
        ones = int(np.sum(z == 1))
        if ones >= best_ones:
            continue
        Z = z.reshape(n, L)
        fixed = (Z == 1).astype(float)
        free = (Z == -1).astype(float)
        s = D @ fixed  # P x L
        val = np.sum(np.abs(s) ** 2, axis=1)
        viol = val < need
        if not np.any(viol):
            best, best_ones = fixed.astype(np.int8), ones
            continue
        if ones + 1 >= best_ones:
            continue
        ub = np.sum((np.abs(s) + absD @ free) ** 2, axis=1)
        if np.any(ub < need):
            continue
        nfree = int(free.sum())
        if lp is not None and nfree >= lp_min_free:
            vidx = np.flatnonzero(viol)
            deficit = (need[vidx] - val[vidx]) / delta[vidx]
            pick = vidx[np.argsort(-deficit, kind="stable")[:lp_rows]]
            lo = (z == 1).astype(float)
            hi = (z != 0).astype(float)
            bound = lp.bound(D[pick], need[pick], lo, hi)
            if np.ceil(bound - 1e-6) >= best_ones:
                continue
        impact = (absD2[viol] / delta[viol, None]).sum(axis=0)  # per symbol
        score = np.where(free.ravel() > 0, np.repeat(impact, L), -np.inf)
        v = int(np.argmax(score))
        one = z.copy()
        one[v] = 1
        zero = z.copy()
        zero[v] = 0
        stack.append(one)
        stack.append(zero)

    if best is None:
        # node limit or not, no feasible code was found
        return CodeStep(None, "infeasible", -1, "bnb", nodes)
    return CodeStep(best, "budget_exhausted" if exhausted else "feasible", best_ones, "bnb", nodes)


def solve_code_subproblem(
    problem,
    u: np.ndarray,
    L: int,
    exhaustive_threshold: int = 24,
    node_limit: int = 200000,
    incumbent: np.ndarray | None = None,
) -> CodeStep:
    """Minimum-weight code for design vector ``u`` of a ``DesignProblem``.

    Exhaustive search when ``n * L <= exhaustive_threshold``, branch and bound
    otherwise. Codes are in design coordinates (n x L).
    """
    D = problem.diffs * np.asarray(u)[None, :]
    if problem.n * L <= exhaustive_threshold:
        return exhaustive_code(D, problem.delta, L, incumbent=incumbent)
    return branch_and_bound_code(D, problem.delta, L, incumbent=incumbent, node_limit=node_limit)

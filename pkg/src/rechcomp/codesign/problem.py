"""Shared problem data for the joint constellation / slot-code design."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..functab import ConstraintSet, InputEnumeration


def lmin_bound(constraints: ConstraintSet, n: int, p_max: float) -> int:
    """Smallest slot count admitted by the power budget, ``ceil(max(delta) * N / P_max)``, floored at 1."""
    if not p_max > 0:
        raise ValueError("P_max must be positive")
    if len(constraints) == 0:
        return 1
    return max(1, math.ceil(float(np.max(constraints.delta)) * n / p_max))


def bit_split_code(q: int, k: int, slots: int) -> np.ndarray:
    """Round-robin code: symbol ``q`` of every node goes in slot ``q mod L``."""
    base = np.zeros((q, slots), dtype=np.int8)
    base[np.arange(q), np.arange(q) % slots] = 1
    return np.tile(base, (k, 1))


def received_sequences(enum: InputEnumeration, x: np.ndarray, C: np.ndarray) -> np.ndarray:
    """Noiseless received sequences ``V = A (X . C)`` (M x L)."""
    x = np.asarray(x)
    C = np.asarray(C)
    if x.shape != (enum.N,) or C.shape[0] != enum.N:
        raise ValueError(f"expected x of length {enum.N} and C with {enum.N} rows")
    return enum.selection @ (x[:, None] * C)


def check_feasibility(
    x: np.ndarray,
    C: np.ndarray,
    enum: InputEnumeration,
    constraints: ConstraintSet,
    tol: float = 1e-6,
) -> tuple[np.ndarray, bool]:
    """Per-pair margins ``|v_i - v_j|^2 - delta`` and whether all are >= ``-tol * delta``.

    The relative test is stricter than ``-tol * max(1, delta)`` and keeps
    exact collisions infeasible when epsilon is small.
    """
    V = received_sequences(enum, x, C)
    diff = V[constraints.first] - V[constraints.second]
    margins = np.sum(np.abs(diff) ** 2, axis=1) - constraints.delta
    ok = bool(np.all(margins >= -tol * constraints.delta))
    return margins, ok


def build_pair_matrices(
    enum: InputEnumeration, C: np.ndarray, constraints: ConstraintSet | None = None
) -> dict[tuple[int, int], np.ndarray]:
    """``B_ij = sum_l ((a_i - a_j) . c_l)((a_i - a_j) . c_l)^T`` for every constrained pair.

    Without ``constraints`` all pairs i < j are built.
    """
    C = np.asarray(C)
    if C.ndim != 2 or C.shape[0] != enum.N:
        raise ValueError(f"code matrix must have {enum.N} rows, got shape {C.shape}")
    if constraints is None:
        pairs = zip(*np.triu_indices(enum.M, k=1))
    else:
        pairs = zip(constraints.first.tolist(), constraints.second.tolist())
    A = enum.selection.astype(float)
    out = {}
    for i, j in pairs:
        g = (A[i] - A[j])[:, None] * C  # N x L, column l is (a_i - a_j) . c_l
        out[(int(i), int(j))] = g @ g.T
    return out


def _canonical_sign(rows: np.ndarray) -> np.ndarray:
    """Flip each row so its first nonzero entry is positive."""
    nz = rows != 0
    first = np.where(nz.any(axis=1), nz.argmax(axis=1), 0)
    sign = np.sign(rows[np.arange(len(rows)), first])
    sign[sign == 0] = 1
    return rows * sign[:, None]


def dedupe_rows(rows: np.ndarray, delta: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Unique rows keeping the largest delta; returns (rows, delta, inverse index)."""
    if len(rows) == 0:
        return rows, delta, np.zeros(0, dtype=np.int64)
    uniq, inv = np.unique(rows, axis=0, return_inverse=True)
    inv = inv.ravel()
    best = np.full(len(uniq), -np.inf)
    np.maximum.at(best, inv, delta)
    return uniq, best, inv


@dataclass
class DesignProblem:
    """Constraint data expressed in the design coordinates.

    In full mode the design variable is the whole modulation vector (n = N).
    In multiset mode every node shares one constellation and one code, so
    the variable is a single Q-block (n = Q), rows are level histograms and
    ``tie = K`` copies are stacked to form the transmitted x and C.

    ``diffs`` holds one sign-canonical row difference per distinct
    requirement, with the largest delta among the pairs that share it.
    """

    enum: InputEnumeration
    constraints: ConstraintSet
    basis: np.ndarray
    tie: int
    diffs: np.ndarray
    delta: np.ndarray
    pair_index: np.ndarray

    @classmethod
    def build(cls, enum: InputEnumeration, constraints: ConstraintSet) -> "DesignProblem":
        tied = enum.mode == "multiset"
        basis = enum.counts if tied else enum.selection
        basis = basis.astype(np.int64)
        raw = basis[constraints.first] - basis[constraints.second]
        raw = _canonical_sign(raw)
        diffs, delta, inv = dedupe_rows(raw, constraints.delta)
        # back-pointer to one original pair per requirement, for diagnostics
        pair_index = np.zeros(len(diffs), dtype=np.int64)
        order = np.arange(len(inv))
        is_max = constraints.delta >= delta[inv] if len(inv) else np.zeros(0, bool)
        pair_index[inv[is_max]] = order[is_max]
        return cls(enum, constraints, basis, enum.K if tied else 1, diffs.astype(float), delta, pair_index)

    @property
    def n(self) -> int:
        return self.basis.shape[1]

    def expand_x(self, u: np.ndarray) -> np.ndarray:
        return np.tile(u, self.tie)

    def expand_code(self, C_base: np.ndarray) -> np.ndarray:
        return np.tile(C_base, (self.tie, 1))

    def reduce_x(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x)[: self.n]

    def reduce_code(self, C: np.ndarray) -> np.ndarray:
        return np.asarray(C)[: self.n]

    def slot_vectors(self, C_base: np.ndarray) -> np.ndarray:
        """Masked differences ``g[p, l] = diffs[p] . c_l`` (P x L x n)."""
        return self.diffs[:, None, :] * np.asarray(C_base, dtype=float).T[None, :, :]

    def values(self, u: np.ndarray, C_base: np.ndarray) -> np.ndarray:
        """Achieved ``sum_l |g_pl^T u|^2`` for every requirement."""
        s = (self.diffs * np.asarray(u)[None, :]) @ np.asarray(C_base, dtype=float)
        return np.sum(np.abs(s) ** 2, axis=1)

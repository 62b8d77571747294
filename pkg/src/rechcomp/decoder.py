"""Receive codebook, merging of unresolved outputs and nearest-neighbour decoding."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .functab import ConstraintSet, InputEnumeration


@dataclass(frozen=True)
class Codebook:
    """Noiseless received sequences ``v`` (M x L) with their outputs and groups.

    ``group[i]`` indexes ``group_output``; merged groups decode to the mean
    of their members' outputs.
    """

    v: np.ndarray
    outputs: np.ndarray
    group: np.ndarray
    group_output: np.ndarray

    @property
    def M(self) -> int:
        return len(self.outputs)

    @property
    def L(self) -> int:
        return self.v.shape[1]

    @property
    def decoded_outputs(self) -> np.ndarray:
        """Decoder output for each entry."""
        return self.group_output[self.group]

    @property
    def min_pair_distance(self) -> float:
        """Smallest |v_i - v_j| between entries in different groups with different outputs."""
        best = np.inf
        for i in range(self.M - 1):
            j = np.arange(i + 1, self.M)
            mask = (self.group[j] != self.group[i]) & (self.outputs[j] != self.outputs[i])
            if np.any(mask):
                d = np.sqrt(np.sum(np.abs(self.v[j[mask]] - self.v[i]) ** 2, axis=1))
                best = min(best, float(d.min()))
        return best

    def _points(self):
        # unique sequences in order of first occurrence
        cached = self.__dict__.get("_pts")
        if cached is None:
            _, first = np.unique(self.v, axis=0, return_index=True)
            first = np.sort(first)
            cached = (self.v[first], first)
            object.__setattr__(self, "_pts", cached)
        return cached


def _group_by_output(v: np.ndarray, outputs: np.ndarray) -> np.ndarray:
    keys: dict[tuple, int] = {}
    group = np.empty(len(outputs), dtype=np.int64)
    for i in range(len(outputs)):
        key = (v[i].tobytes(), float(outputs[i]))
        group[i] = keys.setdefault(key, len(keys))
    return group


def build_codebook(enum: InputEnumeration, x: np.ndarray, C: np.ndarray) -> Codebook:
    """Codebook of ``v_i = a_i^T (X . C)`` in enumeration order.

    Entries with identical sequence and identical output share a group.
    """
    x = np.asarray(x, dtype=complex)
    C = np.asarray(C)
    if x.shape != (enum.N,) or C.ndim != 2 or C.shape[0] != enum.N:
        raise ValueError("x and C must match the enumeration's N")
    v = enum.selection @ (x[:, None] * C)
    group = _group_by_output(v, enum.outputs)
    group_output = np.zeros(group.max() + 1 if len(group) else 0)
    group_output[group] = enum.outputs
    return Codebook(v, enum.outputs.copy(), group, group_output)


class _DisjointSet:
    def __init__(self, n):
        self.parent = np.arange(n)

    def find(self, a):
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def merge_unresolved(codebook: Codebook, constraints: ConstraintSet, tol: float = 1e-6) -> Codebook:
    """Merge the groups of every pair whose separation falls short by more than ``tol * delta``.

    Merging is transitive; a merged group decodes to the arithmetic mean of
    its members' outputs.
    """
    if len(constraints) == 0:
        return codebook
    d2 = np.sum(np.abs(codebook.v[constraints.first] - codebook.v[constraints.second]) ** 2, axis=1)
    bad = d2 - constraints.delta < -tol * constraints.delta
    if not np.any(bad):
        return codebook
    ds = _DisjointSet(len(codebook.group_output))
    for i, j in zip(constraints.first[bad].tolist(), constraints.second[bad].tolist()):
        ds.union(codebook.group[i], codebook.group[j])
    roots = np.array([ds.find(g) for g in codebook.group])
    _, group = np.unique(roots, return_inverse=True)
    sums = np.zeros(group.max() + 1)
    counts = np.zeros(group.max() + 1)
    np.add.at(sums, group, codebook.outputs)
    np.add.at(counts, group, 1)
    return replace(codebook, group=group, group_output=sums / counts)


def decode_batch(Y: np.ndarray, codebook: Codebook, chunk: int = 4096) -> tuple[np.ndarray, np.ndarray]:
    """Nearest-sequence decoding of each row of ``Y`` (T x L).

    Returns the decoded outputs and the matched entry indices; ties go to the
    lowest entry index.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=complex))
    if Y.shape[1] != codebook.L:
        raise ValueError(f"received sequences must have length {codebook.L}")
    pts, first = codebook._points()
    idx = np.empty(len(Y), dtype=np.int64)
    step = max(1, chunk * 64 // max(1, len(pts)))
    for s in range(0, len(Y), step):
        d = np.sum(np.abs(Y[s:s + step, None, :] - pts[None, :, :]) ** 2, axis=2)
        idx[s:s + step] = first[np.argmin(d, axis=1)]
    return codebook.group_output[codebook.group[idx]], idx


def decode(y: np.ndarray, codebook: Codebook) -> tuple[float, int]:
    """Decode one received sequence; returns (estimate, entry index)."""
    est, idx = decode_batch(np.asarray(y)[None, :], codebook)
    return float(est[0]), int(idx[0])


def indicator_decode(y: np.ndarray, codebook: Codebook) -> float:
    """Sum of per-cell indicator outputs: the output of the cell strictly containing ``y``, else 0."""
    pts, first = codebook._points()
    d = np.sum(np.abs(np.asarray(y)[None, :] - pts) ** 2, axis=1)
    total = 0.0
    for j in range(len(pts)):
        others = np.delete(d, j)
        if np.all(d[j] < others):
            total += codebook.group_output[codebook.group[first[j]]]
    return total

"""Function tables: quantized target functions, input enumeration and pair constraints."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "QuantizedFunction",
    "InputEnumeration",
    "ConstraintSet",
    "EnumerationTooLarge",
    "make_function",
    "enumerate_inputs",
    "constraint_pairs",
    "DEFAULT_MAX_ROWS",
]

DEFAULT_MAX_ROWS = 10**6

_BUILTINS: dict[str, Callable[[Sequence[float]], float]] = {
    "sum": lambda v: float(sum(v)),
    "prod": lambda v: float(math.prod(v)),
    "max": lambda v: float(max(v)),
}


class EnumerationTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class QuantizedFunction:
    """Target function of K quantized node values.

    ``domain_values[k][q]`` is the de-quantized value node ``k`` sends when
    its quantizer outputs level ``q`` (0-based).
    """

    domain_values: tuple[tuple[float, ...], ...]
    evaluator: Callable[[Sequence[float]], float]
    symmetric: bool = False
    name: str = "custom"

    def __post_init__(self):
        if not self.domain_values:
            raise ValueError("need at least one node")
        q = len(self.domain_values[0])
        if q < 2:
            raise ValueError("level count Q must be >= 2")
        for vals in self.domain_values:
            if len(vals) != q:
                raise ValueError("all nodes must share the same level count")
            if any(b <= a for a, b in zip(vals, vals[1:])):
                raise ValueError("domain values must be strictly increasing")

    @property
    def node_count(self) -> int:
        return len(self.domain_values)

    @property
    def level_count(self) -> int:
        return len(self.domain_values[0])

    def values_of(self, levels: Sequence[int]) -> tuple[float, ...]:
        return tuple(self.domain_values[k][q] for k, q in enumerate(levels))

    def __call__(self, levels: Sequence[int]) -> float:
        return float(self.evaluator(self.values_of(levels)))


def make_function(kind: str, values: Sequence[float], k: int) -> QuantizedFunction:
    """Build one of the built-in symmetric functions over identical node domains."""
    try:
        evaluator = _BUILTINS[kind]
    except KeyError:
        raise ValueError(f"unknown function kind {kind!r}; expected one of {sorted(_BUILTINS)}")
    if k < 1:
        raise ValueError("node count K must be positive")
    vals = tuple(float(v) for v in values)
    return QuantizedFunction((vals,) * k, evaluator, symmetric=True, name=kind)


@dataclass(frozen=True)
class InputEnumeration:
    """Enumerated input rows with selection matrix and outputs.

    ``rows`` holds 0-based level indices (M x K). ``selection`` is the M x N
    binary matrix A with a one at column ``k*Q + q`` when row assigns level
    ``q`` to node ``k``.
    """

    func: QuantizedFunction
    mode: str
    rows: np.ndarray
    selection: np.ndarray
    outputs: np.ndarray

    @property
    def K(self) -> int:
        return self.func.node_count

    @property
    def Q(self) -> int:
        return self.func.level_count

    @property
    def N(self) -> int:
        return self.K * self.Q

    @property
    def M(self) -> int:
        return len(self.rows)

    @property
    def counts(self) -> np.ndarray:
        """Per-row level histogram (M x Q), the selection matrix summed over node blocks."""
        return self.selection.reshape(self.M, self.K, self.Q).sum(axis=1)

    def index_of(self, levels: Sequence[int]) -> int:
        """Row index representing ``levels`` (sorted first in multiset mode)."""
        key = tuple(sorted(levels)) if self.mode == "multiset" else tuple(levels)
        lookup = self.__dict__.get("_lookup")
        if lookup is None:
            lookup = {tuple(r): i for i, r in enumerate(self.rows.tolist())}
            object.__setattr__(self, "_lookup", lookup)
        return lookup[key]


@dataclass(frozen=True)
class ConstraintSet:
    """Pairwise separation requirements ``|v_i - v_j|^2 >= delta``.

    Stored as parallel arrays; ``first[p] < second[p]`` index enumeration rows.
    """

    epsilon: float
    first: np.ndarray
    second: np.ndarray
    delta: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.delta)

    @property
    def pairs(self) -> list[tuple[int, int, float]]:
        return list(zip(self.first.tolist(), self.second.tolist(), self.delta.tolist()))


def _row_count(q: int, k: int, mode: str) -> int:
    return q**k if mode == "full" else math.comb(q + k - 1, k)


def enumerate_inputs(
    func: QuantizedFunction, mode: str = "full", max_rows: int = DEFAULT_MAX_ROWS
) -> InputEnumeration:
    """Enumerate input rows in lexicographic order of level tuples.

    ``mode="multiset"`` keeps one sorted representative per multiset and is
    only allowed for symmetric functions.
    """
    if mode not in ("full", "multiset"):
        raise ValueError(f"unknown enumeration mode {mode!r}")
    if mode == "multiset" and not func.symmetric:
        raise ValueError("multiset enumeration requires a symmetric function")
    k, q = func.node_count, func.level_count
    m = _row_count(q, k, mode)
    if m > max_rows:
        raise EnumerationTooLarge(
            f"{mode} enumeration of Q={q}, K={k} has {m} rows, above the cap of {max_rows}"
        )
    if mode == "full":
        it = itertools.product(range(q), repeat=k)
    else:
        it = itertools.combinations_with_replacement(range(q), k)
    rows = np.array(list(it), dtype=np.int64).reshape(m, k)
    selection = np.zeros((m, k * q), dtype=np.int8)
    cols = rows + np.arange(k) * q
    selection[np.arange(m)[:, None], cols] = 1
    outputs = np.array([func(r) for r in rows.tolist()], dtype=float)
    return InputEnumeration(func, mode, rows, selection, outputs)


def constraint_pairs(enum: InputEnumeration, epsilon: float) -> ConstraintSet:
    """All row pairs i < j with distinct outputs and ``delta = eps * |f_i - f_j|^2``."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    first, second = np.triu_indices(enum.M, k=1)
    diff = enum.outputs[first] - enum.outputs[second]
    keep = diff != 0
    first, second, diff = first[keep], second[keep], diff[keep]
    return ConstraintSet(float(epsilon), first, second, epsilon * diff**2)

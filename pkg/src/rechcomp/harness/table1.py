"""Four-node product example: QPSK symbols with and without a two-slot code.

Arithmetic is over Gaussian integers held as ``(re, im)`` int pairs, so
every comparison is exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..codesign.problem import bit_split_code

GaussInt = tuple[int, int]

VALUES = (1, 2, 3, 4)
QPSK: tuple[GaussInt, ...] = ((1, 0), (-1, 0), (0, 1), (0, -1))
# symbols of levels 0 and 2 go in the first slot, 1 and 3 in the second
SLOT_OF_LEVEL = (0, 1, 0, 1)

# (inputs, product, uncoded y over two slots, coded y over two slots)
EXPECTED: tuple[tuple[tuple[int, ...], int, tuple[GaussInt, GaussInt], tuple[GaussInt, GaussInt]], ...] = (
    ((1, 1, 1, 1), 1, ((4, 0), (4, 0)), ((4, 0), (0, 0))),
    ((1, 1, 2, 2), 4, ((0, 0), (0, 0)), ((2, 0), (-2, 0))),
    ((1, 2, 2, 2), 8, ((-2, 0), (-2, 0)), ((1, 0), (-3, 0))),
    ((1, 2, 2, 3), 12, ((-1, 1), (-1, 1)), ((1, 1), (-2, 0))),
    ((1, 2, 2, 4), 16, ((-1, -1), (-1, -1)), ((1, 0), (-2, -1))),
    ((1, 2, 3, 4), 24, ((0, 0), (0, 0)), ((1, 1), (-1, -1))),
    ((2, 2, 2, 2), 16, ((-4, 0), (-4, 0)), ((0, 0), (-4, 0))),
    ((2, 3, 3, 4), 72, ((-1, 1), (-1, 1)), ((0, 2), (-1, -1))),
    ((3, 3, 3, 3), 81, ((0, 4), (0, 4)), ((0, 4), (0, 0))),
    ((3, 3, 4, 4), 144, ((0, 0), (0, 0)), ((0, 2), (0, -2))),
    ((4, 4, 4, 4), 256, ((0, -4), (0, -4)), ((0, 0), (0, -4))),
)


def _add(a: GaussInt, b: GaussInt) -> GaussInt:
    return (a[0] + b[0], a[1] + b[1])


def received(inputs, coded: bool) -> tuple[GaussInt, GaussInt]:
    """Noiseless two-slot sums for one input tuple."""
    slots = [(0, 0), (0, 0)]
    for v in inputs:
        q = VALUES.index(v)
        for s in range(2):
            if not coded or SLOT_OF_LEVEL[q] == s:
                slots[s] = _add(slots[s], QPSK[q])
    return slots[0], slots[1]


@dataclass(frozen=True)
class Table1Row:
    inputs: tuple[int, ...]
    output: int
    uncoded: tuple[GaussInt, GaussInt]
    coded: tuple[GaussInt, GaussInt]
    matches: bool


def reproduce() -> list[Table1Row]:
    rows = []
    for inputs, out, unc, cod in EXPECTED:
        u, c = received(inputs, False), received(inputs, True)
        ok = math.prod(inputs) == out and u == unc and c == cod
        rows.append(Table1Row(inputs, math.prod(inputs), u, c, ok))
    return rows


def uncoded_collisions() -> dict[tuple[GaussInt, GaussInt], set[int]]:
    """Uncoded received points shared by tuples with different products."""
    seen: dict[tuple[GaussInt, GaussInt], set[int]] = {}
    for inputs, *_ in EXPECTED:
        seen.setdefault(received(inputs, False), set()).add(math.prod(inputs))
    return {y: outs for y, outs in seen.items() if len(outs) > 1}


def design_vectors(k: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """The example's modulation vector and code in the library's layout (N = 4k)."""
    x = np.tile(np.array([complex(*s) for s in QPSK]), k)
    return x, bit_split_code(len(VALUES), k, 2)


def _fmt(z: GaussInt) -> str:
    re, im = z
    if im == 0:
        return str(re)
    if re == 0:
        return {1: "i", -1: "-i"}.get(im, f"{im}i")
    sign = "+" if im > 0 else "-"
    mag = "" if abs(im) == 1 else str(abs(im))
    return f"{re}{sign}{mag}i"


def format_table(rows: list[Table1Row]) -> str:
    lines = [f"{'inputs':<10} {'f':>4}  {'uncoded':<16} {'coded':<16} ok"]
    for r in rows:
        unc = " ".join(_fmt(z) for z in r.uncoded)
        cod = " ".join(_fmt(z) for z in r.coded)
        lines.append(f"{''.join(map(str, r.inputs)):<10} {r.output:>4}  {unc:<16} {cod:<16} {'yes' if r.matches else 'NO'}")
    return "\n".join(lines)

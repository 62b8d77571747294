"""Design artifact files: a JSON document with 17-significant-digit floats."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..codesign.alternating import DesignResult
from ..decoder import Codebook
from ..functab import InputEnumeration


def _num(v: float) -> str:
    v = float(v)
    if math.isnan(v):
        return '"nan"'
    if math.isinf(v):
        return '"inf"' if v > 0 else '"-inf"'
    return f"{v:.17g}"


def _pairs(z) -> str:
    return "[" + ", ".join(f"[{_num(c.real)}, {_num(c.imag)}]" for c in np.asarray(z, dtype=complex)) + "]"


def _rows(C) -> str:
    return "[" + ", ".join(json.dumps("".join("1" if b else "0" for b in row)) for row in np.asarray(C)) + "]"


@dataclass
class DesignArtifact:
    K: int
    Q: int
    L: int
    epsilon: float
    pmax: float
    x: np.ndarray
    C: np.ndarray
    status: str
    margins: np.ndarray
    extra: dict

    @classmethod
    def from_result(cls, result: DesignResult) -> "DesignArtifact":
        return cls(result.K, result.Q, result.L, result.epsilon, result.p_max, result.x, result.C,
                   result.status, result.margins, {})


def dumps_design(
    design: DesignResult | DesignArtifact,
    enum: InputEnumeration | None = None,
    codebook: Codebook | None = None,
    meta: dict | None = None,
) -> str:
    """Serialize a design; the enumeration and codebook are optional extras."""
    if isinstance(design, DesignResult):
        design = DesignArtifact.from_result(design)
    lines = [
        f'  "K": {int(design.K)}',
        f'  "Q": {int(design.Q)}',
        f'  "L": {int(design.L)}',
        f'  "epsilon": {_num(design.epsilon)}',
        f'  "pmax": {_num(design.pmax)}',
        f'  "x": {_pairs(design.x)}',
        f'  "C": {_rows(design.C)}',
        f'  "status": {json.dumps(design.status)}',
        f'  "margins": [{", ".join(_num(m) for m in np.asarray(design.margins, dtype=float))}]',
    ]
    if enum is not None:
        lines.append(f'  "enumeration": {{"function": {json.dumps(enum.func.name)}, '
                     f'"mode": {json.dumps(enum.mode)}, '
                     f'"rows": {json.dumps(np.asarray(enum.rows).tolist())}, '
                     f'"outputs": [{", ".join(_num(f) for f in enum.outputs)}]}}')
    if codebook is not None:
        v = ", ".join(_pairs(row) for row in codebook.v)
        lines.append(f'  "codebook": {{"v": [{v}], '
                     f'"outputs": [{", ".join(_num(f) for f in codebook.outputs)}], '
                     f'"group": {json.dumps(np.asarray(codebook.group).tolist())}, '
                     f'"decoded": [{", ".join(_num(f) for f in codebook.decoded_outputs)}]}}')
    for key, value in (meta or {}).items():
        lines.append(f"  {json.dumps(key)}: {json.dumps(value)}")
    return "{\n" + ",\n".join(lines) + "\n}\n"


def write_design(path, design, enum=None, codebook=None, meta=None) -> Path:
    path = Path(path)
    path.write_text(dumps_design(design, enum, codebook, meta))
    return path


def _float(v) -> float:
    # non-finite values are stored as the strings "nan", "inf", "-inf"
    return float(v)


def loads_design(text: str) -> DesignArtifact:
    """Parse a design document; extra fields are kept in ``extra``."""
    doc = json.loads(text)
    missing = {"K", "Q", "L", "epsilon", "pmax", "x", "C", "status", "margins"} - doc.keys()
    if missing:
        raise ValueError(f"design artifact lacks field(s) {sorted(missing)}")
    x = np.array([complex(_float(re), _float(im)) for re, im in doc["x"]], dtype=complex)
    C = np.array([[int(ch) for ch in row] for row in doc["C"]], dtype=np.int8).reshape(len(doc["C"]), -1)
    K, Q, L = int(doc["K"]), int(doc["Q"]), int(doc["L"])
    if x.shape != (K * Q,) or C.shape != (K * Q, L):
        raise ValueError("x and C sizes do not match K, Q and L")
    extra = {k: v for k, v in doc.items()
             if k not in {"K", "Q", "L", "epsilon", "pmax", "x", "C", "status", "margins"}}
    return DesignArtifact(K, Q, L, _float(doc["epsilon"]), _float(doc["pmax"]), x, C, doc["status"],
                          np.array([_float(m) for m in doc["margins"]]), extra)


def read_design(path) -> DesignArtifact:
    return loads_design(Path(path).read_text())

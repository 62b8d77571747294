"""Reference schemes: ChannelComp with naive repetition, and digital AirComp."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .codesign.alternating import DesignResult, SolverConfig, alternate_minimize
from .decoder import Codebook, build_codebook, decode_batch, merge_unresolved
from .functab import ConstraintSet, InputEnumeration


@dataclass
class ChannelCompDesign:
    """Single-slot design reused on every repetition."""

    design: DesignResult
    codebook: Codebook

    @property
    def x(self) -> np.ndarray:
        return self.design.x

    @property
    def status(self) -> str:
        return self.design.status

    def code(self, L: int) -> np.ndarray:
        return np.ones((len(self.x), L), dtype=np.int8)


def channelcomp_repeat_design(
    enum: InputEnumeration, constraints: ConstraintSet, cfg: SolverConfig
) -> ChannelCompDesign:
    """One-slot constellation (every symbol always sent) designed with the x-update only.

    The design uses the per-slot budget ``cfg.p_max``, so L repetitions spend
    ``L * P_max`` in total. When the single slot cannot separate every pair,
    the unresolved cells are merged and the baseline still decodes.
    """
    one = replace(cfg, L=1)
    design = alternate_minimize(
        enum, constraints, one, initial=np.ones((enum.N, 1), dtype=np.int8),
        update_code=False, enforce_bound=False,
    )
    book = build_codebook(enum, design.x, design.C)
    if not design.feasible:
        book = merge_unresolved(book, constraints)
    return ChannelCompDesign(design, book)


def repeat_average_decode(Y: np.ndarray, codebook: Codebook) -> np.ndarray:
    """Average the L repetitions of each received row, then decode on the one-slot codebook."""
    Y = np.atleast_2d(np.asarray(Y, dtype=complex))
    ybar = Y.mean(axis=1, keepdims=True)
    est, _ = decode_batch(ybar, codebook)
    return est


@dataclass(frozen=True)
class AirCompScheme:
    """Analog pre-processing, superposition, and post-processing of one function.

    Node values pass through a pre-processing map (identity for sum,
    ``log(v + offset)`` for product, ``v ** norm_order`` for max), are sent as
    real in-phase amplitudes scaled by ``power_scale``, and the receiver
    inverts the map on the slot average.
    """

    kind: str
    power_scale: float = 1.0
    log_offset: float = 0.0
    norm_order: float = 8.0

    def __post_init__(self):
        if self.kind not in ("sum", "prod", "max"):
            raise ValueError(f"unsupported AirComp function {self.kind!r}")
        if not self.power_scale > 0:
            raise ValueError("power_scale must be positive")

    def preprocess(self, values) -> np.ndarray:
        v = np.asarray(values, dtype=float)
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite input value")
        if self.kind == "sum":
            return v
        if self.kind == "prod":
            if np.any(v + self.log_offset <= 0):
                raise ValueError("product AirComp needs value + log_offset > 0; set a positive log_offset")
            return np.log(v + self.log_offset)
        if np.any(v < 0):
            raise ValueError("max AirComp needs non-negative values")
        return v**self.norm_order

    def encode(self, values) -> np.ndarray:
        return self.power_scale * self.preprocess(values)

    def decode(self, ybar) -> np.ndarray:
        s = np.real(np.asarray(ybar)) / self.power_scale
        if not np.all(np.isfinite(s)):
            raise ValueError("non-finite received value")
        if self.kind == "sum":
            return s
        if self.kind == "prod":
            return np.exp(s)
        return np.maximum(s, 0.0) ** (1.0 / self.norm_order)

    def modulation_vector(self, domain_values) -> np.ndarray:
        """Amplitudes of every (node, level) pair, laid out like the designed x."""
        return np.concatenate([self.encode(vals) for vals in domain_values]).astype(complex)


def aircomp_scheme(
    kind: str, domain_values, p_max: float, log_offset: float | None = None, norm_order: float = 8.0
) -> AirCompScheme:
    """AirComp scheme whose amplitude vector has squared norm ``p_max``.

    This matches the designed schemes' ``|x|^2 <= P_max`` per slot, so over
    L slots every method spends at most ``L * P_max``. The product offset
    defaults to 1e-2 when some domain contains 0, else 0.
    """
    if log_offset is None:
        log_offset = 1e-2 if kind == "prod" and any(0 in vals for vals in domain_values) else 0.0
    unit = AirCompScheme(kind, 1.0, log_offset, norm_order)
    energy = float(np.sum(np.abs(unit.modulation_vector(domain_values)) ** 2))
    if energy == 0:
        raise ValueError("AirComp pre-processing maps every value to 0")
    return replace(unit, power_scale=math.sqrt(p_max / energy))


def aircomp_estimate(scheme: AirCompScheme, values, noise: np.ndarray | None = None) -> np.ndarray:
    """Estimates for value tuples (T x K) with optional slot noise (T x L), averaged over slots."""
    values = np.atleast_2d(values)
    s = scheme.encode(values).sum(axis=1)
    if noise is None:
        return scheme.decode(s)
    ybar = s + np.asarray(noise).mean(axis=1)
    return scheme.decode(ybar)

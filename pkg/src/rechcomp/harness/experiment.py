"""Monte Carlo NMSE sweeps over SNR and slot count."""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..baselines import aircomp_scheme, channelcomp_repeat_design
from ..codesign.alternating import DesignResult, SlotCountTooSmall, SolverConfig, alternate_minimize
from ..decoder import Codebook, build_codebook, decode_batch, merge_unresolved
from ..functab import constraint_pairs, enumerate_inputs, make_function
from ..macsim import ChannelModel, sigma_from_snr, simulate

log = logging.getLogger(__name__)

METHODS = ("rechcomp", "channelcomp", "aircomp")
CSV_HEADER = ("method", "L", "snr_db", "nmse", "trials_used", "excluded", "status", "seed")


def fmt_float(v: float) -> str:
    return f"{v:.17g}"


def tile_code(C_base: np.ndarray, reps: int) -> np.ndarray:
    """Repeat the slot pattern ``reps`` times along the slot axis."""
    if reps < 1:
        raise ValueError("reps must be at least 1")
    return np.tile(np.asarray(C_base), (1, reps))


def nmse(estimates, truths) -> tuple[float, int, int]:
    """Mean of ``|f - f_hat|^2 / |f|`` over samples with ``f != 0``.

    Returns (nmse, samples used, samples excluded).
    """
    est = np.asarray(estimates, dtype=float)
    f = np.asarray(truths, dtype=float)
    if est.shape != f.shape:
        raise ValueError("estimates and truths must have equal length")
    keep = f != 0
    used = int(keep.sum())
    if used == 0:
        raise ValueError("every sample has f = 0; NMSE is undefined")
    err = (f[keep] - est[keep]) ** 2 / np.abs(f[keep])
    return float(np.sum(err) / used), used, int(f.size - used)


@dataclass(frozen=True)
class ExperimentConfig:
    function: str
    values: tuple[float, ...]
    K: int
    L_list: tuple[int, ...]
    snr_db: tuple[float, ...]
    trials: int
    seed: int
    methods: tuple[str, ...] = ("rechcomp",)
    epsilon: float = 1e-2
    p_max: float | None = None
    mode: str = "multiset"
    out: str | None = None
    tile_base_L: int | None = None
    channel: str = "ideal"
    init_strategy: str = "bit-split"

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not self.L_list or not self.snr_db or not self.methods:
            raise ValueError("L, SNR and method grids must be nonempty")
        if any(L < 1 for L in self.L_list):
            raise ValueError("every L must be positive")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ValueError(f"unknown method(s) {bad}; choose from {METHODS}")
        if self.tile_base_L is not None and self.tile_base_L < 1:
            raise ValueError("tile_base_L must be positive")
        if self.seed is None:
            raise ValueError("a seed is required")

    @property
    def Q(self) -> int:
        return len(self.values)

    @property
    def N(self) -> int:
        return self.K * self.Q

    @property
    def budget(self) -> float:
        return float(self.N) if self.p_max is None else float(self.p_max)


@dataclass(frozen=True)
class ReportRow:
    method: str
    L: int
    snr_db: float
    nmse: float
    trials_used: int
    excluded: int
    status: str
    seed: int

    def fields(self) -> list[str]:
        return [self.method, str(self.L), fmt_float(self.snr_db), fmt_float(self.nmse),
                str(self.trials_used), str(self.excluded), self.status, str(self.seed)]


@dataclass
class NMSEReport:
    rows: list[ReportRow] = field(default_factory=list)

    def select(self, method: str, L: int | None = None) -> list[ReportRow]:
        return [r for r in self.rows if r.method == method and (L is None or r.L == L)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            w.writerow(r.fields())
        return buf.getvalue()

    def to_dat(self) -> str:
        lines = ["# " + " ".join(CSV_HEADER)]
        lines += [" ".join(r.fields()) for r in self.rows]
        return "\n".join(lines) + "\n"

    def write(self, path) -> tuple[Path, Path]:
        """Write ``path`` as CSV and a whitespace-delimited ``.dat`` twin."""
        path = Path(path)
        path.write_text(self.to_csv())
        dat = path.with_suffix(".dat")
        dat.write_text(self.to_dat())
        return path, dat


@dataclass
class _Scheme:
    """What the sweep needs from one method at one L."""

    status: str
    x: np.ndarray | None = None
    C: np.ndarray | None = None
    reps: int = 1
    codebook: Codebook | None = None
    air: object | None = None


_DESIGNS: dict[tuple, tuple[DesignResult | None, str]] = {}


def clear_design_cache() -> None:
    _DESIGNS.clear()


def _problem(cfg: ExperimentConfig):
    func = make_function(cfg.function, cfg.values, cfg.K)
    mode = cfg.mode if func.symmetric else "full"
    enum = enumerate_inputs(func, mode)
    return func, enum, constraint_pairs(enum, cfg.epsilon)


def _design(cfg: ExperimentConfig, method: str, L_base: int, enum, cons):
    key = (method, cfg.function, tuple(cfg.values), cfg.K, enum.mode, L_base, cfg.epsilon, cfg.budget, cfg.seed,
           cfg.init_strategy)
    if key not in _DESIGNS:
        scfg = SolverConfig(epsilon=cfg.epsilon, p_max=cfg.budget, L=L_base, seed=cfg.seed,
                            init_strategy=cfg.init_strategy)
        if method == "channelcomp":
            design = channelcomp_repeat_design(enum, cons, scfg).design
            _DESIGNS[key] = (design, design.status)
        else:
            try:
                design = alternate_minimize(enum, cons, scfg)
                _DESIGNS[key] = (design, design.status)
            except SlotCountTooSmall as exc:
                log.warning("%s", exc)
                _DESIGNS[key] = (None, "refused")
    return _DESIGNS[key]


def _base_slots(cfg: ExperimentConfig, method: str, L: int) -> int:
    if method == "channelcomp":
        return 1
    base = cfg.tile_base_L
    if base is None or L % base != 0:
        return L
    return base


def _scheme(cfg: ExperimentConfig, method: str, L: int, enum, cons) -> _Scheme:
    if method == "aircomp":
        air = aircomp_scheme(cfg.function, enum.func.domain_values, cfg.budget)
        return _Scheme("feasible", x=air.modulation_vector(enum.func.domain_values), reps=L, air=air)
    base = _base_slots(cfg, method, L)
    design, status = _design(cfg, method, base, enum, cons)
    if design is None or not np.any(design.x != 0):
        return _Scheme(status)
    reps = L // base
    x = fill_budget(design.x, tile_code(design.C, reps), cfg.budget)
    book = build_codebook(enum, x, design.C)
    if not design.feasible:
        book = merge_unresolved(book, cons)
    return _Scheme(status, x, design.C, reps, book)


def transmit_energy(x: np.ndarray, C: np.ndarray) -> float:
    """Energy of sending every symbol in each of its slots, ``sum_l |x . c_l|^2``."""
    return float(np.sum(np.abs(np.asarray(x)) ** 2 * np.asarray(C).sum(axis=1)))


def fill_budget(x: np.ndarray, C: np.ndarray, p_max: float) -> np.ndarray:
    """Rescale ``x`` so that ``transmit_energy(x, C)`` equals ``L * p_max``.

    Every method is compared at the same total budget over its L slots, so a
    code that leaves symbols silent in some slots may send them louder.
    """
    energy = transmit_energy(x, C)
    if energy == 0:
        raise ValueError("design transmits nothing")
    return np.asarray(x) * math.sqrt(C.shape[1] * p_max / energy)


def reference_sigma(p_max: float, snr_db: float) -> float:
    """Noise level for an SNR measured against a vector of norm ``sqrt(p_max)``."""
    return sigma_from_snr(np.array([math.sqrt(p_max)]), snr_db)


def _draws(cfg: ExperimentConfig, L: int):
    """Tuples and unit noise for every trial, one independent stream per (seed, L, trial)."""
    levels = np.empty((cfg.trials, cfg.K), dtype=np.int64)
    z = np.empty((cfg.trials, L), dtype=complex)
    for t in range(cfg.trials):
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(L, t)))
        levels[t] = rng.integers(0, cfg.Q, size=cfg.K)
        z[t] = (rng.standard_normal(L) + 1j * rng.standard_normal(L)) / math.sqrt(2)
    return levels, z


def _estimates(s: _Scheme, cfg: ExperimentConfig, levels, z, snr_db, channel, rng_seed):
    sigma = reference_sigma(cfg.budget, snr_db)
    if s.air is not None:
        vals = np.asarray(cfg.values, dtype=float)[levels]
        return s.air.decode(s.air.encode(vals).sum(axis=1) + (sigma * z).mean(axis=1))
    C = tile_code(s.C, s.reps)
    rng = np.random.default_rng(rng_seed)
    y = simulate(s.x, C, levels, cfg.Q, channel=channel, rng=rng) + sigma * z
    # joint nearest-neighbour over a tiled code = per-pattern average against the base codebook
    ybar = y.reshape(len(y), s.reps, -1).mean(axis=1)
    est, _ = decode_batch(ybar, s.codebook)
    return est


def run_sweep(cfg: ExperimentConfig) -> NMSEReport:
    """NMSE for every (method, L, SNR) in canonical order.

    Each method fills the total budget ``L * P_max`` and every method sees
    the same noise level at a given SNR, measured against ``|x| = sqrt(P_max)``.
    All methods and SNR points at one L share the same sampled tuples and
    unit noise, so differences between curves are not Monte Carlo noise.
    """
    func, enum, cons = _problem(cfg)
    channel = ChannelModel(cfg.channel)
    report = NMSEReport()
    draws = {L: _draws(cfg, L) for L in sorted(set(cfg.L_list))}
    truths = {L: np.array([func(row) for row in draws[L][0]]) for L in draws}
    for method in cfg.methods:
        for L in sorted(set(cfg.L_list)):
            s = _scheme(cfg, method, L, enum, cons)
            levels, z = draws[L]
            f = truths[L]
            for snr in sorted(cfg.snr_db):
                if s.x is None:
                    excluded = int(np.sum(f == 0))
                    report.rows.append(ReportRow(method, L, float(snr), math.nan, cfg.trials - excluded,
                                                 excluded, s.status, cfg.seed))
                    continue
                if not np.any(f != 0):
                    report.rows.append(ReportRow(method, L, float(snr), math.nan, 0, cfg.trials,
                                                 "all_excluded", cfg.seed))
                    continue
                est = _estimates(s, cfg, levels, z, snr, channel, (cfg.seed, L))
                value, used, excluded = nmse(est, f)
                report.rows.append(ReportRow(method, L, float(snr), value, used, excluded, s.status, cfg.seed))
    return report

"""Alternating minimization of the joint constellation / slot-code design."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..functab import ConstraintSet, InputEnumeration
from .codes import solve_code_subproblem
from .modulation import solve_modulation_subproblem
from .problem import DesignProblem, bit_split_code, check_feasibility, lmin_bound

log = logging.getLogger(__name__)


class SlotCountTooSmall(ValueError):
    """Requested L is below the power-budget bound on the slot count."""

    def __init__(self, L: int, l_min: int, max_delta: float, n: int, p_max: float):
        self.L, self.l_min = L, l_min
        super().__init__(
            f"L={L} is below the slot-count bound L_min={l_min} "
            f"(= ceil(max delta {max_delta:.6g} * N {n} / P_max {p_max:.6g})); "
            "raise L or P_max, or lower epsilon"
        )


@dataclass
class SolverConfig:
    epsilon: float = 1e-2
    p_max: float | None = None  # None means N
    L: int = 2
    max_outer_iters: int = 20
    convergence_tol: float = 1e-9
    sdp_accuracy: float | None = None  # None means 1e-6 * max(1, P_max)
    randomization_count: int = 200
    bb_node_limit: int = 200000
    exhaustive_threshold: int = 24
    init_strategy: str = "bit-split"
    seed: int = 0

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("L must be positive")
        if self.epsilon <= 0 or self.convergence_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.init_strategy not in ("bit-split", "all-ones"):
            raise ValueError(f"unknown init strategy {self.init_strategy!r}")

    def power_budget(self, n: int) -> float:
        return float(n) if self.p_max is None else float(self.p_max)


@dataclass
class DesignResult:
    x: np.ndarray
    C: np.ndarray
    K: int
    Q: int
    L: int
    epsilon: float
    p_max: float
    status: str
    margins: np.ndarray
    surrogate_trace: list[float] = field(default_factory=list)
    iterations_used: int = 0
    mode: str = "full"
    steps: list[tuple[str, str]] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"

    @property
    def energy(self) -> float:
        return float(np.sum(np.abs(self.x) ** 2))


def initial_code(strategy: str, n: int, L: int) -> np.ndarray:
    if strategy == "all-ones":
        return np.ones((n, L), dtype=np.int8)
    # per-block round robin; n is one Q-block in tied mode or K blocks otherwise
    return bit_split_code(n, 1, L)


def alternate_minimize(
    enum: InputEnumeration,
    constraints: ConstraintSet,
    cfg: SolverConfig,
    initial: np.ndarray | None = None,
    initial_x: np.ndarray | None = None,
    update_code: bool = True,
    enforce_bound: bool = True,
) -> DesignResult:
    """Alternate x-updates (lifted SDP) and C-updates (binary program).

    Stops after ``cfg.max_outer_iters`` rounds or once
    ``L |x_n - x_{n-1}|^2 + sum_l |c_l,n - c_l,n-1|^2 <= cfg.convergence_tol``.
    ``initial`` overrides the starting code (N x L) and ``initial_x`` (length
    N) joins the first x-update's candidate pool; ``update_code=False``
    keeps it fixed. An x-update that would raise the energy is rejected in
    favour of the previous iterate, which is still feasible for the current
    code, so the surrogate never increases.
    """
    L = cfg.L
    p_max = cfg.power_budget(enum.N)
    l_min = lmin_bound(constraints, enum.N, p_max)
    if enforce_bound and L < l_min:
        raise SlotCountTooSmall(L, l_min, float(np.max(constraints.delta)), enum.N, p_max)

    problem = DesignProblem.build(enum, constraints)
    tie = problem.tie
    if initial is not None:
        C_base = problem.reduce_code(np.asarray(initial, dtype=np.int8))
        if C_base.shape != (problem.n, L):
            raise ValueError(f"initial code must be {enum.N} x {L}")
    elif tie > 1:
        C_base = initial_code(cfg.init_strategy, problem.n, L)
    else:
        C_base = np.tile(initial_code(cfg.init_strategy, enum.Q, L), (enum.K, 1))
    C_base = C_base.astype(np.int8)

    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.max_outer_iters)
    u_prev = None
    trace: list[float] = []
    steps: list[tuple[str, str]] = []
    status = "feasible"
    it = 0
    for it in range(1, cfg.max_outer_iters + 1):
        rng = np.random.default_rng(seeds[it - 1])
        extra = None
        if it == 1 and initial_x is not None:
            extra = problem.reduce_x(np.asarray(initial_x, dtype=complex))[:, None]
        mod = solve_modulation_subproblem(
            problem, C_base, p_max, cfg.randomization_count, cfg.sdp_accuracy, rng, extra
        )
        steps.append(("x", mod.status))
        if mod.u is None or mod.status != "feasible":
            if u_prev is None:
                status = mod.status
                u = mod.u if mod.u is not None else np.zeros(problem.n, dtype=complex)
                u_prev = u
                break
            u = u_prev
        else:
            u = mod.u
            if u_prev is not None and np.sum(np.abs(u) ** 2) >= np.sum(np.abs(u_prev) ** 2):
                u = u_prev

        C_new = C_base
        if update_code:
            step = solve_code_subproblem(
                problem, u, L, cfg.exhaustive_threshold, cfg.bb_node_limit, incumbent=C_base
            )
            steps.append(("C", step.status))
            if step.C is not None:
                C_new = step.C.astype(np.int8)

        trace.append(float(tie * (L * np.sum(np.abs(u) ** 2) + C_new.sum())))
        if u_prev is not None:
            change = tie * (L * np.sum(np.abs(u - u_prev) ** 2) + np.sum((C_new - C_base) ** 2))
        else:
            change = np.inf
        u_prev, C_base = u, C_new
        if change <= cfg.convergence_tol or len(problem.delta) == 0:
            break

    x = problem.expand_x(u_prev)
    C = problem.expand_code(C_base)
    margins, ok = check_feasibility(x, C, enum, constraints)
    if status == "feasible" and not ok:
        status = "infeasible"
    return DesignResult(
        x=x, C=C, K=enum.K, Q=enum.Q, L=L, epsilon=constraints.epsilon, p_max=p_max,
        status=status, margins=margins, surrogate_trace=trace, iterations_used=it,
        mode=enum.mode, steps=steps,
    )

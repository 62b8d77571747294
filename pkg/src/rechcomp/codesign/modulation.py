"""Modulation-vector update: lifted SDP relaxation plus rank-one recovery."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .problem import DesignProblem, dedupe_rows, _canonical_sign
from .sdp import solve_trace_sdp

log = logging.getLogger(__name__)

RANK_ONE_TOL = 1e-6


@dataclass
class ModulationStep:
    """Outcome of one x-update.

    ``W`` is the Hermitian relaxation optimum in design coordinates and ``u``
    the recovered design vector (``None`` when the SDP itself is infeasible).
    """

    W: np.ndarray
    u: np.ndarray | None
    status: str
    rank_one: bool
    sdp_objective: float
    violated_pair: int | None = None
    sdp_converged: bool = True


def canonical_phase(u: np.ndarray) -> np.ndarray:
    """Fix the unit-modulus and conjugation ambiguity of a design vector.

    The largest-magnitude entry (lowest index on ties) is made real positive,
    then the vector is conjugated if needed so that the first entry with a
    non-negligible imaginary part has a positive one.
    """
    u = np.asarray(u, dtype=complex)
    mag = np.abs(u)
    if not np.any(mag > 0):
        return u.copy()
    a = int(np.argmax(mag))
    u = u * (np.conj(u[a]) / mag[a])
    u[a] = mag[a]
    im = np.abs(u.imag) > 1e-12 * mag.max()
    if np.any(im) and u.imag[np.argmax(im)] < 0:
        u = np.conj(u)
    return u


def hermitian_factor(W_real: np.ndarray) -> np.ndarray:
    """Columns z_m with ``Re(sum z_m z_m^H) = W_real`` using half as many terms.

    Eigenpairs are taken in descending order and combined two at a time as
    ``sqrt(l1) e1 + i sqrt(l2) e2``. Because every constraint matrix is real,
    the Hermitian matrix ``sum z_m z_m^H`` has the same trace and constraint
    values as ``W_real``.
    """
    w, U = np.linalg.eigh(W_real)
    w = np.maximum(w[::-1], 0.0)
    U = U[:, ::-1]
    n = len(w)
    cols = []
    for m in range(0, n, 2):
        z = np.sqrt(w[m]) * U[:, m].astype(complex)
        if m + 1 < n:
            z = z + 1j * np.sqrt(w[m + 1]) * U[:, m + 1]
        cols.append(z)
    return np.stack(cols, axis=1)


def _requirements(problem: DesignProblem, C_base: np.ndarray):
    """Deduplicated per-slot vectors for this code: (G[P, L, n], delta, map to problem rows)."""
    g = problem.slot_vectors(C_base)
    P, L, n = g.shape
    flat = np.concatenate([_canonical_sign(g[:, l, :]) for l in range(L)], axis=1) if P else g.reshape(0, L * n)
    uniq, delta, inv = dedupe_rows(flat, problem.delta)
    # representative problem row for each unique requirement
    rep = np.zeros(len(uniq), dtype=np.int64)
    rep[inv[::-1]] = np.arange(len(inv))[::-1]
    return uniq.reshape(-1, L, n), delta, rep


def _values(G: np.ndarray, V: np.ndarray) -> np.ndarray:
    """``sum_l |G[p,l] @ v|^2`` for every column v of V (P x S)."""
    P, L, n = G.shape
    s = G.reshape(P * L, n) @ V
    return np.sum(np.abs(s.reshape(P, L, -1)) ** 2, axis=1)


def _lifted_values(G: np.ndarray, W: np.ndarray) -> np.ndarray:
    return np.einsum("pla,ab,plb->p", G, W, G)


def solve_relaxation(
    G: np.ndarray,
    delta: np.ndarray,
    accuracy: float,
    initial: int | None = None,
    batch: int | None = None,
    max_rounds: int = 100,
):
    """Min-trace SDP over all requirements by constraint generation.

    The working set starts from the requirements that are hardest for an
    isotropic W and grows by the most violated ones until none is violated
    by more than a relative 1e-7.
    """
    P, L, n = G.shape
    B_all = np.einsum("pla,plb->pab", G, G)
    tr = np.einsum("paa->p", B_all)
    hardness = delta / tr
    initial = initial or max(4 * n, 24)
    batch = batch or max(2 * n, 24)
    active = np.zeros(P, dtype=bool)
    active[np.argsort(-hardness, kind="stable")[:initial]] = True
    W = None
    sol = None
    for _ in range(max_rounds):
        idx = np.flatnonzero(active)
        sol = solve_trace_sdp(B_all[idx], delta[idx], gap_tol=accuracy, warm_start=W)
        W = sol.W
        rel = (delta - _lifted_values(G, W)) / delta
        rel[active] = -np.inf
        worst = np.argsort(-rel, kind="stable")[:batch]
        worst = worst[rel[worst] > 1e-7]
        if len(worst) == 0:
            break
        active[worst] = True
    return sol, int(active.sum())


def solve_modulation_subproblem(
    problem: DesignProblem,
    C_base: np.ndarray,
    p_max: float,
    randomization_count: int = 200,
    sdp_accuracy: float | None = None,
    rng: np.random.Generator | None = None,
    extra_candidates: np.ndarray | None = None,
) -> ModulationStep:
    """Update the design vector for a fixed code.

    Solves the rank-relaxed lifted problem, then recovers a vector by
    factorization when the relaxation is (complex) rank one, otherwise by
    Gaussian randomization. ``extra_candidates`` (n x S, design
    coordinates) join the pool, e.g. a user-supplied starting point.
    Every candidate is rescaled by the smallest factor that meets all pair
    requirements; candidates over ``p_max`` are discarded and the
    least-energy survivor is returned.
    """
    n = problem.n
    rng = rng if rng is not None else np.random.default_rng(0)
    if sdp_accuracy is None:
        sdp_accuracy = 1e-6 * max(1.0, p_max)
    if len(problem.delta) == 0:
        z = np.zeros((n, n), dtype=complex)
        return ModulationStep(z, np.zeros(n, dtype=complex), "feasible", True, 0.0)

    G, delta, rep = _requirements(problem, C_base)
    dead = ~np.any(G != 0, axis=(1, 2))
    if np.any(dead):
        worst = int(rep[np.flatnonzero(dead)[np.argmax(delta[dead])]])
        log.info("code leaves requirement %d with no slot; x-step infeasible", worst)
        z = np.zeros((n, n), dtype=complex)
        return ModulationStep(z, None, "infeasible", False, np.inf,
                              violated_pair=int(problem.pair_index[worst]))

    # the SDP variable covers one copy of the tied block; energy scales with tie
    sol, _ = solve_relaxation(G, delta, sdp_accuracy / problem.tie)
    Wr = sol.W
    Z = hermitian_factor(Wr)
    W_h = Z @ Z.conj().T
    trace = float(np.trace(Wr))
    obj = trace * problem.tie
    if obj > p_max * (1 + 1e-6):
        scaled = _lifted_values(G, Wr) * (p_max / obj)
        worst = int(rep[np.argmax(delta / np.maximum(scaled, 1e-300))])
        log.info("relaxation needs energy %.4g > P_max %.4g", obj, p_max)
        return ModulationStep(W_h, None, "infeasible", False, obj,
                              violated_pair=int(problem.pair_index[worst]),
                              sdp_converged=sol.converged)

    second = float(np.sum(np.linalg.norm(Z[:, 1:], axis=0) ** 2)) if Z.shape[1] > 1 else 0.0
    rank_one = second <= RANK_ONE_TOL * max(trace, 1e-300)
    if rank_one:
        cands = Z[:, :1]
    else:
        w = (rng.standard_normal((Z.shape[1], randomization_count))
             + 1j * rng.standard_normal((Z.shape[1], randomization_count))) / np.sqrt(2)
        cands = np.concatenate([Z[:, :1], Z @ w], axis=1)
    if extra_candidates is not None:
        cands = np.concatenate([cands, np.asarray(extra_candidates, dtype=complex).reshape(n, -1)], axis=1)

    vals = _values(G, cands)
    with np.errstate(divide="ignore"):
        scale = np.sqrt(np.max(delta[:, None] / vals, axis=0))
    scale = scale * (1 + 1e-12)
    energy = problem.tie * scale**2 * np.sum(np.abs(cands) ** 2, axis=0)
    energy[~np.isfinite(scale)] = np.inf
    ok = energy <= p_max * (1 + 1e-9)
    if np.any(ok):
        best = int(np.argmin(np.where(ok, energy, np.inf)))
        u = canonical_phase(cands[:, best] * scale[best])
        return ModulationStep(W_h, u, "feasible", rank_one, obj, sdp_converged=sol.converged)

    # nothing fits the budget: report the least-energy candidate shrunk onto it
    best = int(np.argmin(energy))
    if not np.isfinite(energy[best]):
        return ModulationStep(W_h, None, "budget_exhausted", rank_one, obj, sdp_converged=sol.converged)
    u = cands[:, best] * scale[best] * np.sqrt(p_max / energy[best])
    return ModulationStep(W_h, canonical_phase(u), "budget_exhausted", rank_one, obj,
                          sdp_converged=sol.converged)

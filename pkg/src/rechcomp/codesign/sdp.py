"""First-order solver for the minimum-trace SDP with linear lower bounds.

Solves::

    minimize    trace(W)
    subject to  <B_p, W> >= delta_p,   p = 1..m
                W PSD

with an alternating-direction augmented Lagrangian method on the dual
(Wen, Goldfarb & Yin, 2010). Slack variables for the inequalities live in a
nonnegative-orthant block next to the PSD block, so the cone projection is
one symmetric eigendecomposition plus a clip per iteration.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

log = logging.getLogger(__name__)


@dataclass
class SdpSolution:
    W: np.ndarray
    y: np.ndarray
    primal_objective: float
    dual_objective: float
    primal_residual: float
    dual_residual: float
    iterations: int
    converged: bool

    @property
    def gap(self) -> float:
        return abs(self.primal_objective - self.dual_objective)


def _proj_psd(V: np.ndarray) -> np.ndarray:
    w, U = np.linalg.eigh(V)
    w = np.maximum(w, 0.0)
    return (U * w) @ U.T


def solve_trace_sdp(
    B: np.ndarray,
    delta: np.ndarray,
    gap_tol: float = 1e-6,
    feas_tol: float = 1e-7,
    max_iter: int = 20000,
    mu: float = 1.0,
    warm_start: np.ndarray | None = None,
) -> SdpSolution:
    """Minimize trace(W) over PSD W subject to ``<B[p], W> >= delta[p]``.

    ``B`` is (m, n, n) real symmetric. ``gap_tol`` is an absolute duality
    gap target in the units of trace(W); ``feas_tol`` bounds the scaled
    primal and dual residuals. ``warm_start`` is an optional primal W.
    """
    B = np.asarray(B, dtype=float)
    delta = np.asarray(delta, dtype=float)
    m, n, _ = B.shape
    if m == 0:
        z = np.zeros((n, n))
        return SdpSolution(z, np.zeros(0), 0.0, 0.0, 0.0, 0.0, 0, True)

    # row equilibration, then a global scale so the right-hand side is O(1)
    Bmat = B.reshape(m, n * n)
    rnorm = np.linalg.norm(Bmat, axis=1)
    if np.any(rnorm == 0):
        raise ValueError("zero constraint matrix with positive right-hand side is infeasible")
    Bmat = Bmat / rnorm[:, None]
    b = delta / rnorm
    kappa = float(np.max(b))
    b = b / kappa

    AAt = Bmat @ Bmat.T + np.eye(m)
    chol = scipy.linalg.cho_factor(AAt)
    eye = np.eye(n)
    bnorm = 1.0 + np.linalg.norm(b)
    cnorm = 1.0 + np.sqrt(n)

    if warm_start is not None:
        XW = np.asarray(warm_start, dtype=float) / kappa
        Xs = np.maximum(Bmat @ XW.ravel() - b, 0.0)
    else:
        XW = np.zeros((n, n))
        Xs = np.zeros(m)
    SW = eye.copy()
    Ss = np.zeros(m)

    pinf = dinf = np.inf
    it = 0
    converged = False
    pobj = dobj = 0.0
    y = np.zeros(m)
    for it in range(1, max_iter + 1):
        AX = Bmat @ XW.ravel() - Xs
        AS_C = Bmat @ (SW - eye).ravel() - Ss
        y = -scipy.linalg.cho_solve(chol, mu * (AX - b) + AS_C)
        AtyW = (Bmat.T @ y).reshape(n, n)
        VW = eye - AtyW - mu * XW
        Vs = y - mu * Xs
        VW = 0.5 * (VW + VW.T)
        SW = _proj_psd(VW)
        Ss = np.maximum(Vs, 0.0)
        XW = (SW - VW) / mu
        Xs = (Ss - Vs) / mu

        if it % 10 == 0 or it == max_iter:
            pinf = np.linalg.norm(Bmat @ XW.ravel() - Xs - b) / bnorm
            dW = eye - AtyW - SW
            ds = y - Ss
            dinf = np.sqrt(np.sum(dW * dW) + ds @ ds) / cnorm
            pobj = float(np.trace(XW)) * kappa
            dobj = float(b @ y) * kappa
            if pinf <= feas_tol and dinf <= feas_tol and abs(pobj - dobj) <= gap_tol:
                converged = True
                break
            # residual balancing on the penalty parameter
            if pinf > 5.0 * dinf:
                mu = min(mu * 1.5, 1e6)
            elif dinf > 5.0 * pinf:
                mu = max(mu / 1.5, 1e-6)

    if not converged:
        log.warning("SDP stopped after %d iterations (pinf=%.2e dinf=%.2e gap=%.2e)",
                    it, pinf, dinf, abs(pobj - dobj))
    W = 0.5 * (XW + XW.T) * kappa
    return SdpSolution(W, y * kappa / rnorm, pobj, dobj, float(pinf), float(dinf), it, converged)

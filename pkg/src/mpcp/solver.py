"""ADMM solver for low-rank tensor completion with per-mode-pair penalties.

Model::

    min_B  sum_q beta_q ||unfold_q(B)||_{tau p}   s.t.  B = O on the observed set

split into ``B = M_q`` for every selected mode pair ``q`` with multipliers
``T_q``.  One iteration updates ``B`` (closed form), every ``M_q`` (tensor
prox of the mode-q unfolding), every ``T_q``, then grows ``rho_q`` by ``mu``.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .penalty import PenaltySpec, penalty_value
from .tensor import fold_q, num_mode_pairs, unfold_q
from .tensor_prox import tensor_ptau_prox

__all__ = [
    "ObservationMask",
    "SolverConfig",
    "SolverState",
    "IterationLog",
    "SolverDivergenceError",
    "init_state",
    "update_B",
    "update_Mq",
    "update_Tq",
    "kkt_residuals",
    "iterate",
    "solve",
]

log = logging.getLogger(__name__)

RHO_CAP = 1e10


class SolverDivergenceError(FloatingPointError):
    def __init__(self, iteration, what="B"):
        self.iteration = iteration
        super().__init__(f"non-finite values in {what} at iteration {iteration}")


class ObservationMask:
    """Boolean membership of the observed index set."""

    def __init__(self, membership):
        m = np.asarray(membership)
        if m.dtype != bool:
            if not np.isin(m, (0, 1)).all():
                raise ValueError("mask entries must be 0 or 1")
            m = m.astype(bool)
        self.membership = np.ascontiguousarray(m)

    @property
    def shape(self):
        return self.membership.shape

    def sr(self):
        """Sampling rate: observed count over total count."""
        return float(np.count_nonzero(self.membership)) / self.membership.size

    def complement(self):
        return ObservationMask(~self.membership)

    def project(self, t):
        """Keep observed entries, zero the rest."""
        return np.where(self.membership, t, 0.0)

    def __eq__(self, other):
        return isinstance(other, ObservationMask) and np.array_equal(
            self.membership, other.membership
        )

    def __repr__(self):
        return f"ObservationMask(shape={self.shape}, sr={self.sr():.4f})"


@dataclass
class SolverConfig:
    """ADMM hyperparameters.

    ``beta`` and ``rho0`` may be scalars or per-pair sequences aligned with
    ``mode_pairs``; ``None`` gives uniform weights.  ``prox_weight`` selects the
    prox coefficient of the M-update: ``"consistent"`` uses ``beta_q / rho_q``,
    ``"paper"`` the transposed ``rho_q / beta_q``.
    """

    penalty: PenaltySpec
    beta: object = None
    rho0: object = 1e-3
    mu: float = 1.05
    eps: float = 1e-4
    max_iter: int = 500
    mode_pairs: object = None
    prox_weight: str = "consistent"
    rho_cap: float = RHO_CAP
    threads: int = 1
    symmetric: bool = True

    def resolve(self, ndim):
        """Validate against a tensor order; return ``(pairs, beta, rho0)`` arrays."""
        if ndim < 3:
            raise ValueError("completion needs a tensor of order >= 3")
        nq = num_mode_pairs(ndim)
        pairs = list(range(1, nq + 1)) if self.mode_pairs is None else [int(q) for q in self.mode_pairs]
        if not pairs or len(set(pairs)) != len(pairs) or not all(1 <= q <= nq for q in pairs):
            raise ValueError(f"mode_pairs must be distinct values in 1..{nq}, got {pairs}")
        if self.beta is None:
            beta = np.full(len(pairs), 1.0 / len(pairs))
        else:
            beta = np.broadcast_to(np.asarray(self.beta, dtype=float), (len(pairs),)).copy()
        if np.any(beta < 0) or abs(beta.sum() - 1.0) > 1e-12:
            raise ValueError(f"beta must be non-negative and sum to 1, got {beta.tolist()}")
        rho0 = np.broadcast_to(np.asarray(self.rho0, dtype=float), (len(pairs),)).copy()
        if np.any(~(rho0 > 0)):
            raise ValueError("rho0 must be positive")
        if not self.mu > 1:
            raise ValueError("mu must exceed 1")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if int(self.max_iter) < 1:
            raise ValueError("max_iter must be at least 1")
        if self.prox_weight not in ("consistent", "paper"):
            raise ValueError(f"unknown prox_weight {self.prox_weight!r}")
        return pairs, beta, rho0


@dataclass(frozen=True)
class IterationLog:
    iter: int
    rel_change: float
    primal_residuals: tuple
    multiplier_norms: tuple
    dual_drift: tuple
    objective: float
    rho: tuple
    rho_capped: bool
    wall_time: float


@dataclass
class SolverState:
    """Iterates of the ADMM loop; lists are aligned with ``pairs``."""

    B: np.ndarray
    M: list
    T: list
    rho: list
    pairs: list
    beta: np.ndarray
    k: int = 0
    dual_drift: list = field(default_factory=list)
    norms: list = field(default_factory=list)
    history: list = field(default_factory=list)


def init_state(O, mask, config):
    """``B0 = P_Omega(O)``, ``M_q0 = B0``, ``T_q0 = 0``, ``rho_q = rho0``."""
    O = np.asarray(O, dtype=float)
    mask = mask if isinstance(mask, ObservationMask) else ObservationMask(mask)
    if mask.shape != O.shape:
        raise ValueError(f"mask shape {mask.shape} differs from data shape {O.shape}")
    pairs, beta, rho0 = config.resolve(O.ndim)
    B = mask.project(O)
    return SolverState(
        B=B,
        M=[B.copy() for _ in pairs],
        T=[np.zeros_like(B) for _ in pairs],
        rho=[float(r) for r in rho0],
        pairs=pairs,
        beta=beta,
        dual_drift=[0.0] * len(pairs),
        norms=[math.nan] * len(pairs),
    )


def update_B(state, O, mask):
    """Closed-form B step: weighted average of ``rho_q M_q - T_q`` off the
    observed set, the data on it."""
    mask = mask if isinstance(mask, ObservationMask) else ObservationMask(mask)
    num = np.zeros_like(state.B)
    for rho, M, T in zip(state.rho, state.M, state.T):
        num += rho * M - T
    den = math.fsum(state.rho)
    if den == 0:
        raise ZeroDivisionError("sum of rho_q is zero")
    return np.where(mask.membership, O, num / den)


def _prox_weight(state, i, config):
    if config.prox_weight == "paper":
        return state.rho[i] / state.beta[i] if state.beta[i] > 0 else math.inf
    return state.beta[i] / state.rho[i]


def update_Mq(state, q, config):
    """Prox step for mode pair ``q``.

    Returns ``(M_q, norm)`` where ``norm`` is ``||unfold_q(M_q)||_{tau p}``.
    A zero weight ``beta_q`` makes the step the identity.
    """
    i = state.pairs.index(q)
    Y = state.B + state.T[i] / state.rho[i]
    w = _prox_weight(state, i, config)
    if w == 0:
        return Y, math.nan
    U = unfold_q(Y, q)
    if math.isinf(w):
        return np.zeros_like(Y), 0.0
    out, s = tensor_ptau_prox(
        U, w, config.penalty, symmetric=config.symmetric, threads=config.threads,
        return_singular_values=True,
    )
    norm = float(np.sum(penalty_value(s, config.penalty)) / U.shape[2])
    return fold_q(out, q, Y.shape), norm


def update_Tq(state, q):
    """``T_q + rho_q (B - M_q)``; the caller grows ``rho_q`` afterwards."""
    i = state.pairs.index(q)
    return state.T[i] + state.rho[i] * (state.B - state.M[i])


def kkt_residuals(state):
    """Per-pair stationarity monitors.

    ``feasibility`` is ``||B - M_q||_F``, ``dual_drift`` is
    ``||T_q^{k+1} - T_q^k||_F / rho_q`` from the last multiplier step and
    ``multiplier_norm`` is ``||T_q||_F``.
    """
    return [
        {
            "q": q,
            "feasibility": float(np.linalg.norm(state.B - M)),
            "dual_drift": float(d),
            "multiplier_norm": float(np.linalg.norm(T)),
        }
        for q, M, T, d in zip(state.pairs, state.M, state.T, state.dual_drift)
    ]


def iterate(state, O, mask, config):
    """Run one ADMM iteration in place and return its log entry."""
    t0 = time.perf_counter()
    B_old = state.B
    state.B = update_B(state, O, mask)
    k = state.k + 1
    if not np.isfinite(state.B).all():
        raise SolverDivergenceError(k)
    for i, q in enumerate(state.pairs):
        state.M[i], state.norms[i] = update_Mq(state, q, config)
    capped = False
    for i, q in enumerate(state.pairs):
        T_new = update_Tq(state, q)
        state.dual_drift[i] = float(np.linalg.norm(T_new - state.T[i])) / state.rho[i]
        state.T[i] = T_new
        rho = state.rho[i] * config.mu
        if rho > config.rho_cap:
            rho, capped = config.rho_cap, True
        state.rho[i] = rho
    if not all(np.isfinite(M).all() for M in state.M):
        raise SolverDivergenceError(k, "M")
    state.k = k
    denom = max(float(np.sum(B_old * B_old)), 1e-30)
    rel = float(np.sum((state.B - B_old) ** 2)) / denom
    entry = IterationLog(
        iter=k,
        rel_change=rel,
        primal_residuals=tuple(float(np.linalg.norm(state.B - M)) for M in state.M),
        multiplier_norms=tuple(float(np.linalg.norm(T)) for T in state.T),
        dual_drift=tuple(state.dual_drift),
        objective=float(sum(b * n for b, n in zip(state.beta, state.norms) if b > 0)),
        rho=tuple(state.rho),
        rho_capped=capped,
        wall_time=time.perf_counter() - t0,
    )
    if capped:
        log.info("rho reached its cap %.3g at iteration %d", config.rho_cap, k)
    state.history.append(entry)
    return entry


def solve(O, mask, config, callback=None):
    """Complete ``O`` from its entries on ``mask``.

    Iterates until the squared relative change
    ``||B^{k+1} - B^k||_F^2 / ||B^k||_F^2`` drops to ``config.eps`` or
    ``config.max_iter`` iterations have run.  With missing entries the test
    is skipped at the first iteration and while every ``M_q`` is zero.

    Returns
    -------
    B : ndarray
        Completed tensor; equal to ``O`` on every observed entry.
    history : list of IterationLog
    """
    O = np.asarray(O, dtype=float)
    mask = mask if isinstance(mask, ObservationMask) else ObservationMask(mask)
    if mask.shape != O.shape:
        raise ValueError(f"mask shape {mask.shape} differs from data shape {O.shape}")
    if not np.isfinite(O[mask.membership]).all():
        raise ValueError("observed entries must be finite")
    state = init_state(O, mask, config)
    complete = bool(mask.membership.all())
    while state.k < config.max_iter:
        # B moves off the observed set only through the previous M_q
        fed = any(M.any() for M in state.M)
        entry = iterate(state, O, mask, config)
        if callback is not None:
            callback(state, entry)
        # B^1 == B^0 whenever M^0 = B^0 and T^0 = 0, so the first change
        # carries no information unless nothing is missing
        if state.k == 1 and not complete:
            continue
        # while every prox output is zero the unobserved entries stay at
        # zero; B stalls without having converged
        if not complete and not fed:
            continue
        if entry.rel_change <= config.eps:
            break
    return state.B, state.history

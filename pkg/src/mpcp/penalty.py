"""Scalar concave penalties (MPCP, MCP) and their proximal maps.

The MPCP penalty with parameters ``tau > 1`` and ``0 < p < 1`` is::

    psi(x) = |x| - |x|**(1+p) / ((1+p) tau)     if |x| <= tau**(1/p)
             p tau**(1/p) / (1+p)                otherwise

and reduces to MCP at ``p = 1``.  All prox functions solve
``argmin_x 0.5 (x - y)**2 + rho * penalty(x)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "PenaltyKind",
    "PenaltySpec",
    "ProxResult",
    "ProxConvergenceError",
    "mpcp_value",
    "mpcp_derivative",
    "mcp_value",
    "penalty_value",
    "mpcp_prox",
    "mcp_prox",
    "soft_threshold",
    "mpcp_prox_array",
    "mcp_prox_array",
    "prox_array",
    "mpcp_thresholds",
    "TAU_CONVENTIONS",
]

FP_TOL = 1e-12
FP_MAX_ITER = 5000
TAU_CONVENTIONS = ("power", "threshold")


class PenaltyKind(str, Enum):
    MPCP = "mpcp"
    MCP = "mcp"
    TNN = "tnn"


class ProxConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class PenaltySpec:
    """Penalty kind with its shape parameters.

    ``p = 1`` requested as MPCP is stored as MCP (the two coincide there).
    TNN ignores both ``p`` and ``tau``.
    """

    kind: PenaltyKind
    p: float = 1.0
    tau: float = math.inf

    def __post_init__(self):
        kind = PenaltyKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is PenaltyKind.TNN:
            return
        if not 0.0 < self.p <= 1.0:
            raise ValueError(f"p must lie in (0, 1], got {self.p}")
        if not self.tau > 1.0:
            raise ValueError(f"tau must exceed 1, got {self.tau}")
        if kind is PenaltyKind.MPCP and self.p == 1.0:
            object.__setattr__(self, "kind", PenaltyKind.MCP)
        if kind is PenaltyKind.MCP and self.p != 1.0:
            raise ValueError("MCP requires p = 1")

    @classmethod
    def mpcp(cls, p, tau):
        return cls(PenaltyKind.MPCP, p, tau)

    @classmethod
    def mcp(cls, tau):
        return cls(PenaltyKind.MCP, 1.0, tau)

    @classmethod
    def tnn(cls):
        return cls(PenaltyKind.TNN)

    @classmethod
    def from_tau_p(cls, kind, p, tau_p, convention="threshold"):
        """Build from the ``(p, tau^p)`` pair used on the command line.

        ``convention`` fixes how the reported value maps to ``tau``:

        ``"threshold"`` (default)
            ``tau = (tau^p) ** p``, so the penalty turns flat at
            ``|x| = tau^p``.
        ``"power"``
            ``tau = (tau^p) ** (1/p)``, the literal reading.  With small
            ``p`` and moderate ``tau^p`` the flat point lies far beyond any
            singular value and the penalty acts as the nuclear norm.

        Both agree for MCP (``p = 1``).
        """
        kind = PenaltyKind(kind)
        if kind is PenaltyKind.TNN:
            return cls.tnn()
        if kind is PenaltyKind.MCP:
            p = 1.0
        if not 0.0 < p <= 1.0:
            raise ValueError(f"p must lie in (0, 1], got {p}")
        if not tau_p > 1.0:
            raise ValueError(f"tau^p must exceed 1, got {tau_p}")
        if convention not in TAU_CONVENTIONS:
            raise ValueError(f"unknown tau convention {convention!r}")
        e = 1.0 / p if convention == "power" else p
        try:
            tau = float(tau_p) ** e
        except OverflowError:
            raise ValueError(f"tau overflows for p={p}, tau^p={tau_p}") from None
        return cls(kind, float(p), tau)

    @property
    def tau_inflection(self):
        """Point ``tau**(1/p)`` beyond which the penalty is flat."""
        if self.kind is PenaltyKind.TNN:
            return math.inf
        try:
            return self.tau ** (1.0 / self.p)
        except OverflowError:
            return math.inf

    @property
    def saturation(self):
        """Value of the penalty on its flat part."""
        return self.p * self.tau_inflection / (1.0 + self.p)


@dataclass(frozen=True)
class ProxResult:
    x: float
    iterations: int
    branch: str  # "zero" | "boundary" | "fixed_point" | "identity"


def mpcp_value(x, spec):
    """Penalty value; works elementwise on arrays (MCP when ``spec.p == 1``)."""
    a = np.abs(np.asarray(x, dtype=float))
    p, tau = spec.p, spec.tau
    b = spec.tau_inflection
    inner = a - a ** (1.0 + p) / ((1.0 + p) * tau)
    out = np.where(a <= b, inner, spec.saturation)
    return float(out) if out.ndim == 0 else out


def mcp_value(x, tau):
    """MCP ``h_tau(x)``: ``|x| - x**2/(2 tau)`` up to ``tau``, then ``tau/2``."""
    a = np.abs(np.asarray(x, dtype=float))
    out = np.where(a <= tau, a - a * a / (2.0 * tau), tau / 2.0)
    return float(out) if out.ndim == 0 else out


def penalty_value(x, spec):
    if spec.kind is PenaltyKind.TNN:
        out = np.abs(np.asarray(x, dtype=float))
        return float(out) if out.ndim == 0 else out
    return mpcp_value(x, spec)


def mpcp_derivative(x, spec):
    """Right derivative on ``[0, inf)``: ``1 - x**p / tau`` up to ``tau**(1/p)``, then 0."""
    a = np.asarray(x, dtype=float)
    if np.any(a < 0):
        raise ValueError("derivative is defined for x >= 0")
    out = np.where(a <= spec.tau_inflection, 1.0 - a**spec.p / spec.tau, 0.0)
    return float(out) if out.ndim == 0 else out


def soft_threshold(y, rho):
    """``sign(y) * max(|y| - rho, 0)``; elementwise on arrays."""
    if rho < 0:
        raise ValueError("threshold must be non-negative")
    y = np.asarray(y, dtype=float)
    out = np.sign(y) * np.maximum(np.abs(y) - rho, 0.0)
    return float(out) if out.ndim == 0 else out


def mpcp_thresholds(rho, spec):
    """Return ``(x_a, h_a)`` for the MPCP prox at weight ``rho``.

    ``x_a`` is the smallest non-zero value the prox can return and ``h_a`` the
    input magnitude at which it is returned.
    """
    p, tau = spec.p, spec.tau
    x_a = (2.0 * rho * p / ((1.0 + p) * tau)) ** (1.0 / (1.0 - p))
    h_a = x_a - rho * x_a**p / tau + rho
    return x_a, h_a


# branch codes used by the array kernels
_ZERO, _BOUNDARY, _FIXED, _IDENTITY = 0, 1, 2, 3
_BRANCH_NAMES = {_ZERO: "zero", _BOUNDARY: "boundary", _FIXED: "fixed_point", _IDENTITY: "identity"}


def _mpcp_kernel(y, rho, spec, tol, max_iter):
    """Magnitudes, branch codes and iteration counts of the MPCP prox."""
    a = np.abs(y)
    p, tau = spec.p, spec.tau
    b = spec.tau_inflection
    x_a, h_a = mpcp_thresholds(rho, spec)
    x = np.zeros_like(a)
    branch = np.full(a.shape, _ZERO, dtype=np.int8)
    iters = np.zeros(a.shape, dtype=np.int64)

    if not x_a < b:
        # Large weight: the concave part never beats zero, so the only
        # candidates are 0 and y itself (flat part); compare objectives.
        keep = a * a >= 2.0 * rho * spec.saturation
        x[keep] = a[keep]
        branch[keep] = _IDENTITY
        return x, branch, iters

    ident = a >= b
    x[ident] = a[ident]
    branch[ident] = _IDENTITY

    tie = ~ident & (np.abs(a - h_a) <= FP_TOL * max(1.0, h_a))
    x[tie] = x_a
    branch[tie] = _BOUNDARY

    mid = ~ident & ~tie & (a > h_a)
    if np.any(mid):
        ym = a[mid]
        xk = ym.copy()
        done = np.zeros(ym.shape, dtype=bool)
        count = np.zeros(ym.shape, dtype=np.int64)
        step_tol = tol * np.maximum(1.0, ym)
        for _ in range(max_iter):
            act = ~done
            xa = xk[act]
            xn = ym[act] - rho + rho * xa**p / tau
            count[act] += 1
            conv = np.abs(xn - xa) <= step_tol[act]
            xk[act] = xn
            d = done[act]
            d[conv] = True
            done[act] = d
            if done.all():
                break
        else:
            raise ProxConvergenceError(
                f"fixed-point iteration did not converge in {max_iter} steps "
                f"(rho={rho}, p={p}, tau={tau})"
            )
        x[mid] = xk
        branch[mid] = _FIXED
        iters[mid] = count
    return x, branch, iters


def _mcp_kernel(y, rho, tau):
    a = np.abs(y)
    x = np.zeros_like(a)
    branch = np.full(a.shape, _ZERO, dtype=np.int8)
    if rho >= tau:
        # concave on [0, tau]: hard threshold at sqrt(rho * tau)
        keep = a * a >= rho * tau
        x[keep] = a[keep]
        branch[keep] = _IDENTITY
        return x, branch
    ident = a > tau
    x[ident] = a[ident]
    branch[ident] = _IDENTITY
    mid = ~ident & (a > rho)
    x[mid] = (a[mid] - rho) / (1.0 - rho / tau)
    branch[mid] = _FIXED
    return x, branch


def _signed(y, x, branch):
    out = np.where(branch == _IDENTITY, y, np.sign(y) * x)
    return out


def mpcp_prox_array(y, rho, spec, tol=FP_TOL, max_iter=FP_MAX_ITER):
    """Elementwise MPCP prox of an array (the scalar map applied to each entry)."""
    if rho <= 0:
        raise ValueError("prox weight must be positive")
    if spec.kind is not PenaltyKind.MPCP:
        raise ValueError(f"expected an MPCP penalty, got {spec.kind.value}")
    y = np.asarray(y, dtype=float)
    x, branch, _ = _mpcp_kernel(y, rho, spec, tol, max_iter)
    return _signed(y, x, branch)


def mcp_prox_array(y, rho, spec):
    """Elementwise MCP prox (firm thresholding; hard thresholding when ``rho >= tau``)."""
    if rho <= 0:
        raise ValueError("prox weight must be positive")
    y = np.asarray(y, dtype=float)
    x, branch = _mcp_kernel(y, rho, spec.tau)
    return _signed(y, x, branch)


def prox_array(y, rho, spec):
    """Dispatch the elementwise prox on ``spec.kind``."""
    if spec.kind is PenaltyKind.TNN:
        return soft_threshold(np.asarray(y, dtype=float), rho)
    if spec.kind is PenaltyKind.MCP:
        return mcp_prox_array(y, rho, spec)
    return mpcp_prox_array(y, rho, spec)


def mpcp_prox(y, rho, spec, tol=FP_TOL, max_iter=FP_MAX_ITER):
    """Scalar MPCP prox.

    Parameters
    ----------
    y : float
        Input value.
    rho : float
        Prox weight, ``> 0``.
    spec : PenaltySpec
        MPCP penalty with ``0 < p < 1``.  ``p = 1`` is routed to
        :func:`mcp_prox`.
    tol, max_iter
        Stopping rule of the fixed-point iteration
        ``x <- |y| - rho + rho x**p / tau`` started at ``|y|``; the step is
        compared against ``tol * max(1, |y|)``.

    Returns
    -------
    ProxResult
        Minimizer with the branch that produced it.  When
        ``x_a >= tau**(1/p)`` (very large ``rho``) the middle branches are
        empty and the map is a hard threshold at
        ``sqrt(2 rho p tau**(1/p) / (1+p))``.
    """
    if spec.kind is PenaltyKind.MCP:
        return mcp_prox(y, rho, spec)
    if spec.kind is not PenaltyKind.MPCP:
        raise ValueError(f"expected an MPCP penalty, got {spec.kind.value}")
    if rho <= 0:
        raise ValueError("prox weight must be positive")
    arr = np.array([float(y)])
    x, branch, iters = _mpcp_kernel(arr, rho, spec, tol, max_iter)
    return ProxResult(
        x=float(_signed(arr, x, branch)[0]),
        iterations=int(iters[0]),
        branch=_BRANCH_NAMES[int(branch[0])],
    )


def mcp_prox(y, rho, spec, strict=True):
    """Scalar MCP prox (firm thresholding).

    Only the convex case ``rho < tau`` is accepted unless ``strict`` is
    false, in which case ``rho >= tau`` gives the exact hard-threshold
    minimizer.
    """
    if spec.kind is not PenaltyKind.MCP:
        raise ValueError(f"expected an MCP penalty, got {spec.kind.value}")
    if rho <= 0:
        raise ValueError("prox weight must be positive")
    if strict and rho >= spec.tau:
        raise ValueError(f"MCP prox requires rho < tau (rho={rho}, tau={spec.tau})")
    arr = np.array([float(y)])
    x, branch = _mcp_kernel(arr, rho, spec.tau)
    return ProxResult(
        x=float(_signed(arr, x, branch)[0]), iterations=0, branch=_BRANCH_NAMES[int(branch[0])]
    )

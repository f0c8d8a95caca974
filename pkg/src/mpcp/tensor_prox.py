"""Tensor p-th order tau norm and its proximal operator.

Both act on the singular values of the Fourier-domain frontal slices of a
third-order tensor: the norm averages ``psi(sigma)`` over slices, the prox
replaces every singular value by its scalar prox and keeps the slice's
singular vectors.
"""

from __future__ import annotations

import numpy as np

from .penalty import penalty_value, prox_array
from .tensor import idft3, slice_svd

__all__ = ["tensor_ptau_norm", "tensor_ptau_prox", "matrix_ptau_prox", "prox_objective"]


def tensor_ptau_norm(t, spec):
    """``(1/J3) sum_j sum_i psi(sigma_i(fft slice j))``.

    With a TNN spec this is the tensor nuclear norm.
    """
    t = np.asarray(t, dtype=float)
    if t.ndim != 3:
        raise ValueError(f"expected a third-order tensor, got shape {t.shape}")
    s = slice_svd(t, compute_uv=False)
    return float(np.sum(penalty_value(s, spec)) / t.shape[2])


def tensor_ptau_prox(y, rho, spec, symmetric=True, threads=1, return_singular_values=False):
    """Solve ``argmin_B 0.5 ||B - y||_F^2 + rho ||B||_{tau p}``.

    Parameters
    ----------
    y : ndarray
        Real third-order tensor.
    rho : float
        Prox weight, ``> 0``.
    spec : PenaltySpec
        MPCP, MCP or TNN (soft thresholding of singular values).
    symmetric : bool
        Decompose only half of the Fourier slices and mirror the rest.
    threads : int
        Worker threads for the per-slice SVDs.
    return_singular_values : bool
        Also return the ``(J3, min(J1, J2))`` stack of new singular values.

    Returns
    -------
    ndarray
        Real tensor of the same shape as ``y``.
    """
    if not rho > 0:
        raise ValueError("prox weight must be positive")
    y = np.asarray(y, dtype=float)
    if y.ndim != 3:
        raise ValueError(f"expected a third-order tensor, got shape {y.shape}")
    U, s, Vh = slice_svd(y, symmetric=symmetric, threads=threads)
    s_new = prox_array(s, rho, spec)
    if not s_new.any():
        out = np.zeros_like(y)
    else:
        out = idft3(np.moveaxis((U * s_new[:, None, :]) @ Vh, 0, 2))
    return (out, s_new) if return_singular_values else out


def matrix_ptau_prox(y, rho, spec):
    """Matrix case of :func:`tensor_ptau_prox` (a tensor with a single frontal slice)."""
    y = np.asarray(y, dtype=float)
    if y.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {y.shape}")
    return tensor_ptau_prox(y[:, :, None], rho, spec)[:, :, 0]


def prox_objective(b, y, rho, spec):
    """``0.5 ||b - y||_F^2 + rho ||b||_{tau p}``."""
    b = np.asarray(b, dtype=float)
    return 0.5 * float(np.sum((b - y) ** 2)) + rho * tensor_ptau_norm(b, spec)

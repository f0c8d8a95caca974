"""Image-stack quality metrics: PSNR, global SSIM, ERGAS and sampling rate.

Images are assumed to live in ``[0, 255]``.  SSIM here is the single-window
statistic over the whole slice, not the usual sliding-window average.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "PEAK",
    "C1",
    "C2",
    "psnr",
    "ssim",
    "ergas",
    "tensor_psnr",
    "tensor_ssim",
    "sampling_rate",
    "as_slices",
]

PEAK = 255.0
C1 = (0.01 * PEAK) ** 2
C2 = (0.03 * PEAK) ** 2


def _pair(ref, test, ndim=None):
    ref = np.asarray(ref, dtype=float)
    test = np.asarray(test, dtype=float)
    if ref.shape != test.shape:
        raise ValueError(f"shape mismatch: {ref.shape} vs {test.shape}")
    if ndim is not None and ref.ndim != ndim:
        raise ValueError(f"expected {ndim} dimensions, got shape {ref.shape}")
    return ref, test


def psnr(ref, test):
    """Peak signal-to-noise ratio in dB, ``10 log10(255^2 J1 J2 / ||ref - test||^2)``.

    Returns ``math.inf`` for identical inputs.
    """
    ref, test = _pair(ref, test, 2)
    err = float(np.sum((ref - test) ** 2))
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(PEAK * PEAK * ref.size / err)


def ssim(ref, test):
    """Structural similarity from whole-slice means, variances and covariance.

    ``(2 mu_x mu_y + c1)(2 s_xy + c2) / ((mu_x^2 + mu_y^2 + c1)(s_x^2 + s_y^2 + c2))``
    with population (``1/n``) moments.
    """
    ref, test = _pair(ref, test, 2)
    mx, my = ref.mean(), test.mean()
    dx, dy = ref - mx, test - my
    vx, vy = np.mean(dx * dx), np.mean(dy * dy)
    cxy = np.mean(dx * dy)
    num = (2 * mx * my + C1) * (2 * cxy + C2)
    den = (mx * mx + my * my + C1) * (vx + vy + C2)
    return float(num / den)


def as_slices(t):
    """View a tensor of order >= 2 as a stack of ``J1 x J2`` slices.

    Trailing modes are flattened in column-major order, so slice ``k`` of a
    fourth-order tensor is ``t[:, :, i, j]`` with ``k = i + J3 j``.
    """
    t = np.asarray(t, dtype=float)
    if t.ndim < 2:
        raise ValueError(f"expected at least 2 dimensions, got shape {t.shape}")
    return t.reshape(t.shape[0], t.shape[1], -1, order="F")


def _slice_mean(fn, ref, test):
    ref, test = _pair(ref, test)
    a, b = as_slices(ref), as_slices(test)
    vals = [fn(a[:, :, k], b[:, :, k]) for k in range(a.shape[2])]
    if any(math.isinf(v) for v in vals):
        return math.inf
    return math.fsum(vals) / len(vals)


def tensor_psnr(ref, test):
    """Mean of the slice PSNRs; ``inf`` if any slice is reproduced exactly."""
    return _slice_mean(psnr, ref, test)


def tensor_ssim(ref, test):
    """Mean of the slice SSIMs."""
    return _slice_mean(ssim, ref, test)


def ergas(a, b):
    """``100 sqrt(mean_j mse(a_j - b_j) / mean(a_j)^2)`` over frontal slices.

    ``a`` is the reference.  Raises ``ZeroDivisionError`` when a reference
    slice has zero mean.
    """
    a, b = _pair(a, b)
    a, b = as_slices(a), as_slices(b)
    terms = []
    for k in range(a.shape[2]):
        m = float(np.mean(a[:, :, k]))
        if m == 0.0:
            raise ZeroDivisionError(f"reference slice {k} has zero mean")
        mse = float(np.mean((a[:, :, k] - b[:, :, k]) ** 2))
        terms.append(mse / (m * m))
    return 100.0 * math.sqrt(math.fsum(terms) / len(terms))


def sampling_rate(mask):
    """Fraction of observed entries."""
    m = np.asarray(mask)
    return float(np.count_nonzero(m)) / m.size

"""Dense tensor algebra for the t-SVD framework.

Tensors are plain ``numpy.ndarray`` objects in C (row-major) order.  Mode
indices ``n`` and mode-pair indices ``q`` are 1-based so that they line up
with the index formulas of mode-n and mode-q unfolding; the pair ``(q1, q2)``
returned by :func:`pair_from_q` is 1-based as well.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

__all__ = [
    "TSvdFactors",
    "SliceSvdError",
    "unfold_n",
    "fold_n",
    "mode_n_product",
    "num_mode_pairs",
    "q_from_pair",
    "pair_from_q",
    "unfold_q",
    "fold_q",
    "dft3",
    "idft3",
    "identity_tensor",
    "t_transpose",
    "t_product",
    "slice_svd",
    "t_svd",
    "tubal_rank",
    "tnn",
    "n_tubal_rank",
]


class SliceSvdError(np.linalg.LinAlgError):
    """SVD of a Fourier-domain frontal slice did not converge."""

    def __init__(self, index, cause=None):
        self.index = index
        super().__init__(f"SVD did not converge on Fourier slice {index}: {cause}")


@dataclass(frozen=True)
class TSvdFactors:
    """Factors of ``t = U * S * V^H`` (t-product)."""

    U: np.ndarray
    S: np.ndarray
    V: np.ndarray


def _check_mode(ndim, n):
    if not 1 <= n <= ndim:
        raise ValueError(f"mode {n} out of range for a tensor of order {ndim}")


def unfold_n(t, n):
    """Mode-n unfolding.

    Element ``(j_1, ..., j_N)`` goes to row ``j_n`` and to the column given by
    the remaining indices with the lowest mode varying fastest.
    """
    t = np.asarray(t)
    _check_mode(t.ndim, n)
    return np.moveaxis(t, n - 1, 0).reshape(t.shape[n - 1], -1, order="F")


def fold_n(m, n, shape):
    """Inverse of :func:`unfold_n`."""
    shape = tuple(int(s) for s in shape)
    _check_mode(len(shape), n)
    m = np.asarray(m)
    rest = shape[: n - 1] + shape[n:]
    if m.shape != (shape[n - 1], int(np.prod(rest, dtype=np.int64))):
        raise ValueError(f"matrix of shape {m.shape} cannot fold to {shape} along mode {n}")
    t = m.reshape((shape[n - 1],) + rest, order="F")
    return np.ascontiguousarray(np.moveaxis(t, 0, n - 1))


def mode_n_product(t, M, n):
    """Mode-n product ``t x_n M``, i.e. ``unfold_n(result) == M @ unfold_n(t)``."""
    t = np.asarray(t)
    M = np.asarray(M)
    _check_mode(t.ndim, n)
    if M.ndim != 2 or M.shape[1] != t.shape[n - 1]:
        raise ValueError(
            f"matrix with {M.shape[-1]} columns does not match extent {t.shape[n - 1]} of mode {n}"
        )
    shape = list(t.shape)
    shape[n - 1] = M.shape[0]
    return fold_n(M @ unfold_n(t, n), n, shape)


def num_mode_pairs(ndim):
    return ndim * (ndim - 1) // 2


def q_from_pair(q1, q2, ndim):
    """Pair index ``q = (q1 - 1)(N - q1/2) + q2 - q1`` for ``1 <= q1 < q2 <= N``."""
    if not 1 <= q1 < q2 <= ndim:
        raise ValueError(f"invalid mode pair ({q1}, {q2}) for order {ndim}")
    # (q1 - 1) * (2N - q1) is always even
    return (q1 - 1) * (2 * ndim - q1) // 2 + q2 - q1


def pair_from_q(q, ndim):
    """Inverse of :func:`q_from_pair`."""
    if not 1 <= q <= num_mode_pairs(ndim):
        raise ValueError(f"q={q} out of range 1..{num_mode_pairs(ndim)} for order {ndim}")
    q1 = 1
    while q > q_from_pair(q1, ndim, ndim):
        q1 += 1
    q2 = q - q_from_pair(q1, q1 + 1, ndim) + q1 + 1
    return q1, q2


def _q_axes(q, ndim):
    if ndim < 3:
        raise ValueError("mode-q unfolding needs a tensor of order >= 3")
    q1, q2 = pair_from_q(q, ndim)
    rest = [s for s in range(ndim) if s not in (q1 - 1, q2 - 1)]
    return [q1 - 1, q2 - 1] + rest


def unfold_q(t, q):
    """Mode-q unfolding into a third-order tensor of shape ``(J_q1, J_q2, prod(rest))``.

    The third index enumerates the remaining modes with the lowest mode
    varying fastest.
    """
    t = np.asarray(t)
    axes = _q_axes(q, t.ndim)
    p = np.transpose(t, axes)
    return np.ascontiguousarray(p.reshape(p.shape[0], p.shape[1], -1, order="F"))


def fold_q(u, q, shape):
    """Inverse of :func:`unfold_q`."""
    shape = tuple(int(s) for s in shape)
    axes = _q_axes(q, len(shape))
    pshape = tuple(shape[a] for a in axes)
    u = np.asarray(u)
    if u.ndim != 3 or u.shape != (pshape[0], pshape[1], int(np.prod(pshape[2:], dtype=np.int64))):
        raise ValueError(f"tensor of shape {u.shape} cannot fold to {shape} with q={q}")
    p = u.reshape(pshape, order="F")
    return np.ascontiguousarray(np.transpose(p, np.argsort(axes)))


def _check3(t, name="tensor"):
    if t.ndim != 3:
        raise ValueError(f"{name} must be third-order, got shape {t.shape}")


def dft3(t):
    """Unnormalized DFT of every mode-3 tube."""
    t = np.asarray(t)
    _check3(t)
    return np.fft.fft(t, axis=2)


def idft3(c, real=True):
    """Inverse of :func:`dft3`; the imaginary residual is dropped when ``real``."""
    c = np.asarray(c)
    _check3(c)
    t = np.fft.ifft(c, axis=2)
    return np.ascontiguousarray(t.real) if real else t


def half_slices(n3):
    """Number of Fourier slices that determine a real tensor's spectrum."""
    return n3 // 2 + 1


def mirror_spectrum(half, n3):
    """Complete a half spectrum ``half[..., :n3//2 + 1]`` by conjugate symmetry."""
    out = np.empty(half.shape[:-1] + (n3,), dtype=np.complex128)
    h = half_slices(n3)
    out[..., :h] = half[..., :h]
    if n3 > 1:
        out[..., h:] = np.conj(half[..., 1 : n3 - h + 1][..., ::-1])
    return out


def identity_tensor(n, n3):
    e = np.zeros((n, n, n3))
    e[:, :, 0] = np.eye(n)
    return e


def t_transpose(t):
    """Conjugate transpose: transpose each frontal slice, reverse slices 2..J3."""
    t = np.asarray(t)
    _check3(t)
    tt = np.conj(np.transpose(t, (1, 0, 2)))
    return np.ascontiguousarray(np.concatenate([tt[:, :, :1], tt[:, :, :0:-1]], axis=2))


def t_product(a, b):
    """t-product ``a * b`` computed slice-wise in the Fourier domain."""
    a = np.asarray(a)
    b = np.asarray(b)
    _check3(a, "left operand")
    _check3(b, "right operand")
    if a.shape[1] != b.shape[0] or a.shape[2] != b.shape[2]:
        raise ValueError(f"t-product shape mismatch: {a.shape} * {b.shape}")
    fa = np.moveaxis(dft3(a), 2, 0)
    fb = np.moveaxis(dft3(b), 2, 0)
    fc = np.moveaxis(fa @ fb, 0, 2)
    real = np.isrealobj(a) and np.isrealobj(b)
    return idft3(fc, real=real)


def _fourier_slices(t, symmetric):
    """Fourier slices as a (n_slices, J1, J2) stack, half spectrum when ``symmetric``."""
    f = np.moveaxis(dft3(t), 2, 0)
    if not symmetric:
        return f
    f = f[: half_slices(t.shape[2])].copy()
    # the DC slice (and Nyquist slice for even J3) of a real tensor is real
    f[0] = f[0].real
    if t.shape[2] % 2 == 0 and t.shape[2] > 1:
        f[-1] = f[-1].real
    return f


def _batched_svd(stack, compute_uv, full_matrices, threads, offset=0):
    def run(lo, hi):
        try:
            return np.linalg.svd(stack[lo:hi], full_matrices=full_matrices, compute_uv=compute_uv)
        except np.linalg.LinAlgError as exc:
            for i in range(lo, hi):
                try:
                    np.linalg.svd(stack[i], compute_uv=False)
                except np.linalg.LinAlgError:
                    raise SliceSvdError(i + offset, exc) from exc
            raise SliceSvdError(lo + offset, exc) from exc

    n = stack.shape[0]
    threads = max(1, int(threads or 1))
    if threads == 1 or n < 2:
        return run(0, n)
    bounds = np.linspace(0, n, min(threads, n) + 1).astype(int)
    with ThreadPoolExecutor(max_workers=len(bounds) - 1) as pool:
        parts = list(pool.map(run, bounds[:-1], bounds[1:]))
    if compute_uv:
        return tuple(np.concatenate([p[i] for p in parts]) for i in range(3))
    return np.concatenate(parts)


def slice_svd(t, compute_uv=True, full_matrices=False, symmetric=True, threads=1):
    """SVD of every Fourier-domain frontal slice of a real third-order tensor.

    Returns stacks indexed by Fourier slice first: ``(U, s, Vh)`` with shapes
    ``(J3, J1, k)``, ``(J3, k)``, ``(J3, k, J2)`` (``k = min(J1, J2)`` unless
    ``full_matrices``), or just ``s`` when ``compute_uv`` is false.  With
    ``symmetric`` only the first ``J3//2 + 1`` slices are decomposed and the
    rest are mirrored by conjugation.
    """
    t = np.asarray(t)
    _check3(t)
    if np.iscomplexobj(t):
        symmetric = False
    n3 = t.shape[2]
    f = _fourier_slices(t, symmetric)
    res = _batched_svd(f, compute_uv, full_matrices, threads)
    if not symmetric:
        return res
    h = half_slices(n3)
    idx = np.r_[np.arange(h), np.arange(n3 - h, 0, -1)] if n3 > 1 else np.arange(1)
    if not compute_uv:
        return res[idx]
    out = []
    for part in res:
        full = part[idx]
        if n3 > 1:
            full[h:] = np.conj(full[h:])
        out.append(full)
    return tuple(out)


def t_svd(t, symmetric=True, threads=1):
    """Full t-SVD ``t = U * S * V^H`` with descending singular tubes."""
    t = np.asarray(t, dtype=float)
    _check3(t)
    n1, n2, n3 = t.shape
    U, s, Vh = slice_svd(t, full_matrices=True, symmetric=symmetric, threads=threads)
    k = min(n1, n2)
    S = np.zeros((n3, n1, n2))
    S[:, np.arange(k), np.arange(k)] = s
    V = np.conj(np.swapaxes(Vh, 1, 2))
    return TSvdFactors(
        U=idft3(np.moveaxis(U, 0, 2)),
        S=idft3(np.moveaxis(S, 0, 2)),
        V=idft3(np.moveaxis(V, 0, 2)),
    )


def tubal_rank(t, rel_tol=1e-10):
    """Number of singular tubes whose largest Fourier-domain value exceeds
    ``rel_tol`` times the overall largest singular value."""
    s = slice_svd(np.asarray(t, dtype=float), compute_uv=False)
    if s.size == 0:
        return 0
    top = s.max()
    if top == 0:
        return 0
    return int(np.count_nonzero(s.max(axis=0) > rel_tol * top))


def tnn(t):
    """Tensor nuclear norm ``(1/J3) sum_j ||fft slice j||_*``."""
    t = np.asarray(t, dtype=float)
    s = slice_svd(t, compute_uv=False)
    return float(s.sum() / t.shape[2])


def n_tubal_rank(t, rel_tol=1e-10):
    """Tubal ranks of all mode-q unfoldings, ordered by q."""
    t = np.asarray(t)
    return np.array(
        [tubal_rank(unfold_q(t, q), rel_tol) for q in range(1, num_mode_pairs(t.ndim) + 1)],
        dtype=int,
    )

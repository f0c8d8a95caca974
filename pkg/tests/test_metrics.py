import math

import numpy as np
import pytest

from mpcp.metrics import as_slices, ergas, psnr, sampling_rate, ssim, tensor_psnr, tensor_ssim


# -- duplicate-formula oracles (plain loops, no numpy reductions) ------------


def psnr_loop(a, b):
    n1, n2 = a.shape
    s = 0.0
    for i in range(n1):
        for j in range(n2):
            s += (float(a[i, j]) - float(b[i, j])) ** 2
    return 10 * math.log10(255.0**2 * n1 * n2 / s)


def ssim_loop(a, b):
    xs = [float(v) for v in a.ravel()]
    ys = [float(v) for v in b.ravel()]
    n = len(xs)
    mx, my = sum(xs) / n, sum(ys) / n
    vx = sum((x - mx) ** 2 for x in xs) / n
    vy = sum((y - my) ** 2 for y in ys) / n
    cxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys)) / n
    c1, c2 = (0.01 * 255) ** 2, (0.03 * 255) ** 2
    return (2 * mx * my + c1) * (2 * cxy + c2) / ((mx**2 + my**2 + c1) * (vx + vy + c2))


def ergas_loop(a, b):
    acc = 0.0
    for k in range(a.shape[2]):
        x, y = a[:, :, k].ravel(), b[:, :, k].ravel()
        mse = sum((float(u) - float(v)) ** 2 for u, v in zip(x, y)) / x.size
        mean = sum(float(u) for u in x) / x.size
        acc += mse / mean**2
    return 100 * math.sqrt(acc / a.shape[2])


def mri_like(rng, shape=(24, 20, 5)):
    yy, xx = np.mgrid[: shape[0], : shape[1]]
    r = np.hypot(yy - shape[0] / 2, xx - shape[1] / 2)
    base = np.clip(200 - 9 * r, 0, 255)
    stack = np.stack([base * (0.7 + 0.06 * k) for k in range(shape[2])], axis=2)
    return stack + 20 + rng.uniform(0, 15, size=shape)


# -- psnr ----------------------------------------------------------------------


def test_psnr_identical_is_inf():
    a = np.full((4, 4), 10.0)
    assert psnr(a, a) == math.inf


def test_psnr_unit_mse():
    a = np.full((7, 9), 255.0)
    assert psnr(a, a - 1) == pytest.approx(20 * math.log10(255), abs=1e-12)
    assert round(psnr(a, a - 1), 4) == 48.1308


def test_psnr_matches_oracle(rng):
    for _ in range(10):
        a, b = rng.uniform(0, 255, (6, 8)), rng.uniform(0, 255, (6, 8))
        assert abs(psnr(a, b) - psnr_loop(a, b)) <= 1e-10


def test_psnr_decreases_with_noise_amplitude(rng):
    a = rng.uniform(0, 255, (16, 16))
    noise = rng.uniform(-1, 1, a.shape)
    vals = [psnr(a, a + amp * noise) for amp in (0.5, 1, 2, 4, 8, 16)]
    assert all(x > y for x, y in zip(vals, vals[1:]))


def test_psnr_shape_mismatch():
    with pytest.raises(ValueError):
        psnr(np.zeros((2, 3)), np.zeros((3, 2)))
    with pytest.raises(ValueError):
        psnr(np.zeros((2, 3, 1)), np.zeros((2, 3, 1)))


# -- ssim ----------------------------------------------------------------------


def test_ssim_identical_is_one(rng):
    a = rng.uniform(0, 255, (9, 7))
    assert ssim(a, a) == 1.0


def test_ssim_constant_shift(rng):
    a = rng.uniform(0, 255, (10, 10))
    c = 30.0
    mx, vx = a.mean(), a.var()
    lum = (2 * mx * (mx + c) + (2.55) ** 2) / (mx**2 + (mx + c) ** 2 + 2.55**2)
    struct = (2 * vx + 7.65**2) / (2 * vx + 7.65**2)
    assert struct == 1.0
    assert lum < 1
    assert ssim(a, a + c) == pytest.approx(lum, rel=1e-12)


def test_ssim_anticorrelated_is_negative(rng):
    a = rng.uniform(0, 255, (10, 10))
    b = 2 * a.mean() - a  # same mean, mirrored about it
    assert ssim(a, b) < 0
    assert ssim(a, b) == pytest.approx(ssim_loop(a, b), abs=1e-12)


def test_ssim_matches_oracle_and_is_symmetric(rng):
    for _ in range(10):
        a, b = rng.uniform(0, 255, (5, 6)), rng.uniform(0, 255, (5, 6))
        assert abs(ssim(a, b) - ssim_loop(a, b)) <= 1e-10
        assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-15)


# -- ergas ---------------------------------------------------------------------


def test_ergas_identical_is_zero(rng):
    a = rng.uniform(1, 255, (4, 5, 3))
    assert ergas(a, a) == 0.0


def test_ergas_worked_example():
    a = np.full((3, 3, 1), 100.0)
    b = np.full((3, 3, 1), 90.0)
    assert ergas(a, b) == pytest.approx(10.0, abs=1e-12)


def test_ergas_matches_oracle(rng):
    a, b = rng.uniform(1, 255, (5, 4, 3)), rng.uniform(1, 255, (5, 4, 3))
    assert abs(ergas(a, b) - ergas_loop(a, b)) <= 1e-10


def test_ergas_scale_invariant(rng):
    a = rng.uniform(1, 255, (5, 4, 3))
    d = rng.standard_normal(a.shape)
    for lam in (0.01, 3.0, 250.0):
        assert ergas(lam * a, lam * (a + d)) == pytest.approx(ergas(a, a + d), rel=1e-12)


def test_ergas_zero_mean_slice():
    a = np.ones((2, 2, 2))
    a[:, :, 1] = [[1, -1], [-1, 1]]
    with pytest.raises(ZeroDivisionError):
        ergas(a, a)


# -- stacks --------------------------------------------------------------------


def test_two_slice_average(rng):
    a, b = rng.uniform(0, 255, (6, 6, 2)), rng.uniform(0, 255, (6, 6, 2))
    m = [psnr(a[:, :, k], b[:, :, k]) for k in range(2)]
    s = [ssim(a[:, :, k], b[:, :, k]) for k in range(2)]
    assert tensor_psnr(a, b) == pytest.approx((m[0] + m[1]) / 2, rel=1e-14)
    assert tensor_ssim(a, b) == pytest.approx((s[0] + s[1]) / 2, rel=1e-14)


def test_identical_stacks(rng):
    a = rng.uniform(0, 255, (5, 5, 3))
    assert tensor_psnr(a, a) == math.inf
    assert tensor_ssim(a, a) == 1.0


def test_mri_like_stack_matches_oracle(rng):
    ref = mri_like(rng)
    test = ref + rng.normal(0, 6, ref.shape)
    n3 = ref.shape[2]
    want_p = sum(psnr_loop(ref[:, :, k], test[:, :, k]) for k in range(n3)) / n3
    want_s = sum(ssim_loop(ref[:, :, k], test[:, :, k]) for k in range(n3)) / n3
    assert abs(tensor_psnr(ref, test) - want_p) <= 1e-10
    assert abs(tensor_ssim(ref, test) - want_s) <= 1e-10
    assert abs(ergas(ref, test) - ergas_loop(ref, test)) <= 1e-10


def test_higher_order_flattening(rng):
    t = rng.uniform(0, 255, (3, 4, 2, 3))
    s = as_slices(t)
    assert s.shape == (3, 4, 6)
    assert np.array_equal(s[:, :, 1 + 2 * 2], t[:, :, 1, 2])
    u = rng.uniform(0, 255, t.shape)
    assert tensor_psnr(t, u) == pytest.approx(tensor_psnr(s, as_slices(u)), rel=1e-15)


def test_sampling_rate():
    assert sampling_rate(np.array([1, 0, 0, 1, 1], dtype=np.uint8)) == 0.6

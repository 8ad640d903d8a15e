"""Hot loops: Hadamard butterflies and the per-scale trilinear sum.

Both kernels have a numba @njit build and a pure-numpy build.  Set
WALSHLAB_NO_NUMBA=1 before import to force the numpy path; USING_NUMBA
records which one is active.  Outputs of the two paths agree to the last
bit for the butterfly and to reduction-order rounding for the sum.
"""

from __future__ import annotations

import os
from functools import lru_cache

import numpy as np

_want_numba = not os.environ.get("WALSHLAB_NO_NUMBA")
if _want_numba:
    try:
        from numba import njit
    except ImportError:
        _want_numba = False

USING_NUMBA = _want_numba


@lru_cache(maxsize=None)
def bit_reversal(resolution: int) -> np.ndarray:
    """Permutation reversing the low `resolution` bits of each index."""
    n = 1 << resolution
    rev = np.zeros(n, dtype=np.int64)
    for i in range(n):
        r = 0
        v = i
        for _ in range(resolution):
            r = (r << 1) | (v & 1)
            v >>= 1
        rev[i] = r
    return rev


def _wht_rows_numpy(a: np.ndarray) -> None:
    rows, n = a.shape
    h = 1
    while h < n:
        v = a.reshape(rows, n // (2 * h), 2, h)
        x = v[:, :, 0, :] + v[:, :, 1, :]
        y = v[:, :, 0, :] - v[:, :, 1, :]
        v[:, :, 0, :] = x
        v[:, :, 1, :] = y
        h *= 2


def _triform_scale_numpy(F0, F1, F2, epsk, shift) -> float:
    n = F0.shape[0]
    block = 1 << shift
    idx = np.arange(n)
    weight = np.kron(epsk, np.ones((block, block)))
    F1T = np.ascontiguousarray(F1.T)  # F1T[i0, i2] = F1[i2, i0]
    parts = []
    for s in range(block):
        sign = -1.0 if (s >> (shift - 1)) & 1 else 1.0
        i1 = idx[:, None] ^ idx[None, :] ^ s  # [i0, i2]
        term = F0[i1, idx[None, :]] * F1T * F2[idx[:, None], i1]
        parts.append(sign * float((term * weight).sum()))
    return float(np.sum(parts))


if USING_NUMBA:

    @njit(cache=True)
    def _wht_rows_nb(a):  # pragma: no cover - exercised via wht_rows
        rows, n = a.shape
        for r in range(rows):
            h = 1
            while h < n:
                i = 0
                while i < n:
                    for j in range(i, i + h):
                        x = a[r, j]
                        y = a[r, j + h]
                        a[r, j] = x + y
                        a[r, j + h] = x - y
                    i += 2 * h
                h *= 2

    @njit(cache=True)
    def _triform_scale_nb(F0, F1, F2, epsk, shift):  # pragma: no cover
        n = F0.shape[0]
        block = 1 << shift
        total = 0.0
        comp = 0.0  # Kahan compensation: ~1e6 unit-size terms per call
        for i0 in range(n):
            m0 = i0 >> shift
            for i2 in range(n):
                e = epsk[m0, i2 >> shift]
                if e == 0.0:
                    continue
                f1 = F1[i2, i0]
                if f1 == 0.0:
                    continue
                base = i0 ^ i2
                for s in range(block):
                    i1 = base ^ s
                    t = e * f1 * F0[i1, i2] * F2[i0, i1]
                    if (s >> (shift - 1)) & 1:
                        t = -t
                    y = t - comp
                    u = total + y
                    comp = (u - total) - y
                    total = u
        return total


def wht_rows(a: np.ndarray) -> None:
    """In-place Hadamard butterfly along the last axis of a (rows, n) array."""
    if USING_NUMBA:
        _wht_rows_nb(a)
    else:
        _wht_rows_numpy(a)


def triform_scale_sum(F0, F1, F2, epsk, shift) -> float:
    """Sum over cells i0, i2 and offsets s < 2^shift of the signed product

        eps[i0 >> shift, i2 >> shift] * r(s) * F0[i1,i2] F1[i2,i0] F2[i0,i1]

    with i1 = i0 ^ i2 ^ s and r(s) the Haar sign of the offset (bit
    shift-1).  The caller applies the scale weight and the grid measure.
    """
    if USING_NUMBA:
        return float(_triform_scale_nb(F0, F1, F2, epsk, shift))
    return _triform_scale_numpy(F0, F1, F2, epsk, shift)

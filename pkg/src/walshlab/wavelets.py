"""Haar functions, Walsh characters, wave packets, and their projections.

Grid frequencies are integers N in [0, 2^K); the character with frequency
N has cell values (-1)^popcount(bitrev_K(N) & i).  A wave packet on a
time interval I carries the character of the left endpoint of its
frequency interval, scaled |I|^(-1/2); packets of area one over a fixed
time interval are an orthonormal family, which is what the fast transform
diagonalizes blockwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import bit_reversal, wht_rows
from .gridfn import GridFunction1D, _interval_slice
from .walsh import DyadicInterval, WalshNumber, coset_membership


def haar(interval: DyadicInterval, resolution: int) -> GridFunction1D:
    """L-infinity normalized Haar function: +1 left half, -1 right half."""
    if interval.scale - 1 < -resolution:
        raise ValueError("interval below resolution")
    f = GridFunction1D.zeros(resolution)
    f.values[_interval_slice(interval.half(1), resolution)] = 1.0
    f.values[_interval_slice(interval.half(-1), resolution)] = -1.0
    return f


def walsh_fn(frequency: int, resolution: int) -> GridFunction1D:
    """Character with integer frequency index in [0, 2^K)."""
    if not 0 <= frequency < (1 << resolution):
        raise ValueError("frequency beyond resolution")
    rev = bit_reversal(resolution)
    idx = np.arange(1 << resolution, dtype=np.int64)
    bits = np.bitwise_count(np.bitwise_and(int(rev[frequency]), idx)) & 1
    return GridFunction1D(resolution, 1.0 - 2.0 * bits)


@dataclass(frozen=True)
class WavePacketSpec:
    """Time-frequency rectangle I x omega, both factors dyadic."""

    time: DyadicInterval
    freq: DyadicInterval

    @property
    def area_log2(self) -> int:
        return self.time.scale + self.freq.scale

    @property
    def area(self) -> float:
        return 2.0 ** self.area_log2


def _check_time(time: DyadicInterval, resolution: int):
    if time.scale < -resolution:
        raise ValueError("interval below resolution")
    if not DyadicInterval(0, 0).contains(time):
        raise ValueError("time interval not contained in [0, 1)")


def _check_freq(freq: DyadicInterval, resolution: int):
    if freq.scale < 0:
        raise ValueError("frequency interval below unit scale")
    if (freq.index + 1) << freq.scale > 1 << resolution:
        raise ValueError("frequency beyond resolution")


def wave_packet(spec: WavePacketSpec, resolution: int) -> GridFunction1D:
    """|I|^(-1/2) 1_I times the character of the left frequency endpoint."""
    _check_time(spec.time, resolution)
    _check_freq(spec.freq, resolution)
    phase = walsh_fn(spec.freq.index << spec.freq.scale, resolution)
    out = GridFunction1D.zeros(resolution)
    sl = _interval_slice(spec.time, resolution)
    out.values[sl] = phase.values[sl] * 2.0 ** (-spec.time.scale / 2.0)
    return out


# -- fast transform ----------------------------------------------------------
#
# Analysis maps cell values to the 2^K coefficients <f, w_N>; synthesis is
# the unscaled inverse.  Applying analysis twice returns 2^-K times the
# input (the permuted Hadamard matrix squares to 2^K times the identity).


def coefficient_rows(values: np.ndarray, resolution: int) -> np.ndarray:
    """Batched analysis along the last axis of a (rows, 2^K) array."""
    rev = bit_reversal(resolution)
    out = np.ascontiguousarray(values[..., rev], dtype=np.float64)
    flat = out.reshape(-1, out.shape[-1])
    wht_rows(flat)
    out *= 2.0 ** (-resolution)
    return out


def synthesis_rows(coeffs: np.ndarray, resolution: int) -> np.ndarray:
    rev = bit_reversal(resolution)
    out = np.ascontiguousarray(coeffs[..., rev], dtype=np.float64)
    flat = out.reshape(-1, out.shape[-1])
    wht_rows(flat)
    return out


def fwht(f: GridFunction1D) -> GridFunction1D:
    """Coefficient sequence N -> <f, w_N> as a grid function."""
    return GridFunction1D(
        f.resolution, coefficient_rows(f.values[None, :], f.resolution)[0]
    )


def fwht_synthesis(coeffs: GridFunction1D) -> GridFunction1D:
    return GridFunction1D(
        coeffs.resolution, synthesis_rows(coeffs.values[None, :], coeffs.resolution)[0]
    )


# -- blockwise projections ---------------------------------------------------


def _block_project_rows(
    rows: np.ndarray, sl: slice, mask: np.ndarray, block_resolution: int
) -> np.ndarray:
    """Project each row onto span{area-1 packets over the block} in mask.

    `rows` is (count, 2^K); the block slice has length 2^block_resolution.
    Phases of the left endpoint cancel between analysis and synthesis, so
    the masked local transform needs no global phase bookkeeping.
    """
    out = np.zeros_like(rows, dtype=np.float64)
    local = coefficient_rows(rows[:, sl], block_resolution)
    local[:, ~mask] = 0.0
    out[:, sl] = synthesis_rows(local, block_resolution)
    return out


def _local_cells(time: DyadicInterval, freq: DyadicInterval, resolution: int):
    """Slice and dual-cell index range of the rectangle time x freq."""
    span = freq.scale + time.scale  # log2 of the area
    if span < 0:
        raise ValueError("tile area must be at least 1")
    lo = freq.index << span
    return _interval_slice(time, resolution), lo, lo + (1 << span)


def project_tile_1d(
    f: GridFunction1D,
    time: DyadicInterval,
    freq: DyadicInterval,
    oracle: bool = False,
) -> GridFunction1D:
    """Orthogonal projection onto the packets of the rectangle time x freq.

    The rectangle must have area at least one; it decomposes into area-1
    tiles over the full time interval, one per frequency cell of width
    1/|I|.  `oracle=True` evaluates the defining sum of rank-one terms
    packet-by-packet instead of the masked block transform.
    """
    K = f.resolution
    _check_time(time, K)
    _check_freq(freq, K)
    sl, lo, hi = _local_cells(time, freq, K)
    bk = K + time.scale
    if oracle:
        out = GridFunction1D.zeros(K)
        for nu in range(lo, hi):
            w = wave_packet(
                WavePacketSpec(time, DyadicInterval(-time.scale, nu)), K
            )
            out = out + f.inner(w) * w
        return out
    mask = np.zeros(1 << bk, dtype=bool)
    mask[lo:hi] = True
    return GridFunction1D(K, _block_project_rows(f.values[None, :], sl, mask, bk)[0])


def project_region_1d(
    f: GridFunction1D,
    time: DyadicInterval,
    multiplier: WalshNumber,
    freq: DyadicInterval,
) -> GridFunction1D:
    """Projection onto the frequency cells meeting the image of freq.

    Keeps the dual cells nu of the time interval whose representative
    nu/|I| lies in multiplier (*) freq at grid granularity; multiplier = 1
    reduces to project_tile_1d.
    """
    K = f.resolution
    _check_time(time, K)
    _check_freq(freq, K)
    bk = K + time.scale
    mask = np.zeros(1 << bk, dtype=bool)
    for nu in range(1 << bk):
        xi = WalshNumber(nu, time.scale)  # representative nu / |I|
        if coset_membership(xi, multiplier, freq, granularity=-K):
            mask[nu] = True
    sl = _interval_slice(time, K)
    return GridFunction1D(K, _block_project_rows(f.values[None, :], sl, mask, bk)[0])

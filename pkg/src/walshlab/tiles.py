"""Tiles, bitiles, their partial order, tilings, and slot projections.

A tile of scale k <= 0 occupies a triple of spatial intervals of length
2^k (the middle one determined by XOR of the outer indices) and one
frequency interval of length 2^-k, so each spatial/frequency pair has
area one.  A bitile doubles the frequency side; its two half-tiles split
that interval, j = +1 taking the lower half.

Slot projections act on one argument slot of a trilinear form: slots 0
and 2 project a fiber onto the wave packet of the tile, slot 1 localizes
the data fiber in frequency according to the mode (a fixed carry-less
multiplier, or a per-fiber frequency label).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .gridfn import GridFunction2D, _interval_slice
from .walsh import DyadicInterval, WalshNumber, _clmul
from .wavelets import coefficient_rows, synthesis_rows


@dataclass(frozen=True)
class Tile:
    scale: int
    m0: int
    m2: int
    n: int

    def __post_init__(self):
        if self.scale > 0:
            raise ValueError("tile scale must be nonpositive")
        if min(self.m0, self.m2, self.n) < 0:
            raise ValueError("negative tile index")

    @property
    def m1(self) -> int:
        return self.m0 ^ self.m2

    def time_interval(self, i: int) -> DyadicInterval:
        return DyadicInterval(self.scale, (self.m0, self.m1, self.m2)[i])

    @property
    def freq(self) -> DyadicInterval:
        return DyadicInterval(-self.scale, self.n)

    def is_localized(self) -> bool:
        return max(self.m0, self.m2) < 1 << -self.scale


@dataclass(frozen=True)
class Bitile:
    scale: int
    m0: int
    m2: int
    n: int

    def __post_init__(self):
        if self.scale > 0:
            raise ValueError("bitile scale must be nonpositive")
        if min(self.m0, self.m2, self.n) < 0:
            raise ValueError("negative bitile index")

    @property
    def m1(self) -> int:
        return self.m0 ^ self.m2

    def time_interval(self, i: int) -> DyadicInterval:
        return DyadicInterval(self.scale, (self.m0, self.m1, self.m2)[i])

    @property
    def freq(self) -> DyadicInterval:
        return DyadicInterval(1 - self.scale, self.n)

    def half(self, j: int) -> Tile:
        """Half-tile with the lower (j=+1) or upper (j=-1) frequency half."""
        if j not in (1, -1):
            raise ValueError("half index must be +1 or -1")
        return Tile(self.scale, self.m0, self.m2, 2 * self.n + (0 if j == 1 else 1))

    def is_localized(self) -> bool:
        return max(self.m0, self.m2) < 1 << -self.scale


TileLike = Union[Tile, Bitile]


def le(p: TileLike, q: TileLike) -> bool:
    """Order: every spatial interval nests upward, frequency downward."""
    return (
        all(q.time_interval(i).contains(p.time_interval(i)) for i in (0, 1, 2))
        and p.freq.contains(q.freq)
    )


def comparable(p: TileLike, q: TileLike) -> bool:
    return le(p, q) or le(q, p)


def all_bitiles(resolution: int) -> list[Bitile]:
    """Every localized bitile representable at the resolution."""
    if resolution < 2:
        raise ValueError("resolution too small for bitiles")
    out = []
    for k in range(-resolution + 1, 1):
        for m0 in range(1 << -k):
            for m2 in range(1 << -k):
                for n in range(1 << (resolution + k - 1)):
                    out.append(Bitile(k, m0, m2, n))
    return out


def is_convex(bitiles: Iterable[Bitile]) -> bool:
    """Closed under the unique intermediates of every comparable pair."""
    coll = set(bitiles)
    for p in coll:
        for q in coll:
            if p.scale >= q.scale or not le(p, q):
                continue
            for mid in range(p.scale + 1, q.scale):
                d = mid - p.scale
                inter = Bitile(
                    mid, p.m0 >> d, p.m2 >> d, q.n >> (q.scale - mid)
                )
                if inter not in coll:
                    return False
    return True


def down_set(bitiles: Iterable[Bitile], top: Bitile) -> set[Bitile]:
    return {p for p in bitiles if le(p, top)}


def disjoint_tiling(bitiles: Sequence[Bitile]) -> list[Tile]:
    """Pairwise disjoint tiles covering the half-tiles of a convex set.

    Bitiles are visited in increasing frequency length (coarsest spatial
    scale first); each half-tile is added unless its cells are already
    covered.  Convexity makes coverage all-or-nothing, which is asserted
    on a cell-level occupancy array (spatial atoms at the finest scale
    present, unit frequency atoms).
    """
    coll = list(bitiles)
    if not coll:
        return []
    if not is_convex(coll):
        raise ValueError("collection is not convex")
    return _tiling_inner(coll, min(p.scale for p in coll))


def _tiling_inner(coll: list[Bitile], kmin: int) -> list[Tile]:
    atoms = 1 << -kmin  # spatial atoms per axis at the finest scale
    fmax = max((p.n + 1) << (1 - p.scale) for p in coll)
    covered = np.zeros((atoms, atoms, fmax), dtype=bool)
    order = sorted(coll, key=lambda p: (-p.scale, p.m0, p.m2, p.n))
    out: list[Tile] = []
    for p in order:
        d = p.scale - kmin  # widen spatial indices to atom scale
        s0 = slice(p.m0 << d, (p.m0 + 1) << d)
        s2 = slice(p.m2 << d, (p.m2 + 1) << d)
        for j in (1, -1):
            t = p.half(j)
            sf = slice(t.n << -t.scale, (t.n + 1) << -t.scale)
            cells = covered[s0, s2, sf]
            if cells.all():
                continue
            if cells.any():
                raise ValueError("collection is not convex")
            covered[s0, s2, sf] = True
            out.append(t)
    return out


# -- structured slot-0 data --------------------------------------------------


def diagonal_data(f, a: WalshNumber):
    """Slot-0 data F(x1, x2) = f(x2 ^ (a (*) x1)) on the grid.

    Cell representatives are multiplied exactly; images beyond [0, 1)
    fall outside the support of f and give zero.
    """
    from .gridfn import GridFunction1D

    if a.is_zero():
        raise ValueError("degenerate multiplier")
    if not isinstance(f, GridFunction1D):
        raise TypeError("slot-0 profile must be a 1D grid function")
    K = f.resolution
    n = 1 << K
    vals = np.empty((n, n))
    for i1 in range(n):
        img = _clmul(a.mantissa, i1)  # a (*) (i1 2^-K) scaled by 2^(K+shift)
        cell = img >> a.shift if a.shift >= 0 else img << -a.shift
        if cell < n:
            vals[i1, :] = f.values[np.arange(n) ^ cell]
        else:
            vals[i1, :] = 0.0
    return GridFunction2D(K, vals)


def fiberwise_data(f, labels):
    """Slot-0 data F(x1, x2) = f(x2) w_{N(x2)}(x1)."""
    from .gridfn import GridFunction1D
    from .wavelets import walsh_fn

    if not isinstance(f, GridFunction1D):
        raise TypeError("slot-0 profile must be a 1D grid function")
    K = f.resolution
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != f.values.shape:
        raise ValueError("fiberwise labels must give one frequency per cell")
    cols = np.stack([walsh_fn(int(nu), K).values for nu in labels], axis=1)
    return GridFunction2D(K, cols * f.values[None, :])


# -- slot projections --------------------------------------------------------


@dataclass(frozen=True)
class ProjectionMode:
    """Structure of the slot-0 data that slot 1 must respect.

    kind "diagonal": slot-0 data is a one-variable function of
    x2 ^ (a (*) x1); slot 1 then localizes the x2-frequency to the cells
    whose image under a lands in the tile frequency.  kind "fiberwise":
    slot-0 data oscillates with a per-fiber frequency label N[x2]; slot 1
    keeps the fibers whose label lies in the tile frequency.
    """

    kind: str
    multiplier: WalshNumber | None = None
    labels: tuple | None = None

    @classmethod
    def diagonal(cls, a: WalshNumber) -> "ProjectionMode":
        if a.is_zero():
            raise ValueError("degenerate multiplier")
        return cls("diagonal", multiplier=a)

    @classmethod
    def fiberwise(cls, labels) -> "ProjectionMode":
        return cls("fiberwise", labels=tuple(int(v) for v in labels))


def _diag_image_cell(a: WalshNumber, nu: int, scale: int, resolution: int) -> int:
    """Dual cell at the tile scale of the image of cell nu under a.

    Image frequencies are truncated to the grid (integer part mod 2^K),
    then grouped back into cells of width 2^-scale; the grouping is exact
    because a (*) (offset below the cell) never reaches the cell bits.
    """
    point = nu << -scale  # representative nu * 2^-k as an integer
    prod = _clmul(a.mantissa, point)
    ipart = prod >> a.shift if a.shift >= 0 else prod << -a.shift
    return (ipart & ((1 << resolution) - 1)) >> -scale


def diagonal_region(
    tile: Tile, a: WalshNumber, resolution: int
) -> np.ndarray:
    """Boolean mask over the dual cells of I2 kept by the slot-1 projection."""
    count = 1 << (resolution + tile.scale)
    mask = np.zeros(count, dtype=bool)
    for nu in range(count):
        mask[nu] = _diag_image_cell(a, nu, tile.scale, resolution) == tile.n
    return mask


def _project_rows(rows: np.ndarray, bk: int, mask: np.ndarray) -> np.ndarray:
    c = coefficient_rows(rows, bk)
    c[:, ~mask] = 0.0
    return synthesis_rows(c, bk)


def proj_tile(
    tile: Tile, slot: int, F: GridFunction2D, mode: ProjectionMode | None = None
) -> GridFunction2D:
    """Projection of one argument slot onto the tile.

    Slot 0 acts on data F(x1, x2), slot 1 on F(x2, x0), slot 2 on
    F(x0, x1); the output vanishes outside the tile's spatial box.
    """
    K = F.resolution
    if tile.scale < -K:
        raise ValueError("interval below resolution")
    if (tile.n + 1) << -tile.scale > 1 << K:
        raise ValueError("frequency beyond resolution")
    if not tile.is_localized():
        raise ValueError("tile not localized in the unit cube")
    bk = K + tile.scale
    out = GridFunction2D.zeros(K)
    if slot == 0:
        sl1 = _interval_slice(tile.time_interval(1), K)
        sl2 = _interval_slice(tile.time_interval(2), K)
        mask = np.zeros(1 << bk, dtype=bool)
        mask[tile.n] = True
        out.values[sl1, sl2] = _project_rows(F.values[sl1, sl2].T, bk, mask).T
        return out
    if slot == 2:
        sl0 = _interval_slice(tile.time_interval(0), K)
        sl1 = _interval_slice(tile.time_interval(1), K)
        mask = np.zeros(1 << bk, dtype=bool)
        mask[tile.n] = True
        out.values[sl0, sl1] = _project_rows(F.values[sl0, sl1], bk, mask)
        return out
    if slot != 1:
        raise ValueError("slot must be 0, 1, or 2")
    if mode is None:
        raise ValueError("slot 1 requires a projection mode")
    sl2 = _interval_slice(tile.time_interval(2), K)
    sl0 = _interval_slice(tile.time_interval(0), K)
    if mode.kind == "fiberwise":
        labels = np.asarray(mode.labels)
        if labels.shape != (1 << K,):
            raise ValueError("fiberwise labels must give one frequency per cell")
        lo = tile.n << -tile.scale
        hi = (tile.n + 1) << -tile.scale
        keep = (labels[sl2] >= lo) & (labels[sl2] < hi)
        out.values[sl2, sl0] = F.values[sl2, sl0] * keep[:, None]
        return out
    mask = diagonal_region(tile, mode.multiplier, K)
    out.values[sl2, sl0] = _project_rows(F.values[sl2, sl0].T, bk, mask).T
    return out


def proj_bitile(
    bitile: Bitile, slot: int, F: GridFunction2D, mode: ProjectionMode | None = None
) -> GridFunction2D:
    """Sum of the two half-tile projections (the vertical tiling)."""
    return proj_tile(bitile.half(1), slot, F, mode) + proj_tile(
        bitile.half(-1), slot, F, mode
    )


def proj_collection(
    bitiles: Sequence[Bitile],
    slot: int,
    F: GridFunction2D,
    mode: ProjectionMode | None = None,
) -> GridFunction2D:
    """Projection onto a convex collection via its disjoint tiling."""
    out = GridFunction2D.zeros(F.resolution)
    for t in disjoint_tiling(bitiles):
        out = out + proj_tile(t, slot, F, mode)
    return out

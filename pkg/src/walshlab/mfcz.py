"""Exceptional sets and the good-function replacement for restricted-type input.

Given three cell sets, the large values of a plain maximal function (slot
0) and a directional maximal function (slot 2) carve out exceptional
regions; pulling their union back through the diagonal x0 ^ x1 ^ x2 = 0
gives the region to delete from the middle set.  Over a forest of trees,
the slot-2 function restricted to the directional region can be replaced
by a sum of one-dimensional wave-packet projections, one packet per
maximal interval of the region and per coarse enough tree frequency.
The replacement leaves every bitile coefficient of the form unchanged
whenever the deletion has been performed, and its L2 norm is controlled
by the counting function of the forest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .gridfn import GridFunction1D, GridFunction2D
from .maximal import directional_maximal, dyadic_maximal_2d, level_set
from .tiles import Bitile, all_bitiles
from .triform import lambda_bitile
from .walsh import DyadicInterval
from .wavelets import project_tile_1d


def _require_cell_set(e: GridFunction2D, name: str) -> np.ndarray:
    v = e.values
    if not np.all((v == 0.0) | (v == 1.0)):
        raise ValueError(f"{name} must be a 0/1 indicator")
    return v > 0.5


@dataclass(frozen=True)
class ExceptionalSets:
    """Indicator functions of the deleted regions and the trimmed middle set.

    First and third regions live in the argument planes of the slot-0 and
    slot-2 functions; the middle region and the trimmed set live in the
    slot-1 plane (second variable, first variable of the form).
    """

    b0: GridFunction2D
    b2: GridFunction2D
    b1: GridFunction2D
    e1_prime: GridFunction2D
    b1_measure: float


def exceptional_sets(
    e0: GridFunction2D,
    e1: GridFunction2D,
    e2: GridFunction2D,
    p0: float = 4.0,
    p2: float = 4.0 / 3.0,
    threshold: float = 2.0 ** 10,
) -> ExceptionalSets:
    """Superlevel sets of the two maximal functions, pulled onto slot 1.

    The slot-0 set uses the dyadic-square maximal function of the
    measure-normalized indicator, the slot-2 set the directional maximal
    in the second argument.  A slot-1 cell is deleted when the diagonal
    point over it lands in either region; the middle set keeps the rest.
    The threshold is a parameter so that small grids, where the default
    2^10 puts every normalized average below it, still produce nonempty
    regions.
    """
    K = e0.resolution
    if e1.resolution != K or e2.resolution != K:
        raise ValueError("cell sets must share one resolution")
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    m0 = _require_cell_set(e0, "e0")
    m2 = _require_cell_set(e2, "e2")
    _require_cell_set(e1, "e1")

    def superlevel(mask, weight, maximal):
        if not mask.any():
            return GridFunction2D.zeros(K)
        return level_set(maximal(GridFunction2D(K, mask * weight)), threshold)

    meas0 = m0.mean()
    meas2 = m2.mean()
    b0 = superlevel(
        m0,
        meas0 ** (-1.0 / p0) if meas0 else 0.0,
        lambda f: dyadic_maximal_2d(f, p=p0),
    )
    b2 = superlevel(
        m2,
        meas2 ** (-1.0 / p2) if meas2 else 0.0,
        lambda f: directional_maximal(f, axis=1, p=p2),
    )

    # A diagonal point (x0, x0 ^ x2, x2) sits over the slot-1 cell
    # (x2, x0); membership in either lifted region is read off cellwise
    # because XOR acts on cells.
    idx = np.arange(1 << K)
    i2 = idx[:, None]
    i0 = idx[None, :]
    i1 = i0 ^ i2
    b1_vals = ((b0.values[i1, i2] > 0.5) | (b2.values[i0, i1] > 0.5)).astype(
        np.float64
    )
    b1 = GridFunction2D(K, b1_vals)
    e1_prime = GridFunction2D(K, e1.values * (1.0 - b1_vals))
    return ExceptionalSets(b0, b2, b1, e1_prime, b1.integral())


def maximal_dyadic_intervals(cells: np.ndarray) -> List[DyadicInterval]:
    """Maximal dyadic intervals inside a 1D cell set, left to right.

    The result is a disjoint family covering the set exactly; an interval
    appears only if its dyadic parent is not fully contained.
    """
    n = len(cells)
    if n & (n - 1):
        raise ValueError("cell count must be a power of two")
    K = n.bit_length() - 1
    out: List[DyadicInterval] = []

    def descend(scale: int, index: int):
        width = 1 << (K + scale)
        seg = cells[index * width : (index + 1) * width]
        if seg.all():
            out.append(DyadicInterval(scale, index))
        elif width > 1 and seg.any():
            descend(scale - 1, 2 * index)
            descend(scale - 1, 2 * index + 1)

    descend(0, 0)
    return out


@dataclass(frozen=True)
class GoodPiece:
    """One maximal interval of a directional-region row with its packets."""

    cell0: int
    time: DyadicInterval
    freqs: Tuple[DyadicInterval, ...]


@dataclass(frozen=True)
class GoodFunction:
    g: GridFunction2D
    pieces: Tuple[GoodPiece, ...]
    b2: GridFunction2D


def build_good_function(
    f2_tilde: GridFunction2D,
    forest,
    b2: GridFunction2D,
) -> GoodFunction:
    """Replace the slot-2 function by packet projections over the forest.

    Each row of the directional region decomposes into maximal dyadic
    intervals.  An interval J picks up one frequency interval of dual
    length per tree whose top spatial box contains the row cell and J and
    whose top frequency fits inside it; duplicates across trees count
    once.  The replacement on J is the sum of tile projections of the
    row fiber, so it is supported on the region by construction.
    """
    K = f2_tilde.resolution
    if b2.resolution != K:
        raise ValueError("cell sets must share one resolution")
    mask = _require_cell_set(b2, "b2")
    tops = [t.top for t in forest]
    g = np.zeros_like(f2_tilde.values)
    pieces: List[GoodPiece] = []
    for cell0 in range(1 << K):
        row = mask[cell0]
        if not row.any():
            continue
        for time in maximal_dyadic_intervals(row):
            freqs = set()
            for top in tops:
                if cell0 >> (K + top.scale) != top.m0:
                    continue
                if time.scale > top.scale - 1:
                    continue
                if not top.time_interval(1).contains(time):
                    continue
                freqs.add(
                    DyadicInterval(
                        -time.scale, top.n >> (top.scale - 1 - time.scale)
                    )
                )
            ordered = tuple(sorted(freqs, key=lambda w: w.index))
            pieces.append(GoodPiece(cell0, time, ordered))
            if not ordered:
                continue
            fiber = GridFunction1D(K, f2_tilde.values[cell0].copy())
            for freq in ordered:
                g[cell0] += project_tile_1d(fiber, time, freq).values
    return GoodFunction(GridFunction2D(K, g), tuple(pieces), b2)


def replacement_check(
    bitiles: Sequence[Bitile],
    f0: GridFunction2D,
    f1: GridFunction2D,
    f2: GridFunction2D,
    good: GoodFunction,
    mode=None,
) -> Tuple[float, Tuple[str, ...]]:
    """Largest change in any bitile coefficient under the replacement.

    Returns the max over the given bitiles of the absolute difference
    between the coefficient with the original slot-2 function and with
    the replacement, together with the precondition violations found:
    the slot-2 function must vanish off the directional region, and the
    middle function must vanish on every fiber captured by an interval
    of the region that swallows a bitile's middle interval.  Violations
    are reported, never repaired.  `mode` is accepted for interface
    symmetry with the structured-slot checks and is unused: the bitile
    coefficient involves no grid-multiplier projection.
    """
    del mode
    K = f2.resolution
    mask = good.b2.values > 0.5
    violations: List[str] = []
    if np.any(f2.values[~mask] != 0.0):
        violations.append("slot-2 function does not vanish off the region")

    by_row: Dict[int, List[DyadicInterval]] = {}
    for piece in good.pieces:
        by_row.setdefault(piece.cell0, []).append(piece.time)

    bad_fibers = 0
    for p in bitiles:
        width = 1 << (K + p.scale)
        t1 = p.time_interval(1)
        rows = slice(p.m2 * width, (p.m2 + 1) * width)
        for cell0 in range(p.m0 * width, (p.m0 + 1) * width):
            for time in by_row.get(cell0, ()):
                if time.contains(t1):
                    if np.any(f1.values[rows, cell0] != 0.0):
                        bad_fibers += 1
                    break
    if bad_fibers:
        violations.append(
            f"middle function alive on {bad_fibers} captured fibers"
        )

    worst = 0.0
    for p in bitiles:
        a = lambda_bitile(p, f0, f1, f2)
        b = lambda_bitile(p, f0, f1, good.g)
        worst = max(worst, abs(a - b))
    return worst, tuple(violations)


def admissible_bitiles(b1: GridFunction2D) -> List[Bitile]:
    """Bitiles whose outer-variable shadow is not swallowed by the region.

    The shadow here is the box of the two outer spatial intervals, read
    in the middle function's plane.  The admissible set is upward closed
    in the tile order, hence convex.
    """
    K = b1.resolution
    out = []
    for p in all_bitiles(K):
        w = 1 << (K + p.scale)
        sub = b1.values[p.m2 * w : (p.m2 + 1) * w, p.m0 * w : (p.m0 + 1) * w]
        if not sub.all():
            out.append(p)
    return out


def counting_function(forest, resolution: int) -> GridFunction2D:
    """Number of tree tops whose spatial box covers each (x0, x1) cell."""
    acc = np.zeros((1 << resolution, 1 << resolution))
    for tree in forest:
        top = tree.top
        width = 1 << (resolution + top.scale)
        acc[
            top.m0 * width : (top.m0 + 1) * width,
            top.m1 * width : (top.m1 + 1) * width,
        ] += 1.0
    return GridFunction2D(resolution, acc)


def g_norm_report(
    good: GoodFunction,
    forest,
    p2: float = 4.0 / 3.0,
    p: float = 2.0,
) -> dict:
    """Compare the replacement's L2 norm against the forest counting bound.

    The bound is the L^p norm of the counting function raised to
    1 - 2/p2', with p2' the conjugate exponent; on each interval of the
    region at most that many packets contribute and each projection is a
    contraction, which is where the exponent comes from.  The caller
    picks p (half the slot-0 exponent in the intended regime).
    """
    if p2 <= 1.0:
        raise ValueError("exponent p2 must exceed 1")
    nk = counting_function(forest, good.g.resolution)
    g_norm = good.g.norm(2)
    nk_norm = nk.norm(p)
    exponent = 1.0 - 2.0 * (p2 - 1.0) / p2
    bound = nk_norm ** exponent
    if g_norm == 0.0:
        ratio = 0.0
    elif bound == 0.0:
        ratio = math.inf
    else:
        ratio = g_norm ** 2 / bound
    return {
        "g_norm": g_norm,
        "counting_function": nk,
        "counting_norm": nk_norm,
        "exponent": exponent,
        "ratio": ratio,
    }


def transpose_instance(
    f0: GridFunction2D, f1: GridFunction2D, f2: GridFunction2D, eps=None
):
    """Swap the roles of the outer variables: (F0, F1, F2) -> (F2^T, F1^T, F0^T).

    Relabeling the two outer integration variables carries each slot
    function to the transpose of the opposite slot, transposes the sign
    field, and leaves the form's value unchanged; a bitile (k, m0, m2, n)
    pairs with (k, m2, m0, n).  Exponents travel with their slots.
    """
    out = (f2.transpose(), f1.transpose(), f0.transpose())
    if eps is None:
        return out
    return out + (eps.transpose(),)

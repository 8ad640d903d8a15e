"""Seeded random ensembles shared by the command line harness and the checks.

Every generator draws from a numpy Generator (PCG64 behind
default_rng), so an ensemble is reproducible from its 64-bit seed alone;
nothing here keeps hidden state.
"""

from __future__ import annotations

from typing import Sequence, Tuple

import numpy as np

from .covering import Parallelogram, SlopeField
from .gridfn import GridFunction1D, GridFunction2D
from .selection import Tree
from .tiles import Bitile, all_bitiles, down_set, le
from .triform import EpsilonField
from .walsh import DyadicInterval


def rng_from_seed(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def uniform_cells_1d(rng, resolution: int) -> GridFunction1D:
    return GridFunction1D(resolution, rng.uniform(-1.0, 1.0, 1 << resolution))


def uniform_cells_2d(rng, resolution: int) -> GridFunction2D:
    n = 1 << resolution
    return GridFunction2D(resolution, rng.uniform(-1.0, 1.0, (n, n)))


def indicator_with_measure(rng, resolution: int, measure: float) -> GridFunction2D:
    """Indicator of a uniformly random cell union of the given measure.

    The cell count is the rounded measure, at least one cell whenever the
    requested measure is positive; the exact measure is the integral of
    the result.
    """
    if not 0.0 <= measure <= 1.0:
        raise ValueError("measure must lie in [0, 1]")
    n = 1 << resolution
    total = n * n
    count = int(round(measure * total))
    if measure > 0.0:
        count = max(count, 1)
    flat = np.zeros(total)
    flat[rng.choice(total, size=count, replace=False)] = 1.0
    return GridFunction2D(resolution, flat.reshape(n, n))


def signed_indicator(rng, e: GridFunction2D, scale: float = 1.0) -> GridFunction2D:
    """Random signs on the support, scaled; magnitude stays below 1_E."""
    signs = rng.choice([-1.0, 1.0], size=e.values.shape)
    return GridFunction2D(e.resolution, signs * e.values * scale)


def random_epsilon(rng, resolution: int) -> EpsilonField:
    return EpsilonField.random(resolution, rng)


def random_bitile(rng, resolution: int) -> Bitile:
    k = int(rng.integers(-resolution + 1, 1))
    blocks = 1 << -k
    return Bitile(
        k,
        int(rng.integers(0, blocks)),
        int(rng.integers(0, blocks)),
        int(rng.integers(0, 1 << (resolution + k - 1))),
    )


def random_convex_collection(rng, resolution: int, tops: int = 2):
    """Union of down-sets of random bitiles, sorted coarsest first."""
    coll = set()
    for _ in range(tops):
        top = random_bitile(rng, resolution)
        coll |= down_set(all_bitiles(resolution), top)
    return sorted(coll, key=lambda b: (-b.scale, b.m0, b.m2, b.n))


def random_tree(rng, resolution: int, sprouts: int = 3) -> Tree:
    """Random convex tree: the order interval between seeds and their top."""
    top = random_bitile(rng, resolution)
    below = sorted(
        down_set(all_bitiles(resolution), top),
        key=lambda b: (-b.scale, b.m0, b.m2, b.n),
    )
    picks = [below[i] for i in rng.integers(0, len(below), size=max(sprouts, 1))]
    members = tuple(
        q for q in below if any(le(p, q) for p in picks)
    )
    return Tree(top, members)


def measure_triple(
    rng, resolution: int, exponents: Sequence[int]
) -> Tuple[GridFunction2D, GridFunction2D, GridFunction2D]:
    """Indicator triple with measures 2^-j for the given j's."""
    if len(exponents) != 3:
        raise ValueError("need three measure exponents")
    return tuple(
        indicator_with_measure(rng, resolution, 2.0 ** -j) for j in exponents
    )


def constant_slope_field(n: int, value: float) -> SlopeField:
    return SlopeField.constant(n, value)


def linear_slope_field(n: int, gx: float, gy: float, offset: float) -> SlopeField:
    """Clipped affine slope field; the gradient length is its certificate."""
    x = (np.arange(n) + 0.5) / n
    v = gx * x[:, None] + gy * x[None, :] + offset
    return SlopeField(np.clip(v, -1.0, 1.0), lipschitz=float(np.hypot(gx, gy)))


def cone_slope_field(rng, n: int, lipschitz: float, anchors: int = 6) -> SlopeField:
    """Minimum of random cones: the certificate is exact by construction.

    Each cone value + lipschitz * distance is Lipschitz with exactly that
    constant, and minima and clipping never increase it.
    """
    x = (np.arange(n) + 0.5) / n
    px = x[:, None, None]
    py = x[None, :, None]
    ax = rng.random(anchors)[None, None, :]
    ay = rng.random(anchors)[None, None, :]
    base = rng.uniform(-1.0, 1.0, anchors)[None, None, :]
    dist = np.hypot(px - ax, py - ay)
    v = np.min(base + lipschitz * dist, axis=2)
    return SlopeField(np.clip(v, -1.0, 1.0), lipschitz=float(lipschitz))


def parallelogram_ensemble(
    rng,
    grid_log: int,
    count: int,
    scale_range: Tuple[int, int] = (-5, -1),
    height_range: Tuple[float, float] = (0.01, 0.2),
) -> list:
    """Random parallelograms with dyadic shadows inside the unit square."""
    out = []
    lo, hi = scale_range
    if lo < -grid_log:
        raise ValueError("shadow scale finer than the grid")
    for _ in range(count):
        scale = int(rng.integers(lo, hi + 1))
        index = int(rng.integers(0, 1 << -scale))
        height = float(rng.uniform(*height_range))
        slope = float(rng.uniform(-1.0, 1.0))
        reach = abs(slope) * 2.0 ** scale
        base = float(rng.uniform(0.0, max(1.0 - height - reach, 0.01)))
        out.append(
            Parallelogram(DyadicInterval(scale, index), base, slope, height)
        )
    return out


def dense_parallelograms(
    rng,
    u: SlopeField,
    delta: float,
    count: int,
    scale_range: Tuple[int, int] = (-5, -3),
    height_range: Tuple[float, float] = (0.01, 0.1),
    max_tries: int = 2000,
) -> list:
    """Parallelograms aligned with the slope field, then density-filtered.

    Each candidate centers its slope on the field value at a random cell
    of its body, which makes the density condition |E(R)| >= delta |R|
    achievable; candidates failing it are discarded.
    """
    from .covering import density

    n = u.n
    out = []
    tries = 0
    while len(out) < count and tries < max_tries:
        tries += 1
        scale = int(rng.integers(scale_range[0], scale_range[1] + 1))
        index = int(rng.integers(0, 1 << -scale))
        height = float(rng.uniform(*height_range))
        x_left = index * 2.0 ** scale
        cx = int(
            np.clip((x_left + 0.5 * 2.0 ** scale) * n, 0, n - 1)
        )
        cy = int(rng.integers(0, n))
        slope = float(np.clip(u.values[cx, cy], -1.0, 1.0))
        base = (cy + 0.5) / n - 0.5 * height - slope * (
            (cx + 0.5) / n - x_left
        )
        r = Parallelogram(DyadicInterval(scale, index), base, slope, height)
        if density(r, u) >= delta:
            out.append(r)
    return out


def lemma7r_pair(rng) -> Tuple[Parallelogram, Parallelogram]:
    """Random pair satisfying every hypothesis of the seven-fold inclusion.

    Shared shadow, 7H <= H', uncertainty intervals meeting (slope gap at
    most (H + H')/L), and overlapping bodies (the center gap at a random
    abscissa stays strictly inside (H + H')/2).
    """
    scale = int(rng.integers(-3, 1))
    shadow = DyadicInterval(scale, int(rng.integers(0, 1 << -scale)))
    length = shadow.length
    h = float(rng.uniform(0.001, 0.05))
    hp = float(rng.uniform(7 * h, 10 * h))
    s = float(rng.uniform(-0.8, 0.8))
    sp = s + float(rng.uniform(-1, 1)) * (h + hp) / length
    sp = float(np.clip(sp, -1.0, 1.0))
    base = float(rng.uniform(0.0, 0.8))
    r = Parallelogram(shadow, base, s, h)
    x_star = r.x_left + float(rng.random()) * length
    gap = float(rng.uniform(-0.999, 0.999)) * (h + hp) / 2
    base_p = (
        base
        + s * (x_star - r.x_left)
        + h / 2
        + gap
        - hp / 2
        - sp * (x_star - r.x_left)
    )
    return r, Parallelogram(shadow, base_p, sp, hp)

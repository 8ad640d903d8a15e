"""Size functional and the three-phase tree selection with certificates.

A tree is a convex collection of bitiles lying below a common top.  The
selection algorithm peels off trees whose projections carry too much
energy, in three phases: heavy single bitiles, then heavy tree sums for
each frequency half.  What remains has small size, and the removed trees
satisfy a Carleson-type counting bound with constant 9 * 2^(2n) over
every dyadic test box.  Certificates carry enough data to re-check all
of this independently.

The partial-order work is done on packed integer arrays; per-tile
projection norms come from local coefficient tables, not from forming
any projection explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gridfn import GridFunction2D
from .tiles import Bitile, ProjectionMode, Tile, _diag_image_cell, le
from .walsh import DyadicInterval
from .wavelets import coefficient_rows

__all__ = [
    "Tree",
    "SelectionCertificate",
    "size",
    "select_trees",
    "verify_certificate",
    "single_tree_report",
]


@dataclass(frozen=True)
class Tree:
    """Convex collection of bitiles below (and containing) a top."""

    top: Bitile
    members: tuple[Bitile, ...]

    def __post_init__(self):
        if self.top not in self.members:
            raise ValueError("tree top must be a member")

    @property
    def scale(self) -> int:
        return self.top.scale

    @property
    def area(self) -> float:
        """Product of the two free spatial interval lengths."""
        return 4.0**self.top.scale

    @property
    def freq(self) -> DyadicInterval:
        return self.top.freq

    def spatial(self, i: int) -> DyadicInterval:
        return self.top.time_interval(i)


@dataclass(frozen=True)
class SelectionCertificate:
    """Everything needed to re-check a selection run.

    counting maps each dyadic test box (scale, m0, m2) to the pair
    (sum of tree areas inside the box, allowed bound for that box).
    """

    collection: tuple[Bitile, ...]
    remainder: tuple[Bitile, ...]
    forests: tuple[tuple[Tree, ...], tuple[Tree, ...], tuple[Tree, ...]]
    slot: int
    level: int
    mode: ProjectionMode | None
    counting: dict[tuple[int, int, int], tuple[float, float]]

    @property
    def trees(self) -> tuple[Tree, ...]:
        return tuple(t for forest in self.forests for t in forest)


# -- packed pool arrays and vectorized order ---------------------------------


_CANON = lambda b: (-b.scale, b.m0, b.m2, b.n)  # noqa: E731


def _pool(bitiles):
    pool = sorted(set(bitiles), key=_CANON)
    k = np.array([b.scale for b in pool], dtype=np.int64)
    m0 = np.array([b.m0 for b in pool], dtype=np.int64)
    m2 = np.array([b.m2 for b in pool], dtype=np.int64)
    n = np.array([b.n for b in pool], dtype=np.int64)
    return pool, k, m0, m2, n


def _le_matrix(k, m0, m2, n):
    """LE[p, q] == le(pool[p], pool[q]), all pairs at once."""
    d = k[None, :] - k[:, None]
    up = d >= 0
    ds = np.where(up, d, 0)
    sp = (m0[:, None] >> ds == m0[None, :]) & (m2[:, None] >> ds == m2[None, :])
    fr = n[None, :] >> ds == n[:, None]
    return up & sp & fr


def _le_half_matrix(k, m0, m2, n, j):
    """LEJ[p, q] == le(pool[p].half(j), pool[q])."""
    delta = 0 if j == 1 else 1
    d = k[None, :] - k[:, None]
    up = d >= 1
    ds = np.where(up, d, 1)
    sp = (m0[:, None] >> ds == m0[None, :]) & (m2[:, None] >> ds == m2[None, :])
    fr = n[None, :] >> (ds - 1) == 2 * n[:, None] + delta
    return up & sp & fr


def _keys(k, m0, m2, n):
    # scales fit in 6 bits after offsetting; indices are < 2^20 in practice
    return (((k + 32).astype(np.int64) << 60) | (m0 << 40) | (m2 << 20) | n)


def _convex_arrays(k, m0, m2, n, LE) -> bool:
    """Convexity via one intermediate per comparable pair.

    If the level scale_p + 1 intermediate of every strictly comparable
    pair with gap >= 2 is present, induction up the gap supplies all the
    others.
    """
    member = np.sort(_keys(k, m0, m2, n))
    gap = k[None, :] - k[:, None]
    pairs = np.argwhere(LE & (gap >= 2))
    if pairs.size == 0:
        return True
    p, q = pairs[:, 0], pairs[:, 1]
    ik = k[p] + 1
    im0 = m0[p] >> 1
    im2 = m2[p] >> 1
    inn = n[q] >> (k[q] - ik)
    inter = (((ik + 32) << 60) | (im0 << 40) | (im2 << 20) | inn)
    pos = np.searchsorted(member, inter)
    pos = np.minimum(pos, len(member) - 1)
    return bool(np.all(member[pos] == inter))


def _require_convex(k, m0, m2, n, LE):
    if not _convex_arrays(k, m0, m2, n, LE):
        raise ValueError("collection is not convex")


# -- projection norm tables --------------------------------------------------


def _block_coeffs(rows2d: np.ndarray, block_log: int) -> np.ndarray:
    """Local coefficients of every length-2^block_log row segment."""
    nrows, width = rows2d.shape
    nb = width >> block_log
    segs = rows2d.reshape(nrows * nb, 1 << block_log)
    return coefficient_rows(segs, block_log).reshape(nrows, nb, 1 << block_log)


def tile_norm_table(
    F: GridFunction2D,
    slot: int,
    mode: ProjectionMode | None,
    scales,
) -> dict[tuple[int, int, int, int], float]:
    """Squared projection norms of every scale-k tile, k in scales.

    Keys are (scale, m0, m2, n).  Packet slots reduce to one local
    coefficient per tile; slot 1 reduces to masked row-energy sums.
    """
    if slot == 1 and mode is None:
        raise ValueError("slot 1 requires a projection mode")
    K = F.resolution
    ngrid = 1 << K
    table: dict[tuple[int, int, int, int], float] = {}
    for k in sorted(set(scales)):
        if not -K <= k <= 0:
            raise ValueError("scale outside resolution range")
        B = 1 << (K + k)
        nb = 1 << -k
        if slot == 0:
            C = _block_coeffs(F.values.T, K + k)  # [i2, m1, nu]
            S = (C**2).reshape(nb, B, nb, B).sum(axis=1)  # [m2, m1, nu]
            scale_f = 2.0 ** (k - K)
            for m0 in range(nb):
                for m2 in range(nb):
                    row = S[m2, m0 ^ m2]
                    for nu in range(B):
                        table[(k, m0, m2, nu)] = scale_f * row[nu]
        elif slot == 2:
            C = _block_coeffs(F.values, K + k)  # [i0, m1, nu]
            S = (C**2).reshape(nb, B, nb, B).sum(axis=1)  # [m0, m1, nu]
            scale_f = 2.0 ** (k - K)
            for m0 in range(nb):
                for m2 in range(nb):
                    row = S[m0, m0 ^ m2]
                    for nu in range(B):
                        table[(k, m0, m2, nu)] = scale_f * row[nu]
        elif mode.kind == "fiberwise":
            labels = np.asarray(mode.labels, dtype=np.int64)
            if labels.shape != (ngrid,):
                raise ValueError("fiberwise labels must give one frequency per cell")
            R = (F.values**2).reshape(ngrid, nb, B).sum(axis=2)  # [i2, m0]
            acc = np.zeros((nb, nb, B))
            for i2 in range(ngrid):
                acc[i2 >> (K + k), :, labels[i2] >> -k] += R[i2]
            scale_f = 2.0 ** (-2 * K)
            for m0 in range(nb):
                for m2 in range(nb):
                    for nu in range(B):
                        table[(k, m0, m2, nu)] = scale_f * acc[m2, m0, nu]
        else:
            C = _block_coeffs(F.values.T, K + k)  # [i0, m2, nu]
            img = np.array(
                [_diag_image_cell(mode.multiplier, nu, k, K) for nu in range(B)],
                dtype=np.int64,
            )
            D = np.zeros((ngrid, nb, B))
            Csq = C**2
            for nu in range(B):
                D[:, :, img[nu]] += Csq[:, :, nu]
            S = D.reshape(nb, B, nb, B).sum(axis=1)  # [m0, m2, nu]
            scale_f = 2.0 ** (k - K)
            for m0 in range(nb):
                for m2 in range(nb):
                    for nu in range(B):
                        table[(k, m0, m2, nu)] = scale_f * S[m0, m2, nu]
    return table


def _half_norms(pool, ks, m0s, m2s, ns, F, slot, mode):
    """Per-bitile squared norms of the lower (2n) and upper (2n+1) halves."""
    table = tile_norm_table(F, slot, mode, set(int(v) for v in ks))
    lower = np.array(
        [table[(int(k), int(a), int(b), 2 * int(c))] for k, a, b, c in zip(ks, m0s, m2s, ns)]
    )
    upper = np.array(
        [table[(int(k), int(a), int(b), 2 * int(c) + 1)] for k, a, b, c in zip(ks, m0s, m2s, ns)]
    )
    return lower, upper


def _tree_energy(LE, LEJ, lower, upper, restrict=None):
    """Squared tree projection norm for every potential top.

    Orthogonal decomposition: both halves of the top plus, for each
    member whose j-half sits below the top, the opposite half.
    """
    N = len(lower)
    mask = np.ones(N, dtype=bool) if restrict is None else restrict
    maskf = mask.astype(float)
    top_part = (lower + upper) * maskf
    # member P with P^{+1} <= top contributes its upper half and vice versa
    contrib_plus = (LEJ[1] & mask[:, None]).astype(float).T @ upper
    contrib_minus = (LEJ[-1] & mask[:, None]).astype(float).T @ lower
    return top_part + (contrib_plus + contrib_minus) * maskf


def size(
    slot: int,
    bitiles,
    F: GridFunction2D,
    mode: ProjectionMode | None = None,
) -> float:
    """Largest normalized tree projection norm over all tops.

    The supremum over arbitrary sub-trees is attained on full down-sets
    because the tree tiling refines monotonically, so only tops need to
    be scanned.
    """
    pool, ks, m0s, m2s, ns = _pool(bitiles)
    if not pool:
        return 0.0
    LE = _le_matrix(ks, m0s, m2s, ns)
    _require_convex(ks, m0s, m2s, ns, LE)
    LEJ = {
        1: _le_half_matrix(ks, m0s, m2s, ns, 1),
        -1: _le_half_matrix(ks, m0s, m2s, ns, -1),
    }
    lower, upper = _half_norms(pool, ks, m0s, m2s, ns, F, slot, mode)
    energy = _tree_energy(LE, LEJ, lower, upper)
    areas = 4.0**ks
    return float(np.sqrt(np.max(energy / areas)))


# -- the selection algorithm -------------------------------------------------


def _box_energy(F: GridFunction2D, slot: int):
    """Raw squared sums of F over every dyadic test box, per scale."""
    K = F.resolution
    SQ = F.values**2
    out = {}
    for kJ in range(0, -K - 1, -1):
        B = 1 << (K + kJ)
        nb = 1 << -kJ
        BS = SQ.reshape(nb, B, nb, B).sum(axis=(1, 3))  # [arg1_blk, arg2_blk]
        grid0, grid2 = np.meshgrid(np.arange(nb), np.arange(nb), indexing="ij")
        if slot == 0:
            energy = BS[grid0 ^ grid2, grid2]
        elif slot == 1:
            energy = BS[grid2, grid0]
        else:
            energy = BS[grid0, grid0 ^ grid2]
        out[kJ] = energy * 2.0 ** (-2 * K)
    return out


def _counting_tables(trees, F, slot, level):
    """Per-box (sum of contained tree areas, bound) for all dyadic boxes."""
    K = F.resolution
    box_rhs = _box_energy(F, slot)
    lhs = {kJ: np.zeros((1 << -kJ, 1 << -kJ)) for kJ in box_rhs}
    for t in trees:
        kT, a0, a2 = t.top.scale, t.top.m0, t.top.m2
        for kJ in range(kT, 1):
            d = kJ - kT
            lhs[kJ][a0 >> d, a2 >> d] += 4.0**kT
    bound = 9.0 * 4.0**level
    counting = {}
    for kJ in box_rhs:
        nb = 1 << -kJ
        for a in range(nb):
            for b in range(nb):
                counting[(kJ, a, b)] = (
                    float(lhs[kJ][a, b]),
                    float(bound * box_rhs[kJ][a, b]),
                )
    return counting


def select_trees(
    slot: int,
    bitiles,
    F: GridFunction2D,
    mode: ProjectionMode | None = None,
    level: int = 0,
) -> SelectionCertificate:
    """Three-phase tree removal at size threshold 2^(-level).

    Phase 1 removes down-sets of the maximal bitiles whose own projection
    is heavy.  Phases 2 and 3 (frequency halves j = -1 then j = +1)
    iteratively remove the down-set of the top with extremal frequency
    endpoint among those whose half-sums are heavy.  Every removal is a
    down-set, so the remainder and all removed collections stay convex.
    """
    pool, ks, m0s, m2s, ns = _pool(bitiles)
    collection = tuple(pool)
    if not pool:
        return SelectionCertificate(
            (), (), ((), (), ()), slot, level, mode, _counting_tables([], F, slot, level)
        )
    LE = _le_matrix(ks, m0s, m2s, ns)
    _require_convex(ks, m0s, m2s, ns, LE)
    LEJ = {
        1: _le_half_matrix(ks, m0s, m2s, ns, 1),
        -1: _le_half_matrix(ks, m0s, m2s, ns, -1),
    }
    lower, upper = _half_norms(pool, ks, m0s, m2s, ns, F, slot, mode)
    areas = 4.0**ks
    threshold = 4.0 ** (-level) / 3.0
    remaining = np.ones(len(pool), dtype=bool)

    def take_tree(q: int) -> Tree:
        members_mask = LE[:, q] & remaining
        members = tuple(pool[p] for p in np.nonzero(members_mask)[0])
        remaining[members_mask] = False
        return Tree(pool[q], members)

    # phase 1: heavy bitiles, maximal ones first, coarsest to finest
    heavy = (lower + upper) > threshold * areas
    strict = LE.copy()
    np.fill_diagonal(strict, False)
    has_heavy_above = (strict & heavy[None, :]).any(axis=1)
    tops1 = np.nonzero(heavy & ~has_heavy_above)[0]
    forest1 = tuple(take_tree(int(q)) for q in tops1)

    # phases 2 and 3: heavy half-tile sums over T_j, extremal endpoint first
    half_forests = []
    for j in (-1, 1):
        contrib = upper if j == 1 else lower  # norm of P^{-j}
        picked = []
        while True:
            scores = (LEJ[j] & remaining[:, None]).astype(float).T @ contrib
            violating = remaining & (scores > threshold * areas)
            if not violating.any():
                break
            cand = np.nonzero(violating)[0]
            if j == -1:
                key = lambda q: (  # noqa: E731
                    int(ns[q]) << (1 - int(ks[q])),
                    int(ks[q]),
                    int(m0s[q]),
                    int(m2s[q]),
                )
            else:
                key = lambda q: (  # noqa: E731
                    -((int(ns[q]) + 1) << (1 - int(ks[q]))),
                    int(ks[q]),
                    int(m0s[q]),
                    int(m2s[q]),
                )
            picked.append(take_tree(int(min(cand, key=key))))
        half_forests.append(tuple(picked))

    remainder = tuple(pool[p] for p in np.nonzero(remaining)[0])
    forests = (forest1, half_forests[0], half_forests[1])
    all_trees = [t for forest in forests for t in forest]
    counting = _counting_tables(all_trees, F, slot, level)
    return SelectionCertificate(
        collection, remainder, forests, slot, level, mode, counting
    )


# -- verification ------------------------------------------------------------


def _pairwise_disjoint_tiles(tiles: list[Tile]) -> bool:
    """Tiles are phase-space disjoint exactly when no two are comparable."""
    if not tiles:
        return True
    k = np.array([t.scale for t in tiles], dtype=np.int64)
    m0 = np.array([t.m0 for t in tiles], dtype=np.int64)
    m2 = np.array([t.m2 for t in tiles], dtype=np.int64)
    n = np.array([t.n for t in tiles], dtype=np.int64)
    d = k[None, :] - k[:, None]
    up = d >= 0
    ds = np.where(up, d, 0)
    sp = (m0[:, None] >> ds == m0[None, :]) & (m2[:, None] >> ds == m2[None, :])
    # spatially finer side must have the containing frequency interval
    fr = n[None, :] >> ds == n[:, None]
    cmp_ = up & sp & fr
    np.fill_diagonal(cmp_, False)
    return not bool(cmp_.any())


def _tree_selected_halves(tree: Tree, j: int) -> list[Tile]:
    return [
        P.half(-j)
        for P in tree.members
        if P != tree.top and le(P.half(j), tree.top)
    ]


def verify_certificate(
    cert: SelectionCertificate,
    F: GridFunction2D,
    slot: int | None = None,
    level: int | None = None,
):
    """Re-check a selection certificate from scratch.

    Returns (ok, report).  The report lists each check with its outcome
    and carries both readings of the per-tree threshold (linear and
    squared in the tree area) for the remainder.
    """
    slot = cert.slot if slot is None else slot
    level = cert.level if level is None else level
    checks: list[tuple[str, bool, str]] = []

    def check(name, ok, detail=""):
        checks.append((name, bool(ok), detail))

    # partition
    seen: set[Bitile] = set()
    overlap = False
    for part in (cert.remainder, *[t.members for t in cert.trees]):
        for b in part:
            if b in seen:
                overlap = True
            seen.add(b)
    check("partition-disjoint", not overlap)
    check("partition-union", seen == set(cert.collection))

    # convexity of remainder and of each tree, tree tops dominate members
    def convex_ok(coll):
        if not coll:
            return True
        _, k, a, b, c = _pool(coll)
        return _convex_arrays(k, a, b, c, _le_matrix(k, a, b, c))

    check("remainder-convex", convex_ok(cert.remainder))
    trees_ok = all(
        t.top in t.members
        and all(le(P, t.top) for P in t.members)
        and convex_ok(t.members)
        for t in cert.trees
    )
    check("trees-convex-with-top", trees_ok)

    # phase 1 tops pairwise disjoint (as bitiles: no two comparable)
    tops1 = [t.top for t in cert.forests[0]]
    top_tiles = [Tile(b.scale, b.m0, b.m2, b.n) for b in tops1]
    # bitile comparability matches tile comparability on the shared data
    check("phase1-tops-disjoint", _pairwise_disjoint_tiles(top_tiles))

    # phases 2, 3: selected opposite halves pairwise disjoint per phase
    for forest, j, name in (
        (cert.forests[1], -1, "phase2-halves-disjoint"),
        (cert.forests[2], 1, "phase3-halves-disjoint"),
    ):
        halves: list[Tile] = []
        for t in forest:
            halves.extend(_tree_selected_halves(t, j))
        check(name, _pairwise_disjoint_tiles(halves))

    # remainder size
    rem_size = size(slot, cert.remainder, F, cert.mode) if cert.remainder else 0.0
    target = 2.0 ** (-level)
    check(
        "remainder-size",
        rem_size <= target * (1.0 + 1e-9),
        f"size {rem_size:.6e} vs 2^-{level}",
    )

    # counting bound, recomputed from scratch
    recomputed = _counting_tables(list(cert.trees), F, slot, level)
    stored_match = all(
        math.isclose(cert.counting[box][0], recomputed[box][0], rel_tol=1e-12, abs_tol=1e-12)
        and math.isclose(cert.counting[box][1], recomputed[box][1], rel_tol=1e-12, abs_tol=1e-12)
        for box in recomputed
    ) and set(cert.counting) == set(recomputed)
    check("counting-tables-match", stored_match)
    worst_box, worst_ratio = None, 0.0
    bound_ok = True
    for box, (lhs, rhs) in recomputed.items():
        if lhs > rhs * (1.0 + 1e-12):
            bound_ok = False
        ratio = lhs / rhs if rhs > 0 else (math.inf if lhs > 0 else 0.0)
        if ratio > worst_ratio:
            worst_box, worst_ratio = box, ratio
    check("counting-bound", bound_ok, f"worst box {worst_box} ratio {worst_ratio:.4f}")

    # both readings of the per-tree half-sum threshold on the remainder
    readings = _threshold_readings(cert, F, slot, level)

    ok = all(passed for _, passed, _ in checks)
    report = {
        "checks": checks,
        "remainder_size": rem_size,
        "size_target": target,
        "counting_worst_box": worst_box,
        "counting_worst_ratio": worst_ratio,
        **readings,
    }
    return ok, report


def _threshold_readings(cert, F, slot, level):
    """Max remainder half-sum ratios, linear and squared area readings."""
    if not cert.remainder:
        return {"halfsum_ratio_linear": 0.0, "halfsum_ratio_squared": 0.0}
    pool, ks, m0s, m2s, ns = _pool(cert.remainder)
    LEJ = {
        1: _le_half_matrix(ks, m0s, m2s, ns, 1),
        -1: _le_half_matrix(ks, m0s, m2s, ns, -1),
    }
    lower, upper = _half_norms(pool, ks, m0s, m2s, ns, F, slot, cert.mode)
    areas = 4.0**ks
    threshold = 4.0 ** (-level) / 3.0
    worst_lin = 0.0
    worst_sq = 0.0
    for j in (-1, 1):
        contrib = upper if j == 1 else lower
        scores = LEJ[j].astype(float).T @ contrib
        worst_lin = max(worst_lin, float(np.max(scores / (threshold * areas))))
        worst_sq = max(worst_sq, float(np.max(scores / (threshold * areas**2))))
    return {"halfsum_ratio_linear": worst_lin, "halfsum_ratio_squared": worst_sq}


# -- single-tree form report -------------------------------------------------


def single_tree_report(
    tree: Tree,
    eps,
    F0: GridFunction2D,
    F1: GridFunction2D,
    F2: GridFunction2D,
    mode: ProjectionMode | None = None,
) -> dict:
    """Tree form value against the product-of-sizes bound.

    The bound is the tree area times the three slot sizes; the ratio is
    the empirical constant of the single-tree estimate.
    """
    from .triform import lambda_tree

    value = lambda_tree(tree.members, eps, F0, F1, F2)
    sizes = (
        size(0, tree.members, F0),
        size(1, tree.members, F1, mode),
        size(2, tree.members, F2),
    )
    bound = tree.area * sizes[0] * sizes[1] * sizes[2]
    if bound > 0.0:
        ratio = abs(value) / bound
    else:
        ratio = math.inf if abs(value) > 0 else 0.0
    return {
        "value": value,
        "area": tree.area,
        "sizes": sizes,
        "bound": bound,
        "ratio": ratio,
    }

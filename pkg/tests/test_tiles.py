"""Tile order, tilings, and projection axioms.

The tiling is checked against an independent cell-occupancy oracle: the
union of half-tile cells of the input must equal the disjoint union of
the output tiles' cells.
"""

import numpy as np
import pytest

from walshlab.gridfn import GridFunction2D
from walshlab.tiles import (
    Bitile,
    ProjectionMode,
    Tile,
    all_bitiles,
    comparable,
    diagonal_region,
    disjoint_tiling,
    down_set,
    is_convex,
    le,
    proj_bitile,
    proj_collection,
    proj_tile,
)
from walshlab.walsh import WalshNumber


def rand2d(K, seed):
    rng = np.random.default_rng(seed)
    return GridFunction2D(K, rng.normal(size=(1 << K, 1 << K)))


def tile_cells(t: Tile, kmin: int):
    """Set of (spatial0-atom, spatial2-atom, frequency-unit) cells."""
    d = t.scale - kmin
    out = set()
    for a0 in range(t.m0 << d, (t.m0 + 1) << d):
        for a2 in range(t.m2 << d, (t.m2 + 1) << d):
            for f in range(t.n << -t.scale, (t.n + 1) << -t.scale):
                out.add((a0, a2, f))
    return out


class TestOrder:
    def test_half_tiles(self):
        p = Bitile(-1, 0, 1, 3)
        assert p.half(1) == Tile(-1, 0, 1, 6)
        assert p.half(-1) == Tile(-1, 0, 1, 7)
        assert p.freq.scale == 2 and p.half(1).freq.scale == 1

    def test_middle_interval_is_xor(self):
        assert Bitile(-2, 3, 1, 0).m1 == 2
        assert Tile(-3, 5, 6, 0).time_interval(1).index == 3

    def test_le_example(self):
        fine = Bitile(-1, 0, 1, 0)  # I's length 1/2, omega [0, 4)
        coarse = Bitile(0, 0, 0, 0)  # I's length 1, omega [0, 2)
        assert le(fine, coarse)
        assert not le(coarse, fine)
        assert comparable(fine, coarse)
        assert not comparable(Bitile(-1, 0, 1, 0), Bitile(-1, 1, 1, 0))

    def test_le_requires_all_three_intervals(self):
        # spatial containment in slots 0 and 2 forces slot 1 as well;
        # frequency must nest the other way
        assert not le(Bitile(-1, 0, 1, 1), Bitile(0, 0, 0, 0))
        assert le(Bitile(-1, 1, 0, 0), Bitile(0, 0, 0, 0))

    def test_order_transitive(self):
        a = Bitile(-2, 1, 2, 0)
        b = Bitile(-1, 0, 1, 0)
        c = Bitile(0, 0, 0, 0)
        assert le(a, b) and le(b, c) and le(a, c)

    def test_mixed_tile_bitile(self):
        p = Bitile(-1, 0, 1, 0)
        top = Bitile(0, 0, 0, 0)
        assert le(p.half(1), top)  # omega [0,2) of the half contains [0,2)
        assert not le(p.half(-1), top)


class TestConvexity:
    def test_gap_breaks_convexity(self):
        a = Bitile(-2, 1, 2, 0)
        c = Bitile(0, 0, 0, 0)
        assert not is_convex([a, c])
        b = Bitile(-1, 0, 1, 0)
        assert is_convex([a, b, c])

    def test_down_sets_convex(self):
        K = 4
        universe = all_bitiles(K)
        for top in [Bitile(0, 0, 0, 3), Bitile(-1, 1, 0, 1), Bitile(-2, 2, 3, 0)]:
            assert is_convex(down_set(universe, top))

    def test_incomparable_sets_convex(self):
        assert is_convex([Bitile(-1, 0, 0, 2), Bitile(-1, 1, 1, 5)])


class TestDisjointTiling:
    def test_two_comparable_bitiles_give_three_tiles(self):
        coarse = Bitile(0, 0, 0, 0)
        fine = Bitile(-1, 0, 1, 0)
        tiles = disjoint_tiling([coarse, fine])
        assert len(tiles) == 3
        assert Tile(0, 0, 0, 0) in tiles and Tile(0, 0, 0, 1) in tiles
        # the fine bitile's lower half is covered by the coarse halves;
        # only its upper half survives
        assert Tile(-1, 0, 1, 1) in tiles

    def test_single_bitile_gives_both_halves(self):
        p = Bitile(-1, 1, 0, 2)
        assert sorted(t.n for t in disjoint_tiling([p])) == [4, 5]

    def test_nonconvex_rejected(self):
        with pytest.raises(ValueError, match="collection is not convex"):
            disjoint_tiling([Bitile(-2, 1, 2, 0), Bitile(0, 0, 0, 0)])

    def test_chain_count(self):
        # a maximal chain: each non-top member contributes one tile
        chain = [
            Bitile(0, 0, 0, 5),
            Bitile(-1, 0, 0, 2),
            Bitile(-2, 0, 0, 1),
            Bitile(-3, 0, 0, 0),
        ]
        assert is_convex(chain)
        assert len(disjoint_tiling(chain)) == len(chain) + 1

    @pytest.mark.parametrize("seed", range(6))
    def test_partition_matches_cell_oracle(self, seed):
        K = 4
        rng = np.random.default_rng(seed)
        universe = all_bitiles(K)
        tops = [universe[i] for i in rng.choice(len(universe), size=3, replace=False)]
        coll = set()
        for top in tops:
            coll |= down_set(universe, top)
        coll = sorted(coll, key=lambda p: (p.scale, p.m0, p.m2, p.n))
        tiles = disjoint_tiling(coll)
        kmin = min(p.scale for p in coll)
        want = set()
        for p in coll:
            want |= tile_cells(p.half(1), kmin) | tile_cells(p.half(-1), kmin)
        got = []
        for t in tiles:
            got.append(tile_cells(t, kmin))
        union = set().union(*got)
        assert union == want
        assert sum(len(c) for c in got) == len(union)  # pairwise disjoint


class TestProjectionAxioms:
    def modes(self, K, seed=0):
        rng = np.random.default_rng(seed)
        return [
            ProjectionMode.fiberwise(rng.integers(0, 1 << K, size=1 << K)),
            ProjectionMode.diagonal(WalshNumber.from_float(1.0)),
            ProjectionMode.diagonal(WalshNumber.from_float(1.5)),
        ]

    @pytest.mark.parametrize("slot", [0, 1, 2])
    def test_idempotent_and_selfadjoint(self, slot):
        K = 4
        F = rand2d(K, 1)
        G = rand2d(K, 2)
        t = Tile(-2, 1, 2, 3)
        for mode in self.modes(K):
            P = lambda u: proj_tile(t, slot, u, mode)
            pf = P(F)
            assert np.allclose(P(pf).values, pf.values, atol=1e-12)
            assert pf.inner(G) == pytest.approx(F.inner(P(G)), abs=1e-12)

    def test_support_boxes(self):
        K = 4
        F = rand2d(K, 3)
        t = Tile(-1, 1, 0, 3)
        for mode in self.modes(K):
            p0 = proj_tile(t, 0, F, mode).values
            assert np.all(p0[: 1 << (K - 1) if t.m1 else 0, :] * 0 == 0)
            # slot 0 lives on I1 x I2, slot 1 on I2 x I0, slot 2 on I0 x I1
            m1, m2, m0 = t.m1, t.m2, t.m0
            half = 1 << (K - 1)
            box = np.zeros((1 << K, 1 << K), dtype=bool)
            box[m1 * half : (m1 + 1) * half, m2 * half : (m2 + 1) * half] = True
            assert np.all(p0[~box] == 0)
            p1 = proj_tile(t, 1, F, mode).values
            box1 = np.zeros_like(box)
            box1[m2 * half : (m2 + 1) * half, m0 * half : (m0 + 1) * half] = True
            assert np.all(p1[~box1] == 0)
            p2 = proj_tile(t, 2, F, mode).values
            box2 = np.zeros_like(box)
            box2[m0 * half : (m0 + 1) * half, m1 * half : (m1 + 1) * half] = True
            assert np.all(p2[~box2] == 0)

    @pytest.mark.parametrize("slot", [0, 1, 2])
    def test_disjoint_tiles_orthogonal(self, slot):
        K = 4
        F = rand2d(K, 4)
        pairs = [
            (Tile(-1, 0, 1, 2), Tile(-1, 0, 1, 3)),  # same box, split freq
            (Tile(-1, 0, 1, 2), Tile(-1, 1, 1, 2)),  # disjoint boxes
            (Tile(-2, 0, 2, 0), Tile(-1, 0, 1, 3)),  # nested boxes, split freq
        ]
        for mode in self.modes(K):
            for s, t in pairs:
                a = proj_tile(s, slot, F, mode)
                b = proj_tile(t, slot, F, mode)
                assert a.inner(b) == pytest.approx(0.0, abs=1e-12), (slot, mode.kind, s, t)

    def test_scale_compatibility(self):
        # the vertical pair and the quadrant tiling of a bitile give the
        # same projection, for packet slots always and for slot 1 in
        # fiberwise and unit-multiplier diagonal modes
        K = 5
        F = rand2d(K, 5)
        P = Bitile(-1, 1, 0, 3)
        quads = [
            Tile(P.scale - 1, 2 * P.m0 + h0, 2 * P.m2 + h2, P.n)
            for h0 in (0, 1)
            for h2 in (0, 1)
        ]
        for mode in self.modes(K):
            for slot in (0, 1, 2):
                v = proj_bitile(P, slot, F, mode)
                q = GridFunction2D.zeros(K)
                for t in quads:
                    q = q + proj_tile(t, slot, F, mode)
                assert np.allclose(v.values, q.values, atol=1e-12), (slot, mode.kind)

    def test_scale_compatibility_fails_for_valuation_two(self):
        # the obstruction: multiplying by a with |a| = 2 shifts images by
        # a full tile frequency, so the two tilings genuinely disagree
        K = 5
        F = rand2d(K, 6)
        P = Bitile(-1, 1, 0, 3)
        quads = [
            Tile(P.scale - 1, 2 * P.m0 + h0, 2 * P.m2 + h2, P.n)
            for h0 in (0, 1)
            for h2 in (0, 1)
        ]
        mode = ProjectionMode.diagonal(WalshNumber.from_float(2.75))
        v = proj_bitile(P, 1, F, mode)
        q = GridFunction2D.zeros(K)
        for t in quads:
            q = q + proj_tile(t, 1, F, mode)
        assert np.max(np.abs(v.values - q.values)) > 1e-6

    def test_diagonal_region_unit_multiplier(self):
        t = Tile(-2, 1, 2, 5)
        mask = diagonal_region(t, WalshNumber(1), 5)
        assert mask.sum() == 1 and mask[5]

    def test_diagonal_region_partitions_for_units(self):
        K = 5
        a = WalshNumber.from_float(1.5)
        total = np.zeros(1 << (K - 2), dtype=int)
        for n in range(1 << (K - 2)):
            total += diagonal_region(Tile(-2, 0, 0, n), a, K).astype(int)
        assert np.all(total == 1)

    def test_collection_projection_idempotent(self):
        K = 4
        F = rand2d(K, 7)
        coll = sorted(
            down_set(all_bitiles(K), Bitile(0, 0, 0, 1)),
            key=lambda p: (p.scale, p.m0, p.m2, p.n),
        )
        for mode in self.modes(K):
            for slot in (0, 1, 2):
                pf = proj_collection(coll, slot, F, mode)
                again = proj_collection(coll, slot, pf, mode)
                assert np.allclose(again.values, pf.values, atol=1e-12)

    def test_errors(self):
        F = rand2d(3, 8)
        with pytest.raises(ValueError, match="frequency beyond resolution"):
            proj_tile(Tile(0, 0, 0, 8), 0, F)
        with pytest.raises(ValueError, match="slot 1 requires a projection mode"):
            proj_tile(Tile(0, 0, 0, 1), 1, F)
        with pytest.raises(ValueError, match="not localized"):
            proj_tile(Tile(-1, 2, 0, 1), 0, F)
        with pytest.raises(ValueError, match="resolution too small"):
            all_bitiles(1)

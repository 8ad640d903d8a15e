"""Parallelogram covering algorithms and the Lipschitz-Kakeya maximal operator.

Parallelograms have two vertical edges and a dyadic shadow on the
horizontal axis.  The covering algorithm repeatedly selects a widest
remaining parallelogram and discards everything already buried under the
vertical maximal function of the height-dilated selection; the selected
family admits exact overlap certificates.  All set measurements happen on
an N x N grid of cell centers over the unit square, with N a power of
two; measures of single parallelograms are exact shadow times height.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .gridfn import GridFunction2D
from .walsh import DyadicInterval

VERTICAL_THRESHOLD = 1e-4  # removal level of the covering iteration
DENSITY_SLOPE_BOUND = 1.0 / 30.0  # L(R) * Lipschitz constant cap


@dataclass(frozen=True)
class Parallelogram:
    """Vertical-edged parallelogram over a dyadic shadow.

    The lower edge starts at (left end of shadow, base_y) and runs with
    the given slope; vertical edges have the given height.  Vertical
    sections are half-open, matching the half-open shadow.
    """

    shadow: DyadicInterval
    base_y: float
    slope: float
    height: float

    def __post_init__(self):
        if self.height < 0:
            raise ValueError("height must be nonnegative")

    @property
    def length(self) -> float:
        return self.shadow.length

    @property
    def x_left(self) -> float:
        return self.shadow.index * self.shadow.length

    @property
    def x_right(self) -> float:
        return (self.shadow.index + 1) * self.shadow.length

    @property
    def measure(self) -> float:
        return self.length * self.height

    @property
    def uncertainty(self) -> Tuple[float, float]:
        """Closed slope interval of length 2 height / length, centered."""
        half = self.height / self.length
        return (self.slope - half, self.slope + half)

    def y_bounds(self, x: float) -> Tuple[float, float]:
        lo = self.base_y + self.slope * (x - self.x_left)
        return (lo, lo + self.height)

    def center_y(self, x: float) -> float:
        return self.base_y + self.slope * (x - self.x_left) + 0.5 * self.height

    def height_dilate(self, a: float) -> "Parallelogram":
        """Same center, slope, and shadow; height scaled by a.

        This is the dilate the covering iteration uses.
        """
        if a < 0:
            raise ValueError("dilation factor must be nonnegative")
        return Parallelogram(
            self.shadow,
            self.base_y + 0.5 * (1.0 - a) * self.height,
            self.slope,
            a * self.height,
        )

    def grid_cells(self, n: int):
        """Column indices with per-column half-open cell index ranges."""
        width = self.length * n
        if width < 1.0:
            raise ValueError("shadow finer than the grid")
        c_lo = int(round(self.x_left * n))
        cols = np.arange(c_lo, int(round(self.x_right * n)))
        x = (cols + 0.5) / n
        lo = self.base_y + self.slope * (x - self.x_left)
        y_lo = np.clip(np.ceil(lo * n - 0.5), 0, n).astype(np.int64)
        y_hi = np.clip(np.ceil((lo + self.height) * n - 0.5), 0, n).astype(
            np.int64
        )
        return cols, y_lo, np.maximum(y_hi, y_lo)

    def mask(self, n: int) -> np.ndarray:
        out = np.zeros((n, n), dtype=bool)
        cols, y_lo, y_hi = self.grid_cells(n)
        for c, a, b in zip(cols, y_lo, y_hi):
            out[c, a:b] = True
        return out


@dataclass(frozen=True)
class ExpandedParallelogram:
    """Full dilate: both side lengths scaled about the center.

    The shadow of a full dilate is no longer dyadic, so this lives in its
    own type; its uncertainty interval coincides with the original's.
    """

    x_left: float
    x_right: float
    base_y: float
    slope: float
    height: float

    @property
    def uncertainty(self) -> Tuple[float, float]:
        half = self.height / (self.x_right - self.x_left)
        return (self.slope - half, self.slope + half)


def full_dilate(r: Parallelogram, a: float) -> ExpandedParallelogram:
    if a < 0:
        raise ValueError("dilation factor must be nonnegative")
    xc = 0.5 * (r.x_left + r.x_right)
    half_l = 0.5 * a * r.length
    yc_left = r.center_y(xc - half_l)
    return ExpandedParallelogram(
        xc - half_l,
        xc + half_l,
        yc_left - 0.5 * a * r.height,
        r.slope,
        a * r.height,
    )


class SlopeField:
    """Grid of slope values in [-1, 1] with an optional Lipschitz certificate.

    The certificate is a recorded constant, not recomputed; generators
    that construct fields as minima of cone functions certify it exactly.
    """

    def __init__(self, values, lipschitz: Optional[float] = None):
        v = np.asarray(values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("slope field must be square")
        n = v.shape[0]
        if n & (n - 1):
            raise ValueError("grid side must be a power of two")
        if np.any(np.abs(v) > 1.0):
            raise ValueError("slopes must lie in [-1, 1]")
        self.values = v
        self.n = n
        self.lipschitz = None if lipschitz is None else float(lipschitz)

    @classmethod
    def constant(cls, n: int, value: float) -> "SlopeField":
        return cls(np.full((n, n), float(value)), lipschitz=0.0)

    def measured_lipschitz(self) -> float:
        """Largest slope between adjacent cell centers; a lower bound."""
        dx = np.abs(np.diff(self.values, axis=0)).max(initial=0.0)
        dy = np.abs(np.diff(self.values, axis=1)).max(initial=0.0)
        return max(dx, dy) * self.n

    def lipschitz_hypothesis(self, r: Parallelogram) -> bool:
        """Whether L(R) times the certified constant stays under 1/30."""
        if self.lipschitz is None:
            raise ValueError("no Lipschitz certificate recorded")
        return r.length * self.lipschitz <= DENSITY_SLOPE_BOUND


def e_set(r: Parallelogram, u: SlopeField) -> np.ndarray:
    """Cells of R whose slope value lies in the uncertainty interval."""
    lo, hi = r.uncertainty
    out = np.zeros((u.n, u.n), dtype=bool)
    cols, y_lo, y_hi = r.grid_cells(u.n)
    for c, a, b in zip(cols, y_lo, y_hi):
        seg = u.values[c, a:b]
        out[c, a:b] = (seg >= lo) & (seg <= hi)
    return out


def density(r: Parallelogram, u: SlopeField) -> float:
    """|E(R)| / |R| in grid cells; vacuously 1 for a cell-free R."""
    cols, y_lo, y_hi = r.grid_cells(u.n)
    total = int((y_hi - y_lo).sum())
    if total == 0:
        return 1.0
    lo, hi = r.uncertainty
    good = 0
    for c, a, b in zip(cols, y_lo, y_hi):
        seg = u.values[c, a:b]
        good += int(((seg >= lo) & (seg <= hi)).sum())
    return good / total


def vertical_superlevel(values: np.ndarray, threshold: float) -> np.ndarray:
    """Cells where the vertical maximal function reaches the threshold.

    A cell passes when some vertical cell interval through it has average
    at least the threshold; that is a best-subarray question for values
    minus threshold, solved by forward and backward running sums.
    """
    g = np.asarray(values, dtype=np.float64) - threshold
    n = g.shape[1]
    fwd = g.copy()
    for j in range(1, n):
        fwd[:, j] += np.maximum(fwd[:, j - 1], 0.0)
    bwd = g.copy()
    for j in range(n - 2, -1, -1):
        bwd[:, j] += np.maximum(bwd[:, j + 1], 0.0)
    best = fwd + bwd - g
    return best >= 0.0


def vertical_maximal(values: np.ndarray) -> np.ndarray:
    """Exact vertical maximal function; quadratic per column, for checks."""
    v = np.abs(np.asarray(values, dtype=np.float64))
    n_cols, n = v.shape
    out = np.zeros_like(v)
    for c in range(n_cols):
        s = np.concatenate([[0.0], np.cumsum(v[c])])
        for a in range(n):
            avgs = (s[a + 1 :] - s[a]) / np.arange(1, n - a + 1)
            # cells a..b-1 see the interval [a, b); sweep b downward so a
            # running maximum covers every cell of the interval
            run = np.maximum.accumulate(avgs[::-1])[::-1]
            out[c, a:] = np.maximum(out[c, a:], run)
    return out


@dataclass(frozen=True)
class CoverStep:
    selected: int
    removed: Tuple[int, ...]
    witnesses: Tuple[float, ...]


@dataclass(frozen=True)
class CoverTrace:
    steps: Tuple[CoverStep, ...]
    density_failures: Tuple[int, ...]


def greedy_cover(
    parallelograms: Sequence[Parallelogram],
    u: SlopeField,
    delta: Optional[float] = None,
):
    """Iterative covering selection with the 1e-4 vertical threshold.

    Repeatedly selects a remaining parallelogram of maximal shadow length
    (ties: larger height, then input order) and removes everything whose
    cells all sit where the vertical maximal function of the selection's
    7-fold height-dilates reaches 1e-4.  The trace records, per removed
    input, a certified lower bound on that maximal function over its
    cells.  When delta is given, inputs failing the density condition
    |E(R)| >= delta |R| are reported in the trace and still processed:
    the precondition is the caller's, not repaired here.
    """
    n = u.n
    failures: List[int] = []
    if delta is not None:
        if not 0.0 < delta <= 1.0:
            raise ValueError("delta must lie in (0, 1]")
        failures = [
            i
            for i, r in enumerate(parallelograms)
            if density(r, u) < delta
        ]
    cells = [r.grid_cells(n) for r in parallelograms]
    stock = list(range(len(parallelograms)))
    field = np.zeros((n, n))
    selected: List[int] = []
    steps: List[CoverStep] = []
    while stock:
        pick = min(
            stock,
            key=lambda i: (
                -parallelograms[i].length,
                -parallelograms[i].height,
                i,
            ),
        )
        selected.append(pick)
        cols, y_lo, y_hi = parallelograms[pick].height_dilate(7.0).grid_cells(n)
        for c, a, b in zip(cols, y_lo, y_hi):
            field[c, a:b] += 1.0
        g = field - VERTICAL_THRESHOLD
        fwd = g.copy()
        for j in range(1, n):
            fwd[:, j] += np.maximum(fwd[:, j - 1], 0.0)
        bwd = g.copy()
        for j in range(n - 2, -1, -1):
            bwd[:, j] += np.maximum(bwd[:, j + 1], 0.0)
        best = fwd + bwd - g
        outside = np.zeros((n, n + 1))
        outside[:, 1:] = np.cumsum(best < 0.0, axis=1)
        removed = []
        witnesses = []
        for i in list(stock):
            cols_i, lo_i, hi_i = cells[i]
            if int((outside[cols_i, hi_i] - outside[cols_i, lo_i]).sum()):
                continue
            removed.append(i)
            margin = min(
                (
                    best[c, a:b].min()
                    for c, a, b in zip(cols_i, lo_i, hi_i)
                    if b > a
                ),
                default=np.inf,
            )
            witnesses.append(VERTICAL_THRESHOLD + max(margin, 0.0) / n)
        stock = [i for i in stock if i not in set(removed)]
        steps.append(CoverStep(pick, tuple(removed), tuple(witnesses)))
    chosen = [parallelograms[i] for i in selected]
    return chosen, CoverTrace(tuple(steps), tuple(failures))


def _linear_cross(p0, p1, q0, q1, xl, xr):
    """x where two chords over [xl, xr] cross, if strictly inside."""
    d0 = p0 - q0
    d1 = p1 - q1
    if d0 == d1:
        return None
    t = d0 / (d0 - d1)
    if 0.0 < t < 1.0:
        return xl + t * (xr - xl)
    return None


def intersection_measure(rs: Sequence[Parallelogram]) -> float:
    """Exact area of the intersection of finitely many parallelograms."""
    if not rs:
        return 0.0
    xl = max(r.x_left for r in rs)
    xr = min(r.x_right for r in rs)
    if xl >= xr:
        return 0.0
    bots = [(r.y_bounds(xl)[0], r.y_bounds(xr)[0]) for r in rs]
    tops = [(r.y_bounds(xl)[1], r.y_bounds(xr)[1]) for r in rs]
    cuts = {xl, xr}
    chords = bots + tops
    for i in range(len(chords)):
        for j in range(i + 1, len(chords)):
            x = _linear_cross(*chords[i], *chords[j], xl, xr)
            if x is not None:
                cuts.add(x)
    xs = sorted(cuts)

    def gap(x):
        t = (x - xl) / (xr - xl)
        top = min(a + t * (b - a) for a, b in tops)
        bot = max(a + t * (b - a) for a, b in bots)
        return top - bot

    area = 0.0
    for a, b in zip(xs, xs[1:]):
        ga, gb = gap(a), gap(b)
        if ga <= 0.0 and gb <= 0.0:
            continue
        if ga >= 0.0 and gb >= 0.0:
            area += 0.5 * (ga + gb) * (b - a)
        else:
            # one sign change; the chord crossing zero cuts the trapezoid
            root = a + (b - a) * ga / (ga - gb)
            if ga > 0.0:
                area += 0.5 * ga * (root - a)
            else:
                area += 0.5 * gb * (b - root)
    return area


def uncertainty_overlap(rs: Sequence[Parallelogram]) -> bool:
    lo = max(r.uncertainty[0] for r in rs)
    hi = min(r.uncertainty[1] for r in rs)
    return lo <= hi


def overlap_check(
    selected: Sequence[Parallelogram],
    u: SlopeField,
    q_or_n: int,
    delta: float = 1.0,
) -> dict:
    """Overlap functionals of a selected family, with comparison ratios.

    Computes the q-th power integral of the sum of E(R) indicators, the
    n-fold overlap sum over ordered tuples with intersecting uncertainty
    intervals (exact areas), and the grid square integral of the sum of R
    indicators against delta^-1 times the total measure.
    """
    n = int(q_or_n)
    if n < 1:
        raise ValueError("order must be at least 1")
    if not 0.0 < delta <= 1.0:
        raise ValueError("delta must lie in (0, 1]")
    grid = u.n
    e_field = np.zeros((grid, grid))
    r_field = np.zeros((grid, grid))
    for r in selected:
        e_field += e_set(r, u)
        r_field += r.mask(grid)
    cell = 1.0 / grid ** 2
    e_integral = float((e_field ** n).sum() * cell)
    square_integral = float((r_field ** 2).sum() * cell)
    total = sum(r.measure for r in selected)

    overlap = 0.0
    if selected:
        order = list(selected)

        def extend(chain: List[Parallelogram]):
            nonlocal overlap
            if len(chain) == n:
                overlap += intersection_measure(chain)
                return
            for r in order:
                trial = chain + [r]
                if not uncertainty_overlap(trial):
                    continue
                if intersection_measure(trial) <= 0.0:
                    continue
                extend(trial)

        extend([])

    def ratio(num, den):
        if num == 0.0:
            return 0.0
        return num / den if den else np.inf

    return {
        "order": n,
        "e_integral": e_integral,
        "e_ratio": ratio(e_integral, total),
        "u_overlap_sum": overlap,
        "u_overlap_ratio": ratio(overlap, total),
        "square_integral": square_integral,
        "square_ratio": ratio(square_integral, total / delta),
        "sum_measures": total,
        "delta": delta,
    }


def _fractions(r: Parallelogram):
    xl = Fraction(r.shadow.index) * Fraction(2) ** r.shadow.scale
    xr = Fraction(r.shadow.index + 1) * Fraction(2) ** r.shadow.scale
    return xl, xr, Fraction(r.base_y), Fraction(r.slope), Fraction(r.height)


def lemma7r_check(r: Parallelogram, rp: Parallelogram):
    """Containment of 7-fold height-dilates, in exact rational arithmetic.

    Hypotheses: equal shadows, touching uncertainty intervals, nonempty
    intersection, and 7 H(R) <= H(R').  When any fails the answer is the
    string "inapplicable" rather than False; under the hypotheses the
    containment 7R inside 7R' is checked at the shadow endpoints, which
    suffices because the boundary gaps are linear in x.
    """
    if r.shadow != rp.shadow:
        return "inapplicable"
    xl, xr, b, s, h = _fractions(r)
    _, _, bp, sp, hp = _fractions(rp)
    if 7 * h > hp:
        return "inapplicable"
    length = xr - xl
    if abs(s - sp) * length > h + hp:  # uncertainty intervals disjoint
        return "inapplicable"

    def center_gap(x):
        return (bp + sp * (x - xl) + hp / 2) - (b + s * (x - xl) + h / 2)

    g_l, g_r = center_gap(xl), center_gap(xr)
    touch = (h + hp) / 2
    crosses = (g_l <= 0 <= g_r) or (g_r <= 0 <= g_l)
    if not (crosses or abs(g_l) < touch or abs(g_r) < touch):
        return "inapplicable"
    slack = (7 * hp - 7 * h) / 2
    return abs(g_l) <= slack and abs(g_r) <= slack


def lk_maximal(
    f: GridFunction2D, parallelograms: Sequence[Parallelogram]
) -> GridFunction2D:
    """Pointwise largest average of f over a family member through the cell."""
    n = 1 << f.resolution
    out = np.zeros((n, n))
    for r in parallelograms:
        cols, y_lo, y_hi = r.grid_cells(n)
        count = int((y_hi - y_lo).sum())
        if count == 0:
            continue
        total = 0.0
        for c, a, b in zip(cols, y_lo, y_hi):
            total += f.values[c, a:b].sum()
        avg = total / count
        for c, a, b in zip(cols, y_lo, y_hi):
            np.maximum(out[c, a:b], avg, out=out[c, a:b])
    return GridFunction2D(f.resolution, out)

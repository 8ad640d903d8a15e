"""Cell-constant functions on the dyadic grid of resolution K.

A 1D function is a vector of 2^K values, one per cell [i 2^-K, (i+1) 2^-K)
of [0, 1); a 2D function is the analogous 2^K x 2^K array, first index =
first argument.  Integrals weigh cells by 2^-K per axis, so all norms and
inner products match the continuum ones for cell-constant integrands.
"""

from __future__ import annotations

import numpy as np

from .walsh import DyadicInterval


def _check_resolution(resolution: int):
    if not isinstance(resolution, (int, np.integer)) or resolution < 0:
        raise ValueError("resolution must be a nonnegative integer")


def _interval_slice(interval: DyadicInterval, resolution: int) -> slice:
    if interval.scale < -resolution:
        raise ValueError("interval below resolution")
    if interval.scale > 0 or not DyadicInterval(0, 0).contains(interval):
        raise ValueError("interval not contained in [0, 1)")
    width = 1 << (resolution + interval.scale)
    return slice(interval.index * width, (interval.index + 1) * width)


class GridFunction1D:
    __slots__ = ("resolution", "values")

    def __init__(self, resolution: int, values):
        _check_resolution(resolution)
        v = np.asarray(values, dtype=np.float64)
        if v.shape != (1 << resolution,):
            raise ValueError("values length must be 2^resolution")
        self.resolution = int(resolution)
        self.values = v

    @classmethod
    def zeros(cls, resolution: int) -> "GridFunction1D":
        return cls(resolution, np.zeros(1 << resolution))

    @classmethod
    def indicator(cls, interval: DyadicInterval, resolution: int) -> "GridFunction1D":
        v = np.zeros(1 << resolution)
        v[_interval_slice(interval, resolution)] = 1.0
        return cls(resolution, v)

    def _compat(self, other: "GridFunction1D"):
        if self.resolution != other.resolution:
            raise ValueError("resolution mismatch")

    def integral(self) -> float:
        return float(self.values.sum()) * 2.0 ** (-self.resolution)

    def norm(self, p: float = 2.0) -> float:
        if p == np.inf:
            return float(np.abs(self.values).max(initial=0.0))
        if p < 1:
            raise ValueError("norm exponent must be >= 1 or inf")
        s = float((np.abs(self.values) ** p).sum()) * 2.0 ** (-self.resolution)
        return s ** (1.0 / p)

    def inner(self, other: "GridFunction1D") -> float:
        self._compat(other)
        return float(self.values @ other.values) * 2.0 ** (-self.resolution)

    def restrict(self, interval: DyadicInterval) -> "GridFunction1D":
        """Zero outside the interval."""
        v = np.zeros_like(self.values)
        sl = _interval_slice(interval, self.resolution)
        v[sl] = self.values[sl]
        return GridFunction1D(self.resolution, v)

    def __add__(self, other):
        self._compat(other)
        return GridFunction1D(self.resolution, self.values + other.values)

    def __sub__(self, other):
        self._compat(other)
        return GridFunction1D(self.resolution, self.values - other.values)

    def __mul__(self, other):
        if isinstance(other, GridFunction1D):
            self._compat(other)
            return GridFunction1D(self.resolution, self.values * other.values)
        return GridFunction1D(self.resolution, self.values * float(other))

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction1D(self.resolution, -self.values)

    def __repr__(self):
        return f"GridFunction1D(K={self.resolution})"


class GridFunction2D:
    __slots__ = ("resolution", "values")

    def __init__(self, resolution: int, values):
        _check_resolution(resolution)
        n = 1 << resolution
        v = np.asarray(values, dtype=np.float64)
        if v.shape != (n, n):
            raise ValueError("values shape must be (2^resolution, 2^resolution)")
        self.resolution = int(resolution)
        self.values = v

    @classmethod
    def zeros(cls, resolution: int) -> "GridFunction2D":
        n = 1 << resolution
        return cls(resolution, np.zeros((n, n)))

    @classmethod
    def indicator_box(
        cls, first: DyadicInterval, second: DyadicInterval, resolution: int
    ) -> "GridFunction2D":
        n = 1 << resolution
        v = np.zeros((n, n))
        v[_interval_slice(first, resolution), _interval_slice(second, resolution)] = 1.0
        return cls(resolution, v)

    def _compat(self, other: "GridFunction2D"):
        if self.resolution != other.resolution:
            raise ValueError("resolution mismatch")

    def integral(self) -> float:
        return float(self.values.sum()) * 4.0 ** (-self.resolution)

    def norm(self, p: float = 2.0) -> float:
        if p == np.inf:
            return float(np.abs(self.values).max(initial=0.0))
        if p < 1:
            raise ValueError("norm exponent must be >= 1 or inf")
        s = float((np.abs(self.values) ** p).sum()) * 4.0 ** (-self.resolution)
        return s ** (1.0 / p)

    def inner(self, other: "GridFunction2D") -> float:
        self._compat(other)
        return float(np.vdot(self.values, other.values)) * 4.0 ** (-self.resolution)

    def restrict(self, first: DyadicInterval, second: DyadicInterval) -> "GridFunction2D":
        """Zero outside the dyadic box first x second."""
        v = np.zeros_like(self.values)
        s1 = _interval_slice(first, self.resolution)
        s2 = _interval_slice(second, self.resolution)
        v[s1, s2] = self.values[s1, s2]
        return GridFunction2D(self.resolution, v)

    def transpose(self) -> "GridFunction2D":
        return GridFunction2D(self.resolution, self.values.T.copy())

    def __add__(self, other):
        self._compat(other)
        return GridFunction2D(self.resolution, self.values + other.values)

    def __sub__(self, other):
        self._compat(other)
        return GridFunction2D(self.resolution, self.values - other.values)

    def __mul__(self, other):
        if isinstance(other, GridFunction2D):
            self._compat(other)
            return GridFunction2D(self.resolution, self.values * other.values)
        return GridFunction2D(self.resolution, self.values * float(other))

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction2D(self.resolution, -self.values)

    def __repr__(self):
        return f"GridFunction2D(K={self.resolution})"

"""Finite pointed metric spaces, snowflake transforms and pair gauges.

Points are indexed ``0..n-1``; every space carries a base point index and a
dense symmetric distance matrix.  All tolerance-sensitive comparisons use the
absolute tolerance :data:`TOL`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.sparse.csgraph import shortest_path

from .errors import (
    AsymmetricMatrix,
    ExponentOutOfRange,
    MetricError,
    NegativeDistance,
    SingletonSpace,
    TriangleViolation,
    ZeroOffDiagonal,
)

TOL = 1e-12


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def pair_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Unordered pairs ``i < j`` in lexicographic order."""
    return np.triu_indices(n, k=1)


def argext_pair(values: np.ndarray, n: int, mode: str = "max") -> tuple[float, tuple[int, int]]:
    """Extreme of a pair-indexed vector with lexicographic tie-break.

    ``values`` must be ordered like :func:`pair_indices`; ``np.argmax`` and
    ``np.argmin`` return the first occurrence, which is the lexicographically
    smallest pair.
    """
    iu, ju = pair_indices(n)
    k = int(np.argmax(values) if mode == "max" else np.argmin(values))
    return float(values[k]), (int(iu[k]), int(ju[k]))


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    """A validated finite metric space with a base point.

    Build instances with :func:`validate_metric` (or the helpers in this
    module); the constructor itself does not re-check the metric axioms.
    """

    dist: np.ndarray
    base: int = 0
    n: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "dist", _frozen(self.dist))
        object.__setattr__(self, "n", int(self.dist.shape[0]))

    def __eq__(self, other):
        if not isinstance(other, FiniteMetricSpace):
            return NotImplemented
        return self.base == other.base and np.array_equal(self.dist, other.dist)

    __hash__ = None

    @property
    def diameter(self) -> float:
        return float(self.dist.max()) if self.n else 0.0

    def pair_distances(self) -> np.ndarray:
        return self.dist[pair_indices(self.n)]

    def to_dict(self) -> dict:
        return {"n": self.n, "base": self.base, "dist": self.dist.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "FiniteMetricSpace":
        space = validate_metric(data["dist"], data.get("base", 0))
        if "n" in data and int(data["n"]) != space.n:
            raise MetricError(f"declared n={data['n']} but matrix has {space.n} rows")
        return space


def validate_metric(matrix, base: int = 0, tol: float = TOL) -> FiniteMetricSpace:
    """Check the metric axioms on ``matrix`` and wrap it as a space.

    Raises the first failing axiom: :class:`NegativeDistance`,
    :class:`AsymmetricMatrix`, :class:`ZeroOffDiagonal` (also used for a
    nonzero diagonal) or :class:`TriangleViolation` ``(i, j, k)`` meaning
    ``d(i,j) > d(i,k) + d(k,j)``, reported for the lexicographically first
    violating triple.
    """
    d = np.array(matrix, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1] or d.shape[0] < 1:
        raise MetricError(f"distance matrix must be square and nonempty, got shape {d.shape}")
    n = d.shape[0]
    if not (0 <= int(base) < n):
        raise MetricError(f"base point {base} out of range for {n} points")
    if not np.all(np.isfinite(d)):
        raise MetricError("distance matrix contains non-finite entries")

    neg = np.argwhere(d < 0)
    if len(neg):
        raise NegativeDistance(*map(int, neg[0]))
    asym = np.argwhere(np.abs(d - d.T) > tol)
    if len(asym):
        raise AsymmetricMatrix(*map(int, asym[0]))
    diag = np.flatnonzero(np.diag(d) != 0)
    if len(diag):
        raise MetricError(f"dist[{diag[0]}][{diag[0]}] must be 0")
    off = ~np.eye(n, dtype=bool)
    zero = np.argwhere((d <= 0) & off)
    if len(zero):
        raise ZeroOffDiagonal(*map(int, zero[0]))

    d = (d + d.T) / 2
    violation = _first_triangle_violation(d, tol)
    if violation is not None:
        raise TriangleViolation(*violation)
    return FiniteMetricSpace(d, int(base))


def _first_triangle_violation(d: np.ndarray, tol: float) -> Optional[tuple[int, int, int]]:
    n = d.shape[0]
    # chunk over i to keep the n^3 comparison tensor small
    step = max(1, 2_000_000 // max(1, n * n))
    for lo in range(0, n, step):
        rows = d[lo:lo + step]
        # through[i, j, k] = d(i,k) + d(k,j)
        through = rows[:, None, :] + d.T[None, :, :]
        bad = np.argwhere(rows[:, :, None] > through + tol)
        if len(bad):
            i, j, k = bad[0]
            return int(i) + lo, int(j), int(k)
    return None


def snowflake(space: FiniteMetricSpace, alpha: float) -> FiniteMetricSpace:
    """The snowflaked space with distances ``d**alpha``, ``0 < alpha <= 1``."""
    if not (0 < alpha <= 1):
        raise ExponentOutOfRange(alpha)
    return validate_metric(np.power(space.dist, alpha), space.base)


def min_gap(space: FiniteMetricSpace) -> tuple[float, tuple[int, int]]:
    """Smallest distance between distinct points and the first pair attaining it."""
    if space.n < 2:
        raise SingletonSpace("min_gap")
    return argext_pair(space.pair_distances(), space.n, "min")


def dyadic_points(K: int) -> np.ndarray:
    """Coordinates ``0, 2**-1, ..., 2**-K`` in index order."""
    return np.concatenate([[0.0], 2.0 ** -np.arange(1, K + 1)])


def dyadic_chain(K: int) -> FiniteMetricSpace:
    """The points ``{0} U {2**-k : 1 <= k <= K}`` of the real line, based at 0.

    Consecutive gaps shrink geometrically, so the minimal distance ``2**-K``
    tends to zero as ``K`` grows.
    """
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    x = dyadic_points(K)
    return validate_metric(np.abs(x[:, None] - x[None, :]), base=0)


def line_space(points, base: int = 0) -> FiniteMetricSpace:
    x = np.asarray(points, dtype=float)
    return validate_metric(np.abs(x[:, None] - x[None, :]), base=base)


def normed_point_space(points, ord=2, base: int = 0) -> FiniteMetricSpace:
    """Points of R^m (rows of ``points``) under the ``ord``-norm distance.

    ``ord`` is a numpy order or one of ``"l1"``, ``"l2"``, ``"linf"``.
    """
    ord = {"l1": 1, "l2": 2, "linf": np.inf}.get(ord, ord)
    x = np.asarray(points, dtype=float)
    diff = x[:, None, :] - x[None, :, :]
    return validate_metric(np.linalg.norm(diff, ord=ord, axis=-1), base=base)


def random_metric_space(n: int, seed, low: float = 0.1, high: float = 1.0) -> FiniteMetricSpace:
    """Uniform random symmetric distances repaired into a metric by shortest paths."""
    rng = np.random.default_rng(seed)
    d = np.zeros((n, n))
    iu = np.triu_indices(n, k=1)
    d[iu] = rng.uniform(low, high, size=len(iu[0]))
    d = d + d.T
    d = shortest_path(d, method="FW", directed=False)
    return validate_metric(d, base=0)


_KINDS = ("power", "metric", "raw")


@dataclass(frozen=True, eq=False)
class GaugePair:
    """A symmetric pair function ``phi`` vanishing exactly on the diagonal.

    ``kind`` is ``"power"`` (``d**alpha`` of some metric), ``"metric"`` (a
    second metric on the same points) or ``"raw"`` (any positive symmetric
    function; no triangle inequality is required).  Values are always kept as
    a full matrix so lookups never recompute powers.
    """

    kind: str
    values: np.ndarray
    alpha: Optional[float] = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown gauge kind {self.kind!r}")
        object.__setattr__(self, "values", _frozen(self.values))

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    def __call__(self, i: int, j: int) -> float:
        return float(self.values[i, j])

    def pair_values(self) -> np.ndarray:
        return self.values[pair_indices(self.n)]

    @classmethod
    def power(cls, space: FiniteMetricSpace, alpha: float) -> "GaugePair":
        if not (0 < alpha <= 1):
            raise ExponentOutOfRange(alpha)
        return cls("power", np.power(space.dist, alpha), float(alpha))

    @classmethod
    def metric(cls, other) -> "GaugePair":
        if isinstance(other, FiniteMetricSpace):
            other = other.dist
        return cls("metric", validate_metric(other).dist)

    @classmethod
    def raw(cls, matrix) -> "GaugePair":
        v = np.array(matrix, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise MetricError(f"gauge matrix must be square, got shape {v.shape}")
        if np.any(v < 0):
            raise NegativeDistance(*map(int, np.argwhere(v < 0)[0]))
        if not np.array_equal(v, v.T):
            raise AsymmetricMatrix(*map(int, np.argwhere(v != v.T)[0]))
        if np.any(np.diag(v) != 0):
            raise MetricError("gauge must vanish on the diagonal")
        off = ~np.eye(v.shape[0], dtype=bool)
        if np.any((v == 0) & off):
            raise ZeroOffDiagonal(*map(int, np.argwhere((v == 0) & off)[0]))
        return cls("raw", v)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "values": self.values.tolist()}
        if self.alpha is not None:
            out["alpha"] = self.alpha
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "GaugePair":
        kind = data["kind"]
        if kind == "raw":
            return cls.raw(data["values"])
        if kind == "metric":
            return cls.metric(data["values"])
        g = cls.raw(data["values"])
        return cls("power", g.values, data.get("alpha"))


def _check_gauge(space: FiniteMetricSpace, phi: GaugePair) -> None:
    if phi.n != space.n:
        raise ValueError(f"gauge is defined on {phi.n} points, space has {space.n}")


def gauge_ratio_inf(space: FiniteMetricSpace, phi: GaugePair) -> tuple[float, tuple[int, int]]:
    """Minimum of ``phi(x, x') / d(x, x')`` over distinct pairs, with its pair."""
    if space.n < 2:
        raise SingletonSpace("gauge_ratio_inf")
    _check_gauge(space, phi)
    return argext_pair(phi.pair_values() / space.pair_distances(), space.n, "min")

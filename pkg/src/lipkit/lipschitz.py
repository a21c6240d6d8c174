"""Vector-valued functions on finite pointed metric spaces.

A :class:`PointFunction` stores one row per point and vanishes at the base
point.  Norms over pairs are exact maxima over all ``n(n-1)/2`` unordered
pairs; ties are broken lexicographically.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import BoundViolated, EmptySubset, SingletonSpace
from .metric import TOL, FiniteMetricSpace, GaugePair, _check_gauge, argext_pair, pair_indices

_NORMS = {"l1": 1, "l2": 2, "linf": np.inf}


@dataclass(frozen=True)
class TargetSpace:
    """``R^m`` with the l1, l2 or linf norm."""

    m: int = 1
    norm: str = "l2"

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"target dimension must be >= 1, got {self.m}")
        if self.norm not in _NORMS:
            raise ValueError(f"norm must be one of {sorted(_NORMS)}, got {self.norm!r}")

    def row_norms(self, rows: np.ndarray) -> np.ndarray:
        return np.linalg.norm(rows, ord=_NORMS[self.norm], axis=-1)

    def basis(self, k: int = 0) -> np.ndarray:
        e = np.zeros(self.m)
        e[k] = 1.0
        return e

    def to_dict(self) -> dict:
        return {"m": self.m, "norm": self.norm}

    @classmethod
    def from_dict(cls, data: dict) -> "TargetSpace":
        return cls(int(data["m"]), data["norm"])


SCALAR = TargetSpace(1, "l2")


class PointFunction:
    """A map from the points of ``space`` into ``target``, zero at the base."""

    __slots__ = ("space", "target", "values")

    def __init__(self, space: FiniteMetricSpace, values, target: TargetSpace | None = None):
        v = np.array(values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if target is None:
            target = TargetSpace(v.shape[1]) if v.shape[1] > 1 else SCALAR
        if v.shape != (space.n, target.m):
            raise ValueError(f"values have shape {v.shape}, expected {(space.n, target.m)}")
        if np.any(v[space.base] != 0):
            raise ValueError("function must vanish at the base point")
        v.setflags(write=False)
        self.space = space
        self.target = target
        self.values = v

    def __repr__(self):
        return f"PointFunction(n={self.space.n}, target={self.target})"

    @classmethod
    def zero(cls, space: FiniteMetricSpace, target: TargetSpace = SCALAR) -> "PointFunction":
        return cls(space, np.zeros((space.n, target.m)), target)

    @property
    def scalar_values(self) -> np.ndarray:
        if self.target.m != 1:
            raise ValueError("function is not scalar")
        return self.values[:, 0]

    def on(self, space: FiniteMetricSpace) -> "PointFunction":
        """The same values regarded as a function on another metric of the same points."""
        if space.n != self.space.n or space.base != self.space.base:
            raise ValueError("spaces must share points and base point")
        return PointFunction(space, self.values, self.target)

    def _like(self, values) -> "PointFunction":
        return PointFunction(self.space, values, self.target)

    def _other(self, other) -> np.ndarray:
        if not isinstance(other, PointFunction):
            return NotImplemented
        if other.space.n != self.space.n or other.target != self.target:
            raise ValueError("functions live on different spaces or targets")
        return other.values

    def __add__(self, other):
        v = self._other(other)
        return v if v is NotImplemented else self._like(self.values + v)

    def __sub__(self, other):
        v = self._other(other)
        return v if v is NotImplemented else self._like(self.values - v)

    def __neg__(self):
        return self._like(-self.values)

    def __mul__(self, c):
        return self._like(float(c) * self.values)

    __rmul__ = __mul__

    def pair_ratio(self, i: int, j: int, denom: float) -> float:
        return float(self.target.row_norms(self.values[i] - self.values[j]) / denom)

    def to_dict(self) -> dict:
        return {"values": self.values.tolist(), "target": self.target.to_dict()}

    @classmethod
    def from_dict(cls, data: dict, space: FiniteMetricSpace) -> "PointFunction":
        return cls(space, data["values"], TargetSpace.from_dict(data["target"]))


@dataclass(frozen=True)
class ClassParams:
    """Parameters of the class of functions with ``phi``-seminorm at most ``s``."""

    phi: GaugePair
    s: float

    def __post_init__(self):
        if not self.s > 0:
            raise ValueError(f"class bound s must be positive, got {self.s!r}")


def pair_increments(f: PointFunction) -> np.ndarray:
    """``||f(i) - f(j)||`` for every unordered pair, in lexicographic order."""
    iu, ju = pair_indices(f.space.n)
    return f.target.row_norms(f.values[iu] - f.values[ju])


def lip_norm(f: PointFunction) -> tuple[float, tuple[int, int]]:
    """Lipschitz norm of ``f`` and the first pair attaining it."""
    if f.space.n < 2:
        raise SingletonSpace("lip_norm")
    return argext_pair(pair_increments(f) / f.space.pair_distances(), f.space.n)


def gauge_seminorm(f: PointFunction, phi: GaugePair) -> tuple[float, tuple[int, int]]:
    """``max ||f(x) - f(x')|| / phi(x, x')`` over distinct pairs."""
    if f.space.n < 2:
        raise SingletonSpace("gauge_seminorm")
    _check_gauge(f.space, phi)
    return argext_pair(pair_increments(f) / phi.pair_values(), f.space.n)


def in_class(f: PointFunction, params: ClassParams) -> bool:
    return gauge_seminorm(f, params.phi)[0] <= params.s


def mcshane_extend(g: Mapping[int, float], L: float, space: FiniteMetricSpace) -> PointFunction:
    """Extend a scalar ``L``-Lipschitz function from a subset to all points.

    Uses the inf-convolution ``f(y) = min_{y' in S} g(y') + L d(y, y')``.  On
    ``S`` the values of ``g`` are copied verbatim, so the restriction is exact
    in floating point.  When the base point is outside ``S`` the result is
    shifted by ``-f(base)``; the restriction then equals ``g`` up to that
    constant.

    Raises
    ------
    EmptySubset
        If ``g`` is empty.
    BoundViolated
        If some pair of ``S`` has ``|g(i) - g(j)| > L d(i, j)``.
    """
    if not g:
        raise EmptySubset("cannot extend from an empty subset")
    if L < 0:
        raise ValueError(f"Lipschitz bound must be nonnegative, got {L!r}")
    idx = np.array(sorted(g), dtype=int)
    if idx.min() < 0 or idx.max() >= space.n:
        raise IndexError("subset index out of range")
    vals = np.array([float(g[i]) for i in idx])
    if space.base in g and g[space.base] != 0:
        raise ValueError("g must vanish at the base point when the base is in the subset")

    d = space.dist[np.ix_(idx, idx)]
    gap = np.abs(vals[:, None] - vals[None, :])
    allowed = L * d
    bad = np.argwhere(np.triu(gap > allowed + TOL * (1 + allowed), k=1))
    if len(bad):
        a, b = bad[0]
        raise BoundViolated(int(idx[a]), int(idx[b]), float(gap[a, b] / d[a, b]), L)

    f = np.min(vals[None, :] + L * space.dist[:, idx], axis=1)
    f[idx] = vals
    if space.base not in g:
        f = f - f[space.base]
    return PointFunction(space, f)


def sample_function(space: FiniteMetricSpace, target: TargetSpace, beta: float, bound: float,
                    seed) -> PointFunction:
    """A seeded random member of the class with ``d**beta``-seminorm at most ``bound``.

    Coordinates are drawn uniformly from ``[-1, 1]``, the base row is zeroed
    and the result is rescaled by ``bound / max(1, seminorm)``.
    """
    if not bound > 0:
        raise ValueError(f"bound must be positive, got {bound!r}")
    phi = GaugePair.power(space, beta)
    rng = np.random.default_rng(seed)
    v = rng.uniform(-1.0, 1.0, size=(space.n, target.m))
    v[space.base] = 0.0
    f = PointFunction(space, v, target)
    if space.n < 2:
        return f
    f = (bound / max(1.0, gauge_seminorm(f, phi)[0])) * f
    # rescaling can overshoot the bound by an ulp
    while gauge_seminorm(f, phi)[0] > bound:
        f = (1 - 2.0 ** -52) * f
    return f

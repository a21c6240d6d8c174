"""Symmetric polyhedral gauges on R^d: support values, barrier cone and polar.

A gauge is ``phi(x) = max_i |<v_i, x>|`` for rows ``v_i``.  Its unit
sublevel set ``C = {phi <= 1}`` is a symmetric polyhedron, bounded exactly
when the rows span R^d.  A dual vector has finite support value on ``C``
exactly when it lies in the row span.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy.optimize import linprog

from .errors import DegeneratePair, DimensionMismatch, EmptySet
from .lipschitz import SCALAR, PointFunction, lip_norm
from .metric import FiniteMetricSpace
from .porosity import PorosityWitness

RANK_TOL = 1e-10


class _Unbounded:
    """Marker for an infinite supremum."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNBOUNDED"

    def __reduce__(self):
        return (_Unbounded, ())


UNBOUNDED = _Unbounded()
Support = Union[float, _Unbounded]


def _rank(a: np.ndarray) -> int:
    if a.size == 0:
        return 0
    sv = np.linalg.svd(a, compute_uv=False)
    return int(np.count_nonzero(sv > RANK_TOL * max(1.0, sv[0])))


@dataclass(frozen=True, eq=False)
class PolyhedralGauge:
    rows: np.ndarray

    def __post_init__(self):
        r = np.array(self.rows, dtype=float)
        if r.ndim != 2 or r.shape[0] < 1 or r.shape[1] < 1:
            raise ValueError(f"rows must be a nonempty (k, dim) array, got shape {r.shape}")
        r.setflags(write=False)
        object.__setattr__(self, "rows", r)

    @property
    def dim(self) -> int:
        return int(self.rows.shape[1])

    @property
    def rank(self) -> int:
        return _rank(self.rows)

    @property
    def degenerate(self) -> bool:
        """True when ``phi`` vanishes on a nonzero vector."""
        return self.rank < self.dim

    def __call__(self, x) -> float:
        return gauge_eval(self, x)

    def to_dict(self) -> dict:
        return {"dim": self.dim, "rows": self.rows.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "PolyhedralGauge":
        g = cls(data["rows"])
        if "dim" in data and int(data["dim"]) != g.dim:
            raise DimensionMismatch(f"declared dim {data['dim']} but rows have {g.dim} columns")
        return g

    @classmethod
    def box(cls, dim: int) -> "PolyhedralGauge":
        """The l-infinity norm."""
        return cls(np.eye(dim))

    @classmethod
    def strip(cls, dim: int = 2, axis: int = 0) -> "PolyhedralGauge":
        """``|x_axis|``; its unit set is a slab containing every other coordinate line."""
        return cls(np.eye(dim)[[axis]])


def _vec(G: PolyhedralGauge, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (G.dim,):
        raise DimensionMismatch(f"vector has shape {x.shape}, gauge has dim {G.dim}")
    return x


def gauge_eval(G: PolyhedralGauge, x) -> float:
    return float(np.abs(G.rows @ _vec(G, x)).max())


def in_row_span(G: PolyhedralGauge, xstar) -> bool:
    """Algebraic test: does ``xstar`` lie in the span of the rows?"""
    y = _vec(G, xstar)
    return _rank(np.vstack([G.rows, y])) == G.rank


def support_value(G: PolyhedralGauge, xstar) -> Support:
    """``sup {<xstar, x> : phi(x) <= 1}`` by linear programming.

    Returns :data:`UNBOUNDED` when the LP is unbounded.
    """
    y = _vec(G, xstar)
    if not np.any(y):
        return 0.0
    k = G.rows.shape[0]
    A = np.vstack([G.rows, -G.rows])
    # presolve can end in model status "Unknown" on unbounded instances
    res = linprog(-y, A_ub=A, b_ub=np.ones(2 * k), bounds=[(None, None)] * G.dim, method="highs",
                  options={"presolve": False})
    if res.status in (2, 3):
        # x = 0 is feasible, so "infeasible or unbounded" can only mean unbounded
        return UNBOUNDED
    if res.status != 0:
        raise RuntimeError(f"support LP failed: {res.message}")
    return float(-res.fun)


def barrier_membership(G: PolyhedralGauge, xstar) -> bool:
    return support_value(G, xstar) is not UNBOUNDED


def polar_membership(G: PolyhedralGauge, xstar, tol: float = 1e-9) -> bool:
    v = support_value(G, xstar)
    return v is not UNBOUNDED and v <= 1.0 + tol


def boundedness_check(G: PolyhedralGauge) -> tuple[bool, Optional[np.ndarray]]:
    """Whether ``{phi <= 1}`` is bounded; otherwise a unit vector on which ``phi`` vanishes."""
    if not G.degenerate:
        return True, None
    _, _, vt = np.linalg.svd(G.rows)
    w = vt[-1]
    # deterministic sign: first nonzero coordinate positive
    nz = np.flatnonzero(np.abs(w) > RANK_TOL)
    if len(nz) and w[nz[0]] < 0:
        w = -w
    w = np.where(np.abs(w) > RANK_TOL, w, 0.0)
    return False, w / np.linalg.norm(w)


def sphere_min(G: PolyhedralGauge, norm: str = "linf") -> float:
    """``min phi(x)`` over the unit sphere of the l1 or l-infinity norm.

    The sphere is a union of facets; on each facet the minimum of the
    polyhedral ``phi`` is an LP in ``(x, t)``.
    """
    return _min_max_abs_on_sphere(G.rows, G.dim, norm)


def _min_max_abs_on_sphere(Y: np.ndarray, dim: int, norm: str) -> float:
    best = np.inf
    k = Y.shape[0]
    # variables (x_1..x_dim, t); minimize t subject to -t <= <y_i, x> <= t
    c = np.zeros(dim + 1)
    c[-1] = 1.0
    ones = np.ones((k, 1))
    A_ub = np.vstack([np.hstack([Y, -ones]), np.hstack([-Y, -ones])])
    b_ub = np.zeros(2 * k)
    for facet in _facets(dim, norm):
        A_eq, b_eq, bounds = facet
        res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                      bounds=bounds + [(0, None)], method="highs")
        if res.status != 0:
            raise RuntimeError(f"sphere LP failed: {res.message}")
        best = min(best, float(res.fun))
    return max(best, 0.0)


def _facets(dim: int, norm: str):
    if norm == "linf":
        for axis in range(dim):
            for sign in (1.0, -1.0):
                bounds = [(-1.0, 1.0)] * dim
                bounds[axis] = (sign, sign)
                yield None, None, bounds
    elif norm == "l1":
        for signs in itertools.product((1.0, -1.0), repeat=dim):
            bounds = [(0.0, None) if sg > 0 else (None, 0.0) for sg in signs]
            yield np.array([list(signs) + [0.0]]), np.array([1.0]), bounds
    else:
        raise ValueError(f"norm must be 'l1' or 'linf', got {norm!r}")


_DUAL = {"linf": 1, "l1": np.inf}


def norming_constant(S: Sequence, norm: str = "linf") -> tuple[float, bool]:
    """Lower constant ``c`` with ``c ||x|| <= N_S(x) <= ||x||`` on ``(R^d, norm)``.

    ``N_S(x) = max_{x* in S} |x*(x)| / ||x*||_*`` where ``||.||_*`` is the dual
    norm.  Zero functionals are ignored.  ``S`` is separating iff it spans the
    dual, and then ``c > 0``.
    """
    if len(S) == 0:
        raise EmptySet("norming_constant needs a nonempty set of functionals")
    Y = np.atleast_2d(np.asarray(S, dtype=float))
    dual_norms = np.linalg.norm(Y, ord=_DUAL[norm], axis=1)
    Y = Y[dual_norms > 0] / dual_norms[dual_norms > 0, None]
    dim = np.atleast_2d(np.asarray(S, dtype=float)).shape[1]
    if len(Y) == 0:
        return 0.0, False
    separating = _rank(Y) == dim
    c = _min_max_abs_on_sphere(Y, dim, norm)
    if not separating:
        c = 0.0
    return c, separating


def norming_functional(x, norm: str = "l1") -> np.ndarray:
    """A dual-unit-ball vertex ``x*`` with ``x*(x) = ||x||``.

    For l1 this is the sign vector (l-infinity unit); for l-infinity the
    signed basis vector at the first largest coordinate (l1 unit).
    """
    x = np.asarray(x, dtype=float)
    if norm == "l1":
        return np.where(x < 0, -1.0, 1.0)
    if norm == "linf":
        k = int(np.argmax(np.abs(x)))
        e = np.zeros_like(x)
        e[k] = 1.0 if x[k] >= 0 else -1.0
        return e
    raise ValueError(f"norm must be 'l1' or 'linf', got {norm!r}")


def linear_witness(space: FiniteMetricSpace, points, pair: tuple[int, int],
                   norm: str = "l1") -> PorosityWitness:
    """Linear witness on a finite subset of ``(R^d, norm)``.

    ``space`` must be ``points`` under the ``norm`` distance.  The witness is
    ``p(x) = x*(x - x_base)`` with ``x*`` a norming dual vertex of
    ``x_a - x_b``, so ``|p(a) - p(b)| = ||x_a - x_b||`` and ``||p||_L <= 1``.
    """
    a, b = map(int, pair)
    if a == b:
        raise DegeneratePair(f"witness pair must have distinct points, got ({a}, {b})")
    X = np.asarray(points, dtype=float)
    if X.shape[0] != space.n:
        raise DimensionMismatch("points and space disagree on the number of points")
    xstar = norming_functional(X[a] - X[b], norm)
    vals = (X - X[space.base]) @ xstar
    p = PointFunction(space, vals, SCALAR)
    K = max(1.0, lip_norm(p)[0])
    return PorosityWitness(p, K, (a, b))

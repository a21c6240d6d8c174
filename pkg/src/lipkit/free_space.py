"""Finite Lipschitz-free spaces.

A molecule is a zero-sum weight vector on the points; its norm is the
Kantorovich-Rubinstein norm, computed two ways:

* primal: minimum-cost transport of the positive part onto the negative part
  (transportation simplex, :func:`kr_norm_primal`);
* dual: maximum of ``sum_i w_i f(i)`` over 1-Lipschitz ``f`` vanishing at the
  base point (HiGHS LP, :func:`kr_norm_dual`).

Base-point maps between spaces lift to linear maps on molecules, whose
adjoint is precomposition.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np
from scipy.optimize import linprog

from .errors import NonInjectiveMap, SingletonSpace, UnbalancedMolecule
from .lipschitz import PointFunction, mcshane_extend
from .metric import FiniteMetricSpace, argext_pair, pair_indices

BALANCE_TOL = 1e-12

TransportPlan = list[tuple[int, int, float]]


@dataclass(frozen=True, eq=False)
class Molecule:
    space: FiniteMetricSpace
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.shape != (self.space.n,):
            raise ValueError(f"weights have shape {w.shape}, expected ({self.space.n},)")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_diracs(cls, space: FiniteMetricSpace, coeffs: Mapping[int, float]) -> "Molecule":
        """``sum c_i delta_i`` with the base weight adjusted to restore zero sum.

        Adding multiples of the base Dirac does not change the element of the
        free space, since evaluation at the base point is zero on every
        base-vanishing function.
        """
        w = np.zeros(space.n)
        for i, c in coeffs.items():
            w[i] += c
        w[space.base] -= w.sum()
        return cls(space, w)

    @classmethod
    def dipole(cls, space: FiniteMetricSpace, x: int, y: int) -> "Molecule":
        """``delta_x - delta_y``."""
        w = np.zeros(space.n)
        w[x] += 1.0
        w[y] -= 1.0
        return cls(space, w)

    def __add__(self, other: "Molecule") -> "Molecule":
        return Molecule(self.space, self.weights + other.weights)

    def __sub__(self, other: "Molecule") -> "Molecule":
        return Molecule(self.space, self.weights - other.weights)

    def __mul__(self, c) -> "Molecule":
        return Molecule(self.space, float(c) * self.weights)

    __rmul__ = __mul__

    def pair(self, f: PointFunction) -> float:
        """Duality pairing ``<m, f> = sum_i w_i f(i)`` for scalar ``f``."""
        return float(self.weights @ f.scalar_values)

    def to_dict(self) -> dict:
        return {"weights": self.weights.tolist()}

    @classmethod
    def from_dict(cls, data: dict, space: FiniteMetricSpace) -> "Molecule":
        return cls(space, data["weights"])


def _check_balance(m: Molecule) -> None:
    total = float(m.weights.sum())
    scale = max(1.0, float(np.abs(m.weights).sum()))
    if abs(total) > BALANCE_TOL * scale:
        raise UnbalancedMolecule(total)


def transport_simplex(supply: np.ndarray, demand: np.ndarray, cost: np.ndarray,
                      max_iter: int = 100_000) -> tuple[float, np.ndarray]:
    """Balanced transportation problem by the primal (u-v) simplex method.

    Starts from the north-west corner basis and pivots with Bland's rule
    (first improving cell in row-major order, lowest-index leaving cell) so
    degenerate bases cannot cycle.

    Parameters
    ----------
    supply : (a,) positive array
    demand : (b,) positive array with the same total
    cost : (a, b) array

    Returns
    -------
    (value, flow)
    """
    a, b = len(supply), len(demand)
    flow = np.zeros((a, b))
    basis: set[tuple[int, int]] = set()
    s, t = supply.astype(float).copy(), demand.astype(float).copy()
    i = j = 0
    while True:
        q = min(s[i], t[j])
        flow[i, j] = q
        basis.add((i, j))
        s[i] -= q
        t[j] -= q
        if i == a - 1 and j == b - 1:
            break
        if i == a - 1:
            j += 1
        elif j == b - 1 or s[i] <= t[j]:
            i += 1
        else:
            j += 1

    eps = 1e-12 * max(1.0, float(np.abs(cost).max()))
    for _ in range(max_iter):
        u, v = _potentials(basis, cost, a, b)
        reduced = cost - u[:, None] - v[None, :]
        entering = None
        for ci, cj in zip(*np.nonzero(reduced < -eps)):
            if (ci, cj) not in basis:
                entering = (int(ci), int(cj))
                break
        if entering is None:
            return float((flow * cost).sum()), flow

        cycle = _cycle(entering, basis, a, b)
        minus = cycle[1::2]
        theta = min(flow[c] for c in minus)
        leaving = min(c for c in minus if flow[c] == theta)
        for k, c in enumerate(cycle):
            flow[c] += theta if k % 2 == 0 else -theta
        flow[leaving] = 0.0
        basis.remove(leaving)
        basis.add(entering)
    raise RuntimeError("transportation simplex did not converge")


def _adjacency(basis, a, b):
    adj: list[list[tuple[int, tuple[int, int]]]] = [[] for _ in range(a + b)]
    for (i, j) in basis:
        adj[i].append((a + j, (i, j)))
        adj[a + j].append((i, (i, j)))
    return adj


def _potentials(basis, cost, a, b):
    # nodes 0..a-1 are rows, a..a+b-1 columns; the basis is a spanning tree
    adj = _adjacency(basis, a, b)
    pot = np.full(a + b, np.nan)
    pot[0] = 0.0
    queue = deque([0])
    while queue:
        x = queue.popleft()
        for y, (i, j) in adj[x]:
            if np.isnan(pot[y]):
                pot[y] = cost[i, j] - pot[x]
                queue.append(y)
    return pot[:a], pot[a:]


def _cycle(entering, basis, a, b):
    """Cells of the pivot cycle, starting with ``entering`` and alternating signs."""
    i, j = entering
    adj = _adjacency(basis, a, b)
    start, goal = i, a + j
    prev: dict[int, tuple[int, tuple[int, int]]] = {start: (-1, (-1, -1))}
    queue = deque([start])
    while queue and goal not in prev:
        x = queue.popleft()
        for y, cell in adj[x]:
            if y not in prev:
                prev[y] = (x, cell)
                queue.append(y)
    # walk back from the column node: the cell touching column j comes first
    path = []
    node = goal
    while node != start:
        node, cell = prev[node]
        path.append(cell)
    return [entering] + path


def kr_norm_primal(m: Molecule) -> tuple[float, TransportPlan]:
    """Kantorovich-Rubinstein norm as a minimum-cost transport.

    Returns the optimal cost and the plan as ``(source, sink, mass)`` triplets
    in point indices, listing only positive masses.
    """
    _check_balance(m)
    w = m.weights
    pos = np.flatnonzero(w > 0)
    neg = np.flatnonzero(w < 0)
    if len(pos) == 0 or len(neg) == 0:
        return 0.0, []
    supply, demand = w[pos], -w[neg]
    # absorb the rounding imbalance into the largest demand
    demand[np.argmax(demand)] += supply.sum() - demand.sum()
    cost = m.space.dist[np.ix_(pos, neg)]
    value, flow = transport_simplex(supply, demand, cost)
    plan = [(int(pos[i]), int(neg[j]), float(flow[i, j]))
            for i, j in zip(*np.nonzero(flow > 0))]
    return value, plan


def kr_norm_dual(m: Molecule) -> tuple[float, PointFunction]:
    """Kantorovich-Rubinstein norm as the Lipschitz-1 maximization LP.

    Returns the optimal value and an optimal scalar 1-Lipschitz function
    vanishing at the base point.
    """
    _check_balance(m)
    space = m.space
    n = space.n
    if n < 2 or not np.any(m.weights):
        return 0.0, PointFunction.zero(space)
    iu, ju = np.nonzero(~np.eye(n, dtype=bool))
    rows = np.arange(len(iu))
    A = np.zeros((len(iu), n))
    A[rows, iu] = 1.0
    A[rows, ju] = -1.0
    bounds = [(0.0, 0.0) if k == space.base else (None, None) for k in range(n)]
    res = linprog(-m.weights, A_ub=A, b_ub=space.dist[iu, ju], bounds=bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(f"dual LP failed: {res.message}")
    f = np.array(res.x)
    f[space.base] = 0.0
    return float(m.weights @ f), PointFunction(space, f)


def kr_norm(m: Molecule) -> float:
    return kr_norm_primal(m)[0]


@dataclass(frozen=True, eq=False)
class LipMap:
    """A base-point preserving map between finite metric spaces."""

    source: FiniteMetricSpace
    target: FiniteMetricSpace
    assignment: tuple[int, ...]

    def __post_init__(self):
        amap = tuple(int(k) for k in self.assignment)
        if len(amap) != self.source.n:
            raise ValueError(f"assignment has {len(amap)} entries, source has {self.source.n} points")
        if any(not (0 <= k < self.target.n) for k in amap):
            raise ValueError("assignment points outside the target")
        if amap[self.source.base] != self.target.base:
            raise ValueError("map must send base point to base point")
        object.__setattr__(self, "assignment", amap)

    def __call__(self, i: int) -> int:
        return self.assignment[i]

    def then(self, other: "LipMap") -> "LipMap":
        """Composition ``other o self``."""
        return LipMap(self.source, other.target, tuple(other(k) for k in self.assignment))

    def image_distances(self) -> np.ndarray:
        idx = np.array(self.assignment)
        return self.target.dist[np.ix_(idx, idx)]

    def collision(self) -> Optional[tuple[int, int]]:
        """First pair of source points sharing an image, if any."""
        seen: dict[int, int] = {}
        for i, k in enumerate(self.assignment):
            if k in seen:
                return seen[k], i
            seen[k] = i
        return None

    @property
    def injective(self) -> bool:
        return self.collision() is None

    @classmethod
    def identity(cls, space: FiniteMetricSpace, target: Optional[FiniteMetricSpace] = None) -> "LipMap":
        return cls(space, target if target is not None else space, tuple(range(space.n)))


@dataclass(frozen=True, eq=False)
class LiftedOperator:
    """Push-forward of molecules along a :class:`LipMap`, ``delta_i -> delta_F(i)``."""

    map: LipMap
    matrix: np.ndarray

    def __call__(self, m: Molecule) -> Molecule:
        if m.space.n != self.map.source.n:
            raise ValueError("molecule does not live on the source space")
        return Molecule(self.map.target, self.matrix @ m.weights)

    def __matmul__(self, other: "LiftedOperator") -> "LiftedOperator":
        return LiftedOperator(other.map.then(self.map), self.matrix @ other.matrix)

    def operator_norm(self) -> tuple[float, tuple[int, int]]:
        """Largest ``||F_hat(delta_x - delta_y)|| / d(x, y)`` over the dipole basis."""
        src = self.map.source
        if src.n < 2:
            raise SingletonSpace("operator_norm")
        iu, ju = pair_indices(src.n)
        vals = np.array([kr_norm(self(Molecule.dipole(src, x, y))) for x, y in zip(iu, ju)])
        return argext_pair(vals / src.pair_distances(), src.n)


def lift_map(F: LipMap) -> LiftedOperator:
    M = np.zeros((F.target.n, F.source.n), dtype=np.int64)
    M[list(F.assignment), np.arange(F.source.n)] = 1
    return LiftedOperator(F, M)


def adjoint_compose(f: PointFunction, F: LipMap) -> PointFunction:
    """``f o F``, the adjoint of the lifted operator applied to ``f``."""
    if f.space.n != F.target.n:
        raise ValueError("function does not live on the target space")
    return PointFunction(F.source, f.values[list(F.assignment)], f.target)


def coarse_constants(F: LipMap) -> tuple[float, float, tuple[tuple[int, int], tuple[int, int]]]:
    """Best two-sided distortion constants of ``F``.

    Returns ``(alpha_star, beta_star, (argmin_pair, argmax_pair))`` with
    ``alpha_star d(x, x') <= d'(F x, F x') <= beta_star d(x, x')``;
    ``alpha_star = 0`` exactly when ``F`` is not injective.
    """
    src = F.source
    if src.n < 2:
        raise SingletonSpace("coarse_constants")
    iu, ju = pair_indices(src.n)
    ratios = F.image_distances()[iu, ju] / src.pair_distances()
    lo, lo_pair = argext_pair(ratios, src.n, "min")
    hi, hi_pair = argext_pair(ratios, src.n, "max")
    return lo, hi, (lo_pair, hi_pair)


def adjoint_preimage(g: PointFunction, F: LipMap) -> PointFunction:
    """A scalar ``f`` on the target with ``f o F = g`` exactly.

    ``f`` is first defined on ``F(source)`` by ``f(F x) = g(x)`` and then
    extended by inf-convolution with its own Lipschitz constant on the image,
    so ``||f||_L`` equals that tight constant.

    Raises
    ------
    NonInjectiveMap
        If two source points share an image; then any ``g`` separating them
        has no preimage.
    """
    hit = F.collision()
    if hit is not None:
        raise NonInjectiveMap(hit[0], hit[1], F(hit[0]))
    vals = g.scalar_values
    if F.source.n >= 2:
        iu, ju = pair_indices(F.source.n)
        L = float((np.abs(vals[iu] - vals[ju]) / F.image_distances()[iu, ju]).max())
    else:
        L = 0.0
    return mcshane_extend({F(i): vals[i] for i in range(F.source.n)}, L, F.target)

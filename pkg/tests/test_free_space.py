import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lipkit.errors import NonInjectiveMap, UnbalancedMolecule
from lipkit.free_space import (
    LipMap,
    Molecule,
    adjoint_compose,
    adjoint_preimage,
    coarse_constants,
    kr_norm,
    kr_norm_dual,
    kr_norm_primal,
    lift_map,
    transport_simplex,
)
from lipkit.lipschitz import PointFunction, lip_norm
from lipkit.metric import dyadic_chain, dyadic_points, random_metric_space, snowflake

from oracles import random_molecule, transport_vertex_oracle


def test_dirac_difference_with_base():
    M = random_metric_space(6, seed=2)
    for x in range(M.n):
        m = Molecule.from_diracs(M, {x: 1.0})
        assert kr_norm_primal(m)[0] == pytest.approx(M.dist[x, M.base], abs=1e-12)
        value, f = kr_norm_dual(m)
        assert value == pytest.approx(M.dist[x, M.base], abs=1e-9)


def test_zero_molecule():
    M = dyadic_chain(3)
    zero = Molecule(M, np.zeros(M.n))
    assert kr_norm_primal(zero) == (0.0, [])
    assert kr_norm_dual(zero)[0] == 0.0


def test_three_point_transport():
    M = dyadic_chain(2)  # points 0, 1/2, 1/4
    m = Molecule.from_diracs(M, {1: 1.0, 2: 1.0})
    np.testing.assert_array_equal(m.weights, [-2.0, 1.0, 1.0])
    assert transport_vertex_oracle(m.weights, M.dist) == pytest.approx(0.75, abs=1e-12)
    value, plan = kr_norm_primal(m)
    assert value == 0.75
    assert sorted(plan) == [(1, 0, 1.0), (2, 0, 1.0)]
    assert kr_norm_dual(m)[0] == pytest.approx(0.75, abs=1e-12)


def test_unbalanced_molecule():
    M = dyadic_chain(2)
    with pytest.raises(UnbalancedMolecule):
        kr_norm_primal(Molecule(M, [1.0, 0.0, 0.0]))
    with pytest.raises(UnbalancedMolecule):
        kr_norm_dual(Molecule(M, [1.0, 0.0, 0.0]))


def test_transport_simplex_degenerate_instance():
    # equal partial sums force degenerate north-west corner bases
    supply = np.array([1.0, 1.0, 1.0])
    demand = np.array([1.0, 1.0, 1.0])
    cost = np.array([[3.0, 1.0, 2.0], [1.0, 3.0, 2.0], [2.0, 2.0, 1.0]])
    value, flow = transport_simplex(supply, demand, cost)
    assert value == 3.0
    np.testing.assert_allclose(flow.sum(axis=1), supply)
    np.testing.assert_allclose(flow.sum(axis=0), demand)


def test_dual_optimizer_is_feasible():
    M = random_metric_space(7, seed=9)
    m = Molecule(M, random_molecule(7, np.random.default_rng(9)))
    value, f = kr_norm_dual(m)
    assert f.scalar_values[M.base] == 0.0
    assert lip_norm(f)[0] <= 1 + 1e-9
    assert m.pair(f) == pytest.approx(value, abs=1e-12)


def test_plan_marginals():
    M = random_metric_space(8, seed=5)
    m = Molecule(M, random_molecule(8, np.random.default_rng(5)))
    value, plan = kr_norm_primal(m)
    net = np.zeros(M.n)
    for i, j, mass in plan:
        assert mass > 0
        net[i] += mass
        net[j] -= mass
    np.testing.assert_allclose(net, m.weights, atol=1e-12)
    assert value == pytest.approx(sum(mass * M.dist[i, j] for i, j, mass in plan), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 100_000), n=st.integers(2, 10))
def test_strong_duality(seed, n):
    M = random_metric_space(n, seed)
    m = Molecule(M, random_molecule(n, np.random.default_rng(seed)))
    assert abs(kr_norm_primal(m)[0] - kr_norm_dual(m)[0]) <= 1e-8


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 100_000), n=st.integers(2, 4))
def test_primal_matches_vertex_oracle(seed, n):
    M = random_metric_space(n, seed)
    w = random_molecule(n, np.random.default_rng(seed))
    assert kr_norm_primal(Molecule(M, w))[0] == pytest.approx(
        transport_vertex_oracle(w, M.dist), abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 100_000), n=st.integers(2, 8))
def test_kr_norm_triangle_inequality(seed, n):
    M = random_metric_space(n, seed)
    rng = np.random.default_rng(seed)
    a, b = Molecule(M, random_molecule(n, rng)), Molecule(M, random_molecule(n, rng))
    assert kr_norm(a + b) <= kr_norm(a) + kr_norm(b) + 1e-9
    assert kr_norm(-2.5 * a) == pytest.approx(2.5 * kr_norm(a), abs=1e-9)


def random_lipmap(seed, injective=True):
    rng = np.random.default_rng(seed)
    ns = int(rng.integers(2, 7))
    nt = int(rng.integers(ns, 9)) if injective else int(rng.integers(2, 7))
    src, tgt = random_metric_space(ns, [seed, 0]), random_metric_space(nt, [seed, 1])
    others = [k for k in range(nt) if k != tgt.base]
    if injective:
        images = list(rng.choice(others, size=ns - 1, replace=False))
    else:
        images = list(rng.choice(others + [tgt.base], size=ns - 1, replace=True))
    assignment = []
    for i in range(ns):
        assignment.append(tgt.base if i == src.base else int(images.pop()))
    return LipMap(src, tgt, tuple(assignment))


def test_lift_identity_and_collapse():
    M = random_metric_space(5, seed=1)
    lift = lift_map(LipMap.identity(M))
    np.testing.assert_array_equal(lift.matrix, np.eye(5, dtype=np.int64))
    collapse = lift_map(LipMap(M, M, (M.base,) * 5))
    m = Molecule(M, random_molecule(5, np.random.default_rng(1)))
    assert not np.any(collapse(m).weights)


def test_lift_pushes_weights_and_preserves_zero_sum():
    F = random_lipmap(3)
    m = Molecule(F.source, random_molecule(F.source.n, np.random.default_rng(3)))
    out = lift_map(F)(m)
    expected = np.zeros(F.target.n)
    for i, w in enumerate(m.weights):
        expected[F(i)] += w
    np.testing.assert_allclose(out.weights, expected)
    assert abs(out.weights.sum()) < 1e-12


@pytest.mark.parametrize("seed", range(10))
def test_lifted_operator_norm_equals_lipschitz_constant(seed):
    F = random_lipmap(seed)
    value, _ = lift_map(F).operator_norm()
    _, beta, _ = coarse_constants(F)
    assert value == pytest.approx(beta, abs=1e-9)
    for x in range(F.source.n):
        for y in range(F.source.n):
            if x != y:
                image = lift_map(F)(Molecule.dipole(F.source, x, y))
                assert kr_norm(image) <= beta * F.source.dist[x, y] + 1e-9


@pytest.mark.parametrize("seed", range(10))
def test_lift_is_functorial(seed):
    F = random_lipmap(seed)
    # G permutes the non-base points of the target
    movable = [k for k in range(F.target.n) if k != F.target.base]
    shuffled = list(np.random.default_rng(seed).permutation(movable))
    assignment = list(range(F.target.n))
    for k, v in zip(movable, shuffled):
        assignment[k] = int(v)
    G = LipMap(F.target, F.target, tuple(assignment))
    composed = lift_map(F.then(G))
    np.testing.assert_array_equal(composed.matrix, (lift_map(G) @ lift_map(F)).matrix)


def test_adjoint_compose():
    M = random_metric_space(5, seed=8)
    f = PointFunction(M, [0.0, 1.0, 2.0, 3.0, 4.0])
    assert adjoint_compose(f, LipMap.identity(M)).values.tolist() == f.values.tolist()
    assert not np.any(adjoint_compose(PointFunction.zero(M), LipMap.identity(M)).values)


@pytest.mark.parametrize("seed", range(20))
def test_adjoint_compose_norm_bound(seed):
    F = random_lipmap(seed, injective=bool(seed % 2))
    rng = np.random.default_rng(seed)
    v = rng.normal(size=F.target.n)
    v[F.target.base] = 0.0
    f = PointFunction(F.target, v)
    g = adjoint_compose(f, F)
    assert g.values[F.source.base, 0] == 0.0
    _, beta, _ = coarse_constants(F)
    if F.source.n >= 2:
        assert lip_norm(g)[0] <= lip_norm(f)[0] * beta * (1 + 1e-12)


def test_coarse_constants_examples():
    M = dyadic_chain(3)
    assert coarse_constants(LipMap.identity(M))[:2] == (1.0, 1.0)
    collide = LipMap(M, M, (0, 1, 1, 3))
    assert coarse_constants(collide)[0] == 0.0
    S = snowflake(M, 0.5)
    alpha, beta, (lo, hi) = coarse_constants(LipMap.identity(M, S))
    # d**0.5 / d = d**-0.5: smallest at the diameter 1/2, largest at the gap 1/8
    assert alpha == pytest.approx(np.sqrt(2), abs=1e-12)
    assert beta == pytest.approx(2 ** 1.5, abs=1e-12)
    assert lo == (0, 1) and hi == (0, 3)


def test_adjoint_preimage_examples():
    M = dyadic_chain(3)
    g = PointFunction(M, dyadic_points(3))
    assert adjoint_preimage(g, LipMap.identity(M)).values.tolist() == g.values.tolist()
    zero = adjoint_preimage(PointFunction.zero(M), LipMap.identity(M))
    assert not np.any(zero.values)

    S = snowflake(M, 0.5)
    F = LipMap.identity(M, S)
    f = adjoint_preimage(g, F)
    np.testing.assert_array_equal(adjoint_compose(f, F).values, g.values)
    tight = max(abs(g.scalar_values[i] - g.scalar_values[j]) / S.dist[i, j]
                for i in range(4) for j in range(i + 1, 4))
    assert lip_norm(f)[0] == pytest.approx(tight, abs=1e-12)


def test_adjoint_preimage_rejects_collisions():
    M = dyadic_chain(3)
    F = LipMap(M, M, (0, 1, 1, 3))
    g = PointFunction(M, [0.0, 1.0, 2.0, 0.0])
    with pytest.raises(NonInjectiveMap) as exc:
        adjoint_preimage(g, F)
    assert (exc.value.i, exc.value.j) == (1, 2)


def test_lipmap_validation():
    M = dyadic_chain(2)
    with pytest.raises(ValueError):
        LipMap(M, M, (1, 0, 2))
    with pytest.raises(ValueError):
        LipMap(M, M, (0, 1))


def test_molecule_json_round_trip():
    M = dyadic_chain(3)
    m = Molecule.from_diracs(M, {1: 0.5, 3: -2.0})
    again = Molecule.from_dict(m.to_dict(), M)
    np.testing.assert_array_equal(again.weights, m.weights)

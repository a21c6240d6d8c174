import dataclasses
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lipkit.errors import DegeneratePair, NonUnitDirection, NotInClass, RatioTooLarge
from lipkit.lipschitz import ClassParams, PointFunction, TargetSpace, lip_norm, sample_function
from lipkit.metric import (
    GaugePair,
    dyadic_chain,
    gauge_ratio_inf,
    random_metric_space,
    snowflake,
    validate_metric,
)
from lipkit.porosity import (
    EscapeCertificate,
    build_escape,
    escape_sequence,
    metric_witness,
    sample_ball_exclusion,
    verify_certificate,
)

from oracles import pair_loop_max


def snowflake_setup(K, s=1.0, alpha=0.5, beta=1.0):
    chain = dyadic_chain(K)
    space = snowflake(chain, alpha)
    phi = GaugePair.power(chain, beta)
    return space, ClassParams(phi, s), gauge_ratio_inf(space, phi)


def test_metric_witness_two_points():
    M = validate_metric([[0, 1], [1, 0]])
    w = metric_witness(M, (0, 1))
    np.testing.assert_array_equal(w.p.scalar_values, [0.0, -1.0])
    assert abs(w.p.scalar_values[0] - w.p.scalar_values[1]) == 1.0
    assert w.K == 1.0


def test_metric_witness_at_base_is_distance_function():
    M = random_metric_space(6, seed=4)
    w = metric_witness(M, (3, M.base))
    np.testing.assert_array_equal(w.p.scalar_values, M.dist[:, M.base])


def test_metric_witness_min_gap_pair():
    M = dyadic_chain(3)
    w = metric_witness(M, (0, 3))
    assert pair_loop_max(w.p.values, M.dist)[0] == 1.0
    assert lip_norm(w.p)[0] == 1.0


def test_metric_witness_errors():
    M = dyadic_chain(3)
    with pytest.raises(DegeneratePair):
        metric_witness(M, (2, 2))
    with pytest.raises(NonUnitDirection):
        metric_witness(M, (0, 1), e=np.array([1.0, 1.0]), target=TargetSpace(2, "l2"))
    w = metric_witness(M, (0, 1), e=np.array([0.6, 0.8]), target=TargetSpace(2, "l2"))
    assert all(v <= 1e-12 for v in w.residuals().values())


def test_escape_closed_form_k20():
    space, params, (r, pair) = snowflake_setup(20)
    cert = build_escape(PointFunction.zero(space), params, pair)
    assert cert.r == 2.0 ** -10
    assert cert.radius == pytest.approx(0.015625, abs=1e-15)
    assert cert.lower_bound == 15.0
    assert lip_norm(cert.witness.p)[0] == 1.0
    assert verify_certificate(cert).ok


def test_ratio_boundary_is_rejected():
    # r = 1/16 exactly at s = 1 (K = 8 gives r* = 2**-4)
    space, params, (r, pair) = snowflake_setup(8)
    assert r == 1 / 16
    with pytest.raises(RatioTooLarge) as exc:
        build_escape(PointFunction.zero(space), params, pair)
    assert exc.value.threshold == 1 / 16


def test_not_in_class():
    space, params, (_, pair) = snowflake_setup(12)
    f = PointFunction(space, 10 * space.dist[:, 0])
    with pytest.raises(NotInClass):
        build_escape(f, params, pair)


def test_zero_function_certificate_is_scaled_witness():
    space, params, (r, pair) = snowflake_setup(14)
    cert = build_escape(PointFunction.zero(space), params, pair)
    np.testing.assert_array_equal(cert.f_m.values, math.sqrt(r) * cert.witness.p.values)
    assert cert.radius == pytest.approx(math.sqrt(r) * lip_norm(cert.witness.p)[0] / 2, abs=1e-15)


def test_doubled_radius_fails_chain():
    space, params, (_, pair) = snowflake_setup(16)
    cert = build_escape(PointFunction.zero(space), params, pair)
    report = verify_certificate(dataclasses.replace(cert, radius=2 * cert.radius))
    assert not report["chain"].passed
    assert report["threshold"].passed and report["witness"].passed


def test_raised_s_fails_threshold():
    space, params, (_, pair) = snowflake_setup(12)  # r = 1/64
    cert = build_escape(PointFunction.zero(space), params, pair)
    bigger = dataclasses.replace(cert, params=ClassParams(params.phi, 2.0))
    report = verify_certificate(bigger)
    assert not report["threshold"].passed
    assert report["membership"].passed


def test_tampered_f_m_fails_radius_check():
    space, params, (_, pair) = snowflake_setup(16)
    cert = build_escape(PointFunction.zero(space), params, pair)
    bad = dataclasses.replace(cert, f_m=2 * cert.f_m)
    assert not verify_certificate(bad)["radius"].passed


def test_exclusion_center_only():
    space, params, (r, pair) = snowflake_setup(20)
    cert = build_escape(PointFunction.zero(space), params, pair)
    rep = sample_ball_exclusion(cert, 1, seed=0, include_center=True)
    assert rep.all_excluded
    assert rep.min_pair_ratio >= 1 / math.sqrt(r) - params.s


def test_exclusion_thousand_samples():
    space, params, (r, pair) = snowflake_setup(20)
    f = sample_function(dyadic_chain(20), TargetSpace(1, "l2"), 1.0, 1.0, 7).on(space)
    cert = build_escape(f, params, pair)
    rep = sample_ball_exclusion(cert, 1000, seed=3)
    assert rep.excluded == 1000
    assert rep.min_pair_ratio >= cert.lower_bound


def test_inflated_radius_is_flagged_not_raised():
    space, params, (_, pair) = snowflake_setup(20)
    cert = build_escape(PointFunction.zero(space), params, pair)
    rep = sample_ball_exclusion(dataclasses.replace(cert, radius=10 * cert.radius), 1000, seed=0)
    assert not rep.all_excluded
    assert rep.min_pair_ratio < params.s


def test_exclusion_is_deterministic():
    space, params, (_, pair) = snowflake_setup(18)
    cert = build_escape(PointFunction.zero(space), params, pair)
    assert sample_ball_exclusion(cert, 500, 11) == sample_ball_exclusion(cert, 500, 11)


def test_escape_sequence_radii_decrease():
    family, params = [], []
    for K in (8, 12, 16, 20):
        space, prm, _ = snowflake_setup(K)
        family.append((space, PointFunction.zero(space)))
        params.append(prm)
    seq = escape_sequence(family, params)
    # K = 8 sits exactly on the threshold r = 1/16 and is skipped
    assert [i for i, _ in seq.skipped] == [0]
    expected = [math.sqrt(2.0 ** (-K / 2)) / 2 for K in (12, 16, 20)]
    np.testing.assert_allclose(seq.radii, expected, rtol=0, atol=1e-15)
    assert all(a > b for a, b in zip(seq.radii, seq.radii[1:]))


def test_escape_sequence_single_skip_and_repeat():
    space, prm, _ = snowflake_setup(3)
    seq = escape_sequence([(space, PointFunction.zero(space))], [prm])
    assert seq.certificates == [] and len(seq.skipped) == 1
    space, prm, _ = snowflake_setup(14)
    seq = escape_sequence([(space, PointFunction.zero(space))] * 2, [prm, prm])
    a, b = seq.certificates
    assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())


def test_certificate_json_round_trip():
    space, params, (_, pair) = snowflake_setup(16, s=2.0)
    f = sample_function(dyadic_chain(16), TargetSpace(2, "linf"), 1.0, 2.0, 1).on(space)
    cert = build_escape(f, params, pair)
    text = json.dumps(cert.to_dict())
    again = EscapeCertificate.from_dict(json.loads(text))
    assert verify_certificate(again).ok
    assert json.dumps(again.to_dict()) == text
    assert set(cert.to_dict()) >= {"pair", "r", "s", "K", "radius", "lower_bound", "f", "p", "f_m"}


@settings(max_examples=40, deadline=None)
@given(K=st.integers(10, 30), s=st.sampled_from([0.5, 1.0, 2.0]), seed=st.integers(0, 1000),
       norm=st.sampled_from(["l1", "l2", "linf"]))
def test_certificate_invariants(K, s, seed, norm):
    space, params, (r, pair) = snowflake_setup(K, s=s)
    if not r < 1 / (16 * s * s):
        return
    f = sample_function(dyadic_chain(K), TargetSpace(2, norm), 1.0, s, seed).on(space)
    cert = build_escape(f, params, pair)
    lip_p = lip_norm(cert.witness.p)[0]
    assert 0 < lip_p <= cert.K + 1e-12
    assert lip_norm(cert.f_m - cert.f)[0] == pytest.approx(math.sqrt(r) * lip_p, rel=1e-12)
    assert cert.radius / lip_norm(cert.f_m - cert.f)[0] == pytest.approx(1 / (2 * cert.K), rel=1e-12)
    d_ab = space.dist[pair]
    assert cert.radius * d_ab / params.phi(*pair) <= 1 / (2 * math.sqrt(r)) * (1 + 1e-12)
    assert verify_certificate(cert).ok
    assert sample_ball_exclusion(cert, 200, seed).all_excluded

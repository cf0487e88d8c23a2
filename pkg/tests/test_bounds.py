"""Capacity bound assembly: objectives, optimization, sweeps, verification."""

from __future__ import annotations

import math

import numpy as np
import pytest

from repeatcap.bounds import (
    BoundResult,
    BoundVariant,
    SweepFailure,
    as_bound_variant,
    compute_bound,
    deletion_delta,
    duplication_bound,
    geomdel_bound,
    geomdel_elementary_bound,
    objective_curve,
    sticky_bound,
    sweep,
    verify_tables,
)
from repeatcap.channels import Family
from repeatcap.duals import r_p

import oracles

_LOG2 = math.log(2.0)


def test_sticky_bound_published_points():
    res = sticky_bound(0.05)
    assert isinstance(res, BoundResult)
    assert abs(res.bound_bits - 0.814464) <= 1e-5
    assert abs(res.bound_nats - res.bound_bits * _LOG2) <= 1e-14
    assert res.feasible and not res.clamped_to_one
    assert abs(sticky_bound(0.5).bound_bits - 0.394333) <= 1e-5


def test_duplication_bound_published_points():
    assert abs(duplication_bound(0.1).bound_bits - 0.7406) <= 5e-4
    res = duplication_bound(0.8)
    assert res.bound_bits > 1.0
    assert res.clamped_to_one


def test_geomdel_bounds_published_points():
    conv = geomdel_bound(0.5, BoundVariant.GEOMDEL_CONV)
    assert abs(conv.bound_bits - 0.168074) <= 1e-5
    assert abs(conv.epsilon_used - oracles.EPSILON_CONV_HALF) <= 1e-9
    trunc = geomdel_bound(0.05, BoundVariant.GEOMDEL_TRUNC)
    assert abs(trunc.bound_bits - 0.021244) <= 1e-5
    dd = geomdel_bound(0.99, BoundVariant.GEOMDEL_DELTA_D)
    assert abs(dd.bound_bits - 0.338927) <= 1e-5


def test_geomdel_auto_takes_minimum():
    res = compute_bound(Family.GEOMETRIC_DELETION, None, 0.5)
    assert res.variant is BoundVariant.GEOMDEL_CONV
    assert abs(res.bound_bits - 0.168074) <= 1e-5
    low = compute_bound(Family.GEOMETRIC_DELETION, None, 0.05)
    assert low.variant is BoundVariant.GEOMDEL_TRUNC


def test_elementary_bound():
    res = geomdel_elementary_bound(1.0 - 1e-6)  # d = 1-p = 1e-6
    assert abs(res.bound_bits - 1.0 / (2.0 * _LOG2)) <= 1e-4
    assert math.isnan(res.mu_opt)
    with pytest.raises(ValueError):
        geomdel_elementary_bound(0.5)  # needs d = 1-p < 1/2


def test_p_domain_validation():
    for fn in (sticky_bound, duplication_bound):
        with pytest.raises(ValueError):
            fn(0.0)
        with pytest.raises(ValueError):
            fn(1.5)


def test_variant_family_pairing():
    with pytest.raises(ValueError):
        geomdel_bound(0.5, BoundVariant.STICKY_EXACT)
    with pytest.raises(ValueError):
        compute_bound(Family.GEOMETRIC_STICKY, BoundVariant.GEOMDEL_CONV, 0.3)


def test_as_bound_variant():
    assert as_bound_variant(None) is None
    assert as_bound_variant("auto") is None
    assert as_bound_variant("conv") is BoundVariant.GEOMDEL_CONV
    assert as_bound_variant("trunc") is BoundVariant.GEOMDEL_TRUNC
    assert as_bound_variant("delta-d") is BoundVariant.GEOMDEL_DELTA_D
    assert as_bound_variant("GeomDelConv") is BoundVariant.GEOMDEL_CONV
    assert as_bound_variant(BoundVariant.STICKY_EXACT) is BoundVariant.STICKY_EXACT
    with pytest.raises(ValueError):
        as_bound_variant("nonsense")


def test_deletion_delta_rules():
    p = 0.3
    d = 1.0 - p
    assert deletion_delta(p, BoundVariant.GEOMDEL_TRUNC, "one") == 1.0
    assert deletion_delta(p, BoundVariant.GEOMDEL_DELTA_D, "d") == d
    want = math.exp(-oracles.R_P[(1, 0.3)] / d)
    assert abs(deletion_delta(p, BoundVariant.GEOMDEL_TRUNC, "recommended") - want) <= 1e-10
    conv = deletion_delta(p, BoundVariant.GEOMDEL_CONV, "recommended")
    assert 0.0 < conv <= 1.0
    with pytest.raises(ValueError):
        deletion_delta(p, BoundVariant.GEOMDEL_CONV, "bogus")


def test_objective_curve_consistency():
    res = sticky_bound(0.3)
    values = objective_curve(0.3, BoundVariant.STICKY_EXACT, [0.2, res.q_opt, 0.9])
    assert abs(values[1] - res.bound_nats) <= 1e-9
    assert values[1] >= values[0] and values[1] >= values[2]
    with pytest.raises(ValueError):
        objective_curve(0.3, BoundVariant.GEOMDEL_ELEMENTARY, [0.5])


def test_objective_zero_below_threshold():
    # tiny q forces the dual mean below the feasibility threshold
    values = objective_curve(0.3, BoundVariant.STICKY_EXACT, [1e-5])
    assert values[0] == 0.0


def test_sweep_preserves_order():
    ps = [0.4, 0.1, 0.25]
    results = sweep(Family.GEOMETRIC_STICKY, None, ps)
    assert [r.p for r in results] == ps
    assert all(isinstance(r, BoundResult) for r in results)


def test_sweep_parallel_matches_serial():
    ps = [0.2, 0.5]
    serial = sweep(Family.GEOMETRIC_STICKY, None, ps)
    parallel = sweep(Family.GEOMETRIC_STICKY, None, ps, max_workers=2)
    for a, b in zip(serial, parallel):
        assert a.bound_nats == b.bound_nats
        assert a.q_opt == b.q_opt


def test_sweep_captures_failures():
    results = sweep(Family.GEOMETRIC_STICKY, None, [0.3, 1.7])
    assert isinstance(results[0], BoundResult)
    assert isinstance(results[1], SweepFailure)
    assert "1.7" in results[1].message or "p" in results[1].message


def test_sweep_variant_check():
    with pytest.raises(ValueError):
        sweep(Family.GEOMETRIC_STICKY, BoundVariant.GEOMDEL_CONV, [0.3])


def test_verify_tables_t2():
    verification = verify_tables(only=("T2",))
    assert verification.all_passed
    assert len(verification.checks) == 9
    clamped = [c for c in verification.checks if c.expected == ">1"]
    assert len(clamped) == 2 and all(c.passed for c in clamped)


def test_verify_tables_strict_tolerance_fails():
    verification = verify_tables(1e-13, only=("T2",))
    assert not verification.all_passed
    assert verification.failures


def test_verify_tables_unknown_selector():
    with pytest.raises(ValueError):
        verify_tables(only=("T9",))

"""Channel families: replication laws, conditional output laws, reductions."""

from __future__ import annotations

import math

import numpy as np
import pytest

from repeatcap.channels import (
    ConditionalOutputLaw,
    Family,
    ReductionParams,
    RepeatChannel,
    output_log_pmf,
    output_mean,
    output_stddev,
    pgf,
    reduction_params,
)

P_FAMILIES = (
    Family.GEOMETRIC_STICKY,
    Family.ELEMENTARY_DUPLICATION,
    Family.GEOMETRIC_DELETION,
)


def test_channel_param_validation():
    for fam in P_FAMILIES:
        with pytest.raises(ValueError):
            RepeatChannel(fam, 0.0)
        with pytest.raises(ValueError):
            RepeatChannel(fam, 1.0)
    with pytest.raises(ValueError):
        RepeatChannel(Family.POISSON_REPEAT, 0.0)
    RepeatChannel(Family.POISSON_REPEAT, 3.5)  # any positive mean


def test_log_pmf_trivial_values():
    sticky = RepeatChannel(Family.GEOMETRIC_STICKY, 0.3)
    assert abs(output_log_pmf(sticky, 1, 2) - math.log(0.21)) <= 1e-14

    dup = RepeatChannel(Family.ELEMENTARY_DUPLICATION, 0.4)
    assert abs(output_log_pmf(dup, 1, 1) - math.log(0.6)) <= 1e-14

    geomdel = RepeatChannel(Family.GEOMETRIC_DELETION, 0.3)
    assert abs(output_log_pmf(geomdel, 1, 0) - math.log(0.7)) <= 1e-14


def test_log_pmf_outside_support():
    sticky = RepeatChannel(Family.GEOMETRIC_STICKY, 0.3)
    assert output_log_pmf(sticky, 3, 2) == -math.inf  # y < x
    dup = RepeatChannel(Family.ELEMENTARY_DUPLICATION, 0.3)
    assert output_log_pmf(dup, 2, 5) == -math.inf  # y > 2x
    assert output_log_pmf(dup, 2, 1) == -math.inf  # y < x


def test_output_mean_closed_forms():
    assert output_mean(RepeatChannel(Family.GEOMETRIC_STICKY, 0.5), 2) == 4.0
    assert abs(output_mean(RepeatChannel(Family.ELEMENTARY_DUPLICATION, 0.2), 10) - 12.0) <= 1e-12
    assert abs(output_mean(RepeatChannel(Family.GEOMETRIC_DELETION, 0.5), 3) - 3.0) <= 1e-12


def test_pmf_normalization_and_mean():
    for fam in P_FAMILIES:
        for p in (0.2, 0.6):
            channel = RepeatChannel(fam, p)
            for x in (1, 2, 5, 20):
                law = ConditionalOutputLaw(channel, x)
                ys = law.truncated_support()
                pmf = np.exp(law.log_pmf(ys))
                assert abs(pmf.sum() - 1.0) <= 1e-10, (fam, p, x)
                assert abs(float(ys @ pmf) - law.mean) <= 1e-8, (fam, p, x)


def test_pgf_trivial_and_derived():
    for fam in P_FAMILIES:
        assert abs(pgf(RepeatChannel(fam, 0.35), 3, 1.0) - 1.0) <= 1e-12
    assert pgf(RepeatChannel(Family.GEOMETRIC_STICKY, 0.3), 2, 0.0) == 0.0
    # single duplication bit at z = 1/2: 0.5 * (0.5 + 0.5 * 0.5)
    assert abs(pgf(RepeatChannel(Family.ELEMENTARY_DUPLICATION, 0.5), 1, 0.5) - 0.375) <= 1e-14


def test_pgf_matches_pmf_sum():
    for fam in P_FAMILIES:
        channel = RepeatChannel(fam, 0.45)
        for x in (1, 4):
            law = ConditionalOutputLaw(channel, x)
            ys = law.truncated_support()
            pmf = np.exp(law.log_pmf(ys))
            for z in (0.2, 0.7, 0.95):
                direct = float(np.sum(z**ys * pmf))
                assert abs(pgf(channel, x, z) - direct) <= 1e-9, (fam, x, z)


def test_pgf_domain():
    with pytest.raises(ValueError):
        pgf(RepeatChannel(Family.GEOMETRIC_STICKY, 0.5), 1, 1.2)
    with pytest.raises(ValueError):
        pgf(RepeatChannel(Family.GEOMETRIC_STICKY, 0.5), 1, -0.1)


def test_sticky_composition_is_convolution():
    # the x-bit sticky output is the x-fold convolution of the 1-bit law
    channel = RepeatChannel(Family.GEOMETRIC_STICKY, 0.4)
    one = ConditionalOutputLaw(channel, 1)
    ys1 = np.arange(1, 200)
    pmf1 = np.exp(one.log_pmf(ys1))
    conv = pmf1.copy()
    for _ in range(2):
        conv = np.convolve(conv, pmf1)
    # conv[k] is the probability of total y = 3 + k
    three = ConditionalOutputLaw(channel, 3)
    ys3 = np.arange(3, 150)
    direct = np.exp(three.log_pmf(ys3))
    assert np.max(np.abs(direct - conv[ys3 - 3])) <= 1e-12


def test_reduction_params():
    assert reduction_params(RepeatChannel(Family.GEOMETRIC_STICKY, 0.5)) == ReductionParams(
        2.0, 2.0, 1.0
    )
    dup = reduction_params(RepeatChannel(Family.ELEMENTARY_DUPLICATION, 0.2))
    assert abs(dup.lam - 1.2) <= 1e-12 and dup.p_nonzero == 1.0
    geomdel = reduction_params(RepeatChannel(Family.GEOMETRIC_DELETION, 0.5))
    assert abs(geomdel.lam - 1.0) <= 1e-12
    assert abs(geomdel.lam_bar - 2.0) <= 1e-12
    assert abs(geomdel.p_nonzero - 0.5) <= 1e-12
    with pytest.raises(ValueError):
        reduction_params(RepeatChannel(Family.POISSON_REPEAT, 2.0))


def test_reduction_invariant():
    for fam in P_FAMILIES:
        for p in (0.1, 0.5, 0.9):
            r = reduction_params(RepeatChannel(fam, p))
            assert r.lam_bar >= r.lam - 1e-15
            assert 0.0 < r.p_nonzero <= 1.0


def test_stddev_positive():
    for fam in P_FAMILIES:
        assert output_stddev(RepeatChannel(fam, 0.3), 4) > 0.0

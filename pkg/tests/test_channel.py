import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from afdof import (
    ChannelRealization,
    check_conditions,
    effective_noise_variance,
    end_to_end,
    sample_channel,
)
from conftest import REFERENCE_GAINS, reference_channel

finite_coeff = st.floats(min_value=-1e3, max_value=1e3,
                         allow_nan=False, allow_infinity=False)


def test_reference_determinants():
    # Hand expansion of the four 2x2 determinants.
    rep = check_conditions(reference_channel())
    assert rep.det_h1 == -5.0
    assert rep.det_h2 == -1.0
    assert rep.det_hsup1 == -11.0
    assert rep.det_hsup2 == 4.0
    assert rep.generic


def test_all_ones_is_rank_deficient():
    rep = check_conditions(ChannelRealization(*([1.0] * 8)))
    assert rep.all_nonzero
    assert not rep.rank_h1_full
    assert not rep.generic


def test_zero_gain_fails_all_nonzero():
    gains = list(REFERENCE_GAINS)
    gains[0] = 0.0
    rep = check_conditions(ChannelRealization(*gains))
    assert not rep.all_nonzero
    assert not rep.generic


def test_check_conditions_rejects_bad_tolerance():
    with pytest.raises(ValueError):
        check_conditions(reference_channel(), rel_tol=0.0)


def test_sampler_is_deterministic():
    assert sample_channel(42) == sample_channel(42)
    assert sample_channel(42) != sample_channel(43)


def test_sampler_returns_generic_channels():
    for seed in (0, 7, 42, 12345):
        ch = sample_channel(seed)
        assert check_conditions(ch).generic
        assert all(math.isfinite(g) and g != 0 for g in ch.gains())


def test_sampler_never_rejects_over_many_seeds():
    # Smoke-sized version; the full 1e5-seed run lives in the acceptance suite.
    for seed in range(5000):
        sample_channel(seed, max_rejects=100)


def test_sampler_validates_max_rejects():
    with pytest.raises(ValueError):
        sample_channel(0, max_rejects=0)


def test_end_to_end_zero_coefficients(ref_channel):
    G = end_to_end(ref_channel, 0.0, 0.0)
    assert G.entries() == (0.0, 0.0, 0.0, 0.0)


def test_end_to_end_reference_substitution(ref_channel):
    # mu = c, lam = -2c collapses to [[-5c, 0], [-4c, 2c]] for any c.
    c = 0.25
    G = end_to_end(ref_channel, c, -2.0 * c)
    assert G.entries() == pytest.approx((-5 * c, 0.0, -4 * c, 2 * c), abs=1e-15)


def test_end_to_end_u_relay_only(ref_channel):
    G = end_to_end(ref_channel, 1.0, 0.0)
    assert G.entries() == (1.0, 2.0, 2.0, 4.0)


def test_end_to_end_matches_matrix_product(ref_channel):
    mu, lam = 0.7, -1.3
    G = end_to_end(ref_channel, mu, lam)
    product = ref_channel.second_hop() @ np.diag([mu, lam]) @ ref_channel.first_hop()
    np.testing.assert_allclose(G.as_array(), product, rtol=1e-12)


def test_effective_noise_variance_examples(ref_channel):
    assert effective_noise_variance(ref_channel, 0.0, 0.0, 1) == 1.0
    c = 0.3
    assert effective_noise_variance(ref_channel, c, -2 * c, 1) == pytest.approx(5 * c * c + 1)
    assert effective_noise_variance(ref_channel, 1.0, 1.0, 2) == pytest.approx(6.0)
    with pytest.raises(ValueError):
        effective_noise_variance(ref_channel, 1.0, 1.0, 3)


@given(mu=finite_coeff, lam=finite_coeff, a=finite_coeff)
def test_end_to_end_is_bilinear(mu, lam, a):
    ch = reference_channel()
    scaled = end_to_end(ch, a * mu, a * lam)
    base = end_to_end(ch, mu, lam)
    for got, want in zip(scaled.entries(), (a * e for e in base.entries())):
        assert got == pytest.approx(want, rel=1e-9, abs=1e-9)


@given(mu=finite_coeff, lam=finite_coeff)
def test_noise_variance_at_least_one(mu, lam):
    ch = reference_channel()
    for dest in (1, 2):
        v = effective_noise_variance(ch, mu, lam, dest)
        assert v >= 1.0
        if mu == 0.0 and lam == 0.0:
            assert v == 1.0


@settings(max_examples=50)
@given(seed=st.integers(min_value=0, max_value=10_000),
       mu=st.floats(min_value=0.01, max_value=10, allow_nan=False))
def test_at_most_one_zero_entry(seed, mu):
    # Random pairs plus each single-entry nulling value: never two zeros.
    ch = sample_channel(seed)
    nulling = [
        -mu * ch.h_ud1 * ch.h_s1u / (ch.h_vd1 * ch.h_s1v),
        -mu * ch.h_ud1 * ch.h_s2u / (ch.h_vd1 * ch.h_s2v),
        -mu * ch.h_ud2 * ch.h_s1u / (ch.h_vd2 * ch.h_s1v),
        -mu * ch.h_ud2 * ch.h_s2u / (ch.h_vd2 * ch.h_s2v),
    ]
    for lam in nulling + [0.37 * mu]:
        G = end_to_end(ch, mu, lam)
        scale = G.max_abs()
        zeros = sum(abs(e) <= 1e-9 * scale for e in G.entries())
        assert zeros <= 1


def test_json_roundtrip(ref_channel):
    again = ChannelRealization.from_json(ref_channel.to_json())
    assert again == ref_channel
    assert set(ref_channel.to_dict()) == {
        "s1u", "s2u", "s1v", "s2v", "ud1", "vd1", "ud2", "vd2"}


def test_from_dict_requires_all_gains():
    with pytest.raises(ValueError):
        ChannelRealization.from_dict({"s1u": 1.0})

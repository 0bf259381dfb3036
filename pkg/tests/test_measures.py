"""Exact measures: drift, SAS checks, convolution, reproducible sampling."""

from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from harmonic_groups import groups, measures
from harmonic_groups.groups import dihedral_infinite, free_abelian, heisenberg3
from harmonic_groups.measures import (
    FiniteMeasure,
    check_sas,
    convolve,
    drift_abelian,
    point_mass,
    rng_stream,
    sample,
    simple_random_walk,
)

Z = free_abelian(1)
Z2 = free_abelian(2)
DINF = dihedral_infinite()


def biased_z():
    return FiniteMeasure.from_pairs(Z, [((1,), F(2, 3)), ((-1,), F(1, 3))])


def dinf_biased():
    return FiniteMeasure.from_pairs(
        DINF, [((1, 0), F(1, 2)), ((-1, 0), F(1, 4)), ((0, 1), F(1, 4))]
    )


def test_weights_must_sum_to_one():
    with pytest.raises(ValueError):
        FiniteMeasure.from_pairs(Z, [((1,), F(1, 2)), ((-1,), F(49, 100))])
    with pytest.raises(ValueError):
        FiniteMeasure.from_pairs(Z, [((1,), F(3, 2)), ((-1,), F(-1, 2))])


def test_duplicate_support_merges():
    mu = FiniteMeasure.from_pairs(Z, [((1,), F(1, 4)), ((1,), F(1, 4)), ((-1,), F(1, 2))])
    assert len(mu) == 2
    assert mu.weight((1,)) == F(1, 2)


def test_drift_examples():
    assert drift_abelian(simple_random_walk(Z2)).values == (0, 0)
    assert drift_abelian(biased_z()).values == (F(1, 3),)
    assert drift_abelian(dinf_biased()).values == ()


def test_symmetric_measures_are_centered():
    for mu in (simple_random_walk(Z2), simple_random_walk(heisenberg3())):
        assert measures.is_symmetric(mu)
        assert drift_abelian(mu).is_zero()


def test_check_sas_srw():
    mu = simple_random_walk(Z2)
    rep = check_sas(mu, groups.standard_generators(Z2), probe_radius=2)
    assert rep.symmetric
    assert rep.adapted_witness_radius == 1
    assert rep.smooth
    assert rep.first_moment == 1


def test_check_sas_dinf_biased():
    mu = dinf_biased()
    rep = check_sas(mu, groups.standard_generators(DINF), probe_radius=2)
    assert not rep.symmetric
    assert rep.adapted_witness_radius == 1
    assert rep.first_moment == 1


def test_check_sas_point_mass_unknown():
    mu = point_mass(Z, (0,))
    rep = check_sas(mu, groups.standard_generators(Z), probe_radius=2)
    assert rep.adapted_witness_radius is None
    assert rep.first_moment == 0


def test_convolve_identity():
    mu = biased_z()
    assert convolve(point_mass(Z, (0,)), mu).support == mu.support
    assert convolve(mu, point_mass(Z, (0,))).support == mu.support


def test_convolve_srw_square():
    mu = simple_random_walk(Z)
    sq = convolve(mu, mu)
    assert dict(sq.support) == {(-2,): F(1, 4), (0,): F(1, 2), (2,): F(1, 4)}


def test_convolution_weights_sum_to_one_exactly():
    mu = dinf_biased()
    nu = convolve(convolve(mu, mu), mu)
    assert sum((w for _, w in nu), F(0)) == 1


def test_drift_additive_under_convolution():
    @settings(max_examples=25, deadline=None)
    @given(
        st.lists(
            st.tuples(st.tuples(st.integers(-3, 3), st.integers(-3, 3)), st.integers(1, 9)),
            min_size=1,
            max_size=4,
            unique_by=lambda p: p[0],
        )
    )
    def run(raw):
        total = sum(w for _, w in raw)
        mu = FiniteMeasure.from_pairs(Z2, [(g, F(w, total)) for g, w in raw])
        conv = convolve(mu, mu)
        expect = tuple(2 * v for v in drift_abelian(mu).values)
        assert drift_abelian(conv).values == expect

    run()

    mu = simple_random_walk(Z2)
    nu = FiniteMeasure.from_pairs(Z2, [((2, 0), F(1, 3)), ((0, -1), F(2, 3))])
    lhs = drift_abelian(convolve(mu, nu)).values
    rhs = tuple(a + b for a, b in zip(drift_abelian(mu).values, drift_abelian(nu).values))
    assert lhs == rhs


def test_first_moment_subadditive_under_convolution():
    S = groups.standard_generators
    for mu, G in [
        (simple_random_walk(Z), Z),
        (biased_z(), Z),
        (simple_random_walk(Z2), Z2),
        (dinf_biased(), DINF),
    ]:
        m1 = check_sas(mu, S(G), probe_radius=2).first_moment
        m2 = check_sas(convolve(mu, mu), S(G), probe_radius=2).first_moment
        assert m2 <= 2 * m1


def test_sample_point_mass():
    mu = point_mass(Z2, (3, 1))
    rng = rng_stream(1, 0)
    assert all(sample(mu, rng) == (3, 1) for _ in range(20))


def test_sample_deterministic_per_seed():
    mu = dinf_biased()
    rng = rng_stream(9, 4)
    draws1 = [sample(mu, rng) for _ in range(50)]
    rng = rng_stream(9, 4)
    draws2 = [sample(mu, rng) for _ in range(50)]
    assert draws1 == draws2
    other = [sample(mu, rng_stream(9, 5)) for _ in range(50)]
    assert other != draws1  # astronomically unlikely to collide


def test_sample_binomial_ci():
    mu = simple_random_walk(Z)
    rng = rng_stream(20260808, 0)
    n = 10**6
    hits = sum(1 for _ in range(n) if sample(mu, rng) == (1,))
    sigma = (0.25 / n) ** 0.5
    assert abs(hits / n - 0.5) <= 3 * sigma


def test_sampling_frequencies_match_rational_weights():
    mu = biased_z()
    rng = rng_stream(5, 0)
    n = 90_000
    hits = sum(1 for _ in range(n) if sample(mu, rng) == (1,))
    sigma = (2 / 9 / n) ** 0.5
    assert abs(hits / n - 2 / 3) <= 3 * sigma

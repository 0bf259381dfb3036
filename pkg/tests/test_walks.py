"""Hitting times, hitting measures, induction, and the control constants."""

import math
from fractions import Fraction as F

import pytest

from harmonic_groups.errors import CensoringError
from harmonic_groups.groups import (
    dihedral_infinite,
    free_abelian,
    standard_generators,
    subgroup_even_sum,
    subgroup_full,
    subgroup_mZ,
    subgroup_rotation,
)
from harmonic_groups.harmonic import AffineHarmonic, translate_affine
from harmonic_groups.measures import FiniteMeasure, point_mass, simple_random_walk
from harmonic_groups.walks import (
    WalkConfig,
    estimate_T,
    exact_first_return,
    hitting_measure,
    induce_harmonic,
    induction_constants,
    simulate_hit,
)

Z = free_abelian(1)
DINF = dihedral_infinite()


def biased_z():
    return FiniteMeasure.from_pairs(Z, [((1,), F(2, 3)), ((-1,), F(1, 3))])


def dinf_uniform():
    return simple_random_walk(DINF)  # uniform on {r, r^-1, s}


def cfg(mu, seed=7, n=10_000, max_steps=10_000):
    return WalkConfig(measure=mu, seed=seed, n_samples=n, max_steps=max_steps)


def test_simulate_hit_inside_H_is_immediate():
    H = subgroup_mZ(2)
    s = simulate_hit((4,), H, cfg(simple_random_walk(Z)), mode="tau")
    assert s.tau == 0 and s.landing == (2,)


def test_simulate_hit_tau_plus_parity():
    H = subgroup_mZ(2)
    for i in range(50):
        s = simulate_hit((0,), H, cfg(simple_random_walk(Z)), mode="tau_plus", sample_index=i)
        assert s.tau == 2
        assert s.landing in {(-1,), (0,), (1,)}


def test_simulate_hit_censoring_is_value():
    H = subgroup_mZ(2)
    mu = point_mass(Z, (2,))  # from an odd start the walk stays odd
    s = simulate_hit((1,), H, cfg(mu, max_steps=5), mode="tau")
    assert s.tau is None and s.landing is None


def test_dinfty_excursion_geometric():
    # from the reflected coset, each step returns with probability 1/3
    H = subgroup_rotation()
    c = cfg(dinf_uniform(), n=4000)
    taus = [
        simulate_hit((0, 1), H, c, mode="tau", sample_index=i).tau for i in range(4000)
    ]
    mean = sum(taus) / len(taus)
    sigma = math.sqrt(6 / len(taus))  # geometric(1/3) variance is 6
    assert abs(mean - 3.0) <= 3 * sigma


def test_exact_first_return_srw():
    dist, tail = exact_first_return(simple_random_walk(Z), subgroup_mZ(2), horizon=2)
    assert tail == 0
    assert dist == {(-1,): F(1, 4), (0,): F(1, 2), (1,): F(1, 4)}


def test_exact_first_return_biased():
    dist, tail = exact_first_return(biased_z(), subgroup_mZ(2), horizon=2)
    assert tail == 0
    assert dist == {(1,): F(4, 9), (0,): F(4, 9), (-1,): F(1, 9)}


def test_hitting_measure_matches_oracle():
    H = subgroup_mZ(2)
    em = hitting_measure(H, cfg(simple_random_walk(Z), n=30_000))
    for atom, p in {(-1,): 0.25, (0,): 0.5, (1,): 0.25}.items():
        sigma = math.sqrt(p * (1 - p) / em.total)
        assert abs(em.frequency(atom) - p) <= 4 * sigma
    assert set(em.counts) == {(-1,), (0,), (1,)}
    assert em.censored == 0


def test_hitting_measure_biased_oracle():
    H = subgroup_mZ(2)
    em = hitting_measure(H, cfg(biased_z(), n=30_000))
    for atom, p in {(1,): 4 / 9, (0,): 4 / 9, (-1,): 1 / 9}.items():
        sigma = math.sqrt(p * (1 - p) / em.total)
        assert abs(em.frequency(atom) - p) <= 4 * sigma


def test_hitting_measure_full_subgroup_is_mu():
    mu = biased_z()
    em = hitting_measure(subgroup_full(Z), cfg(mu, n=20_000))
    for g, w in mu.support:
        p = float(w)
        sigma = math.sqrt(p * (1 - p) / em.total)
        assert abs(em.frequency(g) - p) <= 4 * sigma


def test_empirical_measure_accounting():
    em = hitting_measure(subgroup_mZ(2), cfg(simple_random_walk(Z), n=512))
    assert sum(em.counts.values()) + em.censored == em.total == 512


def test_hitting_measure_reproducible():
    H = subgroup_mZ(2)
    a = hitting_measure(H, cfg(simple_random_walk(Z), seed=123, n=2000))
    b = hitting_measure(H, cfg(simple_random_walk(Z), seed=123, n=2000))
    assert a.counts == b.counts


def test_symmetric_hitting_measure_centered():
    # drift of the empirical hitting measure within 3 sigma of zero
    H = subgroup_even_sum()
    Z2 = free_abelian(2)
    em = hitting_measure(H, cfg(simple_random_walk(Z2), n=20_000))
    means, errs = em.model_drift(H.model)
    for m, e in zip(means, errs):
        assert abs(m) <= 3 * e


def test_estimate_T_2Z():
    t = estimate_T(subgroup_mZ(2), cfg(simple_random_walk(Z), n=3000))
    assert t.T_hat == 1.0
    assert t.stderr == 0.0
    assert dict((j, m) for j, m, _ in t.per_coset) == {0: 0.0, 1: 1.0}


def test_estimate_T_full_subgroup_zero():
    t = estimate_T(subgroup_full(Z), cfg(simple_random_walk(Z), n=500))
    assert t.T_hat == 0.0


def test_estimate_T_dinfty():
    t = estimate_T(subgroup_rotation(), cfg(dinf_uniform(), n=6000))
    assert abs(t.T_hat - 3.0) <= 4 * max(t.stderr, 1e-9)


def test_estimate_T_censoring_hard_failure():
    mu = point_mass(Z, (2,))
    with pytest.raises(CensoringError):
        estimate_T(subgroup_mZ(2), cfg(mu, n=200, max_steps=10))


def test_induce_exact_inside_H():
    H = subgroup_mZ(2)
    f = AffineHarmonic.scalar(Z, 0, (2,))
    r = induce_harmonic(f, (6,), H, cfg(simple_random_walk(Z)))
    assert r.exact and r.value_exact == 6 and r.stderr == 0.0


def test_induce_martingale_oracle():
    # E_x[X_tau] = x by optional stopping for the symmetric walk
    H = subgroup_mZ(2)
    f = AffineHarmonic.scalar(Z, 0, (2,))
    for x in (-3, 1, 5):
        r = induce_harmonic(f, (x,), H, cfg(simple_random_walk(Z), n=20_000))
        assert abs(r.value - x) <= 4 * r.stderr


def test_induce_constant_exact():
    H = subgroup_mZ(2)
    const = AffineHarmonic.scalar(Z, F(7, 3), (0,))
    inside = induce_harmonic(const, (2,), H, cfg(simple_random_walk(Z), n=100))
    outside = induce_harmonic(const, (3,), H, cfg(simple_random_walk(Z), n=100))
    assert inside.value_exact == F(7, 3)
    assert outside.value_exact == F(7, 3)
    assert outside.stderr == 0.0


def test_induce_requires_scalar():
    H = subgroup_mZ(2)
    f2 = AffineHarmonic.vector(Z, (0, 0), ((1,), (2,)))
    with pytest.raises(ValueError):
        induce_harmonic(f2, (1,), H, cfg(simple_random_walk(Z), n=10))


def test_nested_induction_functoriality():
    # two-stage induction through 2Z matches one-stage induction from 4Z
    mu = simple_random_walk(Z)
    H = subgroup_mZ(2)
    K = subgroup_mZ(4)
    f = AffineHarmonic.scalar(Z, 0, (4,))  # f(4k) = 4k in K-model coordinates

    hitting_H, tail = exact_first_return(mu, H, horizon=2)
    assert tail == 0
    mu_H = FiniteMeasure.from_pairs(H.model, hitting_H.items())
    K_in_model = subgroup_mZ(2)  # 4Z corresponds to 2 * (H-model)

    inner_cache = {}

    def inner(h_model):
        if h_model not in inner_cache:
            inner_cache[h_model] = induce_harmonic(
                f, h_model, K_in_model, cfg(mu_H, seed=101, n=20_000)
            )
        return inner_cache[h_model]

    one_cfg = cfg(mu, seed=33, n=4000)
    for x in (-5, -2, 1, 3):
        one = induce_harmonic(f, (x,), K, one_cfg)
        outer_vals = []
        for i in range(2000):
            s = simulate_hit((x,), H, cfg(mu, seed=55), mode="tau", sample_index=i)
            outer_vals.append(inner(s.landing))
        two_mean = sum(r.value for r in outer_vals) / len(outer_vals)
        inner_err = max(r.stderr for r in outer_vals)
        spread = [r.value for r in outer_vals]
        mean_sq = sum(v * v for v in spread) / len(spread)
        outer_err = math.sqrt(max(mean_sq - two_mean**2, 0.0) / len(spread))
        one_val = float(one.value_exact) if one.exact else one.value
        tol = 3 * (one.stderr + outer_err + inner_err) + 1e-9
        assert abs(one_val - two_mean) <= tol, (x, one_val, two_mean, tol)


def test_induction_H_equivariance():
    # inducing the left-translate by h in H equals translating the induction
    mu = simple_random_walk(Z)
    H = subgroup_mZ(2)
    f = AffineHarmonic.scalar(Z, 0, (2,))
    h_model = (3,)  # the element 6 of H
    f_shift = translate_affine(f, h_model)
    for x in (1, 5):
        lhs = induce_harmonic(f_shift, (x,), H, cfg(mu, seed=71, n=20_000))
        rhs = induce_harmonic(
            f, (x - 6,), H, cfg(mu, seed=72, n=20_000)
        )
        tol = 3 * (lhs.stderr + rhs.stderr) + 1e-9
        assert abs(lhs.value - rhs.value) <= tol


def test_induction_constants_2Z():
    c = induction_constants(
        subgroup_mZ(2),
        standard_generators(Z),
        standard_generators(Z),
        cfg(simple_random_walk(Z), n=2000),
    )
    assert c.A == F(1, 2)
    assert c.D == 1
    assert c.m1 == 1
    assert c.C_HG == 2
    assert c.T_hat == 1.0
    assert abs(c.C_star - 3.5) < 1e-12


def test_induction_constants_full():
    c = induction_constants(
        subgroup_full(Z),
        standard_generators(Z),
        standard_generators(Z),
        cfg(simple_random_walk(Z), n=500),
    )
    assert c.C_HG == 1 and c.D == 0 and c.T_hat == 0.0
    assert c.A == 1 and c.C_star == 1.0


def test_induction_constants_dinfty():
    c = induction_constants(
        subgroup_rotation(),
        standard_generators(DINF),
        standard_generators(free_abelian(1)),
        cfg(dinf_uniform(), n=2000),
    )
    assert c.C_HG == 1
    assert c.D == 1


def test_restriction_induction_identity_on_ball():
    # Res then Ind returns the original affine harmonic values within noise
    mu = simple_random_walk(Z)
    H = subgroup_mZ(2)
    from harmonic_groups.harmonic import restrict_affine

    f = AffineHarmonic.scalar(Z, 0, (1,))
    f_H = restrict_affine(f, H)
    assert f_H.phi == ((F(2),),)
    for x in range(-5, 6):
        r = induce_harmonic(f_H, (x,), H, cfg(mu, seed=13, n=20_000))
        if r.exact:
            assert r.value_exact == x
        else:
            assert abs(r.value - x) <= 4 * r.stderr

    # rank-0 side: every affine harmonic on D_inf is constant, so induction
    # of its restriction to the rotation core returns the constant exactly
    fd = AffineHarmonic(DINF, (F(5),), ((),))
    fd_core = restrict_affine(fd, subgroup_rotation())
    r = induce_harmonic(fd_core, (4, 1), subgroup_rotation(), cfg(dinf_uniform(), n=500))
    assert r.value_exact == 5


def test_empirical_lipschitz_bound_for_induction():
    # increments of the induced function bounded by C_star times the source
    # seminorm, within Monte Carlo noise
    mu = simple_random_walk(Z)
    H = subgroup_mZ(2)
    c = induction_constants(
        H, standard_generators(Z), standard_generators(Z), cfg(mu, n=2000)
    )
    f = AffineHarmonic.scalar(Z, 0, (2,))
    grad = 2.0
    vals = {}
    errs = {}
    for x in range(-8, 10):
        r = induce_harmonic(f, (x,), H, cfg(mu, seed=200 + x, n=5000))
        vals[x] = float(r.value_exact) if r.exact else r.value
        errs[x] = r.stderr
    for x in range(-8, 9):
        inc = abs(vals[x + 1] - vals[x])
        assert inc <= c.C_star * grad + 6 * grad * max(errs[x], errs[x + 1])

"""Pipelines, Abelian defect, homogenization, linearization, straightening."""

import math
from fractions import Fraction as F

import pytest

from harmonic_groups import groups, linalg
from harmonic_groups.errors import ResourceCapError
from harmonic_groups.groups import dihedral_infinite, free_abelian, heisenberg3
from harmonic_groups.straightening import (
    DivergenceError,
    Linear,
    Shear,
    Swap,
    Translate,
    abelian_defect,
    check_coarsely_affine,
    coordinates,
    core_coordinates,
    defect_at,
    eval_qi,
    extended_coordinates,
    extract_linearization,
    homogenize,
    identity_map,
    lattice_linear,
    qi_map,
    shear_map,
    straightening_deviation,
    transported_coordinates,
)

Z = free_abelian(1)
Z2 = free_abelian(2)
H3 = heisenberg3()


def test_eval_examples():
    sq = shear_map(Z2, "sqrt_floor")
    assert eval_qi(sq, (100, 0)) == (100, 10)
    m2 = shear_map(Z2, "mod2")
    assert eval_qi(m2, (3, 5)) == (3, 6)
    ident = identity_map(Z2)
    assert eval_qi(ident, (4, -7)) == (4, -7)


def test_pipelines_normalize_identity():
    psi = qi_map(Z2, Z2, (Translate((3, -2)), Shear(1, 0, "mod2")))
    assert eval_qi(psi, (0, 0)) == (0, 0)
    sq = shear_map(Z2, "sqrt_floor")
    assert eval_qi(sq, (0, 0)) == (0, 0)


def test_pipeline_validation():
    with pytest.raises(ValueError):
        qi_map(Z2, Z2, (Linear(((1, 0),)),))  # drops a dimension
    with pytest.raises(ValueError):
        qi_map(Z2, Z2, (Swap((0, 0)),))
    with pytest.raises(ValueError):
        qi_map(dihedral_infinite(), Z2, ())
    with pytest.raises(ValueError):
        qi_map(Z2, Z2, (Shear(5, 0, "mod2"),))
    with pytest.raises(ValueError):
        qi_map(Z2, Z2, (Shear(1, 0, "cubic"),))


def test_heisenberg_source_projects_through_abelianization():
    psi = qi_map(H3, Z2, (Shear(1, 0, "mod2"),))
    # the central coordinate is invisible
    assert eval_qi(psi, (3, 5, 99)) == (3, 6)
    assert eval_qi(psi, (3, 5, 0)) == (3, 6)


def test_heisenberg_target_lift():
    psi = qi_map(Z2, H3, ())
    assert eval_qi(psi, (4, 7)) == (4, 7, 0)


def test_swap_and_translate_stages():
    psi = qi_map(Z2, Z2, (Swap((1, 0)), Translate((1, 1))))
    # normalization appends the compensating translate
    assert eval_qi(psi, (0, 0)) == (0, 0)
    assert eval_qi(psi, (2, 5)) == (5, 2)


def test_defect_of_homomorphism_is_zero():
    psi = lattice_linear(Z2, Z2, ((2, 1), (1, 1)))
    rep = abelian_defect(psi, 8)
    assert rep.mode == "exhaustive"
    assert rep.max_defect == 0
    assert all(d == 0 for _, d in rep.growth_curve)


def test_mod2_defect_exhaustive():
    psi = shear_map(Z2, "mod2")
    rep = abelian_defect(psi, 6)
    assert rep.max_defect == 2
    x, y = rep.argmax
    assert max(abs(c) for c in defect_at(psi, x, y)) == 2
    # already realized at radius 1 by a pair of odd points
    assert rep.growth_curve[0][1] == 2


def test_sqrt_defect_witness_examples():
    psi = shear_map(Z2, "sqrt_floor")
    assert defect_at(psi, (100, 0), (100, 0)) == (0, -6)
    assert defect_at(psi, (100, 0), (-100, 0)) == (0, -20)


def test_growth_curve_nondecreasing():
    psi = shear_map(Z2, "sqrt_floor")
    rep = abelian_defect(psi, 200, seed=4)
    values = [d for _, d in rep.growth_curve]
    assert values == sorted(values)
    assert rep.mode == "sampled"


def test_sampled_mode_requires_free_abelian():
    psi = qi_map(H3, Z2, (Shear(1, 0, "sqrt_floor"),))
    with pytest.raises(ResourceCapError):
        abelian_defect(psi, 5000, pair_budget=100)


def test_homogenize_mod2_rounding():
    hom = homogenize(Z, lambda g: g[0] + g[0] % 2, (1,), defect_bound=2)
    assert hom.value == 1
    assert hom.k_used == 1
    assert hom.error_bound == 1
    assert hom.sequence[0] == 2


def test_homogenize_homomorphism_at_k0():
    hom = homogenize(Z, lambda g: 3 * g[0], (2,), defect_bound=0)
    assert hom.value == 6
    assert hom.k_used == 0
    assert hom.error_bound == 0


def test_homogenize_sqrt_decays():
    hom = homogenize(Z, lambda g: math.isqrt(abs(g[0])), (1,), k_max=12, defect_bound=10)
    assert hom.k_used == 12
    assert hom.value == F(1, 64)  # isqrt(2^12) / 2^12
    assert hom.error_bound == F(10, 2**12)


def test_homogenize_cauchy_certificate():
    hom = homogenize(
        Z, lambda g: g[0] + g[0] % 2, (1,), k_max=21, stop_early=False, defect_bound=2
    )
    for k in range(21):
        assert abs(hom.sequence[k + 1] - hom.sequence[k]) <= F(2, 2 ** (k + 1))


def test_extract_linearization_mod2():
    psi = shear_map(Z2, "mod2")
    lin = extract_linearization(psi)
    assert lin.L_ab == linalg.identity_matrix(2)
    assert lin.T_psi == linalg.identity_matrix(2)
    assert lin.residual_bound == 1
    prod = linalg.mat_mul(lin.L_ab, linalg.transpose(lin.T_psi))
    assert prod == linalg.identity_matrix(2)


def test_extract_linearization_homomorphism():
    M = ((2, 1), (1, 1))
    lin = extract_linearization(lattice_linear(Z2, Z2, M))
    assert lin.L_ab == linalg.as_fraction_rows(M)
    assert lin.residual_bound == 0
    assert lin.k_used == 0


def test_extract_linearization_rejects_sqrt():
    with pytest.raises(DivergenceError):
        extract_linearization(shear_map(Z2, "sqrt_floor"))


def test_extract_linearization_singular():
    with pytest.raises(ValueError, match="not invertible"):
        extract_linearization(lattice_linear(Z2, Z2, ((1, 0), (0, 0))))


def test_coordinates_examples():
    F_core = core_coordinates(Z2)
    assert coordinates(F_core, (3, -1)) == (3, -1)

    F_ext = extended_coordinates(groups.subgroup_rotation())
    assert coordinates(F_ext, (5, 1)) == (5,)
    assert coordinates(F_ext, (5, 0)) == (5,)

    F_h = core_coordinates(H3)
    assert coordinates(F_h, (0, 0, 9)) == (0, 0)


def test_coordinates_need_full_rank():
    with pytest.raises(ValueError, match="full rank"):
        core_coordinates(Z2, basis=((1, 0), (2, 0)))


def test_transported_basis_inverts_linearization():
    M = ((2, 1), (1, 1))
    lin = extract_linearization(lattice_linear(Z2, Z2, M))
    P = transported_coordinates(lin, Z2).basis
    assert linalg.mat_mul(P, lin.L_ab) == linalg.identity_matrix(2)


def test_straightening_deviation_mod2():
    psi = shear_map(Z2, "mod2")
    lin = extract_linearization(psi)
    dev = straightening_deviation(
        psi, core_coordinates(Z2), transported_coordinates(lin, Z2), 30
    )
    assert dev.sup_dev == 1.0
    curve_vals = [d for _, d in dev.curve]
    assert curve_vals == sorted(curve_vals)


def test_straightening_deviation_homomorphism_zero():
    M = ((2, 1), (1, 1))
    hom = lattice_linear(Z2, Z2, M)
    lin = extract_linearization(hom)
    dev = straightening_deviation(
        hom, core_coordinates(Z2), transported_coordinates(lin, Z2), 25
    )
    assert dev.sup_dev == 0.0


def test_straightening_deviation_grows_without_bounded_defect():
    psi = shear_map(Z2, "sqrt_floor")
    small = straightening_deviation(psi, core_coordinates(Z2), core_coordinates(Z2), 25)
    large = straightening_deviation(psi, core_coordinates(Z2), core_coordinates(Z2), 64)
    assert small.sup_dev == 5.0  # isqrt(25)
    assert large.sup_dev == 8.0  # isqrt(64)
    assert large.sup_dev > small.sup_dev


def test_deviation_bounded_by_operator_norm_times_defect():
    # transported-coordinate deviation within |P| * analytic defect bound
    psi = shear_map(Z2, "mod2")
    lin = extract_linearization(psi)
    P = transported_coordinates(lin, Z2)
    dev = straightening_deviation(psi, core_coordinates(Z2), P, 40)
    assert dev.sup_dev <= float(linalg.row_l1_norm(P.basis)) * 2


def test_extended_deviation_bounded_by_core_plus_slack():
    # extend the identity core map of D_inf to the whole group; the extended
    # coordinates compare against the rotation part within the transversal slack
    R = groups.subgroup_rotation()
    F_src = extended_coordinates(R)
    F_tgt = core_coordinates(Z)

    def phi(g):  # collapse the reflection: within distance 1 of the core map
        return (g[0] + g[1],)

    dev = straightening_deviation(phi, F_src, F_tgt, 12)
    assert dev.sup_dev == 1.0  # core bound 0 plus Lipschitz slack 1 * C1 = 1


def test_check_coarsely_affine_mod2():
    psi = shear_map(Z2, "mod2")
    rep = check_coarsely_affine(psi, linalg.identity_matrix(2), (0, 0), 20)
    assert rep.C_hat == 1
    assert rep.implied_defect_bound == 3
    assert rep.measured_defect == 2
    assert rep.consistent


def test_check_coarsely_affine_homomorphism():
    M = ((2, 1), (1, 1))
    psi = lattice_linear(Z2, Z2, M)
    rep = check_coarsely_affine(psi, M, (0, 0), 12)
    assert rep.C_hat == 0
    assert rep.implied_defect_bound == 0
    assert rep.measured_defect == 0
    assert rep.consistent


def test_check_coarsely_affine_sqrt_grows():
    psi = shear_map(Z2, "sqrt_floor")
    small = check_coarsely_affine(psi, linalg.identity_matrix(2), (0, 0), 25)
    large = check_coarsely_affine(psi, linalg.identity_matrix(2), (0, 0), 49)
    assert small.C_hat == 5
    assert large.C_hat == 7
    assert large.C_hat > small.C_hat


def test_check_coarsely_affine_nonzero_v0():
    # shifting the affine model changes C_hat and the implied bound together
    psi = shear_map(Z2, "mod2")
    rep = check_coarsely_affine(psi, linalg.identity_matrix(2), (0, 1), 10)
    assert rep.implied_defect_bound == 3 * rep.C_hat + 1
    assert rep.consistent


def test_counterexample_growth_small_scales():
    psi = shear_map(Z2, "sqrt_floor")
    for N in (100, 400):
        rep = abelian_defect(psi, N, seed=1)
        assert rep.max_defect >= 0.5 * math.sqrt(N)

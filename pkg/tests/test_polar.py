import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from modpolar.errors import (
    EquivalenceViolation,
    IllConditioned,
    NonPositiveAlpha,
    NotPartialIsometry,
    ShapeMismatch,
)
from modpolar.hilbert_module import AdjointableOp, compose, op_adjoint, op_norm, range_projection
from modpolar.polar import (
    PolarFactors,
    abs_op,
    alpha_intertwine_check,
    check_existence_conditions,
    criterion_check,
    polar_decompose,
    polar_decompose_via_limit,
    uniqueness_check,
    verify_partial_isometry,
    verify_polar_identities,
)

from _util import operator, ranks, rng, scalar_op, seeds, shapes, shift, unitary

SHIFT_U = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]])


def diag(*xs):
    return scalar_op(np.diag(xs))


def block(op):
    return op.blocks[0]


# -- construction --------------------------------------------------------------

def test_abs_examples():
    assert op_norm(abs_op(scalar_op(np.zeros((2, 3))))) == 0
    r = rng(0)
    v = unitary(r, 3)
    pos = scalar_op((v * [2.0, 1.0, 0.5]) @ v.conj().T)
    assert op_norm(abs_op(pos) - pos) <= 1e-14
    assert np.allclose(block(abs_op(shift([1, 2]))), np.diag([1, 2, 0]), atol=1e-15)


def test_polar_examples():
    f = polar_decompose(scalar_op(np.zeros((2, 2))))
    assert op_norm(f.U) == 0 and op_norm(f.absT) == 0
    f = polar_decompose(diag(2, 0))
    assert np.allclose(block(f.U), np.diag([1, 0]))
    assert np.allclose(block(f.absT), np.diag([2, 0]))
    f = polar_decompose(shift([1, 2]))
    assert np.allclose(block(f.U), SHIFT_U, atol=1e-15)
    assert np.allclose(block(f.absT), np.diag([1, 2, 0]), atol=1e-15)


def test_polar_weighted_shift_over_block_algebra():
    f = polar_decompose(shift([1, 2], (1, 2)))
    assert np.allclose(f.U.blocks[1], np.kron(SHIFT_U, np.eye(2)), atol=1e-15)


def test_factors_are_immutable():
    f = polar_decompose(diag(2, 0))
    with pytest.raises(AttributeError):
        f.U = f.absT
    assert isinstance(f, PolarFactors)


def test_limit_examples():
    r = rng(1)
    v = unitary(r, 3)
    pos = scalar_op((v * [2.0, 1.0, 0.5]) @ v.conj().T)
    assert op_norm(polar_decompose_via_limit(pos).U - scalar_op(np.eye(3))) <= 1e-6
    assert op_norm(polar_decompose_via_limit(diag(2, 0)).U - diag(1, 0)) <= 1e-6
    w1, w2 = unitary(r, 4), unitary(r, 4)
    t = scalar_op((w1 * r.uniform(0.1, 2.0, 4)) @ w2)
    assert op_norm(polar_decompose_via_limit(t).U - polar_decompose(t).U) <= 1e-6


def test_limit_gate_rejects_unresolvable_rank():
    with pytest.raises(IllConditioned):
        polar_decompose_via_limit(diag(1, 1e-7))


def test_limit_zero_operator():
    assert op_norm(polar_decompose_via_limit(scalar_op(np.zeros((2, 2)))).U) == 0


# -- verification ----------------------------------------------------------------

def test_partial_isometry_examples():
    assert verify_partial_isometry(scalar_op(np.zeros((2, 2))))
    assert verify_partial_isometry(scalar_op(np.eye(3)))
    half = verify_partial_isometry(scalar_op([[0.5]]))
    assert not half
    # U*U = 1/4 and (1/4)^2 - 1/4 = -3/16
    assert half.idempotency == pytest.approx(3 / 16)
    assert half.reconstruction == pytest.approx(0.5 - 0.125)


def test_identities_zero_operator():
    t = scalar_op(np.zeros((2, 2)))
    rep = verify_polar_identities(t, polar_decompose(t))
    assert rep.ok and rep.max_residual == 0


def test_self_adjoint_invertible_gives_spectral_sign():
    t = diag(2, -3)
    f = polar_decompose(t)
    assert np.allclose(block(f.U), np.diag([1, -1]))
    assert verify_polar_identities(t, f).ok


def test_weighted_shift_abs_star():
    t = shift([1, 2])
    f = polar_decompose(t)
    assert np.allclose(block(f.absTstar), np.diag([0, 1, 2]), atol=1e-15)
    conj = compose(compose(f.U, diag(1, 2, 0)), op_adjoint(f.U))
    assert np.allclose(block(conj), np.diag([0, 1, 2]))
    assert verify_polar_identities(t, f).max_residual <= 1e-15


def test_identities_report_failures_for_wrong_factors():
    t = shift([1, 2])
    f = polar_decompose(t)
    bad = PolarFactors(scalar_op(np.eye(3)), f.absT, f.absTstar, f.P_rstar, f.P_r)
    rep = verify_polar_identities(t, bad)
    assert not rep.ok
    assert "factorization" in rep.failures


@given(seeds, shapes, ranks, ranks, st.booleans())
def test_polar_identities_hold(seed, shape, k, m, deficient):
    t = operator(rng(seed), shape, k, m, deficient)
    f = polar_decompose(t)
    rep = verify_polar_identities(t, f)
    assert rep.ok, rep.residuals
    assert op_norm(range_projection(f.absT) - f.P_rstar) <= 1e-8


@given(seeds, shapes, ranks, ranks, st.booleans())
def test_duality(seed, shape, k, m, deficient):
    t = operator(rng(seed), shape, k, m, deficient)
    u = polar_decompose(t).U
    assert op_norm(polar_decompose(op_adjoint(t)).U - op_adjoint(u)) <= 1e-8


@given(seeds, shapes, ranks, ranks, st.booleans())
def test_idempotent_stability(seed, shape, k, m, deficient):
    u = polar_decompose(operator(rng(seed), shape, k, m, deficient)).U
    f = polar_decompose(u)
    assert op_norm(f.U - u) <= 1e-8
    assert op_norm(f.absT - compose(op_adjoint(u), u)) <= 1e-8


@given(seeds, shapes, ranks, ranks, st.booleans())
def test_limit_path_agrees(seed, shape, k, m, deficient):
    t = operator(rng(seed), shape, k, m, deficient)
    u = polar_decompose(t).U
    try:
        v = polar_decompose_via_limit(t).U
    except IllConditioned:
        return
    rep = uniqueness_check(t, u, v)
    assert rep.residuals["same_action"] <= 1e-6
    assert rep.residuals["same_initial_projection"] <= 1e-6
    assert rep.residuals["difference"] <= 1e-6


def test_uniqueness_detects_different_candidates():
    t = diag(2, 0)
    rep = uniqueness_check(t, diag(1, 0), scalar_op(np.eye(2)))
    assert rep.residuals["same_action"] == 0
    assert rep.residuals["same_initial_projection"] == pytest.approx(1)
    assert not rep.ok


# -- existence conditions -----------------------------------------------------

def test_existence_examples():
    assert check_existence_conditions(scalar_op(np.zeros((2, 2)))).conditions == (True, True, True)
    r = rng(5)
    assert check_existence_conditions(scalar_op(r.standard_normal((5, 5)))).conditions == (True, True, True)
    t = shift([1, 2])
    assert check_existence_conditions(t).conditions == (True, True, True)
    # R(|T|) = R(T*) = span(e1, e2)
    assert np.allclose(block(range_projection(abs_op(t))), np.diag([1, 1, 0]))


@given(seeds, shapes, ranks, ranks, st.booleans())
def test_existence_unanimous(seed, shape, k, m, deficient):
    rep = check_existence_conditions(operator(rng(seed), shape, k, m, deficient))
    assert rep.unanimous and all(rep.conditions), rep.residuals


# -- power identities -----------------------------------------------------------

def test_alpha_one_matches_basic_identities():
    t = operator(rng(2), (1, 2), 2, 3)
    f = polar_decompose(t)
    rep = alpha_intertwine_check(f, 1)
    base = verify_polar_identities(t, f)
    assert rep.residuals["conjugation"] == pytest.approx(base.residuals["abs_star_conjugation"], abs=1e-14)
    assert rep.ok


def test_alpha_half_random():
    t = scalar_op(rng(3).standard_normal((4, 4)))
    rep = alpha_intertwine_check(polar_decompose(t), 0.5)
    assert rep.max_residual < 1e-8


def test_alpha_must_be_positive():
    f = polar_decompose(diag(1, 2))
    for bad in (0, -1):
        with pytest.raises(NonPositiveAlpha):
            alpha_intertwine_check(f, bad)


@given(seeds, shapes, ranks, ranks, st.booleans(), st.sampled_from([0.5, 1.0, 2.0, 3.7]))
def test_alpha_identities(seed, shape, k, m, deficient, alpha):
    t = operator(rng(seed), shape, k, m, deficient)
    rep = alpha_intertwine_check(polar_decompose(t), alpha)
    assert rep.ok, rep.residuals


# -- criterion ----------------------------------------------------------------------

def test_criterion_examples():
    t = shift([1, 2])
    assert criterion_check(t, polar_decompose(t).U)
    r = rng(4)
    v = unitary(r, 3)
    pos = scalar_op((v * [2.0, 1.0, 0.5]) @ v.conj().T)
    assert criterion_check(pos, scalar_op(np.eye(3)))
    # T = W|T| holds for W = I, but N(T) = span(e2) is not inside N(W) = 0
    t = diag(2, 0)
    assert op_norm(compose(scalar_op(np.eye(2)), abs_op(t)) - t) == 0
    assert not criterion_check(t, scalar_op(np.eye(2)))


def test_criterion_errors():
    with pytest.raises(NotPartialIsometry):
        criterion_check(diag(2, 0), diag(0.5, 0))
    with pytest.raises(ShapeMismatch):
        criterion_check(diag(2, 0), scalar_op(np.eye(3)))


def test_criterion_rejects_other_partial_isometry():
    t = diag(2, 0)
    assert not criterion_check(t, scalar_op([[0, 1], [1, 0]]))


def test_equivalence_violation_is_an_assertion():
    assert issubclass(EquivalenceViolation, AssertionError)


@given(seeds, shapes, ranks, ranks, st.booleans())
def test_criterion_accepts_canonical(seed, shape, k, m, deficient):
    t = operator(rng(seed), shape, k, m, deficient)
    assert criterion_check(t, polar_decompose(t).U)


@given(seeds, st.integers(2, 4))
def test_criterion_rejects_unitary_extension_of_deficient(seed, d):
    r = rng(seed)
    x = r.standard_normal((d, d - 1)) + 1j * r.standard_normal((d, d - 1))
    t = scalar_op(x @ x.conj().T)
    w = AdjointableOp.from_scalar_matrix(unitary(r, d))
    assert not criterion_check(t, w)

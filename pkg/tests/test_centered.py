import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from modpolar.centered import (
    REPORT_TAGS,
    TAGS,
    PowerTables,
    RestrictedSequence,
    cancellation_check,
    centered_direct,
    centered_report,
    condition_family,
    lemma42_propagation,
    product_formula_check,
    restricted_commutativity,
    sample_sequences,
)
from modpolar.errors import EquivalenceViolation, InvalidSequence, NotSquare, UnknownTag
from modpolar.hilbert_module import AdjointableOp, compose, op_adjoint
from modpolar.polar import polar_decompose

from _util import operator, rng, scalar_op, seeds, shapes, shift, unitary

JORDAN = scalar_op([[1, 1], [0, 1]])


def tables(t):
    return PowerTables(polar_decompose(t))


def normal(r, d, shape=(1,)):
    v = unitary(r, d)
    lam = r.standard_normal(d) + 1j * r.standard_normal(d)
    return scalar_op((v * lam) @ v.conj().T, shape)


def late_failure(fb):
    """Centered up to level ``fb``; the first failing level is ``fb + 1``.

    ``U`` is the cyclic shift of period ``2·fb`` and ``P = I + cc*`` with
    ``c`` a unit vector whose DFT weights differ on even and odd frequencies.
    """
    d = 2 * fb
    u = np.roll(np.eye(d), 1, axis=0)
    j = np.arange(d)
    w = np.where(j % 2 == 0, 1.0, 3.0)
    c = (np.fft.ifft(np.eye(d), axis=0) * np.sqrt(d)) @ np.sqrt(w / w.sum())
    c = c.reshape(-1, 1)
    p = np.eye(d) + c @ c.conj().T
    return scalar_op(u @ p)


# -- the defining family ---------------------------------------------------------

def test_direct_examples():
    circ = scalar_op(np.roll(np.eye(3), 1, axis=0))
    assert centered_direct(circ, 8)[0]
    ok, res = centered_direct(JORDAN, 8)
    assert not ok and res > 0.1
    assert centered_direct(shift([1, 2]), 8)[0]


def test_jordan_commutator_by_hand():
    t = JORDAN.blocks[0]
    tts, tst = t @ t.conj().T, t.conj().T @ t
    assert np.array_equal(tts @ tst, [[3, 4], [2, 3]])
    assert np.array_equal(tst @ tts, [[3, 2], [4, 3]])


def test_rejects_non_square():
    with pytest.raises(NotSquare):
        centered_direct(scalar_op(np.ones((3, 2))), 2)
    with pytest.raises(NotSquare):
        centered_report(scalar_op(np.ones((3, 2))))


# -- tagged conditions ------------------------------------------------------------

def test_shift_conjugates_are_diagonal():
    tab = tables(shift([1, 2]))
    assert np.allclose(tab.conj(1).op.blocks[0], np.diag([0, 1, 2]))
    assert np.allclose(tab.conj(2).op.blocks[0], np.diag([0, 0, 1]))
    assert np.allclose(tab.U_pow(3).blocks[0], 0)
    assert condition_family(tab, "vii", 3)[0]


def test_jordan_fails_tag_iii():
    ok, res = condition_family(tables(JORDAN), "iii", 2)
    assert not ok and res > 1e-3


@given(seeds, st.integers(1, 4), st.sampled_from(TAGS))
def test_positive_operators_pass_every_tag(seed, d, tag):
    r = rng(seed)
    v = unitary(r, d)
    pos = scalar_op((v * r.uniform(0, 2, d)) @ v.conj().T)
    assert condition_family(tables(pos), tag, 4)[0]


def test_unknown_tag():
    with pytest.raises(UnknownTag):
        condition_family(tables(JORDAN), "iv", 2)


# -- restricted sequences -----------------------------------------------------------

def test_sequence_validation():
    assert RestrictedSequence((1, 2, 1)).terms == (1, 2, 1)
    with pytest.raises(InvalidSequence):
        RestrictedSequence((1, 3))
    with pytest.raises(InvalidSequence):
        RestrictedSequence((0,))
    s = RestrictedSequence.random(6, rng(0))
    assert all(1 <= t <= n for n, t in enumerate(s.terms, start=1))


def test_sequences_match_their_conditions():
    for t in (shift([1, 2]), JORDAN, late_failure(3)):
        tab = tables(t)
        n = 4
        assert restricted_commutativity(tab, RestrictedSequence.ones(n))[0] == condition_family(tab, "iii", n)[0]
        assert restricted_commutativity(tab, RestrictedSequence.identity(n))[0] == condition_family(tab, "vii", n)[0]


def test_shift_along_sequence():
    assert restricted_commutativity(tables(shift([1, 2])), (1, 2, 1))[0]


@given(seeds, shapes)
def test_sequences_agree(seed, shape):
    r = rng(seed)
    t = operator(r, shape, 2, 2) if r.uniform() < 0.5 else normal(r, 3, shape)
    tab = tables(t)
    verdicts = {restricted_commutativity(tab, s)[0] for s in sample_sequences(6, seed)}
    assert len(verdicts) == 1


# -- propagation, product formula, cancellation -----------------------------------

def test_propagation_examples():
    rep = lemma42_propagation(tables(shift([1, 2, 3])), 1)
    assert rep.applicable and all(rep.equal) and rep.consistent
    rep = lemma42_propagation(tables(JORDAN), 1)
    assert not rep.applicable and rep.equal == ()
    for n in range(1, 5):
        assert all(lemma42_propagation(tables(normal(rng(n), 3)), n).equal)


@pytest.mark.parametrize("fb", [2, 3, 4])
def test_propagation_late_failure(fb):
    tab = tables(late_failure(fb))
    for n in range(1, fb - 1):
        rep = lemma42_propagation(tab, n)
        assert rep.applicable and all(rep.equal)
    rep = lemma42_propagation(tab, fb - 1)
    assert rep.applicable and not any(rep.equal) and rep.consistent
    for n in range(fb, 7):
        assert not lemma42_propagation(tab, n).applicable


def test_product_formula_examples():
    tab = tables(shift([1, 2, 3]))
    one = product_formula_check(tab, 1)
    assert one.applicable and one.holds
    two = product_formula_check(tab, 2)
    assert two.holds
    assert np.allclose(tab.abs_pow_star(2).op.blocks[0], np.diag([0, 0, 2, 6]), atol=1e-14)
    prod = compose(tab.conj(1).op, tab.conj(2).op)
    assert np.allclose(prod.blocks[0], np.diag([0, 0, 2, 6]), atol=1e-14)
    assert product_formula_check(tables(normal(rng(7), 3)), 3).holds


def test_product_formula_not_applicable():
    rep = product_formula_check(tables(JORDAN), 2)
    assert not rep.applicable and rep.holds is None


@given(seeds, st.lists(st.floats(0.1, 3.0), min_size=1, max_size=5), st.integers(1, 5), shapes)
def test_product_formula_on_shifts(seed, weights, k, shape):
    rep = product_formula_check(tables(shift(weights, shape)), k)
    assert rep.applicable and rep.residual <= 1e-8


@given(seeds, st.integers(1, 5))
def test_cancellation_identity(seed, n):
    r = rng(seed)
    t = shift(r.uniform(0.2, 2, 4)) if r.uniform() < 0.5 else normal(r, 3)
    rep = cancellation_check(tables(t), n)
    assert rep.applicable and rep.residual <= 1e-8


# -- the full battery ----------------------------------------------------------------

def test_report_examples():
    rep = centered_report(shift([1, 2]), 4)
    assert rep.centered is True and rep.exactness == "Exact"
    assert tuple(rep.condition_results) == REPORT_TAGS
    rep = centered_report(JORDAN, 4)
    assert rep.centered is False and rep.unanimous
    u = scalar_op(unitary(rng(3), 3))
    rep = centered_report(u)
    assert rep.centered is True and rep.exactness == "BoundedOnly"


def test_report_serializes():
    d = centered_report(shift([1, 2]), 3).as_dict()
    assert d["centered"] is True
    assert set(d["conditions"]) == set(REPORT_TAGS)
    assert len(d["sequences"]) == 3


def test_truncation_can_split_the_battery():
    # the first failing level lies just above n_max; tags reach it at different depths
    with pytest.raises(EquivalenceViolation) as exc:
        centered_report(late_failure(2), 1)
    assert not exc.value.report.unanimous
    assert centered_report(late_failure(2), 2).centered is False
    assert centered_report(late_failure(3), 8).centered is False


@given(seeds, shapes)
def test_adjoint_stability(seed, shape):
    r = rng(seed)
    t = operator(r, shape, 2, 2) if r.uniform() < 0.5 else shift(r.uniform(0.2, 2, 3), shape)
    assert centered_report(t, 6).centered == centered_report(op_adjoint(t), 6).centered


@given(seeds, shapes)
def test_unitary_conjugation_stability(seed, shape):
    r = rng(seed)
    t = operator(r, shape, 3, 3) if r.uniform() < 0.5 else shift(r.uniform(0.2, 2, 2), shape)
    w = AdjointableOp.from_scalar_matrix(unitary(r, 3), shape)
    moved = compose(compose(op_adjoint(w), t), w)
    assert centered_report(t, 6).centered == centered_report(moved, 6).centered


@given(seeds, st.integers(1, 4), shapes)
def test_normal_operators_are_centered(seed, d, shape):
    assert centered_report(normal(rng(seed), d, shape), 6).centered is True

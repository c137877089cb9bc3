import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from privstate import states
from privstate.measures import (
    dephase_key,
    dw_rate,
    en_example1_closed,
    en_hiding_closed,
    is_ppt,
    log_negativity,
    measure_suite,
    min_pt_eigenvalue,
    ree_dephasing_bound,
    ree_dephasing_direct,
    untwisted_ccq,
)
from privstate.states import KEY_LAYOUT, block_to_dense, raw_key_state
from privstate.tensor_core import DenseState, FactorLayout, LayoutError, trace_norm
from privstate.twisting import CcqEnsemble, ccq_state, random_twist

BELL = DenseState(states.bell_state(+1), KEY_LAYOUT)
CLASSICAL = DenseState(np.diag([0.5, 0, 0, 0.5]), KEY_LAYOUT)


def _product(rng):
    return DenseState(np.kron(states.random_density(2, rng), states.random_density(2, rng)), KEY_LAYOUT)


def _strict_gamma(rng):
    return states.private_state(1, random_twist(2, 4, rng), states.werner_extreme(2, "sym"))


def test_is_ppt_examples(rng):
    assert is_ppt(_product(rng))
    assert not is_ppt(BELL)
    assert min_pt_eigenvalue(BELL) == pytest.approx(-0.5, abs=1e-12)
    assert is_ppt(block_to_dense(raw_key_state(1 / 3, 2, 1)))


def test_cut_needs_both_sides():
    with pytest.raises(LayoutError):
        is_ppt(DenseState(np.eye(4) / 4, FactorLayout((2, 2), ("A", "A'"))))


def test_log_negativity_examples():
    assert log_negativity(BELL) == pytest.approx(1.0, abs=1e-12)
    assert log_negativity(states.example1_state(3)) == pytest.approx(np.log2(4 / 3), abs=1e-9)
    assert log_negativity(CLASSICAL) == 0.0


def test_en_example1_closed():
    assert en_example1_closed(2) == pytest.approx(np.log2(1.5))
    vals = [en_example1_closed(d) for d in range(2, 40)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert en_example1_closed(10 ** 6) < 1e-5
    for d in (2, 3, 4):
        assert abs(log_negativity(states.example1_state(d)) - en_example1_closed(d)) <= 1e-9


@pytest.mark.parametrize("d,l", [(2, 1), (2, 2), (3, 1), (3, 2)])
def test_en_hiding_closed_matches_derived_form(d, l):
    # partial transposes of the Werner extremes are (I +- d P)/..., giving 2(1 - (1 - 1/d)^l)
    assert en_hiding_closed(d, l) == pytest.approx(2 * (1 - (1 - 1 / d) ** l), abs=1e-9)


@pytest.mark.parametrize("l", [1, 2])
def test_example2_negativity_relation(l):
    gap = en_hiding_closed(2, l)
    assert log_negativity(states.example2_state(2, l)) == pytest.approx(np.log2(1 + gap / 2), abs=1e-9)


def test_hiding_gap_trend():
    assert en_hiding_closed(3, 1) <= en_hiding_closed(2, 1)
    # more copies reveal more through the partial transpose
    assert en_hiding_closed(2, 2) > en_hiding_closed(2, 1)


def test_ree_examples(rng):
    assert ree_dephasing_bound(BELL) == pytest.approx(1.0, abs=1e-12)
    assert ree_dephasing_bound(_strict_gamma(rng)) >= 1 - 1e-9
    assert ree_dephasing_bound(CLASSICAL) == pytest.approx(0.0, abs=1e-12)


def test_dephase_key():
    out = dephase_key(BELL)
    np.testing.assert_allclose(out.matrix, CLASSICAL.matrix, atol=1e-15)


@pytest.mark.parametrize("make", [
    lambda: states.example1_state(2),
    lambda: states.example2_state(2, 1),
    lambda: block_to_dense(raw_key_state(1 / 3, 2, 1)),
    lambda: block_to_dense(raw_key_state(0.5, 2, 1)),
])
def test_ree_bound_matches_relative_entropy(make):
    s = make()
    assert ree_dephasing_bound(s) == pytest.approx(ree_dephasing_direct(s), abs=1e-9)
    assert ree_dephasing_bound(s) >= 0


def test_dw_examples(rng):
    assert dw_rate(untwisted_ccq(_strict_gamma(rng))) == pytest.approx(1.0, abs=1e-9)
    assert dw_rate(ccq_state(CLASSICAL)) == pytest.approx(0.0, abs=1e-12)
    assert dw_rate(ccq_state(BELL)) == pytest.approx(1.0, abs=1e-12)


def test_dw_raw_state_after_untwisting():
    rate = dw_rate(untwisted_ccq(block_to_dense(raw_key_state(1 / 3, 2, 1))))
    # one-way rate without preprocessing: Eve's information exceeds the residual correlation
    assert 0 <= rate < 1
    half = dw_rate(untwisted_ccq(block_to_dense(raw_key_state(0.5, 2, 1))))
    assert 0 < half < 1


def test_dw_rate_floor():
    eve = [np.array([[1.0, 0], [0, 0]]), np.array([[0, 0], [0, 1.0]])]
    e = CcqEnsemble([((0, 0), 0.25), ((0, 1), 0.25), ((1, 0), 0.25), ((1, 1), 0.25)],
                    eve * 2, 2)
    assert dw_rate(e) == 0.0


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_dw_below_dephasing_bound_random(seed):
    rng = np.random.default_rng(seed)
    shield = FactorLayout((2, 2), ("A'", "B'"))
    s = block_to_dense(states.random_block_state(shield, rng))
    rate = dw_rate(untwisted_ccq(s))
    assert 0 <= rate <= 1
    assert rate <= ree_dephasing_bound(s) + 1e-9


def test_ppt_implies_zero_negativity(rng):
    for _ in range(5):
        s = block_to_dense(states.random_block_state(FactorLayout((2, 2), ("A'", "B'")), rng))
        if is_ppt(s):
            assert log_negativity(s) == pytest.approx(0.0, abs=1e-9)
    assert log_negativity(block_to_dense(raw_key_state(0.3, 2, 1))) == pytest.approx(0.0, abs=1e-9)


def test_measure_suite_example1():
    rep = {r.name: r for r in measure_suite(states.example1_state(2))}
    assert rep["is_ppt"].value == 0.0
    assert rep["log_negativity"].value == pytest.approx(np.log2(1.5), abs=1e-9)
    assert rep["dw_rate"].value == pytest.approx(1.0, abs=1e-9)
    assert rep["ree_dephasing_bound"].value >= 1 - 1e-9
    assert rep["dw_rate"].to_dict()["method"] == "bound"


def test_measure_suite_raw_state():
    rep = {r.name: r.value for r in measure_suite(block_to_dense(raw_key_state(1 / 3, 2, 1)))}
    assert rep["is_ppt"] == 1.0
    assert rep["log_negativity"] == pytest.approx(0.0, abs=1e-9)
    assert rep["dw_rate"] <= rep["ree_dephasing_bound"] + 1e-9


def test_measure_suite_product_state(rng):
    rep = {r.name: r.value for r in measure_suite(_product(rng))}
    assert rep["is_ppt"] == 1.0
    assert rep["log_negativity"] == pytest.approx(0.0, abs=1e-12)
    # generic product states carry AB coherences outside the key-correlated form
    assert rep["ree_dephasing_bound"] is None
    diag = DenseState(np.kron(np.diag([0.3, 0.7]), np.diag([0.6, 0.4])), KEY_LAYOUT)
    rep = {r.name: r.value for r in measure_suite(diag)}
    assert rep["ree_dephasing_bound"] == pytest.approx(0.0, abs=1e-12)
    assert rep["dw_rate"] == pytest.approx(0.0, abs=1e-12)


def test_measure_suite_flags_absent():
    bad = DenseState(np.eye(4) / 4 + 0.1 * np.array([[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]]),
                     KEY_LAYOUT)
    rep = {r.name: r for r in measure_suite(bad)}
    assert rep["dw_rate"].value is None
    assert rep["dw_rate"].note.startswith("absent")
    assert rep["log_negativity"].value is not None


def test_trace_norm_of_hiding_difference():
    for l in (1, 2):
        hp = states.hiding_pair(2, l)
        assert trace_norm(hp.tau1.matrix - hp.tau0.matrix) == pytest.approx(2 - 2.0 ** (1 - l), abs=1e-9)

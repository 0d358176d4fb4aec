from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sirmf.inequalities import (
    DiscreteRV,
    JointRV,
    check_lemma3,
    check_lemma4,
    check_lemma5,
    instance_rng,
    lemma4_tightness_ratio,
    random_joint,
    random_rv,
    run_lemma_suite,
    tightness_formula,
)


@pytest.mark.parametrize("exact", [False, True])
def test_sum_variance_equality_for_identical(exact):
    y = (0.1, 0.4, 0.9)
    assert check_lemma3(JointRV(y, y, (0.2, 0.3, 0.5)), exact) == pytest.approx(0.0, abs=1e-15)


def test_sum_variance_independent():
    # product law of Y on {0, 1} and Z on {0, 2}
    ys, zs, ps = (0, 0, 1, 1), (0, 2, 0, 2), (0.25, 0.25, 0.25, 0.25)
    # Var Y = 1/4, Var Z = 1
    assert check_lemma3(JointRV(ys, zs, ps)) == pytest.approx(1.25, abs=1e-15)


@pytest.mark.parametrize("exact", [False, True])
def test_square_variance_two_point(exact):
    slack = check_lemma4(DiscreteRV((1.0, 0.8), (0.5, 0.5)), exact)
    assert slack == pytest.approx(0.0076, abs=1e-15)


def test_square_variance_constant():
    assert check_lemma4(DiscreteRV((0.3,), (1.0,))) == 0.0


def test_square_variance_support_guard():
    with pytest.raises(ValueError):
        check_lemma4(DiscreteRV((0.5, 1.5), (0.5, 0.5)))


@pytest.mark.parametrize("delta,ratio", [(0.1, 3.24), (0.001, 3.992004)])
def test_tightness_values(delta, ratio):
    assert lemma4_tightness_ratio(delta) == pytest.approx(ratio, abs=1e-12)


@pytest.mark.parametrize("delta", [0.1, 0.01, 0.001, 1e-5])
def test_tightness_formula(delta):
    assert lemma4_tightness_ratio(delta) == pytest.approx(tightness_formula(delta), abs=1e-12)


def test_tightness_limit():
    assert 4 - lemma4_tightness_ratio(1e-9) < 1e-8
    with pytest.raises(ValueError):
        lemma4_tightness_ratio(0.5)
    with pytest.raises(ValueError):
        lemma4_tightness_ratio(0.0)


def test_covariance_independent():
    ys, zs, ps = (0.2, 0.2, 0.6, 0.6), (0.0, 1.0, 0.0, 1.0), (0.25,) * 4
    s = check_lemma5(JointRV(ys, zs, ps))
    assert s.cov_half_var == pytest.approx((0.04 + 0.25) / 2, abs=1e-15)


@pytest.mark.parametrize("exact", [False, True])
def test_covariance_equality_case(exact):
    s = check_lemma5(JointRV((0.0, 1.0), (0.0, 1.0), (0.5, 0.5)), exact)
    assert s.cov_half_var == 0.0
    assert s.cov_geometric == pytest.approx(0.0, abs=1e-15)


def test_covariance_support_guard():
    with pytest.raises(ValueError):
        check_lemma5(JointRV((0.0, 1.2), (0.0, 1.0), (0.5, 0.5)))


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(values=(0.1, 0.2), probs=(0.5, 0.4)),
        dict(values=(0.1, 0.2), probs=(1.2, -0.2)),
        dict(values=(), probs=()),
        dict(values=(0.1,), probs=(0.5, 0.5)),
    ],
)
def test_rv_validation(kwargs):
    with pytest.raises(ValueError):
        DiscreteRV(**kwargs)


def test_exact_mode_agrees_with_float():
    for k in range(200):
        rng = instance_rng(42, k)
        j = random_joint(rng)
        f, e = check_lemma5(j), check_lemma5(j, exact=True)
        for name in ("cov_half_var", "skew_two_var", "cov_geometric", "sq_cov_geometric"):
            assert getattr(f, name) == pytest.approx(getattr(e, name), abs=1e-12)
        rv = random_rv(rng)
        assert check_lemma4(rv) == pytest.approx(check_lemma4(rv, exact=True), abs=1e-13)


def test_exact_mode_on_rationals():
    rv = DiscreteRV((Fraction(1, 3), Fraction(2, 3), Fraction(1)), (Fraction(1, 3),) * 3)
    # Var Y = 2/27, Var Y^2 = 98/729
    assert check_lemma4(rv, exact=True) == Fraction(118, 729)


def test_random_instance_shapes():
    sizes = {len(random_rv(instance_rng(0, k)).values) for k in range(300)}
    assert sizes == set(range(2, 11))


def test_suite_is_reproducible_and_clean():
    a = run_lemma_suite(300, seed=17)
    b = run_lemma_suite(300, seed=17)
    assert a.to_csv() == b.to_csv()
    assert a.ok and all(v == 0 for v in a.violations.values())
    assert len(a.rows) == 300 * 6
    header = a.to_csv().splitlines()[0]
    assert header == "lemma,seed,index,support,slack"


def test_suite_flags_violations():
    # a positive tolerance turns the smallest slacks into reported violations
    res = run_lemma_suite(50, seed=0, tol=1e9)
    assert not res.ok


unit = st.floats(0, 1, allow_nan=False)


@settings(max_examples=300)
@given(st.lists(st.tuples(unit, unit, st.floats(0.01, 1)), min_size=1, max_size=10))
def test_all_inequalities_property(points):
    w = np.array([p for _, _, p in points])
    w = w / w.sum()
    w[-1] = 1.0 - float(np.sum(w[:-1]))
    if w[-1] < 0:
        return
    j = JointRV(tuple(y for y, _, _ in points), tuple(z for _, z, _ in points), tuple(w))
    assert check_lemma3(j) >= -1e-12
    assert check_lemma4(DiscreteRV(j.ys, j.probs)) >= -1e-12
    assert check_lemma5(j).min() >= -1e-12

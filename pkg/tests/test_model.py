import numpy as np
import pytest
from hypothesis import given, strategies as st

from sylvrank.benchmarks import gen_delay_rod, random_stable_system, scalar_delay_truth
from sylvrank.errors import IncompatiblePointError, SingularPencilError
from sylvrank.model import (
    AlphaFunction,
    EvalPoint,
    StructuredModel,
    as_point,
    delay_alphas,
    eval_alpha,
    eval_transfer,
    parse_alphas,
    rescale_alphas,
    transpose_map,
)

from conftest import rel


def test_alpha_examples():
    assert eval_alpha(AlphaFunction.monomial(2), 2j) == pytest.approx(-4)
    assert eval_alpha(AlphaFunction.exp_delay(1.0), 0) == 1
    assert eval_alpha(AlphaFunction.param(2), EvalPoint.param((0.1, 5, 7, 3))) == 7
    assert eval_alpha(AlphaFunction.constant(2.5), 3j) == 2.5
    assert eval_alpha(AlphaFunction.monomial(1, scale=0.5), 4j) == 2j


def test_alpha_point_mismatch():
    with pytest.raises(IncompatiblePointError):
        eval_alpha(AlphaFunction.param(0), 1j)
    with pytest.raises(IncompatiblePointError):
        eval_alpha(AlphaFunction.monomial(1), EvalPoint.param((1.0,)))
    with pytest.raises(IncompatiblePointError):
        eval_alpha(AlphaFunction.param(3), EvalPoint.param((1.0, 2.0)))


@pytest.mark.parametrize("bad", [
    dict(kind="exp_delay", tau=0.0),
    dict(kind="monomial", power=-1),
    dict(kind="constant", scale=0.0),
    dict(kind="param", index=-2),
    dict(kind="bogus"),
])
def test_alpha_invariants(bad):
    with pytest.raises(ValueError):
        AlphaFunction(**bad)


def test_eval_point_variants():
    with pytest.raises(ValueError):
        EvalPoint()
    with pytest.raises(ValueError):
        EvalPoint(s=1j, p=(1.0,))
    assert as_point(2j).s == 2j
    assert as_point([1, 2]).p == (1.0, 2.0)
    assert EvalPoint(s=1 + 2j).conjugate().s == 1 - 2j


def test_scalar_delay_closed_form():
    gt = scalar_delay_truth()
    assert eval_transfer(gt.model, 0).item() == pytest.approx(4 / 3, rel=1e-15)
    for s in (0.3j, 1 + 1j, 5.0):
        exact = 1.0 / (s + 1 - 0.25 * np.exp(-s))
        assert abs(eval_transfer(gt.model, s).item() - exact) <= 1e-15 * abs(exact)


def test_identity_model():
    e1 = np.eye(3)[:, :1]
    m = StructuredModel([AlphaFunction.constant()], [np.eye(3)], e1, e1.T)
    for s in (0, 1j, -7.5 + 2j):
        assert eval_transfer(m, s).item() == pytest.approx(1.0)


def test_delay_rod_dense_oracle():
    gt = gen_delay_rod(101)
    m = gt.model
    s = 10j
    K = s * np.eye(101) - (-m.A[1]) - np.exp(-s) * (-m.A[2])
    dense = (m.C @ np.linalg.inv(K) @ m.B).item()
    assert abs(eval_transfer(m, s).item() - dense) <= 1e-10 * abs(dense)


def test_singular_pencil():
    m = StructuredModel([AlphaFunction.monomial(1)], [np.eye(2)], np.ones((2, 1)), np.ones((1, 2)))
    with pytest.raises(SingularPencilError) as info:
        eval_transfer(m, 0)
    assert info.value.point is not None


def test_shape_validation():
    with pytest.raises(ValueError):
        StructuredModel([AlphaFunction.constant()], [np.eye(2)], np.ones((3, 1)), np.ones((1, 2)))
    with pytest.raises(ValueError):
        StructuredModel([AlphaFunction.constant()], [np.array([[1.0, 2.0], [0.0, 1.0]])],
                        np.ones((2, 1)), np.ones((1, 2)), symmetric=True)


def test_transpose_map_examples(rng):
    gt = gen_delay_rod(11)
    tm = transpose_map(gt.model)
    for s in rng.standard_normal(5) + 1j * rng.standard_normal(5):
        assert rel(eval_transfer(tm, s), eval_transfer(gt.model, s)) < 1e-12
    m = random_stable_system(rng, 6, 3, m=2, l=3)
    tm = transpose_map(m)
    for s in 1j * rng.uniform(0.1, 10, 4):
        assert rel(eval_transfer(tm, s), eval_transfer(m, s).T) < 1e-12
    back = transpose_map(tm)
    assert all(np.array_equal(a, b) for a, b in zip(back.A, m.A))
    assert np.array_equal(back.B, m.B) and np.array_equal(back.C, m.C)


@given(c=st.floats(min_value=-1e3, max_value=1e3).filter(lambda v: abs(v) > 1e-3),
       seed=st.integers(0, 2**16))
def test_alpha_scaling_invariance(c, seed):
    rng = np.random.default_rng(seed)
    m = random_stable_system(rng, 5, 3)
    factors = [c, 1.0, -c]
    sm = rescale_alphas(m, factors)
    s = 1j * rng.uniform(0.1, 10)
    assert rel(eval_transfer(sm, s), eval_transfer(m, s)) < 1e-12


@given(seed=st.integers(0, 2**16), r=st.integers(1, 10))
def test_solve_matches_inverse(seed, r):
    rng = np.random.default_rng(seed)
    A = [np.eye(r) * 3 + 0.3 * rng.standard_normal((r, r)) for _ in range(2)]
    B = rng.standard_normal((r, 2))
    C = rng.standard_normal((1, r))
    m = StructuredModel([AlphaFunction.monomial(1), AlphaFunction.constant()], A, B, C)
    s = 1j * rng.uniform(0.1, 2)
    K = s * A[0] + A[1]
    assert rel(eval_transfer(m, s), C @ np.linalg.inv(K) @ B) < 1e-10


def test_parse_alphas():
    assert parse_alphas("delay") == delay_alphas(1.0)
    assert parse_alphas("s, 1, exp(-2s)") == delay_alphas(2.0)
    al = parse_alphas("s^2*0.001, s*0.03, 1")
    assert al[0] == AlphaFunction.monomial(2, 0.001) and al[1] == AlphaFunction.monomial(1, 0.03)
    assert al[2] == AlphaFunction.constant()
    th = parse_alphas("thermal-block")
    assert len(th) == 5 and th[0].kind == "constant" and th[4] == AlphaFunction.param(3)
    assert parse_alphas("affine:2") == parse_alphas("1,p0,p1")
    with pytest.raises(ValueError):
        parse_alphas("sin(s)")

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sylvrank.benchmarks import (
    gen_delay_rod,
    gen_scalar_delay,
    intrusive_oracle,
    random_stable_system,
    sample_frequencies,
)
from sylvrank.compression import (
    compress,
    compress_model,
    enforce_conjugate_symmetry,
    numerical_rank_rmin,
    pairing_transform,
    realify,
    select_order,
    stacked_svds,
    uncompressed_model,
)
from sylvrank.constraints import assemble_constraints, symmetrize
from sylvrank.errors import ConjugatePairingError, DimensionError, SingularPencilError
from sylvrank.linalg import hstack, vstack
from sylvrank.model import StructuredModel, delay_alphas, eval_transfer

from conftest import rel


def rank_one_solution(samples):
    h = samples.responses[:, 0, 0]
    DJD = np.outer(h, h)
    return np.array([DJD, DJD, -0.25 * DJD])


def test_identity_spectra():
    _, S1, _, _, S2, _ = stacked_svds(np.eye(3)[None])
    assert np.allclose(S1, 1) and np.allclose(S2, 1)


def test_rank_one_spectra_and_rmin():
    _, ss = gen_scalar_delay()
    A = rank_one_solution(ss)
    _, S1, _, _, S2, _ = stacked_svds(A)
    assert S1[1] <= 1e-12 * S1[0] and S2[1] <= 1e-12 * S2[0]
    assert numerical_rank_rmin(A) == 1


def test_stacked_svd_reconstruction(rng):
    A = rng.standard_normal((3, 5, 5)) + 1j * rng.standard_normal((3, 5, 5))
    U1, S1, V1, U2, S2, V2 = stacked_svds(A)
    assert rel((U1 * S1) @ V1.conj().T, hstack(A)) <= 1e-10
    assert rel((U2 * S2) @ V2.conj().T, vstack(A)) <= 1e-10


def test_rmin_examples(rng):
    assert numerical_rank_rmin(rng.standard_normal((2, 6, 6))) == 6
    assert numerical_rank_rmin(np.zeros((2, 4, 4))) == 0
    with pytest.raises(ValueError):
        numerical_rank_rmin(np.eye(2)[None], rel_tol=0)


def test_select_order_examples():
    assert select_order([1, 1e-12], [1, 1e-12], 1e-6) == 1
    assert select_order([1, 1, 1, 1], [1, 1, 1, 1], 0.2) == 4
    assert select_order([1, 1, 1, 1], [1, 1, 1, 1], 0.25) == 3
    with pytest.raises(ValueError):
        select_order([1.0], [1.0], 1.0)
    with pytest.raises(ValueError):
        select_order([], [], 0.1)


@given(seed=st.integers(0, 2**16), t1=st.floats(1e-6, 0.99), t2=st.floats(1e-6, 0.99))
def test_select_order_monotone(seed, t1, t2):
    rng = np.random.default_rng(seed)
    S1 = np.sort(rng.exponential(size=8) ** 3)[::-1]
    S2 = np.sort(rng.exponential(size=8) ** 3)[::-1]
    lo, hi = sorted((t1, t2))
    assert select_order(S1, S2, lo) >= select_order(S1, S2, hi)


@pytest.mark.parametrize("points,cc", [((0.5, 1.0), False), ((0.5j, 1.0j), True)])
def test_rank_one_solution_recovers_scalar_delay(points, cc):
    gt, ss = gen_scalar_delay(points, conjugate_close=cc)
    S = assemble_constraints(ss, delay_alphas())
    red, rep = compress(rank_one_solution(ss), S, order=1)
    assert red.order == 1 and rep.selected_order == 1
    grid = 1j * np.logspace(-2, 2, 50)
    errs = [abs(eval_transfer(red, s)[0, 0] - gt(s)[0, 0]) / abs(gt(s)[0, 0]) for s in grid]
    assert max(errs) <= 1e-8


def test_full_order_projection_is_exact(rng):
    gt = gen_delay_rod(21)
    ss = sample_frequencies(gt, 6, 0.1, 100)
    S = assemble_constraints(ss, delay_alphas())
    A = rng.standard_normal((3, 6, 6)) + 1j * rng.standard_normal((3, 6, 6))
    full = uncompressed_model(S, A)
    red, _ = compress_model(full, order=6)
    for x in list(ss.points) + [0.3j, 7.0j]:
        assert rel(eval_transfer(red, x), eval_transfer(full, x)) <= 1e-8
    with pytest.raises(DimensionError):
        compress_model(full, order=7)
    with pytest.raises(ValueError):
        compress_model(full)


def test_symmetric_compression_keeps_symmetry(rng):
    gt, ss = gen_scalar_delay((0.5j, 1j), conjugate_close=True)
    S = assemble_constraints(ss, delay_alphas(), symmetric=True)
    A = symmetrize(rng.standard_normal((3, 4, 4)) + 1j * rng.standard_normal((3, 4, 4)))
    red, _ = compress(A, S, order=2)
    assert red.symmetric and all(np.allclose(a, a.T, atol=0) for a in red.A)


@given(seed=st.integers(0, 2**16))
def test_symmetric_stacks_have_equal_ranks(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, 5))
    U = rng.standard_normal((3, 6, k))
    A = symmetrize(np.einsum("qik,qjk->qij", U, U[:, :, ::-1]))
    rh = np.linalg.matrix_rank(hstack(A), tol=1e-9 * np.abs(A).max())
    rv = np.linalg.matrix_rank(vstack(A), tol=1e-9 * np.abs(A).max())
    assert rh == rv
    s1 = np.linalg.svd(hstack(A), compute_uv=False)
    s2 = np.linalg.svd(vstack(A), compute_uv=False)
    assert np.allclose(s1, s2)


def _conj_oracle():
    gt = random_stable_system(np.random.default_rng(5), 12, 3)
    ss = sample_frequencies(gt, 3, 0.5, 50, conjugate_close=True)
    _, _, proj = intrusive_oracle(gt, ss)
    return gt, ss, proj


def test_realify_oracle_model_is_real():
    gt, ss, proj = _conj_oracle()
    real = realify(proj, ss)
    assert real.is_real and real.meta["realified"]
    rng = np.random.default_rng(0)
    pts = 1j * rng.uniform(0.5, 50, 100)
    checked = 0
    for s in np.concatenate([pts, pts.conj()]):
        try:
            ref = eval_transfer(proj, s)
        except SingularPencilError:
            continue
        assert rel(eval_transfer(real, s), ref) <= 1e-8
        checked += 1
    assert checked >= 100
    for x in ss.points:
        assert rel(eval_transfer(real, x), eval_transfer(gt, x)) <= 1e-8


@given(seed=st.integers(0, 2**16), sym=st.booleans())
def test_realify_round_trip(seed, sym):
    rng = np.random.default_rng(seed)
    _, ss = gen_scalar_delay((0.5j, 1j, 2.0), conjugate_close=True)
    S = assemble_constraints(ss, delay_alphas(), symmetric=sym)
    A = rng.standard_normal((3, 5, 5)) + 1j * rng.standard_normal((3, 5, 5))
    if sym:
        A = symmetrize(A)
    model = enforce_conjugate_symmetry(uncompressed_model(S, A), ss)
    real = realify(model, ss, enforce=False)
    assert real.is_real and real.symmetric == sym
    if sym:
        assert all(np.array_equal(a, a.T) for a in real.A)
    for s in (0.3j, -0.3j, 4j, 1.0 + 2j):
        assert rel(eval_transfer(real, s), eval_transfer(model, s)) <= 1e-8


def test_realify_real_model_unchanged():
    _, ss = gen_scalar_delay((0.5j,), conjugate_close=True)
    model = StructuredModel(delay_alphas(), list(np.ones((3, 2, 2))), np.ones((2, 1)), np.ones((1, 2)))
    assert realify(model, ss) is model


def test_realify_errors(rng):
    _, ss = gen_scalar_delay((0.5j, 1j))
    S = assemble_constraints(ss, delay_alphas())
    model = uncompressed_model(S, rng.standard_normal((3, 2, 2)) + 1j)
    with pytest.raises(ConjugatePairingError):
        realify(model, ss)
    _, cc = gen_scalar_delay((0.5j,), conjugate_close=True)
    Sc = assemble_constraints(cc, delay_alphas())
    bad = uncompressed_model(Sc, rng.standard_normal((3, 2, 2)) + 1j * rng.standard_normal((3, 2, 2)))
    with pytest.raises(ConjugatePairingError):
        realify(bad, cc, enforce=False)


def test_pairing_transform_unitary():
    _, ss = gen_scalar_delay((0.5j, 2.0, 1j), conjugate_close=True)
    T = pairing_transform(ss)
    assert np.allclose(T.conj().T @ T, np.eye(ss.N))
    z = np.array([1 + 2j, 1 - 2j, 3.0, 4 - 1j, 4 + 1j])
    assert np.allclose((T.conj().T @ z).imag, 0)

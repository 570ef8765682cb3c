import numpy as np
import pytest
from hypothesis import given, strategies as st

from sylvrank.benchmarks import gen_scalar_delay, random_stable_system, sample_frequencies
from sylvrank.constraints import SampleSet, assemble_constraints
from sylvrank.errors import DivergenceError
from sylvrank.linalg import hstack
from sylvrank.model import delay_alphas, eval_transfer
from sylvrank.optimizer import (
    NAdam,
    SolverConfig,
    objective,
    objective_gradient,
    optimize,
    solve_rsmi,
    update_weights,
    weighted_nuclear_norm,
    wnn_gradient,
    wnn_value_grad_gram,
)

from conftest import rel


def fd_gradient(f, X, h=1e-6):
    """Central differences in the d/dRe + 1j d/dIm convention."""
    G = np.zeros(X.shape, dtype=complex if np.iscomplexobj(X) else float)
    for idx in np.ndindex(X.shape):
        for unit in ((1.0, 1j) if np.iscomplexobj(X) else (1.0,)):
            E = np.zeros(X.shape, dtype=X.dtype)
            E[idx] = unit * h
            G[idx] += unit * (f(X + E) - f(X - E)) / (2 * h)
    return G


def small_system(seed, symmetric=False, N=4):
    rng = np.random.default_rng(seed)
    m = random_stable_system(rng, 6, 3)
    pts = list(1j * np.sort(rng.uniform(0.2, 5, N)))
    ss = SampleSet(pts, np.array([eval_transfer(m, s) for s in pts]))
    return assemble_constraints(ss, m.alphas, symmetric=symmetric), rng


def test_wnn_examples():
    assert weighted_nuclear_norm(np.diag([3.0, 1.0]), [1, 1]) == pytest.approx(4)
    assert weighted_nuclear_norm(np.diag([3.0, 1.0]), [2, 0.5]) == pytest.approx(6.5)
    assert weighted_nuclear_norm(np.zeros((3, 5)), [1, 1, 1]) == 0
    G = wnn_gradient(np.diag([3.0, 1.0]), [1, 1])
    assert np.allclose(G, np.eye(2))
    with pytest.raises(ValueError):
        weighted_nuclear_norm(np.eye(3), [1, 1])
    with pytest.raises(ValueError):
        weighted_nuclear_norm(np.eye(2), [1, -1])


@given(seed=st.integers(0, 2**16), c=st.floats(0, 1e3))
def test_wnn_homogeneity(seed, c):
    rng = np.random.default_rng(seed)
    T = rng.standard_normal((4, 7)) + 1j * rng.standard_normal((4, 7))
    w = np.sort(rng.uniform(0, 3, 4))
    assert weighted_nuclear_norm(c * T, w) == pytest.approx(c * weighted_nuclear_norm(T, w), rel=1e-12, abs=1e-300)


@given(seed=st.integers(0, 2**16))
def test_unit_weights_give_nuclear_norm(seed):
    rng = np.random.default_rng(seed)
    T = rng.standard_normal((5, 3)) + 1j * rng.standard_normal((5, 3))
    assert weighted_nuclear_norm(T, np.ones(3)) == pytest.approx(np.linalg.norm(T, "nuc"), rel=1e-13)


@given(seed=st.integers(0, 2**16))
def test_wnn_midpoint_convexity_nonincreasing_weights(seed):
    rng = np.random.default_rng(seed)
    X, Y = rng.standard_normal((2, 4, 6))
    w = np.sort(rng.uniform(0, 2, 4))[::-1]
    f = lambda T: weighted_nuclear_norm(T, w)
    assert f(0.5 * (X + Y)) <= 0.5 * (f(X) + f(Y)) + 1e-12


@given(seed=st.integers(0, 2**16))
def test_objective_midpoint_convexity(seed):
    S, rng = small_system(seed % 50)
    X, Y = 0.1 * (rng.standard_normal((2, 3, 4, 4)) + 1j * rng.standard_normal((2, 3, 4, 4)))
    f = lambda Z: objective(S, Z, 0.3)
    assert f(0.5 * (X + Y)) <= 0.5 * (f(X) + f(Y)) * (1 + 1e-12)


@pytest.mark.parametrize("seed", range(20))
def test_wnn_gradient_matches_fd(seed):
    rng = np.random.default_rng(seed)
    T = rng.standard_normal((4, 6)) + 1j * rng.standard_normal((4, 6))
    w = rng.uniform(0.5, 2, 4)
    G = wnn_gradient(T, w)
    Gfd = fd_gradient(lambda Z: weighted_nuclear_norm(Z, w), T)
    assert rel(G, Gfd) <= 1e-5


@pytest.mark.parametrize("symmetric", [False, True])
@pytest.mark.parametrize("seed", range(20))
def test_objective_gradient_matches_fd(seed, symmetric):
    S, rng = small_system(seed, symmetric)
    X = rng.standard_normal((3, 4, 4)) + 1j * rng.standard_normal((3, 4, 4))
    w = rng.uniform(0.5, 2, 4)
    G = objective_gradient(S, X, 0.3, w)
    Gfd = fd_gradient(lambda Z: objective(S, Z, 0.3, w), X)
    assert rel(G, Gfd) <= 1e-4


def test_least_squares_gradient_exact():
    S, rng = small_system(3)
    X = rng.standard_normal((3, 4, 4)) + 1j * rng.standard_normal((3, 4, 4))
    G = objective_gradient(S, X, 0.0, l1_weight=0.0)
    Gfd = fd_gradient(lambda Z: objective(S, Z, 0.0, l1_weight=0.0), X, h=1e-4)
    assert rel(G, Gfd) <= 1e-8


def test_gram_path_matches_svd(rng):
    T = rng.standard_normal((100, 500)) @ np.diag(np.logspace(0, -3, 500))
    w = np.sort(rng.uniform(0.1, 5, 100))
    v, G = wnn_value_grad_gram(T, w)
    assert v == pytest.approx(weighted_nuclear_norm(T, w), rel=1e-12)
    assert rel(G, wnn_gradient(T, w)) <= 1e-10
    vt, Gt = wnn_value_grad_gram(T.T, w)
    assert rel(Gt, G.T) <= 1e-12


def test_update_weights_examples():
    assert np.allclose(update_weights([1.0, 0.5, 0.0], 1e-12, 1e4), [1.0, 2.0, 1e4])
    assert update_weights([0.0], 1e-12, 1e4)[0] == 1e4
    with pytest.raises(ValueError):
        update_weights([-1.0])


def test_config_forcing():
    c = SolverConfig(mode="benchmark", lambda0=1.0, outer_iters=3)
    assert c.lambda0 == 0 and c.outer_iters == 0
    assert SolverConfig(mode="eq_weights", outer_iters=3).outer_iters == 0
    assert SolverConfig(mode="reweighted").outer_iters == 4
    r = SolverConfig(lambda0=0.6)
    assert np.allclose([r.regularization(i) for i in range(4)], [0.6, 0.6, 0.3, 0.2], rtol=1e-15)
    with pytest.raises(ValueError):
        SolverConfig(mode="nope")
    with pytest.raises(ValueError):
        SolverConfig.from_dict({"bogus": 1})
    assert SolverConfig.from_dict(r.to_dict()) == r


def test_nadam_matches_reference_step():
    # hand-computed first step from zero moments
    opt = NAdam((1,))
    x = np.array([1.0])
    opt.step(x, np.array([2.0]), 0.1)
    b1 = 0.9
    mu1 = b1 * (1 - 0.5 * 0.96**0.004)
    mu2 = b1 * (1 - 0.5 * 0.96**0.008)
    m = 0.2
    d = np.sqrt(4e-3 / 1e-3) + 1e-8
    ref = 1.0 - 0.1 * (1 - mu1) / (1 - mu1) * 2 / d - 0.1 * mu2 / (1 - mu1 * mu2) * m / d
    assert x[0] == pytest.approx(ref, rel=1e-14)


def test_nadam_minimizes_quadratic():
    opt = NAdam((3,))
    x = np.array([1.0, -2.0, 3.0])
    for _ in range(3000):
        opt.step(x, 2 * x, 0.01)
    assert np.abs(x).max() < 1e-2


def test_zero_iterations_returns_init():
    _, ss = gen_scalar_delay()
    S = assemble_constraints(ss, delay_alphas())
    cfg = SolverConfig(mode="benchmark", inner_iters=0)
    init = np.full((3, 2, 2), 0.5)
    st_ = optimize(S, cfg, init=init)
    assert np.array_equal(st_.params, init) and st_.steps == 0
    assert len(st_.trace) == 1


def test_seed_determinism():
    _, ss = gen_scalar_delay()
    S = assemble_constraints(ss, delay_alphas())
    cfg = SolverConfig(mode="reweighted", inner_iters=300, lr_drop_every=100)
    a, b = solve_rsmi(S, cfg), solve_rsmi(S, cfg)
    assert np.array_equal(a.A, b.A) and a.trace == b.trace
    c = solve_rsmi(S, SolverConfig(mode="reweighted", inner_iters=300, lr_drop_every=100, seed=1))
    assert not np.array_equal(a.A, c.A)


def test_divergence_detected():
    _, ss = gen_scalar_delay()
    S = assemble_constraints(ss, delay_alphas())
    cfg = SolverConfig(mode="benchmark", lr0=1e3, inner_iters=500, record_every=1, init_scale=0.0)
    with pytest.raises(DivergenceError):
        optimize(S, cfg)


def test_benchmark_mode_drives_residual_down():
    _, ss = gen_scalar_delay()
    S = assemble_constraints(ss, delay_alphas())
    st_ = solve_rsmi(S, SolverConfig(mode="benchmark", inner_iters=2000, lr_drop_every=500))
    assert st_.trace[-1][2] < 1e-3 * st_.trace[0][2]
    assert st_.A.dtype.kind == "f"


def test_trace_nonincreasing_over_windows():
    gt, _ = gen_scalar_delay()
    ss = sample_frequencies(gt, 6, 0.1, 10)
    S = assemble_constraints(ss, delay_alphas())
    st_ = optimize(S, SolverConfig(mode="eq_weights", inner_iters=4000, lr_drop_every=1000))
    J = np.array(st_.objective_trace)
    window = 10
    means = [J[i:i + window].mean() for i in range(0, len(J) - window + 1, window)]
    assert all(b <= a * (1 + 1e-6) for a, b in zip(means, means[1:]))


def test_symmetric_solution_is_symmetric():
    _, ss = gen_scalar_delay((0.5j, 1j), conjugate_close=True)
    S = assemble_constraints(ss, delay_alphas(), symmetric=True)
    st_ = solve_rsmi(S, SolverConfig(inner_iters=200, lr_drop_every=50))
    assert all(np.array_equal(a, a.T) for a in st_.A)
    assert np.linalg.matrix_rank(hstack(st_.A)) >= 1


@pytest.fixture(scope="module")
def scalar_delay_runs():
    _, ss = gen_scalar_delay()
    S = assemble_constraints(ss, delay_alphas())
    return {mode: solve_rsmi(S, SolverConfig(mode=mode, inner_iters=20000, lr_drop_every=5000))
            for mode in ("benchmark", "eq_weights")}


def test_benchmark_mode_scalar_delay_residual(scalar_delay_runs):
    assert scalar_delay_runs["benchmark"].trace[-1][2] <= 1e-4


def test_eq_weights_lowers_second_singular_value(scalar_delay_runs):
    s_b = np.linalg.svd(hstack(scalar_delay_runs["benchmark"].A), compute_uv=False)
    s_e = np.linalg.svd(hstack(scalar_delay_runs["eq_weights"].A), compute_uv=False)
    assert s_e[1] < s_b[1]

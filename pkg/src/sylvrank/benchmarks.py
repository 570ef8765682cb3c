"""Ground-truth systems, samplers and the intrusive interpolatory-projection oracle."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .constraints import SampleSet
from .errors import DimensionError
from .model import (
    AlphaFunction,
    EvalPoint,
    StructuredModel,
    affine_param_alphas,
    delay_alphas,
    eval_transfer,
)


@dataclass
class GroundTruth:
    model: StructuredModel
    description: str
    defaults: dict = field(default_factory=dict)

    def __call__(self, x):
        return eval_transfer(self.model, x)


def delay_model(E, A, A_tau, B, C, tau: float = 1.0) -> StructuredModel:
    """Model of E x' = A x + A_tau x(t - tau) + B u, y = C x, as C (sE - A - e^{-tau s} A_tau)^{-1} B."""
    E, A, A_tau = (np.atleast_2d(np.asarray(M, dtype=float)) for M in (E, A, A_tau))
    return StructuredModel(delay_alphas(tau), [E, -A, -A_tau],
                           np.atleast_2d(np.asarray(B, dtype=float)).reshape(E.shape[0], -1),
                           np.atleast_2d(np.asarray(C, dtype=float)))


def scalar_delay_truth() -> GroundTruth:
    model = delay_model([[1.0]], [[-1.0]], [[0.25]], [[1.0]], [[1.0]])
    return GroundTruth(model, "x' = -x + 0.25 x(t-1) + u, H(s) = 1/(s + 1 - 0.25 e^{-s})",
                       {"points": [0.5, 1.0]})


def gen_scalar_delay(points=(0.5, 1.0), conjugate_close: bool = False) -> tuple[GroundTruth, SampleSet]:
    """Scalar delay system and its samples (two real points by default).

    With ``conjugate_close`` every point is followed by its conjugate
    (real points are kept once).
    """
    gt = scalar_delay_truth()
    pts = []
    for s in points:
        s = complex(s)
        pts.append(s)
        if conjugate_close and s.imag != 0:
            pts.append(s.conjugate())
    H = np.array([gt(s) for s in pts])
    return gt, SampleSet(pts, H, conjugate_closed=conjugate_close)


def gen_delay_rod(n: int = 101, tau: float = 1.0) -> GroundTruth:
    """Semi-discretized heated rod with delayed feedback.

    E = I, A = (n+1)^2 tridiag(1, -2, 1), A_tau = 0.25 I, input and output at
    the middle node.
    """
    if n < 3:
        raise DimensionError("delay rod needs n >= 3")
    h2 = float((n + 1) ** 2)
    A = h2 * (np.diag(-2.0 * np.ones(n)) + np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1))
    mid = (n + 1) // 2 - 1
    b = np.zeros((n, 1))
    b[mid, 0] = 1.0
    model = delay_model(np.eye(n), A, 0.25 * np.eye(n), b, b.T, tau)
    return GroundTruth(model, f"delay heat rod, n={n}, tau={tau}",
                       {"train_range": (1e-1, 1e3), "test_range": (1e-2, 1e4),
                        "train_count": 150, "test_count": 250})


# quadrant k is assigned to parameter p_{k+1}: (x_lo, x_hi, y_lo, y_hi)
THERMAL_QUADRANTS = (
    (0.0, 0.5, 0.0, 0.5),
    (0.5, 1.0, 0.0, 0.5),
    (0.5, 1.0, 0.5, 1.0),
    (0.0, 0.5, 0.5, 1.0),
)


def _quadrant(x, y) -> int:
    return {(False, False): 0, (True, False): 1, (True, True): 2, (False, True): 3}[(x >= 0.5, y >= 0.5)]


def thermal_block_matrices(grid: int):
    """Per-quadrant finite-difference stiffness matrices on a grid x grid interior mesh.

    Every edge of the 5-point stencil (including edges to boundary nodes) is
    assigned to the quadrant containing its midpoint; the edge contributes a
    rank-one positive semidefinite term, so each matrix is PSD and their sum
    is the standard Dirichlet Laplacian (unscaled, integer entries).
    """
    n = grid * grid
    h = 1.0 / (grid + 1)
    mats = [np.zeros((n, n)) for _ in range(4)]

    def node(i, j):
        return j * grid + i

    for j in range(grid):
        for i in range(grid):
            a = node(i, j)
            x, y = (i + 1) * h, (j + 1) * h
            # right and top neighbours, plus boundary edges on the left and bottom
            for di, dj in ((1, 0), (0, 1), (-1, 0), (0, -1)):
                ii, jj = i + di, j + dj
                mx, my = x + 0.5 * di * h, y + 0.5 * dj * h
                k = _quadrant(mx, my)
                inside = 0 <= ii < grid and 0 <= jj < grid
                if inside:
                    if (di, dj) in ((-1, 0), (0, -1)):
                        continue
                    b = node(ii, jj)
                    M = mats[k]
                    M[a, a] += 1.0
                    M[b, b] += 1.0
                    M[a, b] -= 1.0
                    M[b, a] -= 1.0
                else:
                    mats[k][a, a] += 1.0
    return mats, h


def gen_thermal_block(grid: int = 31) -> GroundTruth:
    """2x2 thermal block: (A_0 + p_1 A_1 + ... + p_4 A_4) x = B, y = C x with A_0 = 0.

    Unit heat source (B = h^2 * ones) and mean-temperature output.
    """
    if grid < 4:
        raise DimensionError("thermal block needs grid >= 4")
    mats, h = thermal_block_matrices(grid)
    n = grid * grid
    B = h * h * np.ones((n, 1))
    C = np.ones((1, n)) / n
    model = StructuredModel(affine_param_alphas(4), [np.zeros((n, n))] + mats, B, C, symmetric=True)
    return GroundTruth(model, f"2x2 thermal block, {grid}x{grid} interior nodes",
                       {"range": (0.1, 10.0), "train_per_axis": 4, "test_per_axis": 5})


def sample_frequencies(truth, count: int, lo: float, hi: float,
                       conjugate_close: bool = False) -> SampleSet:
    """Responses at i*omega for ``count`` log-spaced omega in [lo, hi].

    With ``conjugate_close`` each point is followed by its conjugate.
    """
    if not 0 < lo < hi:
        raise ValueError("need 0 < lo < hi")
    model = truth.model if isinstance(truth, GroundTruth) else truth
    omegas = np.logspace(np.log10(lo), np.log10(hi), count)
    omegas[0], omegas[-1] = lo, hi
    pts = []
    for w in omegas:
        pts.append(1j * w)
        if conjugate_close:
            pts.append(-1j * w)
    H = np.array([eval_transfer(model, s) for s in pts])
    return SampleSet(pts, H, conjugate_closed=conjugate_close)


def parameter_grid(points_per_axis: int, lo: float, hi: float, dim: int = 4) -> list[tuple[float, ...]]:
    if points_per_axis < 2:
        raise ValueError("need at least 2 points per axis")
    axis = np.linspace(lo, hi, points_per_axis)
    return [tuple(float(v) for v in p) for p in itertools.product(axis, repeat=dim)]


def sample_parameters(truth, points_per_axis: int, lo: float = 0.1, hi: float = 10.0,
                      dim: int = 4) -> SampleSet:
    """Outputs y(p) on the full tensor grid of the parameter box [lo, hi]^dim."""
    model = truth.model if isinstance(truth, GroundTruth) else truth
    pts = [EvalPoint.param(p) for p in parameter_grid(points_per_axis, lo, hi, dim)]
    H = np.array([eval_transfer(model, p) for p in pts])
    return SampleSet(pts, H)


def intrusive_oracle(truth, samples: SampleSet):
    """Two-sided interpolatory projection of the full model at the sample points.

    Returns (V, W, projected) with V[:, j] = K(sigma_j)^{-1} B b_j and
    W[:, j] = K(sigma_j)^{-T} C^T c_j (b_j = c_j = 1 for SISO data), and the
    projected model A_i -> W^T A_i V, B -> W^T B, C -> C V. Plain transposes
    are used, which makes the projected matrices satisfy the data-only
    constraints exactly.
    """
    model = truth.model if isinstance(truth, GroundTruth) else truth
    n = model.order
    N = samples.N
    cols_v, cols_w = [], []
    for j, x in enumerate(samples.points):
        K = model.pencil(x)
        eval_transfer(model, x)  # raises on a singular pencil
        if samples.has_directions:
            rb = model.B @ samples.right_dirs[j]
            rc = model.C.T @ samples.left_dirs[j]
        else:
            if model.n_inputs != 1 or model.n_outputs != 1:
                raise DimensionError("MIMO oracle needs tangential directions")
            rb = model.B[:, 0]
            rc = model.C[0, :]
        cols_v.append(np.linalg.solve(K, rb))
        cols_w.append(np.linalg.solve(K.T, rc))
    V = np.array(cols_v).T.reshape(n, N)
    W = np.array(cols_w).T.reshape(n, N)
    projected = StructuredModel(
        model.alphas,
        [W.T @ a @ V for a in model.A],
        W.T @ model.B,
        model.C @ V,
    )
    return V, W, projected


def random_stable_system(rng, n: int, q: int, m: int = 1, l: int = 1) -> StructuredModel:
    """Random real system with q in {2, 3}: (s, 1) descriptor form or (s, 1, e^{-s}) delay form."""
    E = np.eye(n) + 0.1 * rng.standard_normal((n, n)) / np.sqrt(n)
    X = rng.standard_normal((n, n)) / np.sqrt(n)
    A = X - X.T - (1.0 + rng.random()) * np.eye(n) - 0.5 * (X @ X.T)
    B = rng.standard_normal((n, m))
    C = rng.standard_normal((l, n))
    if q == 2:
        alphas = (AlphaFunction.monomial(1), AlphaFunction.constant())
        return StructuredModel(alphas, [E, -A], B, C)
    if q == 3:
        Ad = 0.2 * rng.standard_normal((n, n)) / np.sqrt(n)
        return delay_model(E, A, Ad, B, C)
    raise ValueError("q must be 2 or 3")

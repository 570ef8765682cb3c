"""Interpolation data and the generalized Sylvester constraints they induce.

For samples (sigma_j, H(sigma_j)), j = 1..N, and coefficient functions
alpha_1..alpha_q, every set of N x N matrices satisfying

    sum_i A_i Lambda_i   = rhs_right
    sum_i A_i^T Lambda_i = rhs_left

with Lambda_i = diag(alpha_i(sigma_1), ..., alpha_i(sigma_N)) defines a model
that interpolates the data. Transposes are plain transposes throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConjugatePairingError, DimensionError, IncompatiblePointError
from .linalg import as_stack
from .model import AlphaFunction, EvalPoint, as_point, eval_alpha

CONJ_POINT_TOL = 1e-10
CONJ_VALUE_TOL = 1e-12


def conjugate_partners(points: Sequence[EvalPoint], tol: float = CONJ_POINT_TOL) -> np.ndarray:
    """Index of the conjugate of every point; real points are their own partner."""
    s = np.array([p.s if p.s is not None else np.nan for p in points], dtype=complex)
    if np.isnan(s.real).any():
        raise ConjugatePairingError("conjugate pairing needs frequency points")
    partner = np.full(len(s), -1)
    for j, sj in enumerate(s):
        if partner[j] >= 0:
            continue
        d = np.abs(s - sj.conjugate())
        d[partner >= 0] = np.inf
        k = int(np.argmin(d))
        if d[k] > tol * max(1.0, abs(sj)):
            raise ConjugatePairingError(f"no conjugate partner for sample point {sj}")
        partner[j] = k
        partner[k] = j
    return partner


@dataclass
class SampleSet:
    """Transfer-function (or parametric output) samples with optional tangential directions."""

    points: list[EvalPoint]
    responses: np.ndarray
    right_dirs: np.ndarray | None = None
    left_dirs: np.ndarray | None = None
    conjugate_closed: bool = False

    def __post_init__(self):
        self.points = [as_point(p) for p in self.points]
        H = np.asarray(self.responses)
        if H.ndim == 1:
            H = H[:, None, None]
        if H.ndim != 3:
            raise DimensionError(f"responses must have shape (N, l, m), got {H.shape}")
        self.responses = H.astype(complex)
        N = len(self.points)
        if N < 1:
            raise DimensionError("a sample set needs at least one point")
        if H.shape[0] != N:
            raise DimensionError(f"{N} points but {H.shape[0]} responses")
        if (self.right_dirs is None) != (self.left_dirs is None):
            raise DimensionError("right and left directions must be given together")
        if self.right_dirs is not None:
            b = np.asarray(self.right_dirs, dtype=complex).reshape(N, -1)
            c = np.asarray(self.left_dirs, dtype=complex).reshape(N, -1)
            if b.shape[1] != self.m or c.shape[1] != self.l:
                raise DimensionError(
                    f"directions have widths {b.shape[1]}/{c.shape[1]}, expected m={self.m}, l={self.l}"
                )
            nb = np.linalg.norm(b, axis=1, keepdims=True)
            nc = np.linalg.norm(c, axis=1, keepdims=True)
            if (nb == 0).any() or (nc == 0).any():
                raise DimensionError("tangential directions must be nonzero")
            # already-unit rows are kept bit for bit so files round-trip exactly
            nb[np.abs(nb - 1.0) <= 1e-14] = 1.0
            nc[np.abs(nc - 1.0) <= 1e-14] = 1.0
            self.right_dirs = b / nb
            self.left_dirs = c / nc
        if self.conjugate_closed:
            partner = conjugate_partners(self.points)
            scale = max(1.0, float(np.abs(H).max()))
            if np.abs(H[partner] - H.conj()).max() > CONJ_VALUE_TOL * scale:
                raise ConjugatePairingError("responses are not conjugate at conjugate points")
            if self.right_dirs is not None:
                if (np.abs(self.right_dirs[partner] - self.right_dirs.conj()).max() > 1e-12
                        or np.abs(self.left_dirs[partner] - self.left_dirs.conj()).max() > 1e-12):
                    raise ConjugatePairingError("directions are not conjugate at conjugate points")

    @property
    def N(self) -> int:
        return len(self.points)

    @property
    def l(self) -> int:
        return self.responses.shape[1]

    @property
    def m(self) -> int:
        return self.responses.shape[2]

    @property
    def has_directions(self) -> bool:
        return self.right_dirs is not None

    @property
    def is_parametric(self) -> bool:
        return self.points[0].p is not None

    def subset(self, idx) -> "SampleSet":
        idx = list(idx)
        return SampleSet(
            points=[self.points[i] for i in idx],
            responses=self.responses[idx],
            right_dirs=None if self.right_dirs is None else self.right_dirs[idx],
            left_dirs=None if self.left_dirs is None else self.left_dirs[idx],
            conjugate_closed=False,
        )

    def scaled(self, factor: float) -> "SampleSet":
        return SampleSet(
            points=list(self.points),
            responses=self.responses * factor,
            right_dirs=self.right_dirs,
            left_dirs=self.left_dirs,
            conjugate_closed=self.conjugate_closed,
        )


def normalize(samples: SampleSet) -> tuple[SampleSet, float]:
    """Divide all responses by their largest absolute entry; returns (scaled, factor)."""
    factor = float(np.abs(samples.responses).max())
    if factor == 0:
        factor = 1.0
    return samples.scaled(1.0 / factor), factor


def denormalize(samples: SampleSet, factor: float) -> SampleSet:
    return samples.scaled(factor)


def with_default_directions(samples: SampleSet, seed: int | None = None) -> SampleSet:
    """Attach tangential directions to MIMO data that has none.

    Deterministic default: sample j uses canonical unit vectors e_{j mod m}
    and e_{j mod l}. With ``seed`` set, random complex unit vectors are drawn
    instead (conjugate-closed sets get conjugated directions at partner points).
    """
    if samples.has_directions or (samples.l == 1 and samples.m == 1):
        return samples
    N, l, m = samples.responses.shape
    if seed is None:
        b = np.eye(m)[np.arange(N) % m].astype(complex)
        c = np.eye(l)[np.arange(N) % l].astype(complex)
    else:
        rng = np.random.default_rng(seed)
        b = rng.standard_normal((N, m)) + 1j * rng.standard_normal((N, m))
        c = rng.standard_normal((N, l)) + 1j * rng.standard_normal((N, l))
        if samples.conjugate_closed:
            partner = conjugate_partners(samples.points)
            for j, k in enumerate(partner):
                if k > j:
                    b[k], c[k] = b[j].conj(), c[j].conj()
                elif k == j:
                    b[j], c[j] = b[j].real, c[j].real
    return SampleSet(samples.points, samples.responses, b, c, samples.conjugate_closed)


@dataclass
class ConstraintSystem:
    """Everything the optimizer touches.

    ``lambdas[i, j]`` holds alpha_i(sigma_j). ``b_data`` (N x m) and
    ``c_data`` (l x N) are the data blocks that play the role of B and C of
    the order-N model; for SISO both are the stacked response H_sigma.
    """

    alphas: tuple[AlphaFunction, ...]
    lambdas: np.ndarray
    rhs_right: np.ndarray
    rhs_left: np.ndarray
    b_data: np.ndarray
    c_data: np.ndarray
    symmetric: bool = False
    mimo: bool = False
    dirs_right: np.ndarray | None = field(default=None, repr=False)
    dirs_left: np.ndarray | None = field(default=None, repr=False)

    @property
    def N(self) -> int:
        return self.lambdas.shape[1]

    @property
    def q(self) -> int:
        return self.lambdas.shape[0]

    @property
    def h_sigma(self) -> np.ndarray:
        """Stacked response block (N x m); the column H_sigma in the SISO case."""
        return self.b_data

    @property
    def lambda_matrices(self) -> list[np.ndarray]:
        return [np.diag(lam) for lam in self.lambdas]

    @property
    def is_real(self) -> bool:
        return not (np.iscomplexobj(self.lambdas) or np.iscomplexobj(self.rhs_right)
                    or np.iscomplexobj(self.rhs_left))

    def as_real(self) -> "ConstraintSystem":
        """Drop zero imaginary parts so real data can be optimized over real matrices."""
        def real_if(M):
            return M.real.copy() if np.iscomplexobj(M) and not np.any(M.imag) else M
        return ConstraintSystem(
            self.alphas, real_if(self.lambdas), real_if(self.rhs_right), real_if(self.rhs_left),
            real_if(self.b_data), real_if(self.c_data), self.symmetric, self.mimo,
            self.dirs_right, self.dirs_left,
        )


def assemble_lambdas(alphas: Sequence[AlphaFunction], points: Sequence) -> list[np.ndarray]:
    """Diagonal matrices Lambda_i = diag(alpha_i(sigma_1), ..., alpha_i(sigma_N))."""
    return [np.diag(v) for v in _lambda_values(alphas, points)]


def _lambda_values(alphas, points) -> np.ndarray:
    out = np.empty((len(alphas), len(points)), dtype=complex)
    for j, x in enumerate(points):
        for i, f in enumerate(alphas):
            try:
                out[i, j] = eval_alpha(f, x)
            except IncompatiblePointError as exc:
                raise IncompatiblePointError(f"point {j}: {exc}") from exc
    return out


def assemble_constraints(samples: SampleSet, alphas: Sequence[AlphaFunction],
                         symmetric: bool = False) -> ConstraintSystem:
    alphas = tuple(alphas)
    H = samples.responses
    N, l, m = H.shape
    mimo = samples.has_directions
    if not mimo and (l > 1 or m > 1):
        raise DimensionError(
            f"{l}x{m} responses need tangential directions (see with_default_directions)"
        )
    lam = _lambda_values(alphas, samples.points)
    if mimo:
        b, c = samples.right_dirs, samples.left_dirs
        # row j: c_j^T H_j ; column k: H_k b_k
        b_data = np.einsum("jl,jlm->jm", c, H)
        c_data = np.einsum("klm,km->lk", H, b)
        dirs_right, dirs_left = b.T.copy(), c.T.copy()
    else:
        b_data = H[:, :, 0].copy()
        c_data = H[:, 0, :].T.copy()
        dirs_right = np.ones((1, N), dtype=complex)
        dirs_left = np.ones((1, N), dtype=complex)
    rhs_right = b_data @ dirs_right
    rhs_left = c_data.T @ dirs_left
    return ConstraintSystem(alphas, lam, rhs_right, rhs_left, b_data, c_data,
                            symmetric=bool(symmetric), mimo=mimo,
                            dirs_right=dirs_right, dirs_left=dirs_left)


def _check(system: ConstraintSystem, A) -> np.ndarray:
    A = as_stack(A)
    if A.shape != (system.q, system.N, system.N):
        raise DimensionError(f"expected {system.q} matrices of size {system.N}, got {A.shape}")
    return A


def residuals(system: ConstraintSystem, A) -> tuple[np.ndarray, np.ndarray]:
    """R1 = sum A_i Lambda_i - rhs_right and R2 = sum A_i^T Lambda_i - rhs_left.

    In symmetric mode R2 is R1 (the same array).
    """
    A = _check(system, A)
    lam = system.lambdas[:, None, :]
    R1 = (A * lam).sum(axis=0) - system.rhs_right
    if system.symmetric:
        return R1, R1
    R2 = (A.transpose(0, 2, 1) * lam).sum(axis=0) - system.rhs_left
    return R1, R2


def residual_norm(R: np.ndarray, l1_weight: float = 1.0) -> float:
    """||vec R||_1 + ||vec R||_2^2."""
    a = np.abs(R)
    return float(l1_weight * a.sum() + (a * a).sum())


def symmetrize(K) -> np.ndarray:
    K = np.asarray(K)
    if K.ndim < 2 or K.shape[-1] != K.shape[-2]:
        raise DimensionError(f"symmetrize needs square matrices, got shape {K.shape}")
    return K + np.swapaxes(K, -1, -2)


def q2_consistency(system: ConstraintSystem, A1, A2) -> tuple[float, float]:
    """Frobenius norms of the two Sylvester equations every q = 2 solution satisfies.

    Eliminating one unknown from the two constraint equations gives

        L2 A1 L1 - L1 A1 L2 = L2 Rr - Rl^T L2
        L2 A2 L1 - L1 A2 L2 = Rl^T L1 - L1 Rr

    with Rr, Rl the right-hand sides. Diagnostic only.
    """
    if system.q != 2:
        raise DimensionError(f"q2_consistency needs q = 2, got q = {system.q}")
    A1, A2 = np.asarray(A1), np.asarray(A2)
    l1, l2 = system.lambdas
    L1, L2 = l1[:, None], l2[:, None]
    Rr, Rl = system.rhs_right, system.rhs_left
    e1 = L2 * A1 * L1.T - L1 * A1 * L2.T - (L2 * Rr - Rl.T * L2.T)
    e2 = L2 * A2 * L1.T - L1 * A2 * L2.T - (Rl.T * L1.T - L1 * Rr)
    return float(np.linalg.norm(e1)), float(np.linalg.norm(e2))

"""Projection of a constraint solution onto its dominant stacked subspaces.

The solution matrices A_1, ..., A_q of a constraint solve, together with the
data blocks, form an order-N model that interpolates the samples. Truncated
SVDs of the horizontal stack [A_1, ..., A_q] and the vertical stack
[A_1; ...; A_q] supply left and right bases W, V; the reduced model is

    A_i -> W^H A_i V,   B -> W^H B,   C -> C V.

Order selection keeps the smallest r whose discarded energy (sum of the
trailing singular values over the total) is at most ``tol`` in both stacks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constraints import ConstraintSystem, SampleSet, conjugate_partners
from .errors import ConjugatePairingError, DimensionError
from .linalg import as_stack, hstack, svd, vstack
from .model import StructuredModel

REAL_TOL = 1e-8


@dataclass
class CompressionReport:
    sv_horizontal: np.ndarray
    sv_vertical: np.ndarray
    selected_order: int
    tol_used: float | None = None
    energy_h: float = 1.0
    energy_v: float = 1.0
    meta: dict = field(default_factory=dict)

    def rows(self):
        """(index, sv_horizontal, sv_vertical) rows, 1-based index."""
        k = max(len(self.sv_horizontal), len(self.sv_vertical))
        h = np.full(k, np.nan)
        v = np.full(k, np.nan)
        h[: len(self.sv_horizontal)] = self.sv_horizontal
        v[: len(self.sv_vertical)] = self.sv_vertical
        return [(i + 1, float(h[i]), float(v[i])) for i in range(k)]


def stacked_svds(A):
    """Thin SVDs (U1, S1, V1, U2, S2, V2) of the horizontal and vertical stacks.

    V1 and V2 hold right singular vectors as columns.
    """
    A = as_stack(A)
    U1, S1, V1h = svd(hstack(A))
    U2, S2, V2h = svd(vstack(A))
    return U1, S1, V1h.conj().T, U2, S2, V2h.conj().T


def captured_energy(s, r: int) -> float:
    s = np.asarray(s, dtype=float)
    total = s.sum()
    if total <= 0:
        return 1.0
    return float(s[:r].sum() / total)


def select_order(S1, S2, tol: float) -> int:
    """Smallest r with discarded energy at most ``tol`` in both spectra."""
    if not 0 < tol < 1:
        raise ValueError(f"tol must lie in (0, 1), got {tol}")
    S1 = np.asarray(S1, dtype=float)
    S2 = np.asarray(S2, dtype=float)
    if S1.size == 0 or S2.size == 0:
        raise ValueError("empty singular value spectrum")
    n = max(S1.size, S2.size)
    for r in range(1, n + 1):
        if max(1.0 - captured_energy(S1, r), 1.0 - captured_energy(S2, r)) <= tol:
            return r
    return n


def numerical_rank_rmin(A, rel_tol: float = 1e-8) -> int:
    """Smaller of the two stacked numerical ranks relative to the leading singular value."""
    if not 0 < rel_tol < 1:
        raise ValueError(f"rel_tol must lie in (0, 1), got {rel_tol}")
    A = as_stack(A)
    ranks = []
    for T in (hstack(A), vstack(A)):
        s = np.linalg.svd(T, compute_uv=False)
        if s.size == 0 or s[0] == 0:
            ranks.append(0)
        else:
            ranks.append(int(np.sum(s > rel_tol * s[0])))
    return min(ranks)


def uncompressed_model(system: ConstraintSystem, A) -> StructuredModel:
    """Order-N model (A_i, b_data, c_data) defined by a constraint solution."""
    A = as_stack(A)
    if A.shape != (system.q, system.N, system.N):
        raise DimensionError(f"expected {system.q} matrices of size {system.N}, got {A.shape}")
    return StructuredModel(system.alphas, list(A), system.b_data, system.c_data,
                           symmetric=system.symmetric)


def compress_model(model: StructuredModel, order: int | None = None, tol: float | None = None,
                   symmetric: bool | None = None) -> tuple[StructuredModel, CompressionReport]:
    """Project ``model`` onto the dominant subspaces of its stacked matrices.

    ``order`` takes precedence over ``tol``. In symmetric mode the left basis
    is the conjugate of the right one, so the reduced matrices are V^T A_i V
    and stay symmetric.
    """
    if symmetric is None:
        symmetric = model.symmetric
    A = as_stack(np.array(model.A))
    N = A.shape[1]
    U1, S1, _, _, S2, V2 = stacked_svds(A)
    if order is None:
        if tol is None:
            raise ValueError("give an order or a tolerance")
        order = select_order(S1, S2, tol)
    order = int(order)
    if order < 1:
        raise ValueError(f"order must be positive, got {order}")
    if order > N:
        raise DimensionError(f"order {order} exceeds the solution size {N}")
    V = V2[:, :order]
    if symmetric:
        W = V.conj()
    else:
        W = U1[:, :order]
    Wh = W.conj().T
    Ar = [Wh @ a @ V for a in A]
    if symmetric:
        Ar = [0.5 * (a + a.T) for a in Ar]
    reduced = StructuredModel(model.alphas, Ar, Wh @ model.B, model.C @ V, symmetric=bool(symmetric),
                              meta={"compressed_from": N})
    report = CompressionReport(S1, S2, order, tol, captured_energy(S1, order), captured_energy(S2, order))
    return reduced, report


def compress(A, system: ConstraintSystem, order: int | None = None, tol: float | None = None,
             real: bool = False, samples: SampleSet | None = None):
    """Reduce a constraint solution to an order-r model.

    With ``real`` the order-N model is first turned into an equivalent real
    model (needs conjugate-closed ``samples``).
    """
    model = uncompressed_model(system, A)
    if real:
        if samples is None:
            raise ValueError("realification needs the sample set")
        model = realify(model, samples)
    return compress_model(model, order=order, tol=tol, symmetric=system.symmetric)


def _pair_permutation(samples: SampleSet) -> np.ndarray:
    if not samples.conjugate_closed:
        raise ConjugatePairingError("realification needs conjugate-closed samples")
    partner = conjugate_partners(samples.points)
    if np.any(partner < 0):
        bad = int(np.flatnonzero(partner < 0)[0])
        raise ConjugatePairingError(f"point {bad} has no conjugate partner")
    return partner


def enforce_conjugate_symmetry(model: StructuredModel, samples: SampleSet) -> StructuredModel:
    """Average the order-N model with its conjugate-and-permuted copy.

    The map A -> P conj(A) P (P swapping conjugate sample pairs) sends
    solutions of the constraints to solutions, so the average still
    interpolates and its stacked nuclear norms are no larger.
    """
    p = _pair_permutation(samples)
    if model.order != len(p):
        raise DimensionError(f"model order {model.order} does not match {len(p)} samples")
    A = [0.5 * (a + a.conj()[np.ix_(p, p)]) for a in model.A]
    B = 0.5 * (model.B + model.B.conj()[p])
    C = 0.5 * (model.C + model.C.conj()[:, p])
    return StructuredModel(model.alphas, A, B, C, symmetric=model.symmetric, meta=dict(model.meta))


def pairing_transform(samples: SampleSet) -> np.ndarray:
    """Unitary T with T^H [z; conj z] = [sqrt2 Re z; sqrt2 Im z] on every conjugate pair."""
    p = _pair_permutation(samples)
    N = len(p)
    T = np.zeros((N, N), dtype=complex)
    r = 1.0 / np.sqrt(2.0)
    done = set()
    for j in range(N):
        k = int(p[j])
        if j in done:
            continue
        if k == j:
            T[j, j] = 1.0
        else:
            T[j, j], T[k, j] = r, r
            T[j, k], T[k, k] = 1j * r, -1j * r
        done.update((j, k))
    return T


def _real_part(M, what):
    M = np.asarray(M)
    if not np.iscomplexobj(M):
        return M
    scale = np.linalg.norm(M)
    if np.linalg.norm(M.imag) > REAL_TOL * max(scale, np.finfo(float).tiny):
        raise ConjugatePairingError(f"{what} is not conjugate symmetric across sample pairs")
    return M.real.copy()


def realify(model: StructuredModel, samples: SampleSet, enforce: bool = True) -> StructuredModel:
    """Equivalent real model of an order-N solution on conjugate-closed samples.

    A real model is returned unchanged. Otherwise the model is (optionally)
    made exactly conjugate symmetric and transformed by the unitary pairing
    similarity; the transfer function is unchanged.
    """
    if model.is_real:
        return model
    if enforce:
        model = enforce_conjugate_symmetry(model, samples)
    T = pairing_transform(samples)
    if model.order != T.shape[0]:
        raise DimensionError(f"model order {model.order} does not match {T.shape[0]} samples")
    # a symmetric model is mapped by the congruence T^T A T, which is real
    # as well and keeps the symmetry; both maps preserve the transfer function
    L = T if model.symmetric else T.conj()
    A = [_real_part(L.T @ a @ T, f"A_{i + 1}") for i, a in enumerate(model.A)]
    B = _real_part(L.T @ model.B, "B")
    C = _real_part(model.C @ T, "C")
    sym = bool(model.symmetric)
    if sym:
        A = [0.5 * (a + a.T) for a in A]
    meta = dict(model.meta)
    meta["realified"] = True
    return StructuredModel(model.alphas, A, B, C, symmetric=sym, meta=meta)


"""Small dense linear-algebra helpers shared by the optimizer and the compression step."""

from __future__ import annotations

import numpy as np


def as_stack(A) -> np.ndarray:
    """Coerce a sequence of q equally shaped square matrices to a (q, N, N) array."""
    A = np.asarray(A)
    if A.ndim == 2:
        A = A[None]
    if A.ndim != 3 or A.shape[1] != A.shape[2]:
        raise ValueError(f"expected q square matrices, got array of shape {A.shape}")
    return A


def hstack(A) -> np.ndarray:
    """[A_1, ..., A_q] of shape (N, qN)."""
    A = as_stack(A)
    q, n, _ = A.shape
    return A.transpose(1, 0, 2).reshape(n, q * n)


def vstack(A) -> np.ndarray:
    """[A_1; ...; A_q] of shape (qN, N)."""
    A = as_stack(A)
    q, n, _ = A.shape
    return A.reshape(q * n, n)


def split_hstack(G, q) -> np.ndarray:
    n = G.shape[0]
    return G.reshape(n, q, n).transpose(1, 0, 2)


def split_vstack(G, q) -> np.ndarray:
    n = G.shape[1]
    return G.reshape(q, n, n)


def svd(T, full: bool = False):
    """Thin SVD with descending singular values and a fixed sign/phase.

    Each left singular vector is rotated so that its first entry of
    non-negligible magnitude is real and positive; the right vectors are
    rotated consistently, so U @ diag(s) @ Vh is unchanged.
    """
    U, s, Vh = np.linalg.svd(T, full_matrices=full)
    if U.size:
        mag = np.abs(U)
        idx = np.argmax(mag > 1e-8 * mag.max(axis=0, keepdims=True), axis=0)
        lead = U[idx, np.arange(U.shape[1])]
        phase = np.ones_like(lead)
        nz = np.abs(lead) > 0
        phase[nz] = lead[nz] / np.abs(lead[nz])
        U = U * phase.conj()[None, :]
        k = min(U.shape[1], Vh.shape[0])
        Vh = Vh.copy()
        Vh[:k] = Vh[:k] * phase[:k, None]
    return U, s, Vh


def singular_values(T) -> np.ndarray:
    return np.linalg.svd(T, compute_uv=False)

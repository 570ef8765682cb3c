"""Structured models H(x) = C (sum_i alpha_i(x) A_i)^{-1} B and their coefficient functions."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from numbers import Number
from typing import Sequence

import numpy as np
from scipy.linalg import lu_solve
from scipy.linalg.lapack import zgecon as gecon, zgetrf as getrf

from .errors import DimensionError, IncompatiblePointError, SingularPencilError

MONOMIAL = "monomial"
EXP_DELAY = "exp_delay"
PARAM = "param"
CONSTANT = "constant"
ALPHA_KINDS = (MONOMIAL, EXP_DELAY, PARAM, CONSTANT)

DEFAULT_COND_CAP = 1e14


@dataclass(frozen=True)
class EvalPoint:
    """Either a complex frequency ``s`` or a real parameter vector ``p``."""

    s: complex | None = None
    p: tuple[float, ...] | None = None

    def __post_init__(self):
        if (self.s is None) == (self.p is None):
            raise ValueError("EvalPoint needs exactly one of s or p")
        if self.s is not None:
            object.__setattr__(self, "s", complex(self.s))
        else:
            object.__setattr__(self, "p", tuple(float(v) for v in self.p))

    @classmethod
    def freq(cls, s) -> "EvalPoint":
        return cls(s=s)

    @classmethod
    def param(cls, p) -> "EvalPoint":
        return cls(p=tuple(p))

    @property
    def is_frequency(self) -> bool:
        return self.s is not None

    def conjugate(self) -> "EvalPoint":
        if self.s is None:
            return self
        return EvalPoint(s=self.s.conjugate())


def as_point(x) -> EvalPoint:
    """Coerce a number (frequency) or a real sequence (parameter) to an EvalPoint."""
    if isinstance(x, EvalPoint):
        return x
    if isinstance(x, Number) or (isinstance(x, np.ndarray) and x.ndim == 0):
        return EvalPoint(s=complex(x))
    return EvalPoint(p=tuple(x))


@dataclass(frozen=True)
class AlphaFunction:
    """Scalar coefficient function multiplying one system matrix.

    ``monomial`` gives ``scale * s**power``, ``exp_delay`` gives
    ``scale * exp(-tau * s)``, ``param`` gives ``scale * p[index]`` and
    ``constant`` gives ``scale``.
    """

    kind: str
    power: int | None = None
    tau: float | None = None
    index: int | None = None
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ALPHA_KINDS:
            raise ValueError(f"unknown alpha kind {self.kind!r}")
        if self.kind == MONOMIAL and (self.power is None or int(self.power) != self.power or self.power < 0):
            raise ValueError("monomial power must be a nonnegative integer")
        if self.kind == EXP_DELAY and (self.tau is None or not self.tau > 0):
            raise ValueError("delay tau must be positive")
        if self.kind == PARAM and (self.index is None or int(self.index) != self.index or self.index < 0):
            raise ValueError("parameter index must be a nonnegative integer")
        if self.scale == 0 or not np.isfinite(self.scale):
            raise ValueError("alpha scale must be finite and nonzero")

    @classmethod
    def monomial(cls, power: int, scale: float = 1.0) -> "AlphaFunction":
        return cls(MONOMIAL, power=int(power), scale=float(scale))

    @classmethod
    def exp_delay(cls, tau: float, scale: float = 1.0) -> "AlphaFunction":
        return cls(EXP_DELAY, tau=float(tau), scale=float(scale))

    @classmethod
    def param(cls, index: int, scale: float = 1.0) -> "AlphaFunction":
        return cls(PARAM, index=int(index), scale=float(scale))

    @classmethod
    def constant(cls, scale: float = 1.0) -> "AlphaFunction":
        return cls(CONSTANT, scale=float(scale))

    def scaled(self, factor: float) -> "AlphaFunction":
        return replace(self, scale=self.scale * factor)

    def __call__(self, x) -> complex:
        return eval_alpha(self, x)

    def __str__(self):
        base = {
            MONOMIAL: lambda: "1" if self.power == 0 else ("s" if self.power == 1 else f"s^{self.power}"),
            EXP_DELAY: lambda: f"exp(-{self.tau:g}s)",
            PARAM: lambda: f"p{self.index}",
            CONSTANT: lambda: "1",
        }[self.kind]()
        return base if self.scale == 1.0 else f"{base}*{self.scale!r}"


def eval_alpha(f: AlphaFunction, x) -> complex:
    x = as_point(x)
    if f.kind == PARAM:
        if x.p is None:
            raise IncompatiblePointError(
                f"incompatible evaluation point: {f} needs a parameter vector, got s={x.s}"
            )
        if f.index >= len(x.p):
            raise IncompatiblePointError(
                f"incompatible evaluation point: {f} needs at least {f.index + 1} parameters"
            )
        return complex(f.scale * x.p[f.index])
    if f.kind == CONSTANT:
        return complex(f.scale)
    if x.s is None:
        raise IncompatiblePointError(
            f"incompatible evaluation point: {f} needs a frequency, got p={x.p}"
        )
    if f.kind == MONOMIAL:
        return f.scale * x.s**f.power
    return f.scale * np.exp(-f.tau * x.s)


def _as_matrix(M, name) -> np.ndarray:
    M = np.asarray(M)
    if M.ndim != 2:
        raise DimensionError(f"{name} must be a 2-D matrix, got shape {M.shape}")
    if not np.iscomplexobj(M):
        M = M.astype(float)
    return M


@dataclass
class StructuredModel:
    """Matrices (A_1..A_q, B, C) together with their coefficient functions."""

    alphas: tuple[AlphaFunction, ...]
    A: list[np.ndarray]
    B: np.ndarray
    C: np.ndarray
    symmetric: bool = False
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        self.alphas = tuple(self.alphas)
        self.A = [_as_matrix(a, f"A[{i}]") for i, a in enumerate(self.A)]
        self.B = _as_matrix(self.B, "B")
        self.C = _as_matrix(self.C, "C")
        if len(self.A) != len(self.alphas):
            raise DimensionError(f"{len(self.alphas)} alphas but {len(self.A)} matrices")
        if not self.A:
            raise DimensionError("a model needs at least one matrix")
        r = self.A[0].shape[0]
        for i, a in enumerate(self.A):
            if a.shape != (r, r):
                raise DimensionError(f"A[{i}] has shape {a.shape}, expected ({r}, {r})")
        if self.B.shape[0] != r:
            raise DimensionError(f"B has {self.B.shape[0]} rows, expected {r}")
        if self.C.shape[1] != r:
            raise DimensionError(f"C has {self.C.shape[1]} columns, expected {r}")
        if self.symmetric:
            for i, a in enumerate(self.A):
                if np.linalg.norm(a - a.T) > 1e-12 * np.linalg.norm(a):
                    raise DimensionError(f"A[{i}] is not symmetric but the model is flagged symmetric")

    @property
    def order(self) -> int:
        return self.A[0].shape[0]

    @property
    def q(self) -> int:
        return len(self.A)

    @property
    def n_inputs(self) -> int:
        return self.B.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.C.shape[0]

    @property
    def is_real(self) -> bool:
        return not any(np.iscomplexobj(M) for M in (*self.A, self.B, self.C))

    def pencil(self, x) -> np.ndarray:
        x = as_point(x)
        K = np.zeros(self.A[0].shape, dtype=complex)
        for f, a in zip(self.alphas, self.A):
            K += eval_alpha(f, x) * a
        return K

    def transfer(self, x, cond_cap: float = DEFAULT_COND_CAP) -> np.ndarray:
        return eval_transfer(self, x, cond_cap)

    def __call__(self, x):
        return eval_transfer(self, x)


def eval_transfer(model: StructuredModel, x, cond_cap: float = DEFAULT_COND_CAP) -> np.ndarray:
    """Evaluate ``C (sum alpha_i(x) A_i)^{-1} B`` by a linear solve.

    Raises SingularPencilError when the (LAPACK 1-norm estimate of the)
    condition number of the pencil exceeds ``cond_cap``.
    """
    x = as_point(x)
    K = model.pencil(x)
    if not np.isfinite(K).all():
        raise SingularPencilError(x, np.inf)
    lu, piv, info = getrf(K)
    if info > 0:
        raise SingularPencilError(x, np.inf)
    rcond, _ = gecon(lu, np.linalg.norm(K, 1), norm="1")
    cond = np.inf if rcond == 0 else 1.0 / rcond
    if cond > cond_cap:
        raise SingularPencilError(x, cond)
    return model.C @ lu_solve((lu, piv), model.B.astype(complex))


def transfer_many(model: StructuredModel, points: Sequence, cond_cap: float = DEFAULT_COND_CAP) -> np.ndarray:
    """Stack of transfer values, shape (len(points), l, m)."""
    return np.array([eval_transfer(model, x, cond_cap) for x in points])


def transpose_map(model: StructuredModel) -> StructuredModel:
    return StructuredModel(
        alphas=model.alphas,
        A=[a.T.copy() for a in model.A],
        B=model.C.T.copy(),
        C=model.B.T.copy(),
        symmetric=model.symmetric,
    )


def rescale_alphas(model: StructuredModel, factors: Sequence[float]) -> StructuredModel:
    """Replace (alpha_i, A_i) by (c_i alpha_i, A_i / c_i); the transfer map is unchanged."""
    if len(factors) != model.q:
        raise DimensionError(f"need {model.q} scale factors, got {len(factors)}")
    return StructuredModel(
        alphas=tuple(f.scaled(c) for f, c in zip(model.alphas, factors)),
        A=[a / c for a, c in zip(model.A, factors)],
        B=model.B.copy(),
        C=model.C.copy(),
        symmetric=model.symmetric,
    )


def delay_alphas(tau: float = 1.0) -> tuple[AlphaFunction, ...]:
    """(s, 1, exp(-tau s)): pairs with matrices (E, -A, -A_tau) of x' = Ax + A_tau x(t - tau)."""
    return (AlphaFunction.monomial(1), AlphaFunction.constant(), AlphaFunction.exp_delay(tau))


def second_order_alphas(gamma_m: float = 1e-3, gamma_d: float = 10**-1.5) -> tuple[AlphaFunction, ...]:
    """(gamma_m s^2, gamma_d s, 1) for M x'' + D x' + K x = B u with scaled mass and damping."""
    return (
        AlphaFunction.monomial(2, gamma_m),
        AlphaFunction.monomial(1, gamma_d),
        AlphaFunction.constant(),
    )


def affine_param_alphas(n_params: int, with_constant: bool = True) -> tuple[AlphaFunction, ...]:
    head = (AlphaFunction.constant(),) if with_constant else ()
    return head + tuple(AlphaFunction.param(j) for j in range(n_params))


def parse_alphas(spec: str) -> tuple[AlphaFunction, ...]:
    """Parse a comma-separated structure string.

    Tokens: ``1``, ``s``, ``s^k``, ``exp(-TAUs)``, ``pJ``, each optionally
    followed by ``*SCALE``. Presets: ``delay`` (tau 1), ``delay:TAU``,
    ``second-order``, ``affine:D`` (constant plus D parameter coordinates),
    ``thermal-block`` (same as ``affine:4``).
    """
    spec = spec.strip()
    if spec == "delay":
        return delay_alphas(1.0)
    if spec.startswith("delay:"):
        return delay_alphas(float(spec.split(":", 1)[1]))
    if spec == "second-order":
        return second_order_alphas()
    if spec == "thermal-block":
        return affine_param_alphas(4)
    if spec.startswith("affine:"):
        return affine_param_alphas(int(spec.split(":", 1)[1]))
    out = []
    for raw in spec.split(","):
        token = raw.strip().replace(" ", "")
        scale = 1.0
        if "*" in token:
            token, s = token.rsplit("*", 1)
            scale = float(s)
        if token == "1":
            out.append(AlphaFunction.constant(scale))
        elif token == "s":
            out.append(AlphaFunction.monomial(1, scale))
        elif token.startswith("s^"):
            out.append(AlphaFunction.monomial(int(token[2:]), scale))
        elif token.startswith("exp(-") and token.endswith("s)"):
            tau = token[5:-2]
            out.append(AlphaFunction.exp_delay(float(tau) if tau else 1.0, scale))
        elif token.startswith("p") and token[1:].isdigit():
            out.append(AlphaFunction.param(int(token[1:]), scale))
        else:
            raise ValueError(f"cannot parse structure token {raw!r}")
    if not out:
        raise ValueError("empty structure specification")
    return tuple(out)

"""Pointwise test errors and the fit report built from them.

The error at a test point is the relative Frobenius error

    ||H(x) - H_r(x)||_F / max(||H(x)||_F, 1e-300),

aggregated by the median. A point where the reduced model cannot be
evaluated (singular pencil, non-finite output) gets an infinite error.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .compression import CompressionReport
from .constraints import SampleSet
from .errors import SylvrankError
from .model import StructuredModel, eval_transfer

ERROR_FLOOR = 1e-300


def pointwise_errors(model: StructuredModel, test: SampleSet, absolute: bool = False,
                     scale: float = 1.0) -> np.ndarray:
    """Errors of ``scale * model`` against the responses in ``test``."""
    out = np.empty(test.N)
    for j, x in enumerate(test.points):
        H = test.responses[j]
        try:
            Hr = scale * eval_transfer(model, x)
        except (SylvrankError, np.linalg.LinAlgError):
            out[j] = np.inf
            continue
        if Hr.shape != H.shape:
            raise ValueError(f"model output shape {Hr.shape} does not match data shape {H.shape}")
        d = np.linalg.norm(Hr - H)
        if not np.isfinite(d):
            out[j] = np.inf
        elif absolute:
            out[j] = d
        else:
            out[j] = d / max(np.linalg.norm(H), ERROR_FLOOR)
    return out


@dataclass
class FitReport:
    mode: str
    order_used: int
    points: list
    errors: np.ndarray
    sv_report: CompressionReport | None = None
    wall_time: float = 0.0
    config_echo: dict = field(default_factory=dict)
    absolute: bool = False

    @property
    def median_error(self) -> float:
        return float(np.median(self.errors)) if len(self.errors) else float("nan")

    @property
    def max_error(self) -> float:
        return float(np.max(self.errors)) if len(self.errors) else float("nan")

    @property
    def n_failed(self) -> int:
        return int(np.sum(~np.isfinite(self.errors)))

    def summary(self) -> dict:
        return {
            "mode": self.mode,
            "order_used": int(self.order_used),
            "median_error": self.median_error,
            "max_error": self.max_error,
            "n_points": len(self.errors),
            "n_failed": self.n_failed,
            "error_metric": "absolute Frobenius" if self.absolute else "relative Frobenius",
            "wall_time": float(self.wall_time),
            "config": self.config_echo,
        }


def evaluate_model(model: StructuredModel, test: SampleSet, mode: str = "", absolute: bool = False,
                   scale: float = 1.0, sv_report: CompressionReport | None = None,
                   wall_time: float = 0.0, config_echo: dict | None = None) -> FitReport:
    errs = pointwise_errors(model, test, absolute=absolute, scale=scale)
    return FitReport(mode, model.order, list(test.points), errs, sv_report, wall_time,
                     dict(config_echo or {}), absolute)

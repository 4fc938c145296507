"""Sampled flattened affinity matrix ``H`` and its projection ``G = H H^T``."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParameterError


def affinity_column(residuals_all, sigma: float) -> np.ndarray:
    """Map squared residuals of every point to ``exp(-r^2 / (2 sigma^2))``."""
    if not sigma > 0:
        raise ParameterError("sigma must be positive")
    r2 = np.asarray(residuals_all, dtype=float)
    return np.exp(-r2 / (2.0 * sigma * sigma))


def project_graph(H) -> np.ndarray:
    H = np.asarray(H, dtype=float)
    if not np.all(np.isfinite(H)):
        raise ParameterError("H contains non-finite entries")
    G = H @ H.T
    # symmetrise to remove BLAS rounding asymmetry
    return 0.5 * (G + G.T)


def hypothesis_contribution(H, l: int) -> np.ndarray:
    """Rank-one contribution of column ``l`` to the projected graph."""
    H = np.asarray(H, dtype=float)
    if not 0 <= l < H.shape[1]:
        raise IndexError(f"hypothesis index {l} out of range [0, {H.shape[1]})")
    col = H[:, l]
    return np.outer(col, col)


@dataclass
class AffinityBundle:
    H: np.ndarray
    hypotheses: list = field(default_factory=list)
    G: np.ndarray | None = None

    def __post_init__(self):
        self.H = np.asarray(self.H, dtype=float)
        if self.G is None:
            self.G = project_graph(self.H)

    @property
    def n_hypotheses(self) -> int:
        return self.H.shape[1]

    def contribution(self, l: int) -> np.ndarray:
        return hypothesis_contribution(self.H, l)

    def dump(self, directory, which=("H", "G")):
        """Write ``H.csv`` / ``G.csv`` row-major at full precision."""
        out = Path(directory)
        out.mkdir(parents=True, exist_ok=True)
        for name in which:
            np.savetxt(out / f"{name}.csv", getattr(self, name), delimiter=",", fmt="%.17g")

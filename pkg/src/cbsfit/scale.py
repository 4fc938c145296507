"""Noise-scale estimation from sorted squared residuals (MSSE)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class ScaleEstimate:
    sigma: float
    k_star: int
    inlier_count: int


def msse(sorted_r2, k: int, T: float = 2.5, p: int = 1) -> ScaleEstimate:
    """Modified selective statistical estimator of the noise scale.

    Scans ranks ``j = k, k+1, ...`` of the ascending squared residuals with
    ``sigma_j^2 = sum(r2[:j]) / (j - p)`` and stops at the first ``j`` whose
    next residual satisfies ``r2[j] > T^2 sigma_j^2``. With no such
    transition the whole set is used.
    """
    r2 = np.asarray(sorted_r2, dtype=float)
    n = r2.size
    if k <= p:
        raise ParameterError(f"k={k} must exceed the parameter count p={p}")
    if k > n:
        raise ParameterError(f"k={k} exceeds the number of residuals {n}")
    csum = np.cumsum(r2)
    ranks = np.arange(k, n + 1)
    var = csum[k - 1:] / (ranks - p)
    # candidate j in [k, n-1] compares against the (j+1)-th residual
    jumps = r2[k:] > (T * T) * var[:-1]
    hit = np.flatnonzero(jumps)
    pos = hit[0] if hit.size else n - k
    k_star = int(ranks[pos])
    var_star = float(var[pos])
    sigma = float(np.sqrt(var_star))
    inliers = int(np.count_nonzero(r2 < (T * T) * var_star))
    return ScaleEstimate(sigma=sigma, k_star=k_star, inlier_count=inliers)

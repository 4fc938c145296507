"""Greedy k-th order statistics sample generation.

Starting from a weighted random tuple, the generator repeatedly fits a model,
sorts every residual and re-selects the ``h`` points whose ranks end at ``k``.
It stops once the current model still explains the two previous tuples at
least as well as its own k-th sorted residual, or after ``l_max`` iterations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateTupleError, ParameterError, SampleFailure
from .scale import ScaleEstimate, msse

MAX_DEGENERATE = 10
SIGMA_FLOOR_REL = 1e-9


@dataclass(frozen=True)
class SamplerConfig:
    k: int
    h: int
    T: float = 2.5
    l_max: int = 50

    def __post_init__(self):
        if self.k <= self.h:
            raise ParameterError(f"k={self.k} must exceed the tuple size h={self.h}")
        if self.l_max < 3:
            raise ParameterError("l_max must be at least 3")
        if not 2.0 <= self.T <= 3.5:
            raise ParameterError(f"T={self.T} outside [2.0, 3.5]")


@dataclass
class SortedResiduals:
    r2_sorted: np.ndarray
    index_of: np.ndarray


def sorted_residuals(data, theta, kernel) -> SortedResiduals:
    """Residuals of all points sorted ascending, ties kept in index order."""
    r2 = kernel.residuals(data, theta)
    order = np.argsort(r2, kind="stable")
    return SortedResiduals(r2[order], order)


def _sorted_from(r2: np.ndarray) -> SortedResiduals:
    order = np.argsort(r2, kind="stable")
    return SortedResiduals(r2[order], order)


def lkos_cost(sorted_res: SortedResiduals, k: int, h: int) -> float:
    """Sum of the ``h`` sorted squared residuals at ranks ``k-h+1 .. k``."""
    n = sorted_res.r2_sorted.size
    if k > n:
        raise ParameterError(f"k={k} exceeds the number of points {n}")
    if not 1 <= h <= k:
        raise ParameterError(f"window size h={h} must lie in [1, k]")
    return float(sorted_res.r2_sorted[k - h:k].sum())


def check_stop(theta, prev_tuple, prev_prev_tuple, data, k, kernel, r2=None) -> bool:
    """Two-look-back convergence test.

    True when the k-th sorted squared residual of ``theta`` is at least the
    mean squared residual (under ``theta``) of the points in each of the two
    previous tuples. Differences below the squared sigma floor count as ties,
    so round-off on exact data cannot block convergence.
    """
    if r2 is None:
        r2 = kernel.residuals(data, theta)
    r2 = np.asarray(r2)
    kth = np.partition(r2, k - 1)[k - 1] + (SIGMA_FLOOR_REL * data_diameter(data)) ** 2
    mean_a = r2[np.asarray(prev_tuple)].mean()
    mean_b = r2[np.asarray(prev_prev_tuple)].mean()
    return bool(mean_a <= kth and mean_b <= kth)


def weighted_tuple(weights, size: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``size`` distinct indices by successive weighted draws.

    Each pick is proportional to the remaining (renormalised) weights; this
    uses exponential keys, which gives the same distribution in one pass.
    Zero-weight indices are only used, uniformly, to pad a short draw.
    """
    w = np.asarray(weights, dtype=float)
    n = w.size
    if size > n:
        raise ParameterError(f"cannot draw {size} distinct items from {n}")
    keys = rng.exponential(size=n)
    pos = w > 0
    with np.errstate(divide="ignore"):
        keys = np.where(pos, keys / np.where(pos, w, 1.0), np.inf)
    n_pos = int(pos.sum())
    if n_pos >= size:
        return np.argpartition(keys, size - 1)[:size] if size < n else np.arange(n)
    chosen = np.flatnonzero(pos)
    pad = rng.choice(np.flatnonzero(~pos), size - n_pos, replace=False)
    return np.concatenate([chosen, pad])


def data_diameter(data) -> float:
    """Length of the bounding-box diagonal."""
    data = np.asarray(data, dtype=float)
    return float(np.linalg.norm(data.max(axis=0) - data.min(axis=0)))


@dataclass
class SampleResult:
    tuple_indices: np.ndarray
    theta: object
    sigma: float
    converged: bool
    iterations: int
    scale: ScaleEstimate
    history: list = field(default_factory=list)


def generate_sample(data, k: int, T: float, weights, kernel, rng, *, l_max: int = 50,
                    sigma_floor: float | None = None, record: bool = False) -> SampleResult:
    """Run the greedy sampler on ``data`` and return its final tuple and scale.

    ``weights`` drive only the initial tuple. The returned ``sigma`` is the
    MSSE scale of the final model's residuals on ``data``, floored at
    ``sigma_floor`` (default ``1e-9`` times the bounding-box diagonal).
    """
    data = np.asarray(data, dtype=float)
    n = len(data)
    h = kernel.h
    if k > n:
        raise ParameterError(f"k={k} exceeds the number of points {n}")
    SamplerConfig(k=k, h=h, T=T, l_max=l_max)
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (n,) or np.any(weights < 0) or not weights.sum() > 0:
        raise ParameterError("weights must be nonnegative, one per point, not all zero")
    if sigma_floor is None:
        sigma_floor = SIGMA_FLOOR_REL * data_diameter(data)

    history = []
    fails = 0
    theta = None
    tup = weighted_tuple(weights, h, rng)
    while theta is None:
        try:
            theta = kernel.fit(data[tup])
        except DegenerateTupleError:
            fails += 1
            if fails > MAX_DEGENERATE:
                raise SampleFailure("too many consecutive degenerate tuples") from None
            tup = weighted_tuple(weights, h, rng)
    fails = 0
    tuples = [tup]
    sr = _sorted_from(kernel.residuals(data, theta))
    converged = False
    l = 0
    while l < l_max:
        window = sr.index_of[k - h:k]
        tup = window
        resampled = False
        theta_next = None
        while theta_next is None:
            try:
                theta_next = kernel.fit(data[tup])
            except DegenerateTupleError:
                fails += 1
                if fails > MAX_DEGENERATE:
                    raise SampleFailure("too many consecutive degenerate tuples") from None
                tup = rng.choice(sr.index_of[:k], h, replace=False)
                resampled = True
                l += 1
        fails = 0
        if record:
            history.append({"order": sr.index_of.copy(), "tuple": tup.copy(),
                            "resampled": resampled})
        theta = theta_next
        tuples.append(tup)
        l += 1
        r2 = kernel.residuals(data, theta)
        sr = _sorted_from(r2)
        if len(tuples) >= 3 and check_stop(theta, tuples[-2], tuples[-3], data, k, kernel, r2=r2):
            converged = True
            break

    est = msse(sr.r2_sorted, k, T, kernel.dof(theta))
    sigma = max(est.sigma, sigma_floor)
    return SampleResult(tuple_indices=np.asarray(tuples[-1]), theta=theta, sigma=sigma,
                        converged=converged, iterations=l, scale=est, history=history)

"""End-to-end model fitting: weighted sub-sampling, greedy sampling, graph, clustering."""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .affinity import AffinityBundle, affinity_column
from .dataset import KIND_MODEL, DataSet
from .errors import CBSError, NumericalError, ParameterError, SampleFailure
from .kernels import Hypothesis, make_kernel
from .metrics import (ClusteringErrorReport, clustering_error, random_tuple_sampler,
                      uniform_parameter_hypotheses)
from .sampler import SIGMA_FLOOR_REL, data_diameter, generate_sample
from .spectral import Labeling, spectral_clustering

log = logging.getLogger(__name__)

WEIGHT_CAP_COUNT = 20
MAX_SAMPLE_RETRIES = 20
SAMPLERS = ("cbs", "cbs-nss", "random", "uniform")


def default_k(n: int, rule: str = "min") -> int:
    """Minimum structure size: ``min(0.1 N, 20)`` or, with ``rule='max'``, ``max(20, 0.1 N)``."""
    tenth = int(0.1 * n)
    if rule == "min":
        return min(tenth, 20)
    if rule == "max":
        return max(20, tenth)
    raise ParameterError(f"unknown k rule {rule!r}")


@dataclass
class PipelineConfig:
    model: str = "line"
    n_c: int = 2
    n_H: int = 500
    k: int | None = None
    k_rule: str = "min"
    T: float = 2.5
    seed: int = 0
    subset_frac: float | None = None
    sampler: str = "cbs"
    l_max: int = 50
    param_box: tuple = ((-10.0, 10.0), (-10.0, 10.0))
    kernel_options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n_H < 1:
            raise ParameterError("n_H must be at least 1")
        if self.n_c < 1:
            raise ParameterError("n_c must be at least 1")
        if not 2.0 <= self.T <= 3.5:
            raise ParameterError(f"T={self.T} outside [2.0, 3.5]")
        if self.sampler not in SAMPLERS:
            raise ParameterError(f"sampler must be one of {SAMPLERS}")
        if self.subset_frac is not None and not 0 < self.subset_frac <= 1:
            raise ParameterError("subset_frac must lie in (0, 1]")

    def resolve_k(self, n: int) -> int:
        return self.k if self.k is not None else default_k(n, self.k_rule)

    def subset_size(self, n: int) -> int:
        if self.subset_frac is not None:
            return int(np.floor(self.subset_frac * n))
        return n // self.n_c

    def to_dict(self):
        return asdict(self)


# ---------------------------------------------------------------------------
# Inclusion weights
# ---------------------------------------------------------------------------


def inclusion_probabilities(W, n_s: int) -> np.ndarray:
    """Scale weights to inclusion probabilities summing to ``n_s``, capped at 1."""
    W = np.asarray(W, dtype=float)
    pi = np.zeros_like(W)
    free = W > 0
    target = float(n_s)
    while True:
        total = W[free].sum()
        pi[free] = target * W[free] / total
        over = free & (pi >= 1.0)
        if not over.any():
            return pi
        pi[over] = 1.0
        free &= ~over
        target = n_s - float((pi == 1.0).sum())
        if target <= 0 or not free.any():
            pi[free] = 0.0
            return pi


def sample_data(X, W, n_s: int, rng):
    """Draw ``n_s`` distinct points with inclusion probability proportional to ``W``.

    Uses randomised systematic sampling over the inclusion probabilities, so
    point ``i`` is included with probability ``n_s W_i / sum(W)`` whenever
    that is at most one. If fewer than ``n_s`` points carry weight, the rest
    are padded uniformly from zero-weight points.

    Returns ``(indices, W_s)`` with ``W_s`` the renormalised subset weights.
    """
    W = np.asarray(W, dtype=float)
    n = W.size
    if n_s > n:
        raise ParameterError(f"subset size {n_s} exceeds {n} points")
    if np.any(W < 0) or not W.sum() > 0:
        raise ParameterError("weights must be nonnegative and not all zero")
    pos = np.flatnonzero(W > 0)
    if pos.size <= n_s:
        pad = rng.choice(np.flatnonzero(W <= 0), n_s - pos.size, replace=False)
        idx = np.sort(np.concatenate([pos, pad]))
    else:
        pi = inclusion_probabilities(W, n_s)
        perm = rng.permutation(n)
        cum = np.cumsum(pi[perm])
        cum *= n_s / cum[-1]
        marks = rng.uniform() + np.arange(n_s)
        picks = np.searchsorted(cum, marks, side="right")
        idx = np.sort(perm[np.minimum(picks, n - 1)])
    Ws = W[idx]
    Ws = Ws / Ws.sum() if Ws.sum() > 0 else np.full(n_s, 1.0 / n_s)
    return idx, Ws


def update_weights(W, inliers, cap: float) -> np.ndarray:
    """Boost unexplained points: double all, quarter inliers, reset capped, renormalise."""
    W = np.asarray(W, dtype=float) * 2.0
    W[np.asarray(inliers, dtype=np.intp)] /= 4.0
    W[W > cap] = 1.0 / W.size
    return W / W.sum()


# ---------------------------------------------------------------------------
# Pipeline
# ---------------------------------------------------------------------------


@dataclass
class PipelineResult:
    labeling: Labeling
    bundle: AffinityBundle
    error: ClusteringErrorReport | None
    timings: dict
    config: PipelineConfig
    k: int
    subset_size: int

    @property
    def labels(self):
        return self.labeling.labels

    def metrics(self) -> dict:
        out = {"sampler_name": self.config.sampler, "n_H": self.config.n_H,
               "seed": self.config.seed, "k": self.k, "subset_size": self.subset_size,
               "wall_time_ms": 1000.0 * self.timings["total"],
               "converged_fraction": float(np.mean([h.converged for h in self.bundle.hypotheses]))}
        if self.error is not None:
            out["ce_percent"] = self.error.ce_percent
        return out


def _as_arrays(data, labels):
    if isinstance(data, DataSet):
        return data.X, data.labels if labels is None else labels
    return np.asarray(data, dtype=float), labels


def _cbs_hypotheses(X, config, kernel, k, n_s, rng, timings):
    n = len(X)
    subsample = config.sampler == "cbs"
    if subsample and n_s <= k:
        raise ParameterError(f"subset size N_s={n_s} must exceed k={k}")
    if not subsample and n <= k:
        raise ParameterError(f"N={n} must exceed k={k}")
    floor = SIGMA_FLOOR_REL * data_diameter(X)
    cap = WEIGHT_CAP_COUNT / n
    W = np.full(n, 1.0 / n)
    H = np.empty((n, config.n_H))
    hyps = []
    for i in range(config.n_H):
        for attempt in range(MAX_SAMPLE_RETRIES):
            if subsample:
                idx, Ws = sample_data(X, W, n_s, rng)
            else:
                idx, Ws = np.arange(n), W
            try:
                res = generate_sample(X[idx], k, config.T, Ws, kernel, rng,
                                      l_max=config.l_max, sigma_floor=floor)
                break
            except SampleFailure:
                continue
        else:
            raise NumericalError(f"hypothesis {i}: sampler failed {MAX_SAMPLE_RETRIES} times")
        r2 = kernel.residuals(X, res.theta)
        H[:, i] = affinity_column(r2, res.sigma)
        if subsample:
            inliers = np.flatnonzero(r2 < (config.T * res.sigma) ** 2)
            W = update_weights(W, inliers, cap)
        hyps.append(Hypothesis(res.theta, idx[res.tuple_indices], res.sigma, res.converged,
                               {"iterations": res.iterations}))
    return H, hyps


def _baseline_H(X, hyps, kernel):
    H = np.empty((len(X), len(hyps)))
    for i, hyp in enumerate(hyps):
        H[:, i] = affinity_column(kernel.residuals(X, hyp.theta), hyp.sigma)
    return H


def run_pipeline(data, config: PipelineConfig, labels=None) -> PipelineResult:
    """Generate ``n_H`` hypotheses, build ``G = H H^T`` and split it into ``n_c`` clusters.

    ``config.sampler`` selects full cost-based sampling (``cbs``), the same
    without sub-sampling or weight updates (``cbs-nss``), or a baseline
    (``random`` tuples, ``uniform`` line parameters). Ground-truth ``labels``
    (or those carried by a :class:`DataSet`) enable the clustering error.
    """
    X, labels = _as_arrays(data, labels)
    model = config.model
    if isinstance(data, DataSet) and model is None:
        model = KIND_MODEL[data.kind]
    kernel = make_kernel(model, **config.kernel_options)
    n = len(X)
    if X.ndim != 2 or n == 0:
        raise ParameterError("data must be a non-empty 2D array")
    if config.n_c > n:
        raise ParameterError(f"n_c={config.n_c} exceeds the number of points {n}")
    k = config.resolve_k(n)
    n_s = config.subset_size(n)
    if k <= kernel.h:
        raise ParameterError(f"k={k} must exceed the tuple size h={kernel.h}")
    sample_ss, cluster_ss = np.random.SeedSequence(config.seed).spawn(2)
    rng = np.random.Generator(np.random.PCG64(sample_ss))
    timings = {}

    t0 = time.perf_counter()
    if config.sampler in ("cbs", "cbs-nss"):
        H, hyps = _cbs_hypotheses(X, config, kernel, k, n_s, rng, timings)
    elif config.sampler == "random":
        hyps = random_tuple_sampler(X, kernel, config.n_H, rng, k=k, T=config.T)
        H = _baseline_H(X, hyps, kernel)
    else:
        if kernel.kind != "line2d":
            raise ParameterError("uniform parameter sampling is only defined for lines")
        hyps = uniform_parameter_hypotheses(X, kernel, config.param_box, config.n_H, rng,
                                            k=k, T=config.T)
        H = _baseline_H(X, hyps, kernel)
    t1 = time.perf_counter()
    bundle = AffinityBundle(H, hyps)
    t2 = time.perf_counter()
    if not np.all(np.isfinite(bundle.G)):
        raise NumericalError("affinity graph contains non-finite values")
    labeling = spectral_clustering(bundle.G, config.n_c,
                                   np.random.Generator(np.random.PCG64(cluster_ss)))
    t3 = time.perf_counter()
    timings.update(sampling=t1 - t0, graph=t2 - t1, clustering=t3 - t2, total=t3 - t0)
    error = clustering_error(labels, labeling.labels) if labels is not None else None
    log.debug("pipeline %s n_H=%d k=%d N_s=%d timings=%s", config.sampler, config.n_H, k, n_s,
              timings)
    return PipelineResult(labeling, bundle, error, timings, config, k, n_s)


__all__ = ["PipelineConfig", "PipelineResult", "run_pipeline", "sample_data", "update_weights",
           "inclusion_probabilities", "default_k", "CBSError"]

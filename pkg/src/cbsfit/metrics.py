"""Clustering error and the baseline hypothesis samplers used for comparisons."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DegenerateTupleError, InputError, ParameterError, SampleFailure
from .kernels import Hypothesis, canonical_sign
from .sampler import SIGMA_FLOOR_REL, data_diameter
from .scale import msse


@dataclass
class ClusteringErrorReport:
    ce_percent: float
    best_permutation: dict

    def to_dict(self):
        return {"ce_percent": self.ce_percent,
                "best_permutation": {str(k): v for k, v in self.best_permutation.items()}}


def clustering_error(true_labels, predicted_labels) -> ClusteringErrorReport:
    """Percentage of points misclassified under the best label matching.

    The matching maps predicted labels injectively onto true labels; when the
    label counts differ the confusion matrix is padded with zeros, so surplus
    labels match nothing and all their points count as errors.
    """
    t = np.asarray(true_labels)
    p = np.asarray(predicted_labels)
    if t.shape != p.shape or t.ndim != 1:
        raise InputError(f"label arrays differ in shape: {t.shape} vs {p.shape}")
    n = t.size
    if n == 0:
        return ClusteringErrorReport(0.0, {})
    t_vals, t_idx = np.unique(t, return_inverse=True)
    p_vals, p_idx = np.unique(p, return_inverse=True)
    size = max(len(t_vals), len(p_vals))
    conf = np.zeros((size, size), dtype=np.int64)
    np.add.at(conf, (p_idx, t_idx), 1)
    rows, cols = linear_sum_assignment(conf, maximize=True)
    matched = int(conf[rows, cols].sum())
    mapping = {p_vals[r].item(): t_vals[c].item() for r, c in zip(rows, cols)
               if r < len(p_vals) and c < len(t_vals)}
    return ClusteringErrorReport(100.0 * (n - matched) / n, mapping)


def random_tuple_sampler(data, kernel, n_H: int, rng, *, k: int, T: float = 2.5,
                         max_retries: int = 100) -> list[Hypothesis]:
    """Hypotheses fitted to uniformly random ``h``-tuples, scaled by MSSE on all data."""
    data = np.asarray(data, dtype=float)
    n = len(data)
    h = kernel.h
    if n < h:
        raise ParameterError(f"need at least h={h} points, got {n}")
    floor = SIGMA_FLOOR_REL * data_diameter(data)
    out = []
    for _ in range(n_H):
        for _attempt in range(max_retries):
            tup = rng.choice(n, h, replace=False)
            try:
                theta = kernel.fit(data[tup])
                break
            except DegenerateTupleError:
                continue
        else:
            raise SampleFailure("random sampler kept drawing degenerate tuples")
        r2 = np.sort(kernel.residuals(data, theta))
        sigma = max(msse(r2, k, T, kernel.dof(theta)).sigma, floor)
        out.append(Hypothesis(theta, tup, sigma))
    return out


def uniform_parameter_sampler(param_box, n_H: int, rng) -> np.ndarray:
    """Lines ``y = a x + b`` with ``(a, b)`` uniform over ``param_box``.

    ``param_box`` is ``((a_lo, a_hi), (b_lo, b_hi))``. Returns an
    ``(n_H, 3)`` array of canonical ``(n_x, n_y, c)`` line parameters.
    """
    box = np.asarray(param_box, dtype=float)
    if box.shape != (2, 2) or np.any(box[:, 1] < box[:, 0]):
        raise ParameterError("param_box must be ((a_lo, a_hi), (b_lo, b_hi)) with lo <= hi")
    a = rng.uniform(box[0, 0], box[0, 1], n_H) if box[0, 1] > box[0, 0] else np.full(n_H, box[0, 0])
    b = rng.uniform(box[1, 0], box[1, 1], n_H) if box[1, 1] > box[1, 0] else np.full(n_H, box[1, 0])
    # a x - y + b = 0  ->  n = (a, -1)/s, c = -b/s
    s = np.sqrt(a * a + 1.0)
    thetas = np.column_stack([a / s, -1.0 / s, -b / s])
    return np.array([canonical_sign(t) for t in thetas])


def uniform_parameter_hypotheses(data, kernel, param_box, n_H: int, rng, *, k: int,
                                 T: float = 2.5) -> list[Hypothesis]:
    data = np.asarray(data, dtype=float)
    floor = SIGMA_FLOOR_REL * data_diameter(data)
    out = []
    for theta in uniform_parameter_sampler(param_box, n_H, rng):
        r2 = np.sort(kernel.residuals(data, theta))
        sigma = max(msse(r2, k, T, kernel.dof(theta)).sigma, floor)
        out.append(Hypothesis(theta, np.empty(0, dtype=np.intp), sigma))
    return out

"""Geometric model families: fit a model to a tuple, score every point against it.

Each kernel exposes the same small surface used by the samplers and the
pipeline:

* ``p``          parameter count, used for tuple sizing (``h = p + 2``)
* ``min_tuple``  smallest tuple that determines a model
* ``fit(points)``               -> model parameters
* ``residuals(data, theta)``    -> squared residual of every row of ``data``
* ``dof(theta)``                -> degrees of freedom removed by the fit

Data layouts (one row per point):

* line2d       ``(N, 2)`` planar points
* fundamental  ``(N, 4)`` correspondences ``x1, y1, x2, y2``
* subspace     ``(N, 2F)`` stacked trajectory vectors
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DegenerateTupleError, ParameterError

COND_LIMIT = 1e10


def canonical_sign(v: np.ndarray) -> np.ndarray:
    """Flip ``v`` so its first nonzero entry is positive."""
    flat = np.ravel(v)
    nz = np.flatnonzero(flat)
    if nz.size and flat[nz[0]] < 0:
        return -v
    return v


@dataclass
class Hypothesis:
    """A fitted model together with the tuple that generated it."""

    theta: object
    tuple_indices: np.ndarray
    sigma: float
    converged: bool = True
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.tuple_indices = np.asarray(self.tuple_indices, dtype=np.intp)
        if self.sigma < 0:
            raise ParameterError("sigma must be nonnegative")


# ---------------------------------------------------------------------------
# 2D lines
# ---------------------------------------------------------------------------


def fit_line(points) -> np.ndarray:
    """Total-least-squares line through ``points``.

    Returns ``(n_x, n_y, c)`` with unit normal ``n`` so that the line is
    ``n . x = c``. The sign is fixed so the first nonzero entry is positive.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
        raise ParameterError("fit_line needs at least two 2D points")
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    scale = max(1.0, float(np.abs(pts).max()))
    if s[0] <= 1e-12 * scale:
        raise DegenerateTupleError("all tuple points coincide")
    normal = vt[-1]
    theta = np.array([normal[0], normal[1], normal @ centroid])
    return canonical_sign(theta)


def line_residuals(points, theta) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    return (pts @ theta[:2] - theta[2]) ** 2


def residual_line(point, theta) -> float:
    """Squared orthogonal distance from one point to the line ``theta``."""
    x, y = point
    return float((theta[0] * x + theta[1] * y - theta[2]) ** 2)


# ---------------------------------------------------------------------------
# Linear subspaces (trajectory vectors)
# ---------------------------------------------------------------------------


class SubspaceModel(NamedTuple):
    mean: np.ndarray
    basis: np.ndarray  # (ambient, d), orthonormal columns

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


def fit_subspace(points, d: int) -> SubspaceModel:
    """Best rank-``d`` affine subspace of a tuple of vectors.

    The basis spans the top ``d`` right singular vectors of the mean-centred
    tuple. Raises :class:`DegenerateTupleError` when the centred tuple has
    rank below ``d``.
    """
    pts = np.asarray(points, dtype=float)
    n, ambient = pts.shape
    if d < 1 or d > ambient:
        raise ParameterError(f"subspace dimension {d} outside [1, {ambient}]")
    if n < d:
        raise ParameterError(f"need at least {d} vectors, got {n}")
    mean = pts.mean(axis=0)
    centered = pts - mean
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    if d > s.size or s[0] == 0 or s[d - 1] * COND_LIMIT < s[0]:
        raise DegenerateTupleError(f"tuple rank below {d}")
    return SubspaceModel(mean, vt[:d].T.copy())


def subspace_residuals(points, model: SubspaceModel) -> np.ndarray:
    centered = np.asarray(points, dtype=float) - model.mean
    coords = centered @ model.basis
    # |x|^2 - |B^T x|^2 loses precision near zero; project explicitly
    resid = centered - coords @ model.basis.T
    return np.einsum("ij,ij->i", resid, resid)


def select_subspace_dim(points, energy: float = 0.99, dim_range=(2, 4)) -> int:
    """Pick the smallest dimension whose top eigenvalues hold ``energy`` of the scatter.

    Falls back to the top of ``dim_range`` when no candidate qualifies.
    """
    pts = np.asarray(points, dtype=float)
    lo, hi = dim_range
    centered = pts - pts.mean(axis=0)
    eig = np.linalg.svd(centered, compute_uv=False) ** 2
    total = eig.sum()
    if total == 0:
        return lo
    cum = np.cumsum(eig) / total
    for d in range(lo, hi + 1):
        if cum[min(d, cum.size) - 1] >= energy:
            return d
    return hi


# ---------------------------------------------------------------------------
# Fundamental matrix
# ---------------------------------------------------------------------------


def _hartley(pts: np.ndarray):
    centroid = pts.mean(axis=0)
    dist = np.sqrt(((pts - centroid) ** 2).sum(axis=1)).mean()
    scale = np.sqrt(2.0) / dist if dist > 0 else 1.0
    T = np.array(
        [[scale, 0.0, -scale * centroid[0]], [0.0, scale, -scale * centroid[1]], [0.0, 0.0, 1.0]]
    )
    homog = np.column_stack([pts, np.ones(len(pts))]) @ T.T
    return homog, T


def fit_fundamental(correspondences) -> np.ndarray:
    """Normalised eight-point estimate of ``F`` with ``x1^T F x2 = 0``.

    Rows of ``correspondences`` are ``(x1, y1, x2, y2)``. The result has
    rank 2, unit Frobenius norm, and a positive first nonzero entry.
    """
    corr = np.asarray(correspondences, dtype=float)
    if corr.ndim != 2 or corr.shape[1] != 4 or corr.shape[0] < 8:
        raise ParameterError("fit_fundamental needs at least 8 correspondences")
    a, T1 = _hartley(corr[:, :2])
    b, T2 = _hartley(corr[:, 2:])
    # row-major vec(F): a_i * b_j
    design = (a[:, :, None] * b[:, None, :]).reshape(len(corr), 9)
    _, s, vt = np.linalg.svd(design)
    if s[0] == 0 or s[7] * COND_LIMIT < s[0]:
        raise DegenerateTupleError("eight-point design matrix is rank deficient")
    Fn = vt[-1].reshape(3, 3)
    u, sv, vt2 = np.linalg.svd(Fn)
    Fn = (u * np.array([sv[0], sv[1], 0.0])) @ vt2
    F = T1.T @ Fn @ T2
    F /= np.linalg.norm(F)
    return canonical_sign(F)


def sampson_distances(correspondences, F) -> np.ndarray:
    corr = np.asarray(correspondences, dtype=float)
    n = len(corr)
    x1 = np.column_stack([corr[:, :2], np.ones(n)])
    x2 = np.column_stack([corr[:, 2:], np.ones(n)])
    Fx2 = x2 @ F.T
    Ftx1 = x1 @ F
    num = np.einsum("ij,ij->i", x1, Fx2) ** 2
    den = Fx2[:, 0] ** 2 + Fx2[:, 1] ** 2 + Ftx1[:, 0] ** 2 + Ftx1[:, 1] ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        out = num / den
    out[den == 0] = np.inf
    return out


def sampson_distance(correspondence, F) -> float:
    """Squared first-order geometric error of one correspondence; ``inf`` if undefined."""
    return float(sampson_distances(np.reshape(correspondence, (1, 4)), F)[0])


# ---------------------------------------------------------------------------
# Kernel objects
# ---------------------------------------------------------------------------


class ModelKernel:
    kind: str = ""
    p: int = 1
    min_tuple: int = 1

    @property
    def h(self) -> int:
        return self.p + 2

    def fit(self, points):
        raise NotImplementedError

    def residuals(self, data, theta) -> np.ndarray:
        raise NotImplementedError

    def dof(self, theta) -> int:
        return self.p

    def __repr__(self):
        return f"{type(self).__name__}()"


class LineKernel(ModelKernel):
    kind = "line2d"
    p = 2
    min_tuple = 2
    data_dim = 2

    def fit(self, points):
        return fit_line(points)

    def residuals(self, data, theta):
        return line_residuals(data, theta)


class FundamentalKernel(ModelKernel):
    kind = "fundamental"
    p = 8
    min_tuple = 8
    data_dim = 4

    def fit(self, points):
        return fit_fundamental(points)

    def residuals(self, data, theta):
        return sampson_distances(data, theta)


class SubspaceKernel(ModelKernel):
    """Affine subspace whose dimension is chosen per tuple from its eigen-spectrum."""

    kind = "subspace"

    def __init__(self, dim_range=(2, 4), energy: float = 0.99):
        lo, hi = dim_range
        if not (2 <= lo <= hi <= 4):
            raise ParameterError("subspace dimension range must lie within [2, 4]")
        self.dim_range = (lo, hi)
        self.energy = energy
        # tuple sized by the largest admissible dimension
        self.p = hi
        self.min_tuple = max(5, hi + 1)

    def fit(self, points):
        d = select_subspace_dim(points, self.energy, self.dim_range)
        return fit_subspace(points, d)

    def residuals(self, data, theta):
        return subspace_residuals(data, theta)

    def dof(self, theta):
        return theta.dim

    def __repr__(self):
        return f"SubspaceKernel(dim_range={self.dim_range}, energy={self.energy})"


KERNELS = {"line": LineKernel, "line2d": LineKernel, "fundamental": FundamentalKernel,
           "subspace": SubspaceKernel}


def make_kernel(kind: str, **kwargs) -> ModelKernel:
    try:
        return KERNELS[kind](**kwargs)
    except KeyError:
        raise ParameterError(f"unknown model kind {kind!r}") from None

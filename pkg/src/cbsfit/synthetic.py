"""Seeded scene generators with planted ground truth.

All generators draw from PCG64 seeded through :class:`numpy.random.SeedSequence`;
each structure and the outlier block get their own child stream
(``SeedSequence(seed).spawn(m + 1)``), so adding outliers never perturbs the
inliers of an otherwise identical scene.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import DataSet
from .errors import ParameterError
from .kernels import canonical_sign, fit_line


@dataclass
class Structure:
    params: object
    count: int
    noise: float = 0.0

    def __post_init__(self):
        if self.count < 0 or self.noise < 0:
            raise ParameterError("structure count and noise must be nonnegative")


@dataclass
class SceneSpec:
    structures: list
    n_outliers: int = 0
    outlier_box: tuple | None = None
    seed: int = 0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n_outliers < 0:
            raise ParameterError("outlier count must be nonnegative")


def _streams(spec: SceneSpec):
    children = np.random.SeedSequence(spec.seed).spawn(len(spec.structures) + 1)
    return [np.random.Generator(np.random.PCG64(c)) for c in children]


def _labels(spec: SceneSpec) -> np.ndarray:
    parts = [np.full(s.count, j + 1) for j, s in enumerate(spec.structures)]
    parts.append(np.zeros(spec.n_outliers))
    return np.concatenate(parts).astype(np.intp)


# ---------------------------------------------------------------------------
# 2D lines
# ---------------------------------------------------------------------------


def gen_lines(spec: SceneSpec) -> DataSet:
    """Points uniform along each segment plus orthogonal Gaussian noise.

    ``Structure.params`` is a segment ``((x0, y0), (x1, y1))``; outliers are
    uniform in ``outlier_box = ((xmin, xmax), (ymin, ymax))``.
    """
    streams = _streams(spec)
    blocks, lines = [], []
    for s, rng in zip(spec.structures, streams):
        p0, p1 = (np.asarray(p, dtype=float) for p in s.params)
        direction = p1 - p0
        length = np.linalg.norm(direction)
        if length == 0:
            raise ParameterError("line segment endpoints coincide")
        normal = np.array([-direction[1], direction[0]]) / length
        t = rng.uniform(0.0, 1.0, s.count)
        eps = rng.normal(0.0, s.noise, s.count) if s.noise > 0 else np.zeros(s.count)
        blocks.append(p0 + t[:, None] * direction + eps[:, None] * normal)
        lines.append(fit_line(np.stack([p0, p1])))
    box = np.asarray(spec.outlier_box if spec.outlier_box is not None else ((-10, 10), (-10, 10)),
                     dtype=float)
    blocks.append(streams[-1].uniform(box[:, 0], box[:, 1], (spec.n_outliers, 2)))
    X = np.concatenate(blocks) if blocks else np.empty((0, 2))
    return DataSet(X, _labels(spec), "points", {"models": lines, "seed": spec.seed})


FOUR_LINES = [((-9.0, -8.0), (9.0, 6.0)), ((-9.0, 7.0), (8.0, -9.0)),
              ((-9.0, 3.0), (9.0, 5.0)), ((-3.0, -9.0), (-1.0, 9.0))]
TWO_LINES = [((-9.0, -6.0), (9.0, 4.0)), ((-8.0, 8.0), (7.0, -9.0))]


def four_lines_spec(seed: int = 0, noise: float = 0.02, count: int = 100,
                    n_outliers: int = 50) -> SceneSpec:
    return SceneSpec([Structure(seg, count, noise) for seg in FOUR_LINES], n_outliers,
                     ((-10.0, 10.0), (-10.0, 10.0)), seed)


def two_lines_spec(seed: int = 0, noise: float = 0.02) -> SceneSpec:
    return SceneSpec([Structure(seg, 50, noise) for seg in TWO_LINES], 20,
                     ((-10.0, 10.0), (-10.0, 10.0)), seed)


# ---------------------------------------------------------------------------
# Two-view correspondences
# ---------------------------------------------------------------------------


@dataclass
class Motion:
    """Rigid motion of one object between the two views, in camera-1 coordinates.

    Object points are uniform in the box ``center +/- half_size`` and map to
    ``R @ X + t`` in the second camera frame.
    """

    R: np.ndarray
    t: np.ndarray
    center: tuple = (0.0, 0.0, 8.0)
    half_size: tuple = (1.5, 1.5, 2.0)


def rotation(axis, angle: float) -> np.ndarray:
    """Rodrigues rotation about ``axis`` by ``angle`` radians."""
    a = np.asarray(axis, dtype=float)
    a = a / np.linalg.norm(a)
    K = np.array([[0, -a[2], a[1]], [a[2], 0, -a[0]], [-a[1], a[0], 0]])
    return np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * K @ K


def skew(v) -> np.ndarray:
    return np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]], dtype=float)


def fundamental_from_motion(R, t, K) -> np.ndarray:
    """``F`` with ``x1^T F x2 = 0`` for pixels ``x1`` (view 1) and ``x2`` (view 2)."""
    Kinv = np.linalg.inv(K)
    F = (Kinv.T @ skew(t) @ R @ Kinv).T
    F = F / np.linalg.norm(F)
    return canonical_sign(F)


def default_camera(f: float = 600.0, width: int = 640, height: int = 480) -> np.ndarray:
    return np.array([[f, 0.0, width / 2.0], [0.0, f, height / 2.0], [0.0, 0.0, 1.0]])


def _project(K, X):
    x = X @ K.T
    return x[:, :2] / x[:, 2:3]


def gen_two_view(spec: SceneSpec, K=None, image_size=(640, 480)) -> DataSet:
    """Correspondences ``(x1, y1, x2, y2)`` of rigidly moving objects.

    ``Structure.params`` is a :class:`Motion`; ``noise`` is the pixel noise
    added independently to both views. Outliers pair two independent uniform
    image positions.
    """
    K = default_camera() if K is None else np.asarray(K, dtype=float)
    motions = [s.params for s in spec.structures]
    if not motions or all(np.linalg.norm(m.t) == 0 for m in motions):
        raise ParameterError("two-view scene needs at least one motion with nonzero baseline")
    streams = _streams(spec)
    blocks, clean_blocks, Fs = [], [], []
    for s, rng in zip(spec.structures, streams):
        m = s.params
        lo = np.asarray(m.center) - np.asarray(m.half_size)
        hi = np.asarray(m.center) + np.asarray(m.half_size)
        X1 = rng.uniform(lo, hi, (s.count, 3))
        X2 = X1 @ np.asarray(m.R).T + np.asarray(m.t)
        if np.any(X1[:, 2] <= 0) or np.any(X2[:, 2] <= 0):
            raise ParameterError("object points must lie in front of both cameras")
        clean = np.column_stack([_project(K, X1), _project(K, X2)])
        noisy = clean + (rng.normal(0.0, s.noise, clean.shape) if s.noise > 0 else 0.0)
        blocks.append(noisy)
        clean_blocks.append(clean)
        Fs.append(fundamental_from_motion(m.R, m.t, K))
    w, h = image_size
    box = np.asarray(spec.outlier_box if spec.outlier_box is not None
                     else ((0, w), (0, h), (0, w), (0, h)), dtype=float)
    blocks.append(streams[-1].uniform(box[:, 0], box[:, 1], (spec.n_outliers, 4)))
    X = np.concatenate(blocks)
    meta = {"models": Fs, "K": K, "clean": np.concatenate(clean_blocks) if clean_blocks
            else np.empty((0, 4)), "seed": spec.seed}
    return DataSet(X, _labels(spec), "correspondences", meta)


DEFAULT_MOTIONS = [
    Motion(rotation((0, 1, 0), 0.06), np.array([0.8, 0.05, 0.1]), (-2.5, 0.5, 8.0)),
    Motion(rotation((1, 0, 0), -0.05), np.array([-0.1, 0.7, 0.3]), (0.5, -1.0, 9.0)),
    Motion(rotation((0, 0, 1), 0.08), np.array([0.3, -0.2, 0.9]), (2.5, 1.0, 7.0)),
]


def three_motions_spec(seed: int = 0, noise: float = 1.0, counts=(100, 100, 100),
                       n_outliers: int = 50) -> SceneSpec:
    return SceneSpec([Structure(m, c, noise) for m, c in zip(DEFAULT_MOTIONS, counts)],
                     n_outliers, None, seed)


def posters_checkerboard_spec(seed: int = 0, noise: float = 1.0) -> SceneSpec:
    """Three motions of 100, 99 and 81 matches plus 99 mismatches."""
    return three_motions_spec(seed, noise, (100, 99, 81), 99)


# ---------------------------------------------------------------------------
# Trajectory subspaces
# ---------------------------------------------------------------------------


def gen_subspaces(spec: SceneSpec, ambient: int | None = None) -> DataSet:
    """Trajectory vectors drawn from random linear subspaces.

    ``Structure.params`` is the subspace dimension (2 to 4). Coefficients are
    standard normal, noise is isotropic in the ambient space, and outliers are
    uniform in the bounding box of the inliers.
    """
    ambient = int(ambient if ambient is not None else spec.extra.get("ambient", 20))
    if ambient < 10 or ambient % 2:
        raise ParameterError("ambient dimension 2F must be even and at least 10")
    streams = _streams(spec)
    blocks, bases = [], []
    for s, rng in zip(spec.structures, streams):
        d = int(s.params)
        if not 2 <= d <= 4 or d > ambient:
            raise ParameterError(f"subspace dimension {d} outside [2, 4]")
        basis, _ = np.linalg.qr(rng.normal(size=(ambient, d)))
        coeff = rng.normal(size=(s.count, d))
        pts = coeff @ basis.T
        if s.noise > 0:
            pts = pts + rng.normal(0.0, s.noise, pts.shape)
        blocks.append(pts)
        bases.append(basis)
    inliers = np.concatenate(blocks) if blocks else np.zeros((1, ambient))
    if spec.outlier_box is not None:
        box = np.asarray(spec.outlier_box, dtype=float)
    else:
        box = np.column_stack([inliers.min(axis=0), inliers.max(axis=0)])
    blocks.append(streams[-1].uniform(box[:, 0], box[:, 1], (spec.n_outliers, ambient)))
    X = np.concatenate(blocks)
    return DataSet(X, _labels(spec), "trajectories",
                   {"bases": bases, "frames": ambient // 2, "seed": spec.seed})


def three_subspaces_spec(seed: int = 0, noise: float = 1e-2, n_outliers: int = 50,
                         dims=(2, 3, 4), count: int = 100, ambient: int = 20) -> SceneSpec:
    return SceneSpec([Structure(d, count, noise) for d in dims], n_outliers, None, seed,
                     {"ambient": ambient})


PRESETS = {
    "four-lines": (four_lines_spec, gen_lines),
    "two-lines": (two_lines_spec, gen_lines),
    "three-motions": (three_motions_spec, gen_two_view),
    "posters-checkerboard": (posters_checkerboard_spec, gen_two_view),
    "three-subspaces": (three_subspaces_spec, gen_subspaces),
}


def make_preset(name: str, seed: int = 0, **kwargs) -> DataSet:
    try:
        spec_fn, gen = PRESETS[name]
    except KeyError:
        raise ParameterError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    ds = gen(spec_fn(seed=seed, **kwargs))
    ds.meta["preset"] = name
    return ds

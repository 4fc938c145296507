"""Point-set container and the CSV formats read and written by the CLI.

Formats (comma separated, optional header line):

* 2D points          ``x,y[,label]``
* correspondences    ``x1,y1,x2,y2[,label]``
* trajectories       header ``traj,F=<n>`` then ``2n`` coordinates per row
                     (``x_1,y_1,...,x_n,y_n``) and an optional trailing label

Label ``0`` marks gross outliers when ground truth is present.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputError

KIND_COLUMNS = {"points": 2, "correspondences": 4}
KIND_MODEL = {"points": "line", "correspondences": "fundamental", "trajectories": "subspace"}


@dataclass
class DataSet:
    X: np.ndarray
    labels: np.ndarray | None = None
    kind: str = "points"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        if self.X.ndim != 2:
            raise InputError("data must be a 2D array, one row per point")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.intp)
            if self.labels.shape != (len(self.X),):
                raise InputError("labels must have one entry per point")

    def __len__(self):
        return len(self.X)

    @property
    def n_structures(self) -> int:
        if self.labels is None:
            return 0
        return int(np.unique(self.labels[self.labels > 0]).size)

    @property
    def has_outliers(self) -> bool:
        return self.labels is not None and bool(np.any(self.labels == 0))


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def ingest(path, fmt: str | None = None) -> DataSet:
    """Read a dataset CSV, inferring its kind from the header or column count.

    ``fmt`` may force ``points``, ``correspondences`` or ``trajectories``.
    Raises :class:`InputError` naming the offending line on malformed rows.
    """
    path = Path(path)
    if not path.exists():
        raise InputError(f"{path}: no such file")
    with path.open(newline="") as fh:
        rows = [(i + 1, r) for i, r in enumerate(csv.reader(fh)) if r and any(c.strip() for c in r)]
    if not rows:
        raise InputError(f"{path}: empty file")

    n_frames = None
    header = None
    first_line, first = rows[0]
    if not all(_is_number(c) for c in first):
        header = [c.strip() for c in first]
        rows = rows[1:]
        if header and header[0].lower() == "traj":
            try:
                n_frames = int(header[1].split("=", 1)[1]) if len(header) > 1 else None
            except (IndexError, ValueError):
                raise InputError(f"{path}:{first_line}: bad trajectory header {first!r}") from None
            if n_frames is None or n_frames < 1:
                raise InputError(f"{path}:{first_line}: trajectory header needs F=<n>")
    if not rows:
        raise InputError(f"{path}: no data rows")

    width = len(rows[0][1])
    values = []
    for line, row in rows:
        if len(row) != width:
            raise InputError(f"{path}:{line}: expected {width} columns, got {len(row)}")
        try:
            values.append([float(c) for c in row])
        except ValueError:
            raise InputError(f"{path}:{line}: non-numeric value in {row!r}") from None
    arr = np.array(values)
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{path}: non-finite values")

    if n_frames is not None or fmt == "trajectories":
        if n_frames is None:
            raise InputError(f"{path}: trajectory files need a 'traj,F=<n>' header")
        ambient = 2 * n_frames
        kind = "trajectories"
        if width not in (ambient, ambient + 1):
            raise InputError(f"{path}: F={n_frames} implies {ambient} columns, got {width}")
    else:
        kind = fmt or {2: "points", 3: "points", 4: "correspondences", 5: "correspondences"}.get(width)
        if kind is None or kind not in KIND_COLUMNS:
            raise InputError(f"{path}: cannot infer data kind from {width} columns")
        ambient = KIND_COLUMNS[kind]
        if width not in (ambient, ambient + 1):
            raise InputError(f"{path}: {kind} need {ambient} or {ambient + 1} columns, got {width}")

    labels = None
    if width == ambient + 1:
        lab = arr[:, -1]
        if np.any(lab != np.round(lab)) or np.any(lab < 0):
            raise InputError(f"{path}: label column must hold nonnegative integers")
        labels = lab.astype(np.intp)
    meta = {"source": str(path)}
    if n_frames is not None:
        meta["frames"] = n_frames
    return DataSet(arr[:, :ambient], labels, kind, meta)


def write_dataset(ds: DataSet, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    X = ds.X
    if ds.kind == "trajectories":
        frames = X.shape[1] // 2
        header = ["traj", f"F={frames}"]
    elif ds.kind == "correspondences":
        header = ["x1", "y1", "x2", "y2"]
    else:
        header = ["x", "y"]
    if ds.labels is not None and ds.kind != "trajectories":
        header.append("label")
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i, row in enumerate(X):
            vals = [repr(float(v)) for v in row]
            if ds.labels is not None:
                vals.append(str(int(ds.labels[i])))
            w.writerow(vals)
    return path


def write_labels(labels, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["point_index", "label"])
        for i, lab in enumerate(labels):
            w.writerow([i, int(lab)])
    return path


def read_labels(path) -> np.ndarray:
    """Read labels from a ``point_index,label`` file or a single label column."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"{path}: no such file")
    with path.open(newline="") as fh:
        rows = [(i + 1, r) for i, r in enumerate(csv.reader(fh)) if r]
    if rows and not all(_is_number(c) for c in rows[0][1]):
        rows = rows[1:]
    out = []
    for line, row in rows:
        try:
            out.append(int(float(row[-1])))
        except ValueError:
            raise InputError(f"{path}:{line}: bad label {row[-1]!r}") from None
    return np.array(out, dtype=np.intp)

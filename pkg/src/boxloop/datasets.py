"""Dataset containers and on-disk formats shared by the model families.

Univariate series are stored as two-column ``x,y`` CSV with a header row.
Tabular datasets for the probabilistic-program backend are named-column CSV
with an optional sibling ``<name>.meta.txt`` free-text description that gets
forwarded to proposers.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class Scaler:
    """Train-split standardization for both axes.

    The upstream MAE numbers (0.06..0.22 on airline-like data) only make
    sense for unit-variance targets, so both x and y are standardized on
    train statistics and MAE is always reported in normalized y units.
    """

    x_mean: float
    x_std: float
    y_mean: float
    y_std: float

    def x_fwd(self, x):
        return (np.asarray(x, dtype=float) - self.x_mean) / self.x_std

    def y_fwd(self, y):
        return (np.asarray(y, dtype=float) - self.y_mean) / self.y_std

    def y_inv(self, z):
        return np.asarray(z, dtype=float) * self.y_std + self.y_mean


@dataclass(frozen=True)
class TimeSeries:
    """Univariate series with a fixed extrapolation split.

    The test segment is always the tail: the discovery task is forecasting,
    so interpolation-style random splits would overstate every model.
    """

    name: str
    x: np.ndarray
    y: np.ndarray
    n_train: int

    def __post_init__(self):
        if len(self.x) != len(self.y):
            raise ValueError("x and y must have equal length")
        if not 2 <= self.n_train <= len(self.x):
            raise ValueError("n_train out of range")
        if np.any(np.diff(self.x) <= 0):
            raise ValueError("x must be strictly increasing")

    @property
    def train_x(self):
        return self.x[: self.n_train]

    @property
    def train_y(self):
        return self.y[: self.n_train]

    @property
    def test_x(self):
        return self.x[self.n_train :]

    @property
    def test_y(self):
        return self.y[self.n_train :]

    def scaler(self) -> Scaler:
        tx, ty = self.train_x, self.train_y
        x_std = float(np.std(tx))
        y_std = float(np.std(ty))
        if x_std <= 0 or y_std <= 0:
            raise ValueError("degenerate train split (constant x or y)")
        return Scaler(float(np.mean(tx)), x_std, float(np.mean(ty)), y_std)


def make_series(name: str, x, y, train_frac: float = 0.8) -> TimeSeries:
    x = np.asarray(x, dtype=float)
    n_train = max(2, int(round(train_frac * len(x))))
    return TimeSeries(name, x, np.asarray(y, dtype=float), n_train)


def load_timeseries_csv(path, name: str | None = None, train_frac: float = 0.8) -> TimeSeries:
    path = Path(path)
    xs, ys = [], []
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    header, body = rows[0], rows[1:]
    if len(header) < 2:
        raise ValueError(f"{path}: expected two-column x,y CSV with header")
    for r in body:
        xs.append(float(r[0]))
        ys.append(float(r[1]))
    return make_series(name or path.stem, xs, ys, train_frac)


def save_timeseries_csv(series: TimeSeries, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y"])
        for xi, yi in zip(series.x, series.y):
            w.writerow([repr(float(xi)), repr(float(yi))])


@dataclass(frozen=True)
class Table:
    """Named-column dataset for the probabilistic-program backend."""

    name: str
    columns: dict  # column name -> float ndarray
    metadata: str = ""

    @property
    def n_rows(self) -> int:
        return len(next(iter(self.columns.values())))

    def column(self, name: str) -> np.ndarray:
        if name not in self.columns:
            raise KeyError(f"dataset {self.name!r} has no column {name!r}")
        return self.columns[name]

    def with_columns(self, **cols) -> "Table":
        merged = dict(self.columns)
        merged.update({k: np.asarray(v, dtype=float) for k, v in cols.items()})
        return replace(self, columns=merged)


def _parse_table(text: str, name: str, metadata: str) -> Table:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].lstrip().startswith("#")]
    header, body = rows[0], rows[1:]
    cols = {h.strip(): np.array([float(r[i]) for r in body]) for i, h in enumerate(header)}
    lengths = {len(v) for v in cols.values()}
    if len(lengths) != 1:
        raise ValueError(f"ragged columns in table {name!r}")
    return Table(name=name, columns=cols, metadata=metadata)


def load_table_csv(path, metadata: str | None = None) -> Table:
    path = Path(path)
    meta_path = path.with_suffix("").with_suffix(".meta.txt")
    if metadata is None:
        metadata = meta_path.read_text().strip() if meta_path.exists() else ""
    return _parse_table(path.read_text(), path.stem, metadata)


# -- shipped fixtures ---------------------------------------------------------

_FIXROOT = resources.files("boxloop") / "fixtures"


def fixture_path(*parts: str) -> Path:
    p = Path(str(_FIXROOT.joinpath(*parts)))
    if not p.exists():
        raise FileNotFoundError(f"no shipped fixture {'/'.join(parts)!r}")
    return p


def load_fixture_series(name: str, train_frac: float = 0.8) -> TimeSeries:
    return load_timeseries_csv(fixture_path("timeseries", f"{name}.csv"), name, train_frac)


def load_fixture_table(name: str) -> Table:
    return load_table_csv(fixture_path("ppl", f"{name}.csv"))


def fixture_text(*parts: str) -> str:
    return fixture_path(*parts).read_text()

"""Plain-text dataset renderings for prompts, and metadata stripping.

Prompts carry the data as an aligned text table plus per-column summary
statistics. With the metadata flag off, column names are replaced by
domain-agnostic ones (x0, x1, ..., y) and any description is dropped; the
same renaming is applied to the dataset handed to the scorer so proposed
programs and the data they are fit on always agree on names.
"""

from __future__ import annotations

import numpy as np

from ..datasets import Table, TimeSeries
from ..ode.data import ODEDataset

__all__ = ["anonymize", "render_dataset"]

MAX_PROMPT_ROWS = 400


def anonymize(dataset):
    """Drop descriptive names: columns become x0..x{k-1} and y (last)."""
    if isinstance(dataset, TimeSeries):
        return TimeSeries("series", dataset.x, dataset.y, dataset.n_train)
    if isinstance(dataset, Table):
        names = list(dataset.columns)
        renamed = {}
        for i, name in enumerate(names):
            new = "y" if i == len(names) - 1 else f"x{i}"
            renamed[new] = dataset.columns[name]
        return Table(name="data", columns=renamed, metadata="")
    if isinstance(dataset, ODEDataset):
        return dataset  # state names are structural, not metadata
    raise TypeError(f"cannot anonymize {type(dataset).__name__}")


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _text_table(headers: list[str], cols: list[np.ndarray]) -> str:
    n = len(cols[0])
    clipped = n > MAX_PROMPT_ROWS
    rows = min(n, MAX_PROMPT_ROWS)
    cells = [[_fmt(float(c[i])) for c in cols] for i in range(rows)]
    widths = [
        max(len(headers[j]), max(len(cells[i][j]) for i in range(rows)))
        for j in range(len(headers))
    ]
    lines = ["  ".join(h.rjust(w) for h, w in zip(headers, widths))]
    for row in cells:
        lines.append("  ".join(v.rjust(w) for v, w in zip(row, widths)))
    if clipped:
        lines.append(f"... ({n - rows} more rows)")
    return "\n".join(lines)


def _summary(headers: list[str], cols: list[np.ndarray]) -> str:
    lines = ["column summaries (n, min, max, mean, sd):"]
    for name, c in zip(headers, cols):
        c = np.asarray(c, dtype=float)
        lines.append(
            f"  {name}: n={len(c)} min={_fmt(c.min())} max={_fmt(c.max())} "
            f"mean={_fmt(c.mean())} sd={_fmt(c.std())}"
        )
    return "\n".join(lines)


def render_dataset(dataset, metadata: bool = True) -> str:
    """Aligned text table + summary stats; metadata text only when asked."""
    caption = ""
    if isinstance(dataset, TimeSeries):
        headers = ["x", "y"] if metadata else ["x0", "y"]
        cols = [dataset.train_x, dataset.train_y]
        if metadata:
            caption = (
                f"dataset: {dataset.name}\n"
                f"(training rows shown; forecast horizon continues past "
                f"x={_fmt(float(dataset.train_x[-1]))})"
            )
    elif isinstance(dataset, Table):
        headers = list(dataset.columns)
        cols = [dataset.columns[h] for h in headers]
        if metadata:
            caption = f"dataset: {dataset.name}"
            if dataset.metadata:
                caption += "\n" + dataset.metadata.strip()
    elif isinstance(dataset, ODEDataset):
        headers = ["t", *dataset.state_names]
        cols = [dataset.train_times] + [
            dataset.train_states[:, i] for i in range(len(dataset.state_names))
        ]
        caption = (
            f"observed trajectories (training window ends at "
            f"t={_fmt(dataset.train_end)})"
        )
    else:
        raise TypeError(f"cannot render {type(dataset).__name__}")

    parts = [p for p in (caption, _text_table(headers, cols), _summary(headers, cols)) if p]
    return "\n\n".join(parts)

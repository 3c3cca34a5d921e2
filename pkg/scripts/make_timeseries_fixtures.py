"""Regenerate the synthetic univariate time-series fixtures.

airline.csv is real public-domain data (monthly international air
passenger totals, 1949-1960) and is not touched here. The other five
series are synthetic stand-ins for commercial datasets that cannot be
redistributed; each mimics the qualitative structure of its namesake
(trend, seasonality, amplitude growth) and is labeled as synthetic in
its header comment. Fixed seeds keep the files byte-stable.
"""

from __future__ import annotations

import argparse
import zlib
from pathlib import Path

import numpy as np

FIXTURE_DIR = Path(__file__).resolve().parents[1] / "src" / "boxloop" / "fixtures" / "timeseries"


def monthly(start_year: int, n: int) -> np.ndarray:
    return start_year + np.arange(n) / 12.0


def quarterly(start_year: int, n: int) -> np.ndarray:
    return start_year + np.arange(n) / 4.0


def make_beer(rng: np.random.Generator):
    # quarterly production with a saturating trend and strong seasonality
    x = quarterly(1980, 100)
    t = np.arange(100)
    trend = 410.0 + 60.0 * np.tanh(t / 40.0)
    season = 45.0 * np.sin(2.0 * np.pi * t / 4.0 + 0.6) + 12.0 * np.sin(2.0 * np.pi * t / 2.0)
    return x, trend + season + 8.0 * rng.standard_normal(100)


def make_heart(rng: np.random.Generator):
    # beat-to-beat heart rate: two slow quasi-periodic drivers, heavy noise
    x = np.arange(180) * 0.5
    y = (
        92.0
        + 5.0 * np.sin(2.0 * np.pi * x / 21.0)
        + 3.0 * np.sin(2.0 * np.pi * x / 8.5 + 1.1)
        + 1.8 * rng.standard_normal(180)
    )
    return x, y


def make_milk(rng: np.random.Generator):
    # monthly production per cow: linear trend plus annual cycle
    x = monthly(1962, 156)
    t = np.arange(156)
    y = (
        610.0
        + 1.65 * t
        + 48.0 * np.sin(2.0 * np.pi * t / 12.0 + 2.1)
        + 12.0 * np.sin(4.0 * np.pi * t / 12.0)
        + 7.0 * rng.standard_normal(156)
    )
    return x, y


def make_wine(rng: np.random.Generator):
    # monthly sales: growing trend with amplitude-growing seasonality
    x = monthly(1980, 150)
    t = np.arange(150)
    trend = 14000.0 + 55.0 * t
    amp = 1.0 + 0.006 * t
    season = amp * (2600.0 * np.sin(2.0 * np.pi * t / 12.0 + 4.0) + 900.0 * np.sin(4.0 * np.pi * t / 12.0))
    return x, trend + season + 600.0 * rng.standard_normal(150)


def make_wool(rng: np.random.Generator):
    # quarterly production: slow cycle over a gentle declining trend
    x = quarterly(1965, 120)
    t = np.arange(120)
    y = (
        5200.0
        - 6.0 * t
        + 420.0 * np.sin(2.0 * np.pi * t / 22.0)
        + 260.0 * np.sin(2.0 * np.pi * t / 4.0 + 0.8)
        + 120.0 * rng.standard_normal(120)
    )
    return x, y


MAKERS = {
    "beer": make_beer,
    "heart": make_heart,
    "milk": make_milk,
    "wine": make_wine,
    "wool": make_wool,
}


def write_series(name: str, x, y, out_dir: Path) -> Path:
    path = out_dir / f"{name}.csv"
    lines = [
        f"# synthetic stand-in for the {name} series; generated by scripts/make_timeseries_fixtures.py",
        "x,y",
    ]
    lines += [f"{repr(float(a))},{repr(float(b))}" for a, b in zip(x, y)]
    path.write_text("\n".join(lines) + "\n")
    return path


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", type=Path, default=FIXTURE_DIR)
    ap.add_argument("--seed", type=int, default=20240801)
    args = ap.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)
    for name, maker in sorted(MAKERS.items()):
        key = zlib.crc32(name.encode())  # stable across runs, unlike hash()
        rng = np.random.default_rng(np.random.SeedSequence(entropy=args.seed, spawn_key=(key,)))
        x, y = maker(rng)
        path = write_series(name, x, y, args.out_dir)
        print(f"wrote {path} ({len(x)} rows)")


if __name__ == "__main__":
    main()

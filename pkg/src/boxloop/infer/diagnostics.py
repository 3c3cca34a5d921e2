"""Convergence diagnostics: rank-normalized split R-hat and bulk ESS.

Both operate on draws shaped [chain, draw] per parameter. Chains are
split in half (so trends inside a chain register as between-chain
variance), pooled ranks are mapped through the normal quantile function,
and the classic estimators run on the transformed draws. Bulk ESS uses
the initial-monotone-positive-sequence truncation of the autocorrelation
sum estimated across chains.

Degenerate inputs (constant draws) yield NaN, never an exception; the
caller decides how to gate on that.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri
from scipy.stats import rankdata


def _split_chains(draws: np.ndarray) -> np.ndarray:
    c, n = draws.shape
    half = n // 2
    return np.vstack([draws[:, :half], draws[:, half : 2 * half]])


def _rank_normalize(draws: np.ndarray) -> np.ndarray:
    r = rankdata(draws, method="average").reshape(draws.shape)
    return ndtri((r - 3.0 / 8.0) / (draws.size + 0.25))


def _basic_rhat(z: np.ndarray) -> float:
    m, n = z.shape
    if n < 2:
        return float("nan")
    chain_means = z.mean(axis=1)
    w = z.var(axis=1, ddof=1).mean()
    b = n * chain_means.var(ddof=1)
    if w <= 0:
        return float("nan")
    var_plus = (n - 1) / n * w + b / n
    return float(np.sqrt(var_plus / w))


def rhat(draws) -> float:
    """Rank-normalized split R-hat: max of the bulk and tail-folded variants."""
    draws = np.asarray(draws, float)
    if draws.ndim != 2 or draws.shape[0] < 2:
        raise ValueError("rhat needs draws shaped [chain, draw] with >= 2 chains")
    if np.ptp(draws) == 0 or not np.all(np.isfinite(draws)):
        return float("nan")
    split = _split_chains(draws)
    bulk = _basic_rhat(_rank_normalize(split))
    folded = _basic_rhat(_rank_normalize(np.abs(split - np.median(split))))
    return max(bulk, folded)


def _autocov(z: np.ndarray) -> np.ndarray:
    """Biased (1/n) autocovariance per chain via FFT, shape [chain, draw]."""
    m, n = z.shape
    size = 1
    while size < 2 * n:
        size <<= 1
    centered = z - z.mean(axis=1, keepdims=True)
    f = np.fft.rfft(centered, size, axis=1)
    acov = np.fft.irfft(f * np.conj(f), size, axis=1)[:, :n].real
    return acov / n


def bulk_ess(draws) -> float:
    """Effective sample size on rank-normalized split chains (Geyer truncation)."""
    draws = np.asarray(draws, float)
    if draws.ndim != 2 or draws.shape[0] < 2:
        raise ValueError("bulk_ess needs draws shaped [chain, draw] with >= 2 chains")
    if np.ptp(draws) == 0 or not np.all(np.isfinite(draws)):
        return float("nan")
    z = _rank_normalize(_split_chains(draws))
    m, n = z.shape
    if n < 4:
        return float("nan")

    acov = _autocov(z)
    chain_means = z.mean(axis=1)
    mean_var = acov[:, 0].mean() * n / (n - 1.0)
    var_plus = mean_var * (n - 1.0) / n + chain_means.var(ddof=1)
    if var_plus <= 0:
        return float("nan")

    # Geyer pairs P_k = rho[2k] + rho[2k+1]: sum pairs while positive, then
    # enforce a nonincreasing pair sequence; tau = -1 + 2*sum(pairs)
    rho = 1.0 - (mean_var - acov.mean(axis=0)) / var_plus
    rho[0] = 1.0
    pair_sums = []
    for k in range(n // 2):
        s = rho[2 * k] + rho[2 * k + 1]
        if s <= 0:
            break
        pair_sums.append(s)
    if not pair_sums:
        return float(m * n)
    tau = -1.0 + 2.0 * float(np.sum(np.minimum.accumulate(pair_sums)))
    tau = max(tau, 1.0 / np.log10(m * n))
    return float(m * n / tau)

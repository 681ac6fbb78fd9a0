"""Pure-numpy kernel implementations.

Vectorized where the memory cost is a small multiple of the input; the
rebalance path keeps its sequential dependence as a Python loop over
periods with vectorized per-period math.
"""

from __future__ import annotations

import numpy as np


def shapley_sweep(
    values: np.ndarray, weights: np.ndarray, pc: np.ndarray, n: int
) -> np.ndarray:
    size, m = values.shape
    masks = np.arange(size, dtype=np.int64)
    out = np.zeros((n, m), dtype=np.float64)
    for i in range(n):
        off = masks[(masks >> i) & 1 == 0]
        lifts = values[off | (1 << i)] - values[off]
        out[i] = weights[pc[off]] @ lifts
    return out


def permutation_walk(values: np.ndarray, perms: np.ndarray) -> np.ndarray:
    n_paths, n = perms.shape
    m = values.shape[1]
    bits = (np.int64(1) << perms).astype(np.int64)
    # Bits along a permutation row are disjoint, so cumulative sum == cumulative OR.
    prefixes = np.concatenate(
        [np.zeros((n_paths, 1), dtype=np.int64), np.cumsum(bits, axis=1)], axis=1
    )
    lifts = values[prefixes[:, 1:]] - values[prefixes[:, :-1]]  # (paths, n, m)
    out = np.zeros((n, m), dtype=np.float64)
    np.add.at(out, perms.reshape(-1), lifts.reshape(-1, m))
    return out


def rebalance_path(
    bench0: np.ndarray,
    rets: np.ndarray,
    delta: np.ndarray,
    beta: float,
    smooth: bool,
) -> tuple[np.ndarray, np.ndarray]:
    periods = rets.shape[0]
    active = np.empty(periods, dtype=np.float64)
    turnover = np.empty(periods, dtype=np.float64)
    bench = bench0.copy()
    holdings = bench0.copy()
    anchor = bench0.copy()  # previous post-trade target (un-drifted)
    for t in range(periods):
        target = bench + delta[t]
        if smooth:
            target = (1.0 - beta) * anchor + beta * target
        turnover[t] = np.sum(np.abs(target - holdings))
        active[t] = (target - bench) @ rets[t]
        anchor = target
        # One drift expression for holdings and benchmark: with delta == 0
        # and no smoothing they stay bitwise equal, so turnover is exactly 0.
        holdings = target * (1.0 + rets[t]) / (1.0 + target @ rets[t])
        bench = bench * (1.0 + rets[t]) / (1.0 + bench @ rets[t])
    return active, turnover

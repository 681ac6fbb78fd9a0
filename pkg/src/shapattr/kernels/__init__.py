"""Numeric kernels behind the attribution methods.

Two interchangeable backends compute identical quantities:

* ``numba``: @njit-compiled loops (default when numba imports cleanly).
* ``numpy``: pure-numpy fallback, no compilation step.

Selection: the ``SHAPATTR_KERNELS`` environment variable (``numba`` or
``numpy``) pins the backend at import; unset means numba when available.
``use_backend`` switches at runtime (tests, benchmarks).  Both backends are
deterministic for fixed inputs; they may differ from each other in the last
float ulp because summation orders differ.  No kernel draws random numbers:
sampling happens in numpy outside, so results never depend on the backend's
RNG state.
"""

from __future__ import annotations

import os

import numpy as np

from . import _numpy_backend

__all__ = [
    "available_backends",
    "active_backend",
    "use_backend",
    "popcounts",
    "shapley_sweep",
    "permutation_walk",
    "rebalance_path",
    "warm_up",
]

_IMPLS = {"numpy": _numpy_backend}
try:
    from . import _numba_backend

    _IMPLS["numba"] = _numba_backend
except ImportError:
    _numba_backend = None

_ENV_VAR = "SHAPATTR_KERNELS"


def _initial_backend() -> str:
    requested = os.environ.get(_ENV_VAR, "").strip().lower()
    if not requested:
        return "numba" if "numba" in _IMPLS else "numpy"
    if requested not in ("numba", "numpy"):
        raise ValueError(f"{_ENV_VAR} must be 'numba' or 'numpy', got {requested!r}")
    if requested not in _IMPLS:
        raise ImportError(f"{_ENV_VAR}={requested} but numba is not importable")
    return requested


_active = _initial_backend()


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_IMPLS))


def active_backend() -> str:
    return _active


def use_backend(name: str) -> str:
    """Switch backend; returns the previous one so callers can restore it."""
    global _active
    if name not in _IMPLS:
        raise ValueError(f"unknown backend {name!r}; available: {available_backends()}")
    previous = _active
    _active = name
    return previous


def popcounts(n: int) -> np.ndarray:
    """Active-feature counts for every mask 0..2^n-1 (int64)."""
    pc = np.zeros(1, dtype=np.int64)
    for _ in range(n):
        pc = np.concatenate([pc, pc + 1])
    return pc


def shapley_sweep(
    values: np.ndarray, weights: np.ndarray, pc: np.ndarray, n: int
) -> np.ndarray:
    """Weighted lift sums over every edge of the configuration hypercube.

    Args:
        values: (2^n, n_metrics) metric values in mask order.
        weights: (n,) or longer; weights[k] applied to lifts taken at
            configurations with k active features.
        pc: (2^n,) active-feature counts (see :func:`popcounts`).
        n: feature count.

    Returns:
        (n, n_metrics) array; row i is the weighted sum of
        values[x | 1<<i] - values[x] over all x with bit i off.
    """
    values = np.ascontiguousarray(values, dtype=np.float64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    pc = np.ascontiguousarray(pc, dtype=np.int64)
    if values.ndim != 2 or values.shape[0] != (1 << n):
        raise ValueError(f"values must be (2^{n}, m), got {values.shape}")
    if weights.shape[0] < n:
        raise ValueError(f"need at least {n} weights, got {weights.shape[0]}")
    return _IMPLS[_active].shapley_sweep(values, weights, pc, n)


def permutation_walk(values: np.ndarray, perms: np.ndarray) -> np.ndarray:
    """Sum of sequential attributions along many permutation paths.

    Args:
        values: (2^n, n_metrics) metric values in mask order.
        perms: (n_paths, n) permutations of 0..n-1, one path per row.

    Returns:
        (n, n_metrics) sums of per-path lifts credited to each feature;
        divide by n_paths for the average.
    """
    values = np.ascontiguousarray(values, dtype=np.float64)
    perms = np.ascontiguousarray(perms, dtype=np.int64)
    n = perms.shape[1]
    if values.shape[0] != (1 << n):
        raise ValueError(f"values must be (2^{n}, m), got {values.shape}")
    return _IMPLS[_active].permutation_walk(values, perms)


def rebalance_path(
    bench0: np.ndarray,
    rets: np.ndarray,
    delta: np.ndarray,
    beta: float,
    smooth: bool,
) -> tuple[np.ndarray, np.ndarray]:
    """Run one holdings path against a buy-and-hold benchmark.

    Per period t: trade to target bench_t + delta[t] (optionally smoothed
    toward the previous post-trade target with weight beta), record turnover
    against the drifted previous holdings, earn (h - bench_t) . rets[t],
    then drift holdings and benchmark by rets[t].  Benchmark and holdings
    share one drift expression inside the kernel, so with delta == 0 and no
    smoothing the path trades nothing, exactly, on either backend.

    Returns:
        (active_returns, turnover): two (T,) arrays.
    """
    bench0 = np.ascontiguousarray(bench0, dtype=np.float64)
    rets = np.ascontiguousarray(rets, dtype=np.float64)
    delta = np.ascontiguousarray(delta, dtype=np.float64)
    if bench0.ndim != 1 or rets.shape != delta.shape or rets.shape[1:] != bench0.shape:
        raise ValueError("need bench0 (A,), rets (T, A), delta (T, A)")
    return _IMPLS[_active].rebalance_path(bench0, rets, delta, float(beta), bool(smooth))


def warm_up() -> None:
    """Run every kernel once on tiny inputs (JIT compile happens here, not
    inside timed or latency-sensitive paths)."""
    values = np.arange(8.0).reshape(4, 2)
    shapley_sweep(values, np.array([0.5, 0.5, 0.0]), popcounts(2), 2)
    permutation_walk(values, np.array([[0, 1], [1, 0]]))
    rebalance_path(np.full(2, 0.5), np.zeros((3, 2)), np.zeros((3, 2)), 0.25, True)

"""Hot dynamic-programming kernels with two interchangeable backends.

The forward/backward recurrences over the blank-extended CTC state lattice
dominate runtime (every joint-decoder candidate is rescored with a full
forward pass), so they are compiled with numba's ``@njit`` when available.
A pure-numpy implementation of the same recurrences, vectorized over the
state axis, serves as the fallback and as a cross-check.

Backend selection: the ``HANJOINT_NUMBA`` environment variable.  ``0`` /
``off`` / ``numpy`` forces the numpy path; anything else (default) uses
numba when it imports.  Both backends agree to float rounding (~1 ulp per
log-add); see benchmarks/bench_kernels.py for the speed comparison.

Conventions: ``lp_ext[t, s]`` is the frame-t log-probability of extended
state s (blank, y1, blank, ..., yL, blank); ``skip[s]`` is True where the
s-2 -> s transition is legal (state s is a non-blank different from state
s-2).  ``alpha[t, s]`` includes the emission at t, ``beta[t, s]`` covers
frames t+1.. only, so alpha + beta sums to the total log-probability at
every frame.
"""

from __future__ import annotations

import math
import os

import numpy as np

NEG_INF = -np.inf


def _numba_requested() -> bool:
    flag = os.environ.get("HANJOINT_NUMBA", "auto").strip().lower()
    return flag not in ("0", "false", "no", "off", "numpy")


# ---------------------------------------------------------------------------
# pure-numpy backend (vectorized over the state axis)
# ---------------------------------------------------------------------------

def _logsumexp3(a, b, c):
    m = np.maximum(np.maximum(a, b), c)
    safe = np.where(np.isfinite(m), m, 0.0)
    total = np.exp(a - safe) + np.exp(b - safe) + np.exp(c - safe)
    with np.errstate(divide="ignore"):
        return np.where(np.isfinite(m), safe + np.log(total), NEG_INF)


def ctc_alpha_numpy(lp_ext: np.ndarray, skip: np.ndarray) -> np.ndarray:
    F, S = lp_ext.shape
    alpha = np.full((F, S), NEG_INF)
    alpha[0, 0] = lp_ext[0, 0]
    if S > 1:
        alpha[0, 1] = lp_ext[0, 1]
    step = np.empty(S)
    jump = np.empty(S)
    for t in range(1, F):
        prev = alpha[t - 1]
        step[0] = NEG_INF
        step[1:] = prev[:-1]
        jump[:2] = NEG_INF
        jump[2:] = np.where(skip[2:], prev[:-2], NEG_INF)
        alpha[t] = _logsumexp3(prev, step, jump) + lp_ext[t]
    return alpha


def ctc_beta_numpy(lp_ext: np.ndarray, skip: np.ndarray) -> np.ndarray:
    F, S = lp_ext.shape
    beta = np.full((F, S), NEG_INF)
    beta[F - 1, S - 1] = 0.0
    if S > 1:
        beta[F - 1, S - 2] = 0.0
    step = np.empty(S)
    jump = np.empty(S)
    for t in range(F - 2, -1, -1):
        nxt = beta[t + 1] + lp_ext[t + 1]
        step[:-1] = nxt[1:]
        step[-1] = NEG_INF
        jump[:-2] = np.where(skip[2:], nxt[2:], NEG_INF)
        jump[-2:] = NEG_INF
        beta[t] = _logsumexp3(nxt, step, jump)
    return beta


# ---------------------------------------------------------------------------
# numba backend
# ---------------------------------------------------------------------------

def _ctc_alpha_loops(lp_ext, skip):
    F, S = lp_ext.shape
    alpha = np.full((F, S), NEG_INF)
    alpha[0, 0] = lp_ext[0, 0]
    if S > 1:
        alpha[0, 1] = lp_ext[0, 1]
    for t in range(1, F):
        for s in range(S):
            acc = alpha[t - 1, s]
            if s >= 1:
                acc = _logadd(acc, alpha[t - 1, s - 1])
            if s >= 2 and skip[s]:
                acc = _logadd(acc, alpha[t - 1, s - 2])
            alpha[t, s] = acc + lp_ext[t, s]
    return alpha


def _ctc_beta_loops(lp_ext, skip):
    F, S = lp_ext.shape
    beta = np.full((F, S), NEG_INF)
    beta[F - 1, S - 1] = 0.0
    if S > 1:
        beta[F - 1, S - 2] = 0.0
    for t in range(F - 2, -1, -1):
        for s in range(S):
            acc = beta[t + 1, s] + lp_ext[t + 1, s]
            if s + 1 < S:
                acc = _logadd(acc, beta[t + 1, s + 1] + lp_ext[t + 1, s + 1])
            if s + 2 < S and skip[s + 2]:
                acc = _logadd(acc, beta[t + 1, s + 2] + lp_ext[t + 1, s + 2])
            beta[t, s] = acc
    return beta


def _logadd_py(a: float, b: float) -> float:
    if a < b:
        a, b = b, a
    if b == NEG_INF:
        return a
    return a + math.log1p(math.exp(b - a))


_logadd = _logadd_py

BACKEND = "numpy"
ctc_alpha = ctc_alpha_numpy
ctc_beta = ctc_beta_numpy
ctc_alpha_numba = None
ctc_beta_numba = None

if _numba_requested():
    try:
        from numba import njit
    except ImportError:
        pass
    else:
        _logadd = njit(cache=True, nogil=True, inline="always")(_logadd_py)
        ctc_alpha_numba = njit(cache=True, nogil=True)(_ctc_alpha_loops)
        ctc_beta_numba = njit(cache=True, nogil=True)(_ctc_beta_loops)
        ctc_alpha = ctc_alpha_numba
        ctc_beta = ctc_beta_numba
        BACKEND = "numba"


def backend() -> str:
    """Name of the active kernel backend: ``numba`` or ``numpy``."""
    return BACKEND


def warmup() -> None:
    """Trigger JIT compilation so later calls run at full speed."""
    lp = np.log(np.full((2, 3), 1.0 / 3.0))
    skip = np.array([False, False, True])
    ctc_alpha(lp, skip)
    ctc_beta(lp, skip)

# coalition_utils/erlang.py
"""Erlang-B blocking probability and its inverse in offered load."""

import math

import numpy as np
from scipy.optimize import brentq

# brentq refuses a relative tolerance below four machine epsilons
_RTOL = 4 * np.finfo(float).eps
_XTOL = 1e-15
_MAX_STEPS = 10_000


def blocking_probability(m: int, a: float) -> float:
    """
    Erlang-B blocking probability of an M/M/m/m loss system.

    Args:
        m: number of servers (m >= 0)
        a: offered load in erlangs (a >= 0)

    Returns:
        float: B(m, a) in [0, 1]
    """
    if m < 0 or a < 0:
        raise ValueError(f"Erlang-B needs m >= 0 and a >= 0, got m={m}, a={a}")
    # B(k) = a B(k-1) / (k + a B(k-1)), the reciprocal form 1/B(k) = 1 + (k/a)/B(k-1)
    # rewritten so that nothing overflows for large m
    b = 1.0
    for k in range(1, int(m) + 1):
        b = a * b / (k + a * b)
    return b


def log_blocking_probability(m: int, a: float) -> float:
    """``log B(m, a)`` for ``a > 0``, finite even where B itself underflows."""
    if m < 0 or not a > 0:
        raise ValueError(f"log Erlang-B needs m >= 0 and a > 0, got m={m}, a={a}")
    log_a = math.log(a)
    # log(1/B(k)) = log(1 + (k/a) / B(k-1)), accumulated as a log-sum
    log_inv = 0.0
    for k in range(1, int(m) + 1):
        x = math.log(k) - log_a + log_inv
        log_inv = x + math.log1p(math.exp(-x)) if x > 0 else math.log1p(math.exp(x))
    return -log_inv


def log_inverse_load(m: int, log_b: float) -> float:
    """``log a`` with ``log B(m, a) == log_b``."""
    if m < 1:
        raise ValueError(f"inverse_load needs at least one server, got m={m}")
    if not log_b < 0.0:
        raise ValueError(f"Target log blocking must be negative, got {log_b}")

    def gap(t):
        return log_blocking_probability(m, math.exp(t)) - log_b

    # B(m, a) <= a^m / m!, so this point never overshoots the target
    lo = (log_b + math.lgamma(m + 1)) / m
    hi = max(lo, math.log(m)) + 1.0
    for _ in range(_MAX_STEPS):
        if gap(hi) >= 0:
            break
        hi += 1.0
    else:
        raise ValueError(f"Could not bracket offered load for m={m}, log b={log_b}")
    if gap(lo) >= 0:
        return lo
    return brentq(gap, lo, hi, xtol=_XTOL, rtol=_RTOL, maxiter=500)


def inverse_load(m: int, b_target: float) -> float:
    """Offered load ``a`` with ``B(m, a) == b_target``."""
    if not 0.0 < b_target < 1.0:
        raise ValueError(f"Target blocking must lie in (0, 1), got {b_target}")
    return math.exp(log_inverse_load(m, math.log(b_target)))

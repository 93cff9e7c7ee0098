"""Seeded random walks and empirical tail frequencies.

Randomness is counter based: stream ``k`` of master seed ``s`` has key
``derive_seed(s, k)`` and its ``j``-th uniform is a SplitMix64 hash of
``key + (j + 1) * gamma``. Any draw can be computed independently of every
other, so a vectorized batch of walks reproduces the walks sampled one at a
time with :func:`sample_walk_discrete` and :func:`sample_walk_continuous`,
whatever the chunking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .chain_core import ChainModel, Generator, generator_stationary
from .errors import AbsorbingState
from .mgf_bounds import WeightSchedule, crosses, tail_sign

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


def _mix64(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def derive_seed(seed: int, index) -> np.ndarray | int:
    """Key of stream ``index`` under master ``seed`` (vectorized over index)."""
    base = _mix64(np.array([seed & _MASK64], dtype=np.uint64))[0]
    idx = np.asarray(index, dtype=np.uint64)
    with np.errstate(over="ignore"):
        keys = _mix64(base + (idx + np.uint64(1)) * _GAMMA)
    return int(keys) if keys.ndim == 0 else keys


def uniforms(keys, draw: int) -> np.ndarray:
    """The ``draw``-th uniform in [0, 1) of each stream."""
    keys = np.asarray(keys, dtype=np.uint64)
    with np.errstate(over="ignore"):
        bits = _mix64(keys + np.uint64(draw + 1) * _GAMMA)
    return (bits >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def _pick(cum: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF choice per row; zero-probability columns are never chosen."""
    return (u[:, None] >= cum).sum(axis=1)


def _cumulative(rows: np.ndarray) -> np.ndarray:
    cum = np.cumsum(rows, axis=-1)
    cum[..., -1] = 1.0
    return cum


@dataclass(frozen=True, eq=False)
class WalkSample:
    states: np.ndarray  # state per step (discrete) or (state, holding time) rows
    total_weight: float
    seed: int


@dataclass(frozen=True)
class TailEstimate:
    threshold: float
    hits: int
    samples: int
    p_hat: float
    ci_low: float
    ci_high: float

    @property
    def stderr(self) -> float:
        return math.sqrt(self.p_hat * (1 - self.p_hat) / self.samples)

    def as_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "hits": self.hits,
            "samples": self.samples,
            "p_hat": self.p_hat,
            "stderr": self.stderr,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
        }


def tail_estimate(hits: int, samples: int, threshold: float) -> TailEstimate:
    """95% interval: normal approximation, or Clopper-Pearson below 10 hits."""
    p = hits / samples
    if hits < 10:
        ci = stats.binomtest(hits, samples).proportion_ci(0.95, method="exact")
        low, high = ci.low, ci.high
    else:
        half = 1.959963984540054 * math.sqrt(p * (1 - p) / samples)
        low, high = max(0.0, p - half), min(1.0, p + half)
    return TailEstimate(threshold, hits, samples, p, min(low, p), max(high, p))


# --- discrete time -------------------------------------------------------------


def _run_discrete(chain, phi, schedule, keys, threshold=None, tail="upper"):
    """Simulate one walk per key.

    Without a threshold returns (states, totals). With one, walks whose
    outcome is already decided are dropped early and a boolean hit array is
    returned instead.
    """
    m = len(keys)
    t = schedule.t
    f = schedule.functions
    cum_rows = _cumulative(chain.rows)
    state = _pick(_cumulative(np.asarray(phi, dtype=float))[None, :], uniforms(keys, 0))
    total = f[0, state].copy()
    if threshold is None:
        path = np.empty((m, t), dtype=np.int64)
        path[:, 0] = state
        for j in range(1, t):
            state = _pick(cum_rows[state], uniforms(keys, j))
            path[:, j] = state
            total += f[j, state]
        return path, total

    # Largest weight still obtainable after step j, for early decisions.
    remaining = np.concatenate([np.cumsum(f.max(axis=1)[::-1])[::-1][1:], [0.0]])
    hit = np.zeros(m, dtype=bool)
    alive = np.arange(m)
    upper = tail_sign(tail) > 0
    slack = 1e-9 * max(1.0, abs(threshold))
    for j in range(t):
        if j > 0:
            state = _pick(cum_rows[state], uniforms(keys[alive], j))
            total += f[j, state]
        if upper:
            done_hit = total >= threshold - slack
            done_miss = total + remaining[j] < threshold - slack
        else:
            done_hit = total + remaining[j] <= threshold + slack
            done_miss = total > threshold + slack
        hit[alive[done_hit]] = True
        keep = ~(done_hit | done_miss)
        alive, state, total = alive[keep], state[keep], total[keep]
        if alive.size == 0:
            break
    return hit


def sample_walk_discrete(chain: ChainModel, phi, schedule: WeightSchedule, seed: int) -> WalkSample:
    """One walk V_1 ~ phi, V_{i+1} ~ M[V_i], with X = sum_i f_i(V_i)."""
    keys = np.array([seed & _MASK64], dtype=np.uint64)
    path, total = _run_discrete(chain, phi, schedule, keys)
    return WalkSample(path[0], float(total[0]), int(keys[0]))


def sample_totals_discrete(chain: ChainModel, phi, schedule: WeightSchedule, samples: int,
                           seed: int) -> np.ndarray:
    keys = derive_seed(seed, np.arange(samples))
    return _run_discrete(chain, phi, schedule, np.atleast_1d(keys))[1]


# --- continuous time -----------------------------------------------------------


def _jump_structure(gen: Generator):
    rates = -np.diag(gen.rates)
    if np.any(rates <= 0.0):
        raise AbsorbingState(f"state {int(np.argmin(rates)) + 1} has no outgoing rate")
    jumps = gen.rates / rates[:, None]
    np.fill_diagonal(jumps, 0.0)
    return rates, _cumulative(jumps)


def _run_continuous(gen, phi, f, horizon, keys, record=False):
    """Jump-chain simulation. Draw 0 picks the start, then two draws per jump."""
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    rates, cum_jumps = _jump_structure(gen)
    f = np.asarray(f, dtype=float)
    m = len(keys)
    state = _pick(_cumulative(np.asarray(phi, dtype=float))[None, :], uniforms(keys, 0))
    clock = np.zeros(m)
    total = np.zeros(m)
    alive = np.arange(m)
    history = [[] for _ in range(m)] if record else None
    k = 0
    while alive.size:
        hold = -np.log1p(-uniforms(keys[alive], 1 + 2 * k)) / rates[state]
        left = horizon - clock[alive]
        going = hold < left
        spent = np.where(going, hold, left)
        total[alive] += f[state] * spent
        clock[alive] += spent
        if record:
            for w, s, h in zip(alive, state, spent):
                history[w].append((int(s), float(h)))
        nxt = _pick(cum_jumps[state[going]], uniforms(keys[alive[going]], 2 + 2 * k))
        alive, state = alive[going], nxt
        k += 1
    return total, history


def sample_walk_continuous(gen: Generator, phi, f, horizon: float, seed: int) -> WalkSample:
    """One continuous-time walk up to ``horizon``; X = integral of f(v_s) ds."""
    keys = np.array([seed & _MASK64], dtype=np.uint64)
    total, history = _run_continuous(gen, phi, f, horizon, keys, record=True)
    return WalkSample(np.array(history[0]), float(total[0]), int(keys[0]))


def sample_totals_continuous(gen: Generator, phi, f, horizon: float, samples: int,
                             seed: int) -> np.ndarray:
    keys = np.atleast_1d(derive_seed(seed, np.arange(samples)))
    return _run_continuous(gen, phi, f, horizon, keys)[0]


# --- tails -----------------------------------------------------------------------


def empirical_tail(model, phi, weights, delta: float, samples: int, seed: int,
                   tail: str = "upper", horizon: float | None = None,
                   chunk: int = 200_000) -> TailEstimate:
    """Empirical Pr[X >= (1 + delta) mu t] (upper) or Pr[X <= (1 - delta) mu t].

    ``model`` is a ChainModel with a WeightSchedule, or a Generator with a
    time-homogeneous weight vector and a ``horizon``. Sample ``k`` always uses
    stream ``derive_seed(seed, k)``; ``chunk`` only bounds memory.
    """
    if samples < 1:
        raise ValueError("samples must be positive")
    sign = tail_sign(tail)
    hits = 0
    if isinstance(model, Generator):
        if horizon is None:
            raise ValueError("continuous-time tails need a horizon")
        f = np.asarray(weights, dtype=float)
        mu = float(f @ generator_stationary(model))
        threshold = (1 + sign * delta) * mu * horizon
        for start in range(0, samples, chunk):
            keys = np.atleast_1d(derive_seed(seed, np.arange(start, min(samples, start + chunk))))
            totals = _run_continuous(model, phi, f, horizon, keys)[0]
            hits += int(crosses(totals, threshold, tail).sum())
    else:
        threshold = weights.threshold(delta, tail)
        for start in range(0, samples, chunk):
            keys = np.atleast_1d(derive_seed(seed, np.arange(start, min(samples, start + chunk))))
            hits += int(_run_discrete(model, phi, weights, keys, threshold, tail).sum())
    return tail_estimate(hits, samples, threshold)

"""Finite chains, stationary distributions, pi-kernel geometry and e^{t*Lambda}.

Vectors are plain 1-d numpy arrays. A "probability vector" is validated with
:func:`as_distribution`; general vectors in the pi-kernel space need no
validation beyond finiteness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np
from scipy import stats

from .errors import (
    InvalidChain,
    InvalidGenerator,
    NoConvergence,
    NonErgodic,
    ZeroStationaryMass,
)

ROW_TOL = 1e-12
# Rows off by more than this are rejected rather than renormalized.
RENORMALIZE_TOL = 1e-9
POWER_ITERATION_CAP = 1_000_000


class ErgodicityCheck(NamedTuple):
    ergodic: bool
    diagnostic: str


def _normalize_rows(m: np.ndarray) -> np.ndarray:
    sums = m.sum(axis=1)
    for i, s in enumerate(sums):
        if abs(s - 1.0) > RENORMALIZE_TOL:
            raise InvalidChain(f"row {i + 1} sums to {s:.12g}", row=i)
    # Leave rows that are already stochastic to rounding untouched so that
    # serializing and re-reading a chain is bit-exact.
    n = m.shape[1]
    drift = np.abs(sums - 1.0) > 4 * n * np.finfo(float).eps
    if drift.any():
        m[drift] /= sums[drift, None]
    return np.clip(m, 0.0, 1.0)


@dataclass(frozen=True, eq=False)
class ChainModel:
    """Row-stochastic transition matrix of a finite Markov chain."""

    rows: np.ndarray

    def __post_init__(self):
        m = np.array(self.rows, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidChain(f"transition matrix must be square, got shape {m.shape}")
        if m.shape[0] < 2:
            raise InvalidChain("a chain needs at least 2 states")
        if not np.all(np.isfinite(m)):
            raise InvalidChain("transition matrix has non-finite entries")
        bad = np.argwhere((m < 0.0) | (m > 1.0 + ROW_TOL))
        if bad.size:
            i, j = bad[0]
            raise InvalidChain(f"entry ({i + 1}, {j + 1}) = {m[i, j]!r} is outside [0, 1]", row=int(i))
        m = _normalize_rows(m)
        m.setflags(write=False)
        object.__setattr__(self, "rows", m)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @cached_property
    def ergodicity(self) -> ErgodicityCheck:
        return check_ergodic(self)

    def step(self, x: np.ndarray) -> np.ndarray:
        """Row-vector action x -> xM."""
        return np.asarray(x, dtype=float) @ self.rows

    def power(self, t: int) -> "ChainModel":
        return ChainModel(np.linalg.matrix_power(self.rows, int(t)))


@dataclass(frozen=True, eq=False)
class Generator:
    """Rate matrix of a continuous-time chain (rows sum to zero)."""

    rates: np.ndarray

    def __post_init__(self):
        q = np.array(self.rates, dtype=float)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise InvalidGenerator(f"generator must be square, got shape {q.shape}")
        if q.shape[0] < 2:
            raise InvalidGenerator("a generator needs at least 2 states")
        if not np.all(np.isfinite(q)):
            raise InvalidGenerator("generator has non-finite entries")
        off = q - np.diag(np.diag(q))
        bad = np.argwhere(off < 0.0)
        if bad.size:
            i, j = bad[0]
            raise InvalidGenerator(f"off-diagonal rate ({i + 1}, {j + 1}) = {q[i, j]!r} is negative",
                                   row=int(i))
        scale = max(1.0, float(np.abs(q).max()))
        for i, s in enumerate(q.sum(axis=1)):
            if abs(s) > ROW_TOL * scale:
                raise InvalidGenerator(f"row {i + 1} sums to {s:.12g}, expected 0", row=i)
        q.setflags(write=False)
        object.__setattr__(self, "rates", q)

    @property
    def n(self) -> int:
        return self.rates.shape[0]

    @property
    def max_rate(self) -> float:
        return float(np.max(-np.diag(self.rates)))

    def uniformized(self, q: float | None = None) -> ChainModel:
        """Uniformized chain I + Lambda/q; shares pi with the generator.

        The default q is twice the largest exit rate, which keeps every
        diagonal entry at least 1/2 and so the chain aperiodic.
        """
        if q is None:
            q = 2.0 * self.max_rate
        if q == 0.0:
            return ChainModel(np.eye(self.n))
        return ChainModel(np.clip(np.eye(self.n) + self.rates / q, 0.0, 1.0))


def as_distribution(x, n: int | None = None) -> np.ndarray:
    """Validate and return x as a probability vector."""
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise ValueError("probability vector must be 1-d")
    if n is not None and v.shape[0] != n:
        raise ValueError(f"expected length {n}, got {v.shape[0]}")
    if np.any(v < 0.0) or not np.all(np.isfinite(v)):
        raise ValueError("probability vector has negative or non-finite entries")
    if abs(v.sum() - 1.0) > ROW_TOL * max(1, v.shape[0]):
        raise ValueError(f"probability vector sums to {v.sum():.17g}")
    return v


def point_mass(n: int, i: int) -> np.ndarray:
    e = np.zeros(n)
    e[i] = 1.0
    return e


def check_ergodic(chain: ChainModel) -> ErgodicityCheck:
    """Strong connectivity plus aperiodicity of the support graph."""
    support = chain.rows > 0.0
    n = chain.n

    def reach(adj):
        seen = np.zeros(n, dtype=bool)
        seen[0] = True
        frontier = [0]
        while frontier:
            nxt = np.flatnonzero(adj[frontier].any(axis=0) & ~seen)
            seen[nxt] = True
            frontier = list(nxt)
        return seen

    if not (reach(support).all() and reach(support.T).all()):
        return ErgodicityCheck(False, "not irreducible")

    # BFS levels; the period is the gcd of level[u] + 1 - level[v] over edges.
    level = np.full(n, -1)
    level[0] = 0
    frontier = [0]
    while frontier:
        new = []
        for u in frontier:
            for v in np.flatnonzero(support[u]):
                if level[v] < 0:
                    level[v] = level[u] + 1
                    new.append(v)
        frontier = new
    period = 0
    for u, v in np.argwhere(support):
        period = math.gcd(period, int(abs(level[u] + 1 - level[v])))
        if period == 1:
            return ErgodicityCheck(True, "ergodic")
    return ErgodicityCheck(False, f"periodic, period {period}")


def stationary_residual(chain: ChainModel, pi: np.ndarray) -> float:
    return float(np.abs(chain.step(pi) - pi).sum())


def stationary_distribution(
    chain: ChainModel, tol: float = 1e-12, max_iter: int = POWER_ITERATION_CAP
) -> np.ndarray:
    """Stationary distribution by power iteration, falling back to a linear solve.

    The iteration is abandoned early when the L1 residual stops shrinking
    over a window of steps, so slowly mixing chains go straight to the solve.
    """
    diag = chain.ergodicity
    if not diag.ergodic:
        raise NonErgodic(diag.diagnostic)
    n = chain.n
    m = chain.rows
    pi = np.full(n, 1.0 / n)
    window = 500
    best = math.inf
    for k in range(max_iter):
        nxt = pi @ m
        nxt /= nxt.sum()
        res = float(np.abs(nxt - pi).sum())
        pi = nxt
        if res <= tol:
            return pi
        if k % window == window - 1:
            if res > 0.5 * best:
                break
            best = res

    a = m.T - np.eye(n)
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        sol = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(f"linear solve failed: {exc}", iterations=max_iter) from exc
    sol = np.clip(sol, 0.0, None)
    sol /= sol.sum()
    res = stationary_residual(chain, sol)
    if res > tol:
        raise NoConvergence(f"stationary residual {res:.3e} exceeds {tol:.1e}", iterations=max_iter)
    return sol


def require_positive_pi(pi: np.ndarray) -> np.ndarray:
    pi = np.asarray(pi, dtype=float)
    if np.any(pi <= 0.0):
        raise ZeroStationaryMass(f"pi has zero mass at state {int(np.argmin(pi)) + 1}")
    return pi


def pi_inner_product(u, v, pi) -> float:
    """<u, v>_pi = sum_i u_i v_i / pi_i."""
    pi = require_positive_pi(pi)
    return float(np.sum(np.asarray(u, dtype=float) * np.asarray(v, dtype=float) / pi))


def pi_norm(u, pi) -> float:
    return math.sqrt(max(pi_inner_product(u, u, pi), 0.0))


def decompose(x, pi) -> tuple[np.ndarray, np.ndarray]:
    """Split x into its component along pi and the pi-orthogonal remainder."""
    pi = require_positive_pi(pi)
    x = np.asarray(x, dtype=float)
    # <x, pi>_pi = sum(x); ||pi||_pi = 1.
    parallel = x.sum() * pi
    return parallel, x - parallel


def matrix_exponential(gen: Generator, t: float, tol: float = 1e-14) -> ChainModel:
    """M(t) = e^{t*Lambda} by uniformization.

    e^{t*Lambda} = sum_k Pois(k; q t) P^k with P = I + Lambda/q. Terms are
    added until the remaining Poisson mass drops below ``tol``.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    n = gen.n
    q = gen.max_rate
    if q == 0.0 or t == 0.0:
        return ChainModel(np.eye(n))
    p = np.eye(n) + gen.rates / q
    np.clip(p, 0.0, 1.0, out=p)
    qt = q * t
    kmax = int(stats.poisson.isf(tol, qt)) + 1
    weights = stats.poisson.pmf(np.arange(kmax + 1), qt)
    result = np.zeros((n, n))
    term = np.eye(n)
    for k in range(kmax + 1):
        if weights[k] > 0.0:
            result += weights[k] * term
        term = term @ p
    return ChainModel(np.clip(result, 0.0, 1.0))


def generator_stationary(gen: Generator, tol: float = 1e-12) -> np.ndarray:
    return stationary_distribution(gen.uniformized(), tol)

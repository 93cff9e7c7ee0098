"""Total variation, mixing times and the mixing-vs-spectral inequalities."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chain_core import (
    ChainModel,
    Generator,
    as_distribution,
    matrix_exponential,
)
from .errors import DegenerateGap, IterationCapExceeded, LengthMismatch, NonErgodic, NotReversible
from .spectral import MarginReport, detailed_balance_residual, spectral_expansion

MAX_APPLICATIONS = 10_000_000
CHECK_SLACK = 1e-8


@dataclass(frozen=True)
class MixingReport:
    epsilon: float
    T: float
    worst_tv_at_T: float
    worst_start: int
    # Worst TV one step (discrete) or one bisection bracket (continuous) earlier.
    worst_tv_before: float


def tv_distance(u, w) -> float:
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    if u.shape != w.shape:
        raise LengthMismatch(f"lengths {u.shape} and {w.shape} differ")
    return 0.5 * float(np.abs(u - w).sum())


def worst_tv(power: np.ndarray, pi) -> tuple[float, int]:
    """max_i TV(e_i P, pi) over point-mass starts, with the maximizing start."""
    dist = 0.5 * np.abs(power - np.asarray(pi)[None, :]).sum(axis=1)
    i = int(np.argmax(dist))
    return float(dist[i]), i


def _check_epsilon(epsilon: float) -> None:
    if not 0.0 < epsilon < 0.5:
        raise ValueError(f"epsilon must lie in (0, 1/2), got {epsilon!r}")


def mixing_time_discrete(chain: ChainModel, pi, epsilon: float) -> MixingReport:
    """Exact T(eps) = min{t : max_x TV(x M^t, pi) <= eps}.

    Point-mass starts suffice since TV(x M^t, pi) is convex in x. Powers
    M^{2^k} bracket T by doubling; the bits of T - 1 are then recovered by
    bisection over the cached squares, which is exact because the worst-case
    distance is non-increasing in t.
    """
    _check_epsilon(epsilon)
    diag = chain.ergodicity
    if not diag.ergodic:
        raise NonErgodic(diag.diagnostic)
    pi = np.asarray(pi, dtype=float)

    squares = [chain.rows]
    d, i = worst_tv(chain.rows, pi)
    if d <= epsilon:
        d0 = worst_tv(np.eye(chain.n), pi)[0]
        return MixingReport(epsilon, 1, d, i, d0)
    applications = 1
    while True:
        nxt = squares[-1] @ squares[-1]
        applications *= 2
        if applications > MAX_APPLICATIONS:
            raise IterationCapExceeded(f"no eps-mixing within {MAX_APPLICATIONS} steps")
        d, i = worst_tv(nxt, pi)
        if d <= epsilon:
            break
        squares.append(nxt)

    # Invariant: worst_tv(M^t) > eps, with t = 2^(len(squares)-1).
    t = 1 << (len(squares) - 1)
    current = squares[-1]
    for k in range(len(squares) - 2, -1, -1):
        cand = current @ squares[k]
        if worst_tv(cand, pi)[0] > epsilon:
            current = cand
            t += 1 << k
    before = worst_tv(current, pi)[0]
    d, i = worst_tv(current @ chain.rows, pi)
    return MixingReport(epsilon, t + 1, d, i, before)


def chain_tv_trajectory(chain: ChainModel, pi, steps: int) -> np.ndarray:
    """Worst-case TV from point masses for t = 0..steps."""
    out = np.empty(steps + 1)
    power = np.eye(chain.n)
    for t in range(steps + 1):
        out[t] = worst_tv(power, pi)[0]
        power = power @ chain.rows
    return out


def mixing_time_continuous(gen: Generator, pi, epsilon: float, tol: float = 1e-10) -> MixingReport:
    """Continuous-time T(eps) to relative accuracy ``tol`` by doubling and bisection."""
    _check_epsilon(epsilon)
    pi = np.asarray(pi, dtype=float)
    rate = gen.max_rate
    if rate == 0.0:
        raise NonErgodic("generator has no transitions")

    def dist(t):
        return worst_tv(matrix_exponential(gen, t).rows, pi)

    hi = 1.0 / rate
    lo = 0.0
    while dist(hi)[0] > epsilon:
        lo = hi
        hi *= 2.0
        if hi * rate > MAX_APPLICATIONS:
            raise IterationCapExceeded("no eps-mixing within the time cap")
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if dist(mid)[0] > epsilon:
            lo = mid
        else:
            hi = mid
    d, i = dist(hi)
    return MixingReport(epsilon, hi, d, i, dist(lo)[0])


def verify_mixing_implies_expansion(chain: ChainModel, pi, epsilon: float) -> MarginReport:
    """lambda(M^{T(eps)}) <= sqrt(2 eps) for any ergodic chain."""
    T = mixing_time_discrete(chain, pi, epsilon).T
    lam = spectral_expansion(chain.power(T), pi).lam
    return MarginReport(f"lambda(M^T) <= sqrt(2 eps), T={T}", lam, math.sqrt(2 * epsilon), CHECK_SLACK)


def _require_reversible(chain: ChainModel, pi) -> None:
    res = detailed_balance_residual(chain, pi)
    if res > 1e-10:
        raise NotReversible(f"detailed balance residual {res:.3e}")


def verify_reversible_expansion_bound(chain: ChainModel, pi, epsilon: float) -> MarginReport:
    """lambda(M) <= (2 eps)^{1/T(eps)} for reversible chains."""
    _require_reversible(chain, pi)
    T = mixing_time_discrete(chain, pi, epsilon).T
    lam = spectral_expansion(chain, pi).lam
    return MarginReport(f"lambda <= (2 eps)^(1/T), T={T}", lam, (2 * epsilon) ** (1.0 / T), CHECK_SLACK)


def verify_tv_contraction(chain: ChainModel, pi, epsilon: float, trials: int = 1000,
                             seed: int = 0) -> MarginReport:
    """TV(x M^T, pi) <= 2 eps TV(x, pi), maximized over random starts x."""
    pi = np.asarray(pi, dtype=float)
    T = mixing_time_discrete(chain, pi, epsilon).T
    power = np.linalg.matrix_power(chain.rows, T)
    rng = np.random.default_rng(seed)
    starts = rng.dirichlet(np.ones(chain.n), size=trials)
    before = 0.5 * np.abs(starts - pi).sum(axis=1)
    after = 0.5 * np.abs(starts @ power - pi).sum(axis=1)
    keep = before >= 1e-12
    worst = float((after[keep] / before[keep]).max()) if keep.any() else 0.0
    return MarginReport(f"TV(xM^T, pi) / TV(x, pi) <= 2 eps, T={T}", worst, 2 * epsilon, CHECK_SLACK)


def contraction_ratio(chain: ChainModel, pi, x, T: int) -> float | None:
    """TV(x M^T, pi) / TV(x, pi), or None when x is already pi."""
    x = as_distribution(x, chain.n)
    before = tv_distance(x, pi)
    if before < 1e-12:
        return None
    return tv_distance(x @ np.linalg.matrix_power(chain.rows, T), pi) / before


def verify_relaxation_lower_bound(chain: ChainModel, pi, epsilon: float) -> MarginReport:
    """(1/2) lambda/(1 - lambda) log(1/(2 eps)) <= T(eps) for reversible chains."""
    _require_reversible(chain, pi)
    lam = spectral_expansion(chain, pi).lam
    if lam >= 1.0:
        raise DegenerateGap("lambda = 1")
    T = mixing_time_discrete(chain, pi, epsilon).T
    lhs = 0.5 * lam / (1.0 - lam) * math.log(1.0 / (2 * epsilon))
    return MarginReport("relaxation-time lower bound on T(eps)", lhs, float(T), CHECK_SLACK)

"""Moment generating functions of walk weights and the tail bounds built on them.

Two routes to E[exp(+-r X)] for X = sum_i f_i(V_i):

* :func:`exact_mgf` evaluates the weighted matrix product
  ||phi P_1 M P_2 ... M P_t||_1 with P_i = diag(exp(+-r f_i));
* :func:`brute_force_mgf` enumerates every walk, and is the oracle for the first.

:func:`mgf_recurrence` follows the parallel/perpendicular norm recurrence and
its closed forms. The ``bound_*`` functions turn those into tail bounds that
report prefactor and exponent separately.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .chain_core import ChainModel, decompose, pi_norm
from .errors import CheckFailed, DegenerateGap, EpsilonTooLarge, InvalidR, TooLarge
from .spectral import MarginReport, spectral_expansion

MEAN_TOL = 1e-9
ENUMERATION_CAP = 10_000_000
TAILS = ("upper", "lower")


def tail_sign(tail: str) -> int:
    if tail == "upper":
        return 1
    if tail == "lower":
        return -1
    raise ValueError(f"tail must be 'upper' or 'lower', got {tail!r}")


@dataclass(frozen=True, eq=False)
class WeightSchedule:
    """Per-step weight functions f_i: [n] -> [0, 1], stored as a (t, n) array."""

    functions: np.ndarray
    mu: float

    def __post_init__(self):
        f = np.array(self.functions, dtype=float)
        if f.ndim == 1:
            f = f[None, :]
        if f.ndim != 2 or f.shape[0] < 1:
            raise ValueError("weights must be a (t, n) array with t >= 1")
        if np.any(f < 0.0) or np.any(f > 1.0) or not np.all(np.isfinite(f)):
            raise ValueError("weights must lie in [0, 1]")
        if not self.mu > 0.0:
            raise ValueError(f"mean weight must be positive, got {self.mu!r}")
        f.setflags(write=False)
        object.__setattr__(self, "functions", f)
        object.__setattr__(self, "mu", float(self.mu))

    @property
    def t(self) -> int:
        return self.functions.shape[0]

    @property
    def n(self) -> int:
        return self.functions.shape[1]

    @classmethod
    def from_functions(cls, functions, pi) -> "WeightSchedule":
        """Build a schedule, taking mu from pi and checking the means agree."""
        f = np.atleast_2d(np.asarray(functions, dtype=float))
        means = f @ np.asarray(pi, dtype=float)
        sched = cls(f, float(means[0]))
        sched.check_means(pi)
        return sched

    @classmethod
    def constant(cls, f, t: int, pi) -> "WeightSchedule":
        return cls.from_functions(np.tile(np.asarray(f, dtype=float), (t, 1)), pi)

    def check_means(self, pi) -> None:
        means = self.functions @ np.asarray(pi, dtype=float)
        worst = int(np.argmax(np.abs(means - self.mu)))
        if abs(means[worst] - self.mu) > MEAN_TOL:
            raise ValueError(
                f"step {worst + 1} has pi-mean {means[worst]:.17g}, expected {self.mu:.17g}"
            )

    def threshold(self, delta: float, tail: str) -> float:
        return (1.0 + tail_sign(tail) * delta) * self.mu * self.t


def crosses(totals, threshold: float, tail: str):
    """Event X >= threshold (upper) or X <= threshold (lower), with rounding slack."""
    slack = 1e-9 * max(1.0, abs(threshold))
    totals = np.asarray(totals, dtype=float)
    if tail_sign(tail) > 0:
        return totals >= threshold - slack
    return totals <= threshold + slack


# --- exact and brute-force MGF ---------------------------------------------


def exact_mgf(chain: ChainModel, phi, schedule: WeightSchedule, r: float, sign: int = 1,
              pi=None, log: bool = False) -> float:
    """E[exp(sign * r * X)] as the L1 norm of phi P_1 M P_2 ... M P_t.

    With ``log=True`` the natural log is returned; the running vector is
    rescaled as it goes, so long walks do not overflow.
    """
    if r < 0:
        raise ValueError("r must be nonnegative")
    if pi is not None:
        schedule.check_means(pi)
    scale = sign * r
    factors = np.exp(scale * schedule.functions)
    v = np.asarray(phi, dtype=float) * factors[0]
    log_acc = 0.0
    for i in range(1, schedule.t):
        v = (v @ chain.rows) * factors[i]
        s = v.sum()
        if s > 1e100 or s < 1e-100:
            log_acc += math.log(s)
            v = v / s
    total = log_acc + math.log(v.sum())
    return total if log else math.exp(total)


def enumerate_walks(chain: ChainModel, phi, t: int, cap: int = ENUMERATION_CAP):
    """All n^t state sequences with their probabilities under V_1 ~ phi.

    Returns (states, probs) with states of shape (n^t, t).
    """
    n = chain.n
    count = n ** t
    if count > cap:
        raise TooLarge(f"{n}^{t} = {count} walks exceeds the enumeration cap {cap}")
    states = np.stack(np.unravel_index(np.arange(count), (n,) * t), axis=1)
    probs = np.asarray(phi, dtype=float)[states[:, 0]].copy()
    for i in range(1, t):
        probs *= chain.rows[states[:, i - 1], states[:, i]]
    return states, probs


def walk_totals(states: np.ndarray, schedule: WeightSchedule) -> np.ndarray:
    steps = np.arange(states.shape[1])
    return schedule.functions[steps[None, :], states].sum(axis=1)


def brute_force_mgf(chain: ChainModel, phi, schedule: WeightSchedule, r: float,
                    sign: int = 1) -> float:
    """E[exp(sign * r * X)] summed walk by walk."""
    states, probs = enumerate_walks(chain, phi, schedule.t)
    return float(np.sum(probs * np.exp(sign * r * walk_totals(states, schedule))))


def brute_force_tail(chain: ChainModel, phi, schedule: WeightSchedule, threshold: float,
                     tail: str = "upper") -> float:
    """Pr[X >= threshold] (upper) or Pr[X <= threshold] (lower) by enumeration."""
    states, probs = enumerate_walks(chain, phi, schedule.t)
    return float(probs[crosses(walk_totals(states, schedule), threshold, tail)].sum())


# --- choice of r and operator checks ------------------------------------------


def choose_r(lam: float, delta: float, tail: str = "upper") -> float:
    """r = min{1/2, log(1/lam)/2, 1 - sqrt(lam), (1 - lam) delta / k}, k = 18 or 8."""
    if not 0.0 <= lam < 1.0:
        raise DegenerateGap(f"spectral expansion {lam!r} is not below 1")
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    divisor = 18.0 if tail_sign(tail) > 0 else 8.0
    if tail == "lower" and delta > 1:
        raise ValueError("lower tail requires delta <= 1")
    terms = [0.5, 1.0 - math.sqrt(lam), (1.0 - lam) * delta / divisor]
    if lam > 0.0:
        terms.append(0.5 * math.log(1.0 / lam))
    return min(terms)


def p_operator_check(pi, f, r: float, sign: int = 1, trials: int = 1000,
                     seed: int = 0) -> list[MarginReport]:
    """Check the four P-operator inequalities for P = diag(exp(sign r f)).

    Items 3 and 4 are maximized over ``trials`` random y perp pi, and over the
    analytic maximizers as well: for item 3 that is y along (pi P)^perp, for
    item 4 the top singular vector of the projected diagonal operator.
    Raises CheckFailed on the first violated item.
    """
    pi = np.asarray(pi, dtype=float)
    f = np.asarray(f, dtype=float)
    if not 0.0 <= r <= 0.5:
        raise InvalidR(f"r = {r!r} outside [0, 1/2]")
    mu = float(f @ pi)
    p = np.exp(sign * r * f)
    root_mu = math.sqrt(mu)
    if sign > 0:
        rhs = [1 + math.expm1(r) * mu, 2 * r * root_mu, 2 * r * root_mu, math.exp(r)]
    else:
        rhs = [1 - r * mu + r * r * mu / 2, math.sqrt(2) * r * root_mu, r * root_mu, 1.0]

    pi_p = pi * p
    par, perp = decompose(pi_p, pi)
    item1 = pi_norm(par, pi)
    item2 = pi_norm(perp, pi)

    rng = np.random.default_rng(seed)
    ys = [decompose(rng.standard_normal(len(pi)), pi)[1] for _ in range(trials)]
    if item2 > 0.0:
        ys.append(perp)
    # In u = y / sqrt(pi) coordinates P acts as diag(p); project out sqrt(pi).
    root = np.sqrt(pi) / np.linalg.norm(np.sqrt(pi))
    q = np.eye(len(pi)) - np.outer(root, root)
    _, _, vt = np.linalg.svd(q @ np.diag(p) @ q)
    ys.append(vt[0] * np.sqrt(pi))

    item3 = item4 = 0.0
    w3 = w4 = None
    for y in ys:
        y = decompose(y, pi)[1]
        size = pi_norm(y, pi)
        if size < 1e-14:
            continue
        ypar, yperp = decompose(y * p, pi)
        a = pi_norm(ypar, pi) / size
        b = pi_norm(yperp, pi) / size
        if a > item3:
            item3, w3 = a, y
        if b > item4:
            item4, w4 = b, y

    names = ["||(pi P)par||", "||(pi P)perp||", "||(y P)par|| / ||y||", "||(y P)perp|| / ||y||"]
    witnesses = [None, None, w3, w4]
    reports = []
    for name, lhs, bound, witness in zip(names, [item1, item2, item3, item4], rhs, witnesses):
        rep = MarginReport(name, lhs, bound, slack=1e-10)
        if not rep.passed:
            raise CheckFailed(name, lhs, bound, witness=witness)
        reports.append(rep)
    return reports


# --- recurrence ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MgfTrace:
    """Norm recurrence for E[exp(+-r X)] and the bounds derived from it.

    ``alpha``/``beta`` bound the pi-norms of the parallel and perpendicular
    parts of z_i = z_{i-1} P_i M. The chain of inequalities is
    exact <= alpha[-1] <= product_bound <= closed_bound <= bound.
    """

    tail: str
    r: float
    lam: float
    mu: float
    t: int
    beta0: float
    alpha: np.ndarray
    beta: np.ndarray
    A: np.ndarray
    product_bound: float
    closed_bound: float
    bound: float
    exact: float | None = None

    @property
    def phi_norm(self) -> float:
        return math.sqrt(1.0 + self.beta0 ** 2)


def _validate_r(lam: float, r: float, tail: str) -> None:
    if not 0.0 <= lam < 1.0:
        raise DegenerateGap(f"spectral expansion {lam!r} is not below 1")
    if not 0.0 <= r <= 0.5:
        raise InvalidR(f"r = {r!r} outside [0, 1/2]")
    if tail_sign(tail) > 0:
        # e^r lam <= sqrt(lam) keeps the perpendicular part shrinking.
        if lam > 0.0 and r > 0.5 * math.log(1.0 / lam) + 1e-12:
            raise InvalidR(f"r = {r!r} exceeds log(1/lambda)/2")
    elif r > 1.0 - math.sqrt(lam) + 1e-12:
        raise InvalidR(f"r = {r!r} exceeds 1 - sqrt(lambda)")


def mgf_growth_rate(lam: float, r: float, tail: str) -> float:
    """Per-unit-of-mu*t exponent of the closed-form MGF bound."""
    if tail_sign(tail) > 0:
        return math.expm1(r) + 8 * r * r / (1 - lam)
    return -r + 4 * r * r / (1 - lam)


def mgf_prefactor(lam: float, mu: float, r: float, tail: str) -> float:
    """Constant c with E[exp(+-rX)] <= c ||phi||_pi exp(rate * mu t)."""
    if tail_sign(tail) > 0:
        k = 8 * r * math.sqrt(mu) / (1 - lam)
    else:
        a = 1 - (r - r * r / 2) * mu
        k = r * math.sqrt(mu) / (a - lam)
    return 2 * max(1.0, k)


def mgf_recurrence(lam: float, mu: float, t: int, r: float, beta0: float,
                   tail: str = "upper") -> MgfTrace:
    _validate_r(lam, r, tail)
    if beta0 < 0:
        raise ValueError("beta0 must be nonnegative")
    sqrt_mu = math.sqrt(mu)
    root_lam = math.sqrt(lam)
    upper = tail_sign(tail) > 0
    if upper:
        a = 1 + math.expm1(r) * mu
        b = 2 * r * sqrt_mu
        c = 2 * r * lam * sqrt_mu
        d = root_lam
    else:
        a = 1 - r * mu + r * r * mu / 2
        b = r * sqrt_mu
        c = math.sqrt(2) * r * lam * sqrt_mu
        d = lam

    alpha = np.empty(t + 1)
    beta = np.empty(t + 1)
    alpha[0], beta[0] = 1.0, beta0
    for i in range(1, t + 1):
        alpha[i] = a * alpha[i - 1] + b * beta[i - 1]
        beta[i] = c * alpha[i - 1] + d * beta[i - 1]

    idx = np.arange(1, t + 1)
    if upper:
        # A_i = a + 4 r^2 mu sum_{j=0}^{i-2} lam^{(j+2)/2}; A_1 = a.
        partial = np.concatenate([[0.0], np.cumsum(lam ** ((np.arange(t - 1) + 2) / 2))])
        A = a + 4 * r * r * mu * partial
        source = 2 * r * sqrt_mu * root_lam ** (idx - 1) * beta0
    else:
        # A_i = a + sqrt(2) r^2 mu sum_{m=1}^{i} lam^{m/2}.
        A = a + math.sqrt(2) * r * r * mu * np.cumsum(root_lam ** idx)
        source = r * sqrt_mu * lam ** (idx - 1) * beta0

    unrolled = 1.0
    for Ai, si in zip(A, source):
        unrolled = Ai * unrolled + si

    growth = math.exp(mgf_growth_rate(lam, r, tail) * mu * t)
    if upper:
        closed = (1 + 8 * r * sqrt_mu * beta0 / (1 - lam)) * growth
    else:
        closed = (1 + r * sqrt_mu * beta0 / (a - lam)) * growth
    final = mgf_prefactor(lam, mu, r, tail) * math.sqrt(1 + beta0 ** 2) * growth
    return MgfTrace(tail, r, lam, mu, t, beta0, alpha, beta, A, unrolled, closed, final)


def mgf_trace(chain: ChainModel, pi, phi, schedule: WeightSchedule, r: float | None = None,
              tail: str = "upper", delta: float = 1.0, lam: float | None = None) -> MgfTrace:
    """Recurrence for a concrete chain, with the exact MGF attached."""
    if lam is None:
        lam = spectral_expansion(chain, pi).lam
    if r is None:
        r = choose_r(lam, delta, tail)
    beta0 = pi_norm(decompose(phi, pi)[1], pi)
    trace = mgf_recurrence(lam, schedule.mu, schedule.t, r, beta0, tail)
    return replace(trace, exact=exact_mgf(chain, phi, schedule, r, tail_sign(tail), pi=pi))


# --- tail bounds -------------------------------------------------------------


@dataclass(frozen=True)
class BoundReport:
    family: str
    tail: str
    delta: float
    coefficient: float
    exponent: float
    value: float
    params: dict = field(default_factory=dict)

    @property
    def vacuous(self) -> bool:
        return self.value >= 1.0

    def as_dict(self) -> dict:
        return {
            "family": self.family,
            "tail": self.tail,
            "delta": self.delta,
            "coefficient": self.coefficient,
            "exponent": self.exponent,
            "value": self.value,
            "vacuous": self.vacuous,
            "params": dict(self.params),
        }


def _deviation_power(delta: float, tail: str) -> float:
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    if tail_sign(tail) < 0 and delta > 1:
        raise ValueError("lower tail requires delta <= 1")
    return delta * delta if delta <= 1 else delta


def _report(family, tail, delta, coefficient, exponent, **params) -> BoundReport:
    return BoundReport(family, tail, delta, coefficient, exponent,
                       coefficient * math.exp(exponent), params)


def bound_spectral(lam: float, mu: float, t: float, delta: float, phi_norm: float = 1.0,
                   tail: str = "upper") -> BoundReport:
    """c ||phi||_pi exp(-delta^{2 or 1} (1 - lam) mu t / 36)."""
    if lam >= 1.0:
        warnings.warn("spectral expansion is 1; the spectral bound is vacuous", stacklevel=2)
        return _report("spectral", tail, delta, 1.0, 0.0, lam=lam, mu=mu, t=t, r=0.0)
    power = _deviation_power(delta, tail)
    r = choose_r(lam, delta, tail)
    coefficient = mgf_prefactor(lam, mu, r, tail) * phi_norm
    exponent = -power * (1 - lam) * mu * t / 36
    return _report("spectral", tail, delta, coefficient, exponent, lam=lam, mu=mu, t=t, r=r)


def _grouped_prefactor(lam: float, mu: float, r: float, tail: str, groups: float) -> float:
    """Prefactor for T interleaved sub-walks of a mixing-time-T chain.

    Sub-walk lengths differ from t/T by less than one step; that costs at
    most a factor exp(|rate| mu) over the per-group spectral bound. The rate
    is taken at the largest admissible r, where the upper-tail rate also
    dominates the lower-tail one, so the factor does not depend on delta and
    the bound stays monotone in delta.
    """
    c = mgf_prefactor(lam, mu, r, tail)
    if groups != 1:
        r_cap = min(0.5, 1.0 - math.sqrt(lam))
        if lam > 0.0:
            r_cap = min(r_cap, 0.5 * math.log(1.0 / lam))
        c *= math.exp(mgf_growth_rate(lam, r_cap, "upper") * mu)
    return c


def bound_mixing(T: int, epsilon: float, mu: float, t: float, delta: float,
                 phi_norm: float = 1.0, tail: str = "upper",
                 generalized: bool | None = None) -> BoundReport:
    """c ||phi||_pi exp(-delta^{2 or 1} mu t / (72 T)).

    In generalized mode 1/72 becomes (1 - sqrt(2 eps)) / 36, valid for any
    eps < 1/2; it is the default whenever eps != 1/8. The constant c comes
    from the spectral bound for M^T at lambda = sqrt(2 eps).
    """
    if generalized is None:
        generalized = epsilon != 0.125
    if not 0.0 < epsilon < 0.5:
        raise ValueError(f"epsilon must lie in (0, 1/2), got {epsilon!r}")
    if not generalized and epsilon > 0.125:
        raise EpsilonTooLarge(f"standard form needs eps <= 1/8, got {epsilon!r}")
    if T <= 0:
        raise ValueError("mixing time must be positive")
    power = _deviation_power(delta, tail)
    lam = math.sqrt(2 * epsilon)
    r = choose_r(lam, delta, tail)
    factor = (1 - lam) / 36 if generalized else 1 / 72
    coefficient = _grouped_prefactor(lam, mu, r, tail, T) * phi_norm
    exponent = -power * factor * mu * t / T
    return _report("mixing", tail, delta, coefficient, exponent, T=T, epsilon=epsilon, lam=lam,
                   r=r, mu=mu, t=t, generalized=generalized)


def bound_union_variant(T: int, epsilon: float, mu: float, t: float, delta: float,
                        phi_norm: float = 1.0, tail: str = "upper",
                        generalized: bool | None = None) -> BoundReport:
    """Union bound over the T groups: bound_mixing with its prefactor times T."""
    base = bound_mixing(T, epsilon, mu, t, delta, phi_norm, tail, generalized)
    return _report("union", tail, delta, base.coefficient * T, base.exponent, **base.params)


def bound_continuous(T: float, mu: float, t: float, delta: float, phi_norm: float = 1.0,
                     tail: str = "upper", epsilon: float = 0.125) -> BoundReport:
    """Continuous-time analogue; T and t are real times and only t/T matters."""
    if T <= 0 or t <= 0:
        raise ValueError("T and t must be positive")
    if epsilon > 0.125:
        raise EpsilonTooLarge(f"continuous bound needs eps <= 1/8, got {epsilon!r}")
    power = _deviation_power(delta, tail)
    lam = math.sqrt(2 * epsilon)
    r = choose_r(lam, delta, tail)
    coefficient = _grouped_prefactor(lam, mu, r, tail, groups=math.inf) * phi_norm
    exponent = -power * mu * (t / T) / 72
    return _report("continuous", tail, delta, coefficient, exponent, T=T, epsilon=epsilon,
                   lam=lam, r=r, mu=mu, t=t)


def raw_chernoff_bound(chain: ChainModel, phi, schedule: WeightSchedule, delta: float,
                       r_grid, tail: str = "upper") -> BoundReport:
    """min over r in r_grid of E[exp(+-rX)] / exp(+-r threshold), using the exact MGF."""
    sign = tail_sign(tail)
    threshold = schedule.threshold(delta, tail)
    best, best_r = math.inf, None
    for r in r_grid:
        log_ratio = exact_mgf(chain, phi, schedule, float(r), sign, log=True) - sign * r * threshold
        if log_ratio < best:
            best, best_r = log_ratio, float(r)
    return _report("raw", tail, delta, 1.0, min(best, 0.0), r=best_r, mu=schedule.mu, t=schedule.t)

"""Canonical chains: the two-state example, the three-way split, random instances."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain_core import ChainModel
from .errors import NonErgodic
from .mgf_bounds import WeightSchedule

KINDS = ("general", "reversible", "lazy")

# Offsets of the three copies of each state in the split chain.
IN, MID, OUT = 0, 1, 2


@dataclass(frozen=True, eq=False)
class TwoStateExample:
    """M = [[1-p, p], [p, 1-p]] with indicator weights on state 0."""

    p: float
    chain: ChainModel

    @property
    def pi(self) -> np.ndarray:
        return np.array([0.5, 0.5])

    @property
    def indicator(self) -> np.ndarray:
        return np.array([1.0, 0.0])

    def schedule(self, t: int) -> WeightSchedule:
        return WeightSchedule(np.tile(self.indicator, (t, 1)), 0.5)


def build_two_state(p: float) -> TwoStateExample:
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must lie in (0, 1], got {p!r}")
    return TwoStateExample(float(p), ChainModel([[1.0 - p, p], [p, 1.0 - p]]))


def build_split_chain(chain: ChainModel) -> ChainModel:
    """Replace each state v by (v,in), (v,mid), (v,out) at indices 3v, 3v+1, 3v+2.

    (v,in) stays or moves to (v,mid) with probability 1/2 each, (v,mid) moves
    to (v,out) surely, and (v,out) moves to (u,in) with probability M[v, u].
    The result shares the mixing behaviour of M up to a constant factor but
    has spectral expansion 1.
    """
    diag = chain.ergodicity
    if not diag.ergodic:
        raise NonErgodic(diag.diagnostic)
    n = chain.n
    rows = np.zeros((3 * n, 3 * n))
    for v in range(n):
        rows[3 * v + IN, 3 * v + IN] = 0.5
        rows[3 * v + IN, 3 * v + MID] = 0.5
        rows[3 * v + MID, 3 * v + OUT] = 1.0
        rows[3 * v + OUT, IN::3] = chain.rows[v]
    return ChainModel(rows)


def forced_unique_edges(chain: ChainModel) -> list[tuple[int, int]]:
    """Edges u -> v taken with probability 1 where u is the only predecessor of v.

    Any such edge pins the pi-mass of v to that of u and forces lambda = 1.
    """
    support = chain.rows > 0.0
    indegree = support.sum(axis=0)
    out = []
    for u, v in zip(*np.nonzero(chain.rows == 1.0)):
        if indegree[v] == 1:
            out.append((int(u), int(v)))
    return out


def build_random_chain(n: int, seed: int, kind: str = "general") -> ChainModel:
    """Random chain with every entry positive (hence ergodic), reproducible from seed.

    general: normalized Gamma(1) draws plus a small floor.
    reversible: a symmetric positive weight matrix normalized by rows, which is in
    detailed balance with the normalized row sums.
    lazy: (I + general) / 2.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    rng = np.random.default_rng(seed)
    w = rng.gamma(1.0, size=(n, n)) + 0.01
    if kind == "reversible":
        w = w + w.T
    m = w / w.sum(axis=1, keepdims=True)
    if kind == "lazy":
        m = 0.5 * (np.eye(n) + m)
    return ChainModel(m)


def build_random_schedule(pi, t: int, seed: int) -> WeightSchedule:
    """t random weight functions in [0, 1] that share one pi-mean.

    Each g_i is uniform on [1e-3, 1)^n, then rescaled to g_i * mu / (g_i . pi) with
    mu the smallest of the raw means, so every entry stays inside [0, 1].
    """
    pi = np.asarray(pi, dtype=float)
    rng = np.random.default_rng(seed)
    g = rng.uniform(1e-3, 1.0, size=(t, len(pi)))
    means = g @ pi
    mu = float(means.min())
    return WeightSchedule(g * (mu / means)[:, None], mu)

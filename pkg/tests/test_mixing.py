import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from mixchernoff.chain_core import ChainModel, Generator, generator_stationary, stationary_distribution
from mixchernoff.constructions import build_random_chain, build_two_state
from mixchernoff.errors import LengthMismatch, NonErgodic, NotReversible
from mixchernoff.mixing import (
    chain_tv_trajectory,
    contraction_ratio,
    mixing_time_continuous,
    mixing_time_discrete,
    tv_distance,
    verify_tv_contraction,
    verify_mixing_implies_expansion,
    verify_reversible_expansion_bound,
    verify_relaxation_lower_bound,
)


@st.composite
def sparse_chains(draw):
    """Lazy ring with random weights; mixes slowly enough to make T interesting."""
    n = draw(st.integers(2, 7))
    stay = draw(hnp.arrays(float, n, elements=st.floats(0.05, 0.95)))
    rows = np.zeros((n, n))
    for v in range(n):
        rows[v, v] = stay[v]
        rows[v, (v + 1) % n] += 1 - stay[v]
    return ChainModel(rows)


def naive_mixing_time(chain, pi, eps):
    power = np.eye(chain.n)
    for t in range(1, 100_000):
        power = power @ chain.rows
        if 0.5 * np.abs(power - pi).sum(axis=1).max() <= eps:
            return t
    raise AssertionError("did not mix")


def test_tv_distance():
    assert tv_distance([1, 0], [0, 1]) == 1.0
    assert tv_distance([0.5, 0.5], [0.25, 0.75]) == 0.25
    with pytest.raises(LengthMismatch):
        tv_distance([1, 0], [1, 0, 0])


@pytest.mark.parametrize("p", [0.01, 0.1, 0.3, 0.45])
@pytest.mark.parametrize("eps", [1 / 4, 1 / 8, 1 / 16, 1e-3])
def test_two_state_closed_form(p, eps):
    # Worst TV after t steps is |1 - 2p|^t / 2.
    ex = build_two_state(p)
    expected = math.ceil(math.log(2 * eps) / math.log(abs(1 - 2 * p)))
    rep = mixing_time_discrete(ex.chain, ex.pi, eps)
    assert rep.T == max(expected, 1)
    assert rep.worst_tv_at_T <= eps < rep.worst_tv_before


@given(sparse_chains(), st.sampled_from([0.25, 0.125, 0.0625, 0.01]))
def test_matches_naive_stepping(chain, eps):
    pi = stationary_distribution(chain)
    assert mixing_time_discrete(chain, pi, eps).T == naive_mixing_time(chain, pi, eps)


def test_trajectory_is_non_increasing():
    chain = build_random_chain(5, 2, "lazy")
    d = chain_tv_trajectory(chain, stationary_distribution(chain), 30)
    assert np.all(np.diff(d) <= 1e-15)


@pytest.mark.parametrize("eps", [0.0, 0.5, 0.7, -0.1])
def test_epsilon_range(eps):
    ex = build_two_state(0.3)
    with pytest.raises(ValueError):
        mixing_time_discrete(ex.chain, ex.pi, eps)


def test_non_ergodic_rejected():
    chain = ChainModel([[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(NonErgodic, match="periodic"):
        mixing_time_discrete(chain, np.array([0.5, 0.5]), 0.125)


@pytest.mark.parametrize("q", [0.2, 1.0, 5.0])
@pytest.mark.parametrize("eps", [1 / 4, 1 / 8, 1 / 32])
def test_continuous_two_state(q, eps):
    gen = Generator([[-q, q], [q, -q]])
    rep = mixing_time_continuous(gen, generator_stationary(gen), eps)
    assert rep.T == pytest.approx(math.log(1 / (2 * eps)) / (2 * q), rel=1e-6)


def test_continuous_rescales_with_rates():
    rates = np.array([[-1.0, 0.7, 0.3], [0.2, -0.4, 0.2], [0.5, 0.5, -1.0]])
    base = mixing_time_continuous(Generator(rates), generator_stationary(Generator(rates)), 0.125).T
    fast = mixing_time_continuous(Generator(3 * rates), generator_stationary(Generator(rates)), 0.125).T
    assert fast == pytest.approx(base / 3, rel=1e-6)


@given(sparse_chains(), st.sampled_from([0.125, 0.0625]))
def test_mixing_implies_expansion(chain, eps):
    pi = stationary_distribution(chain)
    assert verify_mixing_implies_expansion(chain, pi, eps).passed


def test_reversible_bounds_on_random_chains():
    for seed in range(20):
        chain = build_random_chain(int(2 + seed % 6), seed, "reversible")
        pi = stationary_distribution(chain)
        assert verify_reversible_expansion_bound(chain, pi, 0.125).passed
        assert verify_relaxation_lower_bound(chain, pi, 0.125).passed


def test_reversible_bound_equality_case():
    # Lazy two-state chain with p = 1/4: lambda = 1/2 and T(1/8) = 2, so 1/2 <= 1/2.
    ex = build_two_state(0.25)
    rep = verify_reversible_expansion_bound(ex.chain, ex.pi, 0.125)
    assert rep.lhs == pytest.approx(0.5, abs=1e-12)
    assert rep.rhs == pytest.approx(0.5, abs=1e-12)
    assert rep.passed


def test_non_reversible_rejected():
    chain = ChainModel([[0.1, 0.9, 0.0], [0.0, 0.1, 0.9], [0.9, 0.0, 0.1]])
    with pytest.raises(NotReversible):
        verify_reversible_expansion_bound(chain, stationary_distribution(chain), 0.125)


def test_relaxation_lower_bound_on_slow_two_state():
    ex = build_two_state(0.01)
    rep = verify_relaxation_lower_bound(ex.chain, ex.pi, 0.125)
    assert rep.passed and rep.lhs > 10


@given(sparse_chains())
def test_tv_contraction(chain):
    pi = stationary_distribution(chain)
    rep = verify_tv_contraction(chain, pi, 0.125, trials=200, seed=3)
    assert rep.passed


def test_contraction_ratio_at_point_masses():
    chain = ChainModel([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])
    pi = stationary_distribution(chain)
    T = mixing_time_discrete(chain, pi, 0.125).T
    for i in range(3):
        x = np.eye(3)[i]
        assert contraction_ratio(chain, pi, x, T) <= 0.25 + 1e-12
    assert contraction_ratio(chain, pi, pi, T) is None

import math

import numpy as np
import pytest

from mixchernoff import montecarlo as mc
from mixchernoff.chain_core import ChainModel, Generator, generator_stationary, point_mass, stationary_distribution
from mixchernoff.constructions import build_random_chain, build_random_schedule, build_two_state
from mixchernoff.errors import AbsorbingState
from mixchernoff.mgf_bounds import WeightSchedule, brute_force_tail


def test_uniforms_are_in_unit_interval_and_look_uniform():
    keys = mc.derive_seed(3, np.arange(200_000))
    u = mc.uniforms(keys, 0)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 4 * math.sqrt(1 / 12 / u.size)
    # Draws along one stream are not trivially correlated with the first.
    v = mc.uniforms(keys, 1)
    assert abs(np.corrcoef(u, v)[0, 1]) < 0.01


def test_derive_seed_is_deterministic_and_spreads():
    assert mc.derive_seed(5, 7) == mc.derive_seed(5, 7)
    assert mc.derive_seed(5, 7) != mc.derive_seed(5, 8)
    assert mc.derive_seed(5, 7) != mc.derive_seed(6, 7)
    keys = mc.derive_seed(1, np.arange(10_000))
    assert len(np.unique(keys)) == 10_000


def test_deterministic_flip():
    ex = build_two_state(1.0)
    walk = mc.sample_walk_discrete(ex.chain, point_mass(2, 0), ex.schedule(4), seed=9)
    assert walk.states.tolist() == [0, 1, 0, 1]
    assert walk.total_weight == 2.0


def test_constant_weight_total():
    chain = build_random_chain(4, 1)
    pi = stationary_distribution(chain)
    sched = WeightSchedule.constant(np.ones(4), 13, pi)
    assert mc.sample_walk_discrete(chain, pi, sched, seed=2).total_weight == 13.0


def test_walks_follow_the_support():
    chain = ChainModel([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])
    sched = WeightSchedule(np.full((50, 3), 0.5), 0.5)
    for seed in range(20):
        s = mc.sample_walk_discrete(chain, point_mass(3, 0), sched, seed).states
        assert all(chain.rows[a, b] > 0 for a, b in zip(s[:-1], s[1:]))


def test_single_walk_matches_batch():
    chain = build_random_chain(4, 8, "lazy")
    pi = stationary_distribution(chain)
    sched = build_random_schedule(pi, 30, 2)
    totals = mc.sample_totals_discrete(chain, pi, sched, 10, seed=4)
    keys = mc.derive_seed(4, np.arange(10))
    for k in range(10):
        walk = mc.sample_walk_discrete(chain, pi, sched, int(keys[k]))
        assert walk.total_weight == pytest.approx(totals[k], abs=1e-12)


def test_chunking_does_not_change_the_estimate():
    chain = build_random_chain(3, 5)
    pi = stationary_distribution(chain)
    sched = build_random_schedule(pi, 20, 6)
    a = mc.empirical_tail(chain, pi, sched, 0.2, 5000, seed=1, chunk=5000)
    b = mc.empirical_tail(chain, pi, sched, 0.2, 5000, seed=1, chunk=333)
    assert a == b


def test_pruned_count_matches_full_totals():
    chain = build_random_chain(3, 5)
    pi = stationary_distribution(chain)
    sched = build_random_schedule(pi, 25, 6)
    for tail in ("upper", "lower"):
        thr = sched.threshold(0.15, tail)
        totals = mc.sample_totals_discrete(chain, pi, sched, 4000, seed=2)
        direct = int((totals >= thr - 1e-9).sum() if tail == "upper" else (totals <= thr + 1e-9).sum())
        est = mc.empirical_tail(chain, pi, sched, 0.15, 4000, seed=2, tail=tail)
        assert est.hits == direct


def test_impossible_threshold():
    ex = build_two_state(0.3)
    est = mc.empirical_tail(ex.chain, ex.pi, ex.schedule(10), 1.5, 2000, seed=0)
    assert est.hits == 0 and est.p_hat == 0.0 and est.ci_low == 0.0 and est.ci_high > 0


def test_never_leaving_probability():
    p, t = 0.1, 8
    ex = build_two_state(p)
    est = mc.empirical_tail(ex.chain, point_mass(2, 0), ex.schedule(t), 1.0, 200_000, seed=3)
    exact = (1 - p) ** (t - 1)
    assert abs(est.p_hat - exact) <= 4 * math.sqrt(exact * (1 - exact) / est.samples)


def test_matches_enumeration():
    chain = build_random_chain(3, 12)
    pi = stationary_distribution(chain)
    sched = build_random_schedule(pi, 6, 13)
    for tail in ("upper", "lower"):
        exact = brute_force_tail(chain, pi, sched, sched.threshold(0.0, tail), tail)
        assert 0.0 < exact < 1.0
        est = mc.empirical_tail(chain, pi, sched, 0.0, 100_000, seed=5, tail=tail)
        assert abs(est.p_hat - exact) <= 4 * math.sqrt(exact * (1 - exact) / est.samples)


def test_state_frequencies_match_pi():
    chain = build_random_chain(4, 21, "lazy")
    pi = stationary_distribution(chain)
    sched = WeightSchedule(np.full((5, 4), 0.5), 0.5)
    keys = np.atleast_1d(mc.derive_seed(8, np.arange(100_000)))
    path, _ = mc._run_discrete(chain, pi, sched, keys)
    for step in range(5):
        freq = np.bincount(path[:, step], minlength=4) / len(keys)
        se = np.sqrt(pi * (1 - pi) / len(keys))
        assert np.all(np.abs(freq - pi) <= 4 * se)


def test_interval_method_switch():
    small = mc.tail_estimate(3, 1000, 0.0)
    assert small.ci_low > 0 and small.ci_high == pytest.approx(0.00874, abs=1e-4)
    large = mc.tail_estimate(400, 1000, 0.0)
    half = 1.959963984540054 * math.sqrt(0.4 * 0.6 / 1000)
    assert large.ci_low == pytest.approx(0.4 - half) and large.ci_high == pytest.approx(0.4 + half)
    assert large.ci_low <= large.p_hat <= large.ci_high


# --- continuous time -------------------------------------------------------------


def test_continuous_constant_weight_integrates_time():
    gen = Generator([[-2.0, 1.5, 0.5], [1.0, -1.0, 0.0], [0.3, 0.3, -0.6]])
    for seed in range(10):
        walk = mc.sample_walk_continuous(gen, [1 / 3] * 3, np.ones(3), 7.5, seed)
        assert walk.total_weight == pytest.approx(7.5, rel=1e-12)
        assert walk.states[:, 1].sum() == pytest.approx(7.5, rel=1e-12)


def test_continuous_short_horizon():
    gen = Generator([[-1.0, 1.0], [1.0, -1.0]])
    f = np.array([0.3, 0.9])
    totals = mc.sample_totals_continuous(gen, point_mass(2, 0), f, 1e-6, 1000, seed=4)
    assert np.mean(np.isclose(totals, 0.3e-6, rtol=1e-9)) > 0.99


def test_continuous_mean_is_mu():
    gen = Generator([[-1.0, 0.6, 0.4], [0.5, -0.5, 0.0], [0.2, 0.8, -1.0]])
    pi = generator_stationary(gen)
    f = np.array([1.0, 0.2, 0.6])
    horizon = 5.0
    totals = mc.sample_totals_continuous(gen, pi, f, horizon, 100_000, seed=6) / horizon
    se = totals.std() / math.sqrt(totals.size)
    assert abs(totals.mean() - f @ pi) <= 3 * se


def test_continuous_single_walk_matches_batch():
    gen = Generator([[-1.0, 1.0], [0.4, -0.4]])
    f = np.array([1.0, 0.0])
    totals = mc.sample_totals_continuous(gen, [0.5, 0.5], f, 3.0, 5, seed=11)
    keys = mc.derive_seed(11, np.arange(5))
    for k in range(5):
        walk = mc.sample_walk_continuous(gen, [0.5, 0.5], f, 3.0, int(keys[k]))
        assert walk.total_weight == pytest.approx(totals[k], abs=1e-12)


def test_absorbing_state_rejected():
    gen = Generator([[-1.0, 1.0], [0.0, 0.0]])
    with pytest.raises(AbsorbingState):
        mc.sample_walk_continuous(gen, [1.0, 0.0], np.ones(2), 1.0, 0)


def test_continuous_needs_horizon():
    gen = Generator([[-1.0, 1.0], [1.0, -1.0]])
    with pytest.raises(ValueError):
        mc.empirical_tail(gen, [0.5, 0.5], np.ones(2), 0.1, 10, seed=0)

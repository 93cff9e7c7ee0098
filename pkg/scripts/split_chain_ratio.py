"""Mixing time of the three-way split chain relative to the original chain.

Draws random chains, splits each state into in/mid/out copies, and reports
T'(1/4) / T(1/4) together with the split chain's spectral expansion.
"""

import argparse

import numpy as np

from mixchernoff import constructions, mixing
from mixchernoff.chain_core import stationary_distribution
from mixchernoff.spectral import spectral_expansion


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instances", type=int, default=50)
    ap.add_argument("--n-max", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    ratios = []
    for k in range(args.instances):
        n = int(rng.integers(2, args.n_max + 1))
        kind = constructions.KINDS[k % len(constructions.KINDS)]
        chain = constructions.build_random_chain(n, int(rng.integers(2**32)), kind)
        split = constructions.build_split_chain(chain)
        pi, pi_s = stationary_distribution(chain), stationary_distribution(split)
        T = mixing.mixing_time_discrete(chain, pi, 0.25).T
        T_s = mixing.mixing_time_discrete(split, pi_s, 0.25).T
        lam = spectral_expansion(split, pi_s).lam
        ratios.append(T_s / T)
        print(f"n={n:2d} {kind:10s} T={T:3d} T'={T_s:3d} ratio={T_s / T:5.2f} lambda'={lam:.12f}")
    for p in (0.3, 0.1, 0.03, 0.01):
        ex = constructions.build_two_state(p)
        split = constructions.build_split_chain(ex.chain)
        T = mixing.mixing_time_discrete(ex.chain, ex.pi, 0.25).T
        T_s = mixing.mixing_time_discrete(split, stationary_distribution(split), 0.25).T
        ratios.append(T_s / T)
        print(f"two-state p={p:<5} T={T:3d} T'={T_s:3d} ratio={T_s / T:5.2f}")
    print(f"max ratio {max(ratios):.3f}, mean {np.mean(ratios):.3f} (limit 8)")


if __name__ == "__main__":
    main()

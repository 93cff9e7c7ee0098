"""Two-state chain: exact deep-tail probability against the mixing-time bound.

For M = [[1-p, p], [p, 1-p]] started in state 0 with indicator weights, the
event X = t means the walk never moves, so Pr = (1-p)^(t-1). The script
prints that probability next to a seeded Monte-Carlo estimate, the bound
value, and the ratio of the exact log-tail to -t / (72 T(1/8)).
"""

import argparse
import math

from mixchernoff import constructions, mgf_bounds, mixing, montecarlo
from mixchernoff.chain_core import pi_norm, point_mass


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=float, nargs="+", default=[0.05, 0.02, 0.01, 0.005])
    ap.add_argument("--t", type=int, default=2000)
    ap.add_argument("--samples", type=int, default=1_000_000)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    print(f"{'p':>7} {'T(1/8)':>6} {'exact':>11} {'MC':>11} {'hits':>5} {'bound':>9} {'ratio':>7}")
    for p in args.p:
        ex = constructions.build_two_state(p)
        phi = point_mass(2, 0)
        exact = (1 - p) ** (args.t - 1)
        est = montecarlo.empirical_tail(ex.chain, phi, ex.schedule(args.t), 1.0, args.samples,
                                        args.seed)
        T = mixing.mixing_time_discrete(ex.chain, ex.pi, 0.125).T
        bound = mgf_bounds.bound_mixing(T, 0.125, 0.5, args.t, 1.0, pi_norm(phi, ex.pi))
        ratio = math.log(exact) / (-args.t / (72 * T))
        print(f"{p:7.4f} {T:6d} {exact:11.4e} {est.p_hat:11.4e} {est.hits:5d} "
              f"{bound.value:9.3g} {ratio:7.2f}")


if __name__ == "__main__":
    main()

"""Empirical tails of seeded walks against every applicable bound family.

For each chain in a small fixed suite, prints p_hat with its 95% interval
and the spectral, mixing and union bound values, for both tails over a grid
of deviations. A row is marked '!' if p_hat - 3 stderr exceeds a bound.
"""

import argparse

from mixchernoff import constructions, mgf_bounds, mixing, montecarlo
from mixchernoff.chain_core import pi_norm, stationary_distribution
from mixchernoff.spectral import spectral_expansion


def suite(t):
    out = []
    for p in (0.3, 0.05):
        ex = constructions.build_two_state(p)
        out.append((f"two-state p={p}", ex.chain, ex.schedule(t)))
    for name, n, seed, kind in (("random 5-state", 5, 9001, "general"),
                                ("lazy 6-state", 6, 9002, "lazy")):
        chain = constructions.build_random_chain(n, seed, kind)
        pi = stationary_distribution(chain)
        out.append((name, chain, constructions.build_random_schedule(pi, t, n)))
    split = constructions.build_split_chain(constructions.build_two_state(0.3).chain)
    pi = stationary_distribution(split)
    out.append(("split two-state", split, constructions.build_random_schedule(pi, t, 6)))
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--t", type=int, default=400)
    ap.add_argument("--samples", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=11)
    ap.add_argument("--deltas", type=float, nargs="+", default=[0.25, 0.5, 1.0, 2.0])
    args = ap.parse_args()

    for name, chain, sched in suite(args.t):
        pi = stationary_distribution(chain)
        T = mixing.mixing_time_discrete(chain, pi, 0.125).T
        lam = spectral_expansion(chain, pi).lam
        norm = pi_norm(pi, pi)
        print(f"\n{name}: T(1/8)={T} lambda={lam:.4f} mu={sched.mu:.4f} t={sched.t}")
        for tail in ("upper", "lower"):
            for delta in args.deltas:
                if tail == "lower" and delta > 1:
                    continue
                est = montecarlo.empirical_tail(chain, pi, sched, delta, args.samples, args.seed,
                                                tail)
                vals = {"mixing": mgf_bounds.bound_mixing(T, 0.125, sched.mu, sched.t, delta,
                                                          norm, tail).value,
                        "union": mgf_bounds.bound_union_variant(T, 0.125, sched.mu, sched.t,
                                                                delta, norm, tail).value}
                if lam < 1 - 1e-9:
                    vals["spectral"] = mgf_bounds.bound_spectral(lam, sched.mu, sched.t, delta,
                                                                 norm, tail).value
                flag = "!" if any(est.p_hat - 3 * est.stderr > v for v in vals.values()) else " "
                bounds = " ".join(f"{k}={v:.3g}" for k, v in vals.items())
                print(f" {flag} {tail:5s} delta={delta:<4} p_hat={est.p_hat:.3e} "
                      f"[{est.ci_low:.2e}, {est.ci_high:.2e}] {bounds}")


if __name__ == "__main__":
    main()

"""Command-line front end.

Every subcommand builds a plain dict report and renders it either as sorted
``key = value`` lines or, with ``--json``, as sorted JSON. Exit status is 0
on success, 1 on any validation or check failure and 2 when ``--strict`` is
set and a reported bound is vacuous.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import constructions, mgf_bounds, mixing, montecarlo
from .chain_core import generator_stationary, pi_norm, stationary_distribution
from .chainfile import ChainDocument, emit_chain_file, read_chain_file
from .errors import CheckFailed, ChainError, NoConvergence, IterationCapExceeded, ParseError
from .spectral import m_operator_check, spectral_expansion

FAMILIES = ("mixing", "spectral", "union", "continuous")
SUITES = ("claim1", "lemma3", "claim4", "sinclair", "p-operator", "m-operator")
BRUTE_FORCE_LIMIT = 1_000_000


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # Exit code 2 belongs to vacuous bounds, so usage errors exit with 1.
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# --- rendering ---------------------------------------------------------------


def _plain(value):
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def _flatten(value, prefix, out):
    if isinstance(value, dict):
        for k in value:
            _flatten(value[k], f"{prefix}.{k}" if prefix else k, out)
    elif isinstance(value, list) and any(isinstance(v, (dict, list)) for v in value):
        for i, v in enumerate(value):
            _flatten(v, f"{prefix}.{i}", out)
    else:
        out[prefix] = value


def _scalar(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return "null"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, list):
        return " ".join(_scalar(x) for x in v)
    return str(v)


def render(report: dict, as_json: bool) -> str:
    report = _plain(report)
    if as_json:
        return json.dumps(report, sort_keys=True, indent=2)
    flat = {}
    _flatten(report, "", flat)
    return "\n".join(f"{k} = {_scalar(flat[k])}" for k in sorted(flat))


# --- helpers -------------------------------------------------------------------


def _load(args) -> ChainDocument:
    if not args.chain:
        raise UsageError("--chain is required")
    return read_chain_file(args.chain)


def _pi(doc: ChainDocument) -> np.ndarray:
    if doc.mode == "discrete":
        return stationary_distribution(doc.model)
    return generator_stationary(doc.model)


def _start(doc: ChainDocument, pi) -> np.ndarray:
    return doc.start if doc.start is not None else np.asarray(pi)


def _phi_norm(doc: ChainDocument, pi) -> float:
    return pi_norm(_start(doc, pi), pi)


def _require_discrete(doc: ChainDocument, what: str) -> None:
    if doc.mode != "discrete":
        raise UsageError(f"{what} needs a discrete chain")


def _mu(doc, pi, t=None):
    if doc.weights is None:
        return None
    return doc.schedule(pi, t).mu


# --- subcommands ---------------------------------------------------------------


def cmd_analyze(args):
    doc = _load(args)
    report = {"mode": doc.mode, "n": doc.n}
    if doc.mode == "discrete":
        diag = doc.model.ergodicity
        report["ergodic"] = diag.ergodic
        report["diagnostic"] = diag.diagnostic
        if not diag.ergodic:
            return 1, report
    pi = _pi(doc)
    report["pi"] = pi
    times = {}
    if doc.mode == "discrete":
        spec = spectral_expansion(doc.model, pi)
        report.update(**{"lambda": spec.lam, "gap": spec.gap, "lambda_R": spec.lambda_R})
        for eps in args.epsilon:
            res = mixing.mixing_time_discrete(doc.model, pi, eps)
            times[repr(eps)] = {"T": res.T, "worst_tv": res.worst_tv_at_T}
    else:
        report["max_rate"] = doc.model.max_rate
        for eps in args.epsilon:
            res = mixing.mixing_time_continuous(doc.model, pi, eps)
            times[repr(eps)] = {"T": res.T, "worst_tv": res.worst_tv_at_T}
    report["mixing_time"] = times
    if doc.weights is not None:
        report["mu"] = _mu(doc, pi)
    return 0, report


def _bound_inputs(args):
    """(T, lambda, mu, phi_norm) from the chain document, overridden by flags."""
    T = args.T
    lam = args.lam
    mu = args.mu
    phi = args.phi_norm
    if args.chain:
        doc = _load(args)
        pi = _pi(doc)
        if phi is None:
            phi = _phi_norm(doc, pi)
        if mu is None:
            mu = _mu(doc, pi)
        if T is None:
            if doc.mode == "discrete":
                T = mixing.mixing_time_discrete(doc.model, pi, args.epsilon).T
            else:
                T = mixing.mixing_time_continuous(doc.model, pi, args.epsilon).T
        if lam is None and doc.mode == "discrete" and args.family == "spectral":
            lam = spectral_expansion(doc.model, pi).lam
    if mu is None:
        raise UsageError("need --mu or a chain document with weights")
    return T, lam, mu, 1.0 if phi is None else phi


def _one_bound(family, T, lam, mu, t, delta, phi, tail, epsilon):
    if family == "spectral":
        if lam is None:
            raise UsageError("spectral family needs --lambda or a discrete chain")
        return mgf_bounds.bound_spectral(lam, mu, t, delta, phi, tail)
    if T is None:
        raise UsageError(f"{family} family needs --T or a chain document")
    if family == "mixing":
        return mgf_bounds.bound_mixing(int(T), epsilon, mu, t, delta, phi, tail)
    if family == "union":
        return mgf_bounds.bound_union_variant(int(T), epsilon, mu, t, delta, phi, tail)
    return mgf_bounds.bound_continuous(T, mu, t, delta, phi, tail, epsilon)


def cmd_bound(args):
    if args.t is None:
        raise UsageError("--t is required")
    T, lam, mu, phi = _bound_inputs(args)
    rep = _one_bound(args.family, T, lam, mu, args.t, args.delta, phi, args.tail, args.epsilon)
    report = rep.as_dict()
    return (2 if args.strict and rep.vacuous else 0), report


def cmd_mgf(args):
    doc = _load(args)
    _require_discrete(doc, "mgf")
    pi = _pi(doc)
    t = int(args.t) if args.t is not None else None
    sched = doc.schedule(pi, t)
    phi = _start(doc, pi)
    sign = mgf_bounds.tail_sign(args.tail)
    lam = spectral_expansion(doc.model, pi).lam
    r = args.r if args.r is not None else mgf_bounds.choose_r(lam, args.delta, args.tail)
    trace = mgf_bounds.mgf_trace(doc.model, pi, phi, sched, r=r, tail=args.tail, lam=lam)
    brute = None
    if doc.n ** sched.t <= BRUTE_FORCE_LIMIT:
        brute = mgf_bounds.brute_force_mgf(doc.model, phi, sched, r, sign)
    dominated = trace.exact <= trace.bound * (1 + 1e-10)
    report = {
        "tail": args.tail,
        "r": r,
        "lambda": lam,
        "mu": sched.mu,
        "t": sched.t,
        "exact": trace.exact,
        "brute_force": brute,
        "recurrence": trace.alpha[-1],
        "product_bound": trace.product_bound,
        "closed_bound": trace.closed_bound,
        "bound": trace.bound,
        "dominated": dominated,
    }
    return (0 if dominated else 1), report


def cmd_simulate(args):
    if args.seed is None:
        raise UsageError("simulate needs an explicit --seed")
    doc = _load(args)
    pi = _pi(doc)
    phi = _start(doc, pi)
    phi_norm = pi_norm(phi, pi)
    if doc.weights is None:
        raise UsageError("simulate needs a weights block")
    bounds = {}
    if doc.mode == "discrete":
        t = int(args.t) if args.t is not None else None
        sched = doc.schedule(pi, t)
        est = montecarlo.empirical_tail(doc.model, phi, sched, args.delta, args.samples,
                                        args.seed, args.tail)
        T = mixing.mixing_time_discrete(doc.model, pi, args.epsilon).T
        lam = spectral_expansion(doc.model, pi).lam
        families = [args.family] if args.family else ["mixing", "spectral", "union"]
        for fam in families:
            bounds[fam] = _one_bound(fam, T, lam, sched.mu, sched.t, args.delta, phi_norm,
                                     args.tail, args.epsilon)
    else:
        if args.t is None:
            raise UsageError("continuous simulate needs --t (the horizon)")
        f = doc.weights[0]
        mu = float(f @ pi)
        est = montecarlo.empirical_tail(doc.model, phi, f, args.delta, args.samples, args.seed,
                                        args.tail, horizon=float(args.t))
        T = mixing.mixing_time_continuous(doc.model, pi, args.epsilon).T
        bounds["continuous"] = mgf_bounds.bound_continuous(T, mu, float(args.t), args.delta,
                                                           phi_norm, args.tail, args.epsilon)
    limit = est.p_hat - 3 * est.stderr
    verdicts = {fam: limit <= b.value for fam, b in bounds.items()}
    report = {
        "empirical": est.as_dict(),
        "bounds": {fam: b.as_dict() for fam, b in bounds.items()},
        "dominated": verdicts,
        "seed": args.seed,
    }
    if not all(verdicts.values()):
        return 1, report
    if args.strict and all(b.vacuous for b in bounds.values()):
        return 2, report
    return 0, report


def _instance_chain(rng, suite):
    n = int(rng.integers(2, 9))
    kind = "reversible" if suite in ("lemma3", "sinclair") else str(rng.choice(constructions.KINDS))
    seed = int(rng.integers(2 ** 63))
    return constructions.build_random_chain(n, seed, kind)


def _check_chain(suite, chain, pi, epsilon, seed, weights=None):
    if suite == "claim1":
        return [mixing.verify_mixing_implies_expansion(chain, pi, epsilon)]
    if suite == "lemma3":
        return [mixing.verify_reversible_expansion_bound(chain, pi, epsilon)]
    if suite == "claim4":
        return [mixing.verify_tv_contraction(chain, pi, epsilon, seed=seed)]
    if suite == "sinclair":
        return [mixing.verify_relaxation_lower_bound(chain, pi, epsilon)]
    if suite == "m-operator":
        return [m_operator_check(chain, pi, seed=seed)]
    rng = np.random.default_rng(seed)
    f = weights if weights is not None else rng.random(chain.n)
    reports = []
    for r in (0.1, 0.5):
        for sign in (1, -1):
            reports += mgf_bounds.p_operator_check(pi, f, r, sign, trials=100, seed=seed)
    return reports


def cmd_verify(args):
    suites = SUITES if args.suite == "all" else (args.suite,)
    jobs = []
    if args.chain:
        doc = _load(args)
        _require_discrete(doc, "verify")
        pi = _pi(doc)
        w = doc.weights[0] if doc.weights is not None else None
        for suite in suites:
            jobs.append((suite, 0, doc.model, pi, w))
    else:
        if args.seed is None:
            raise UsageError("verify on generated instances needs an explicit --seed")
        for suite in suites:
            rng = np.random.default_rng([args.seed, SUITES.index(suite)])
            for k in range(args.instances):
                chain = _instance_chain(rng, suite)
                jobs.append((suite, k, chain, stationary_distribution(chain), None))

    results = []
    failed = False
    for suite, k, chain, pi, w in jobs:
        try:
            reps = _check_chain(suite, chain, pi, args.epsilon, args.seed or 0, w)
            ok = all(rep.passed for rep in reps)
            worst = min(reps, key=lambda rep: rep.margin)
            entry = {"suite": suite, "instance": k, "n": chain.n, "passed": ok,
                     "check": worst.name, "lhs": worst.lhs, "rhs": worst.rhs}
        except CheckFailed as exc:
            ok = False
            entry = {"suite": suite, "instance": k, "n": chain.n, "passed": False,
                     "check": exc.item, "lhs": exc.lhs, "rhs": exc.rhs}
        failed |= not ok
        results.append(entry)
    report = {"results": results, "passed": sum(e["passed"] for e in results), "total": len(results)}
    return (1 if failed else 0), report


def _verify_text(report) -> str:
    lines = []
    for e in report["results"]:
        verdict = "pass" if e["passed"] else "FAIL"
        lines.append(f"{e['suite']} instance {e['instance']}: {verdict} "
                     f"{e['check']}: {e['lhs']!r} <= {e['rhs']!r}")
    lines.append(f"passed = {report['passed']}/{report['total']}")
    return "\n".join(lines)


def cmd_construct(args):
    if args.kind == "two-state":
        if args.p is None:
            raise UsageError("two-state needs --p")
        ex = constructions.build_two_state(args.p)
        doc = ChainDocument("discrete", ex.chain, ex.indicator[None, :],
                            np.array([1.0, 0.0]) if args.start_state else None)
    elif args.kind == "split":
        if args.chain:
            base = _load(args)
            _require_discrete(base, "split")
            base = base.model
        elif args.p is not None:
            base = constructions.build_two_state(args.p).chain
        else:
            raise UsageError("split needs --chain or --p")
        doc = ChainDocument("discrete", constructions.build_split_chain(base))
    else:
        if args.seed is None:
            raise UsageError("random construction needs an explicit --seed")
        chain = constructions.build_random_chain(args.n, args.seed, args.random_kind)
        doc = ChainDocument("discrete", chain)
    text = emit_chain_file(doc)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        return 0, {"written": args.out, "n": doc.n}
    return 0, text


# --- argument parsing -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--chain", help="path to a chain document")
    common.add_argument("--json", action="store_true", help="emit JSON")
    common.add_argument("--strict", action="store_true", help="exit 2 on vacuous bounds")
    common.add_argument("--seed", type=int)

    def real_t(s):
        v = float(s)
        return int(v) if v.is_integer() and "." not in s and "e" not in s.lower() else v

    bounds = _Parser(add_help=False)
    bounds.add_argument("--delta", type=float, default=1.0)
    bounds.add_argument("--t", type=real_t)
    bounds.add_argument("--tail", choices=mgf_bounds.TAILS, default="upper")
    bounds.add_argument("--epsilon", type=float, default=0.125)

    parser = _Parser(prog="mixchernoff", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze", parents=[common], help="pi, lambda, gap and mixing times")
    p.add_argument("--epsilon", type=float, nargs="+", default=[0.125])

    p = sub.add_parser("bound", parents=[common, bounds], help="evaluate one bound family")
    p.add_argument("--family", choices=FAMILIES, default="mixing")
    p.add_argument("--T", type=float, help="mixing time (overrides the chain)")
    p.add_argument("--mu", type=float)
    p.add_argument("--phi-norm", type=float)
    p.add_argument("--lambda", dest="lam", type=float)

    p = sub.add_parser("mgf", parents=[common, bounds], help="exact MGF against its bounds")
    p.add_argument("--r", type=float)

    p = sub.add_parser("simulate", parents=[common, bounds], help="Monte-Carlo tail against bounds")
    p.add_argument("--family", choices=FAMILIES)
    p.add_argument("--samples", type=int, default=100_000)

    p = sub.add_parser("verify", parents=[common], help="run inequality suites")
    p.add_argument("--suite", choices=SUITES + ("all",), default="all")
    p.add_argument("--instances", type=int, default=10)
    p.add_argument("--epsilon", type=float, default=0.125)

    p = sub.add_parser("construct", parents=[common], help="emit a canonical chain document")
    p.add_argument("--kind", choices=("two-state", "split", "random"), default="two-state")
    p.add_argument("--p", type=float)
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--random-kind", choices=constructions.KINDS, default="general")
    p.add_argument("--start-state", action="store_true", help="start the two-state walk in state 0")
    p.add_argument("--out")
    return parser


COMMANDS = {
    "analyze": cmd_analyze,
    "bound": cmd_bound,
    "mgf": cmd_mgf,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "construct": cmd_construct,
}


def run(argv) -> tuple[int, str]:
    """Run one command; returns (exit code, text to print)."""
    try:
        args = build_parser().parse_args(argv)
        code, report = COMMANDS[args.command](args)
    except UsageError as exc:
        return 1, f"error: {exc}"
    except (ParseError, ChainError, ValueError, NoConvergence, IterationCapExceeded,
            CheckFailed, OSError) as exc:
        return 1, f"error: {type(exc).__name__}: {exc}"
    if isinstance(report, str):
        return code, report.rstrip("\n")
    if args.command == "verify" and not args.json:
        return code, _verify_text(report)
    return code, render(report, args.json)


def main(argv=None) -> int:
    code, text = run(sys.argv[1:] if argv is None else argv)
    stream = sys.stderr if text.startswith("error:") else sys.stdout
    print(text, file=stream)
    return code


if __name__ == "__main__":
    sys.exit(main())

"""Command-line verifier: model files in, JSON reports out.

Exit codes: 0 pass, 1 verified failure, 2 usage or schema error,
3 resource budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction
from typing import Optional

from . import duality as du
from . import liealg as la
from . import models as M
from .exactnum import ParseError, rat_parse, rat_str
from .linop import EXACT, FLOAT, SparseOp, compose
from .modelfile import SchemaError, _alpha, build_generator, build_map, load_model_file
from .statespace import DEFAULT_BUDGET, BudgetError, ConfigSpace, SiteGraph

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3
WITNESS_CAP = 10
COMMUTANT_BUDGET = 4096
DEFAULT_FLOAT_TOL = 1e-12


class UsageError(ValueError):
    pass


# -- report plumbing ---------------------------------------------------------------


def passed_from(residual, tol: Optional[float] = None) -> bool:
    """The pass flag is always recomputed from the residual summary."""
    if residual == "exact-zero":
        return True
    if not isinstance(residual, dict):
        return False
    if "violations" in residual:
        return residual["violations"] == 0
    if "max-z" in residual:
        return residual["max-z"] <= residual["threshold"]
    if "max-abs" in residual:
        return residual.get("backend") == FLOAT and tol is not None and residual["max-abs"] <= tol
    return False


def exact_or_max(ok: bool, max_abs: float, backend: str = EXACT) -> object:
    if backend == EXACT:
        return "exact-zero" if ok else {"max-abs": max_abs}
    return {"max-abs": max_abs, "backend": FLOAT}


def make_report(command: str, inputs: dict, backend: str, residual, witnesses=(),
                tol: Optional[float] = None, **details) -> dict:
    if backend == FLOAT and tol is None and isinstance(residual, dict) and "max-abs" in residual:
        tol = DEFAULT_FLOAT_TOL
    return {
        "command": command, "inputs": inputs, "backend": backend,
        "pass": passed_from(residual, tol), "residual": residual, "tol": tol,
        "witnesses": list(witnesses)[:WITNESS_CAP], **details,
    }


def _jsonable(x):
    if isinstance(x, Fraction):
        return rat_str(x)
    if isinstance(x, tuple):
        return list(x)
    return str(x)


def _r(x) -> Fraction:
    try:
        return rat_parse(str(x))
    except ParseError as exc:
        raise UsageError(str(exc)) from None


def _rat_list(text: str) -> list:
    return [_r(t) for t in text.split(",") if t.strip()]


# -- commands ----------------------------------------------------------------------


def cmd_validate(args) -> dict:
    mf = load_model_file(args.file)
    bundle = build_generator(mf, budget=args.space_budget)
    rep = M.validate_generator(bundle.L)
    space = bundle.space
    wit = []
    for v in rep.witnesses(WITNESS_CAP):
        w = {"kind": v["kind"], "from": list(space.config(v["row"])), "value": _jsonable(v["value"])}
        if v["col"] is not None:
            w["to"] = list(space.config(v["col"]))
        wit.append(w)
    return make_report("validate", {"file": args.file, "model": bundle.label}, EXACT,
                       {"violations": len(rep.violations)}, wit, states=len(space))


def _model_ls_params(bundle) -> Optional[M.LSParams]:
    p = bundle.params.get("params")
    return p if isinstance(p, M.LSParams) else None


def _custom_matrix(rows, shape) -> SparseOp:
    D = SparseOp.from_dense([[_r(v) for v in row] for row in rows])
    if D.shape != shape:
        raise UsageError(f"custom matrix has shape {D.shape}, expected {shape}")
    return D


def cmd_duality_check(args) -> dict:
    mf = load_model_file(args.file)
    spec = mf.duality
    if spec is None:
        raise SchemaError("duality-check needs a 'duality' block")
    inputs = {"file": args.file, "duality": spec.kind}
    if spec.kind == "gamma-kernel":
        alpha = _alpha(mf.model, mf.sites)
        rep = du.check_sip_bep_duality(mf.site_graph(), alpha, spec.max_total or mf.cap or 3)
        s = rep.summary()
        return make_report("duality-check", inputs, EXACT, s["residual"], s["witnesses"],
                           cases_checked=s["cases_checked"])
    if spec.kind == "map":
        space = ConfigSpace.binary(mf.sites, budget=args.space_budget)
        if spec.function == "matrix":
            if spec.matrix is None:
                raise SchemaError("function 'matrix' needs 'matrix'")
            D = du.matrix_function(_custom_matrix(spec.matrix, (len(space), len(space))), space)
        else:
            D = du.d0_function
        witnesses, count = [], 0
        for pair in spec.pairs:
            r = du.check_map_duality(build_map(pair.forward), build_map(pair.backward), D, space)
            count += r.pairs_checked
            for w in r.witnesses:
                witnesses.append({"forward": pair.forward.kind, "backward": pair.backward.kind, **w})
        residual = "exact-zero" if not witnesses else {"violations": len(witnesses)}
        return make_report("duality-check", inputs, EXACT, residual, witnesses, pairs_checked=count)

    bundle = build_generator(mf, budget=args.space_budget)
    L, space = bundle.L, bundle.space
    if spec.kind == "thinning":
        if mf.dual is None:
            raise SchemaError("thinning needs a 'dual' model")
        L_hat = build_generator(mf, mf.dual, budget=args.space_budget).L
        K = du.thinning_kernel(space, _r(spec.p))
        rep = du.check_intertwining(L, L_hat, K, tol=args.tol)
    else:
        if spec.kind == "q":
            q = _r(spec.q)
            D = du.dq_matrix(space, q)
            inputs["q"] = rat_str(q)
        elif spec.kind == "product-indicator":
            D = du.indicator_product(space, spec.relation)
            inputs["relation"] = spec.relation
        else:
            D = _custom_matrix(spec.matrix, (len(space), len(space)))
        if mf.dual is not None:
            L_hat = build_generator(mf, mf.dual, budget=args.space_budget).L
        elif spec.kind == "q" and _model_ls_params(bundle) is not None:
            dual_params = du.q_dual_params(_model_ls_params(bundle), q)
            inputs["dual_params"] = [rat_str(v) for v in dual_params.astuple()]
            L_hat = M.lloyd_sudbury(dual_params, mf.site_graph(), strict=False).L
        else:
            L_hat = L
        rep = du.check_duality(L, L_hat, D, tol=args.tol)
    s = rep.summary()
    residual = exact_or_max(rep.passed, rep.max_abs, rep.backend)
    return make_report("duality-check", inputs, rep.backend, residual, s["witnesses"],
                       tol=args.tol, warnings=s["warnings"], rows_checked=s["rows_checked"])


def cmd_q_dual(args) -> dict:
    p = M.LSParams(*(_r(getattr(args, k)) for k in "abcde"))
    q = _r(args.q)
    try:
        dual = du.q_dual_params(p, q)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    graph = SiteGraph.preset(args.graph, args.sites)
    space = ConfigSpace.binary(args.sites, budget=args.space_budget)
    L = M.lloyd_sudbury(p, graph, strict=False).L
    L_hat = M.lloyd_sudbury(dual, graph, strict=False).L
    rep = du.check_duality(L, L_hat, du.dq_matrix(space, q))
    tup = "(" + ",".join(rat_str(v) for v in dual.astuple()) + ")"
    return make_report(
        "q-dual", {"params": [rat_str(v) for v in p.astuple()], "q": rat_str(q),
                   "sites": args.sites, "graph": args.graph},
        EXACT, exact_or_max(rep.passed, rep.max_abs), rep.witnesses(),
        dual=tup, dual_params=dict(zip("abcde", (rat_str(v) for v in dual.astuple()))),
        gamma=rat_str(du.q_gamma(p, q)), dual_is_generator=dual.nonnegative(),
    )


def cmd_thinning_check(args) -> dict:
    s = _r(args.s)
    p = _r(args.p) if args.p is not None else s / (1 + s)
    graph = SiteGraph.preset(args.graph, args.sites)
    bias = M.biased_voter(s, graph)
    brac = M.braco(s, graph)
    K = du.thinning_kernel(bias.space, p)
    rep = du.check_intertwining(bias.L, brac.L, K)
    mu = du.product_bernoulli(brac.space, p)
    drift = brac.L.lapply(mu)
    invariant = all(v == 0 for v in drift)
    ok = rep.passed and invariant
    worst = max([rep.max_abs] + [abs(float(v)) for v in drift])
    wit = rep.witnesses()
    if not invariant:
        wit += [{"bernoulli_drift_at": list(brac.space.config(i)), "value": rat_str(v)}
                for i, v in enumerate(drift) if v != 0]
    return make_report("thinning-check", {"s": rat_str(s), "p": rat_str(p), "sites": args.sites,
                                          "graph": args.graph},
                       EXACT, exact_or_max(ok, worst), wit,
                       intertwining_passed=rep.passed, bernoulli_invariant=invariant)


def _small_matrix(op: SparseOp) -> list:
    return [[rat_str(v) for v in row] for row in op.to_dense()]


def cmd_commutant(args) -> dict:
    mf = load_model_file(args.file)
    bundle = build_generator(mf, budget=args.space_budget)
    basis = du.commutant(bundle.L, budget=args.budget or COMMUTANT_BUDGET)
    bad = [k for k, S in enumerate(basis) if not (compose(S, bundle.L) - compose(bundle.L, S)).is_zero()]
    details = {"dimension": len(basis)}
    if bundle.L.shape[0] <= 8:
        details["basis"] = [_small_matrix(S) for S in basis]
    return make_report("commutant", {"file": args.file, "model": bundle.label}, EXACT,
                       {"violations": len(bad)}, [{"basis_element": k} for k in bad], **details)


def cmd_invariant_measure(args) -> dict:
    mf = load_model_file(args.file)
    bundle = build_generator(mf, budget=args.space_budget)
    basis = du.invariant_measures(bundle.L)
    out, bad = [], []
    for k, mu in enumerate(basis):
        total = sum(mu)
        if total != 0:
            mu = [v / total for v in mu]
        if any(v != 0 for v in bundle.L.lapply(mu)):
            bad.append({"measure": k})
        out.append({"".join(map(str, bundle.space.config(i))): rat_str(v)
                    for i, v in enumerate(mu) if v != 0})
    return make_report("invariant-measure", {"file": args.file, "model": bundle.label}, EXACT,
                       {"violations": len(bad)}, bad, dimension=len(basis), measures=out)


def cmd_rep_check(args) -> dict:
    kind = args.rep
    casimir = None
    if kind == "pauli":
        rep, table = la.pauli_rep(), la.SU2_XYZ
    elif kind == "pseudo-pauli":
        rep, table = la.pseudo_pauli_rep(), la.SU11_XYZ
    elif kind == "spin":
        rep, table = la.su2_spin_rep(args.n), la.SU2_PM0
        casimir = ("n(n+2)", la.scalar_residual(la.su2_casimir(rep), args.n * (args.n + 2)))
    elif kind == "bargmann":
        r = _r(args.r)
        rep, table = la.su11_bargmann_rep(r, args.cap), la.SU11_PM0
        casimir = ("r(r-1)", la.scalar_residual(la.su11_casimir(rep), float(r * (r - 1))))
    elif kind == "su11-conjugate":
        rep, table = la.su11_conjugate_rep(_r(args.alpha), args.cap), la.SU11_CONJ
    else:
        rep, table = la.heisenberg_number_rep(args.cap), la.HEISENBERG
    if args.table:
        table = la.TABLES[args.table]
    tol = args.tol if args.tol is not None else (None if rep.backend == EXACT else 1e-12)
    res = la.check_representation(rep, table, tol=tol)
    d = res.as_dict()
    sizes = [v["residual"] for v in d["commutation"].values()]
    sizes += [v["residual"] for v in d["adjoint"].values() if isinstance(v, dict)]
    worst = max(sizes, default=0.0)
    details = {"table": table.name, "commutation": d["commutation"], "adjoint": d["adjoint"]}
    ok = res.passed
    if casimir is not None:
        details["casimir"] = {"value": casimir[0], "residual": casimir[1]}
        ok = ok and casimir[1] <= tol
        worst = max(worst, casimir[1])
    if rep.backend == EXACT:
        residual = "exact-zero" if ok else {"max-abs": worst, "failing": res.failures}
    else:
        residual = {"max-abs": worst, "backend": FLOAT}
        if not ok:
            residual["failing"] = res.failures or ["casimir"]
    return make_report("rep-check", {"rep": kind, "n": args.n, "r": args.r, "alpha": args.alpha,
                                     "cap": args.cap}, rep.backend, residual,
                       [{"relation": f} for f in res.failures], tol=tol, **details)


def cmd_sip_bep_check(args) -> dict:
    graph = SiteGraph.preset(args.graph, args.sites)
    alpha = _rat_list(args.alpha)
    if len(alpha) == 1:
        alpha *= args.sites
    if len(alpha) != args.sites:
        raise UsageError("alpha needs one entry or one per site")
    rep = du.check_sip_bep_duality(graph, alpha, args.max_total)
    blocks_ok = True
    if not args.skip_blocks:
        cap = args.max_total + 1
        built = M.sip_from_blocks(graph, alpha, cap)
        direct = M.sip_generator(graph, alpha, cap)
        rows = [i for i, x in enumerate(direct.space) if sum(x) <= cap - 1]
        blocks_ok = (built.L - direct.L).restrict_rows(rows).is_zero()
    s = rep.summary()
    ok = rep.passed and blocks_ok
    return make_report("sip-bep-check", {"sites": args.sites, "graph": args.graph,
                                         "alpha": [rat_str(a) for a in alpha],
                                         "max_total": args.max_total},
                       EXACT, "exact-zero" if ok else {"violations": len(rep.failures) + (not blocks_ok)},
                       s["witnesses"], cases_checked=s["cases_checked"], blocks_match=blocks_ok)


def cmd_wf_check(args) -> dict:
    s = _r(args.s)
    rep = du.check_wf_dualities(s, args.cap)
    agree, _ = du.wf_expression_agrees(s, args.degree)
    details = {"expression_agrees": agree}
    ok = rep.passed and agree
    if s > 0:
        agree2, sqrt_free = du.wf_expression_agrees(s, args.degree, sqrt_form=True)
        details.update(sqrt_expression_agrees=agree2, sqrt_cancels=sqrt_free)
        ok = ok and agree2 and sqrt_free
    sm = rep.summary()
    return make_report("wf-check", {"s": rat_str(s), "cap": args.cap, "degree": args.degree},
                       EXACT, "exact-zero" if ok else {"violations": len(rep.failures) + 1},
                       sm["witnesses"], cases_checked=sm["cases_checked"], **details)


def cmd_mc_duality(args) -> dict:
    from . import simulate as sim

    test, s, reps, step, seed = args.test, args.s, args.replicates, args.step, args.seed
    horizon, n, x = None, args.n, args.x
    if args.file:
        mf = load_model_file(args.file)
        if mf.simulation is None:
            raise SchemaError("mc-duality needs a 'simulation' block")
        sp = mf.simulation
        test, reps, seed = sp.test, sp.replicates, sp.seed
        step, horizon, n, x = sp.step, sp.horizon, sp.n, sp.x
        s = mf.model.params.get("s", "1")
    s_q = _r(s)
    step_f = float(_r(step))
    if test == "self":
        plan = sim.SamplePlan(reps, 0.5, seed=seed, step=step_f)
        est = sim.wf_self_duality_mc(s_q, plan)
    else:
        t = float(_r(horizon)) if horizon is not None else 0.25
        plan = sim.SamplePlan(reps, t, seed=seed, step=step_f)
        est = sim.wf_moment_mc(s_q, plan, x=float(_r(x)), n=n, t=t)
    zmax = max(e.z for e in est)
    bad = [e.as_dict() for e in est if e.z > 4.0]
    return make_report("mc-duality", {"test": test, "s": rat_str(s_q), "replicates": reps,
                                      "step": step_f, "seed": seed},
                       FLOAT, {"max-z": zmax, "threshold": 4.0}, bad,
                       estimates=[e.as_dict() for e in est])


# -- parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="RNG seed for sampling commands")
    common.add_argument("--tol", type=float, default=None, help="tolerance for float backends")
    common.add_argument("--budget", type=int, default=None,
                        help=f"maximum state-space size, default {DEFAULT_BUDGET} "
                             f"({COMMUTANT_BUDGET} unknowns for commutant); exit 3 when exceeded")
    common.add_argument("--timing", action="store_true",
                        help="add wall-clock timing (reports are otherwise byte-stable)")

    parser = argparse.ArgumentParser(prog="markovdual", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_, with_file=False):
        p = sub.add_parser(name, parents=[common], help=help_)
        if with_file:
            p.add_argument("file", help="YAML model file")
        p.set_defaults(func=fn)
        return p

    add("validate", cmd_validate, "check that a model is a Markov generator", True)
    add("duality-check", cmd_duality_check, "check the duality block of a model file", True)
    p = add("q-dual", cmd_q_dual, "dual Lloyd-Sudbury parameters for D_q")
    for k in "abcde":
        p.add_argument(f"--{k}", required=True)
    p.add_argument("--q", required=True)
    p.add_argument("--sites", type=int, default=3)
    p.add_argument("--graph", choices=["complete", "cycle", "path"], default="complete")
    p = add("thinning-check", cmd_thinning_check, "biased voter vs branching-coalescing walks")
    p.add_argument("--s", required=True)
    p.add_argument("--p", default=None, help="thinning probability (default s/(1+s))")
    p.add_argument("--sites", type=int, default=3)
    p.add_argument("--graph", choices=["complete", "cycle", "path"], default="complete")
    add("commutant", cmd_commutant, "exact basis of matrices commuting with L", True)
    add("invariant-measure", cmd_invariant_measure, "exact invariant measures", True)
    p = add("rep-check", cmd_rep_check, "commutation and adjoint relations of a representation")
    p.add_argument("--rep", required=True,
                   choices=["pauli", "pseudo-pauli", "spin", "bargmann", "su11-conjugate", "heisenberg"])
    p.add_argument("--table", choices=sorted(la.TABLES), default=None)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--r", default="1")
    p.add_argument("--alpha", default="1")
    p.add_argument("--cap", type=int, default=12)
    p = add("sip-bep-check", cmd_sip_bep_check, "inclusion / energy process duality")
    p.add_argument("--sites", type=int, default=2)
    p.add_argument("--graph", choices=["complete", "cycle", "path"], default="complete")
    p.add_argument("--alpha", default="1", help="comma-separated rationals")
    p.add_argument("--max-total", type=int, default=5)
    p.add_argument("--skip-blocks", action="store_true")
    p = add("wf-check", cmd_wf_check, "Wright-Fisher moment, block and exp dualities")
    p.add_argument("--s", default="1")
    p.add_argument("--cap", type=int, default=10)
    p.add_argument("--degree", type=int, default=8)
    p = add("mc-duality", cmd_mc_duality, "Monte Carlo duality test for Wright-Fisher")
    p.add_argument("file", nargs="?", default=None)
    p.add_argument("--test", choices=["self", "moment"], default="self")
    p.add_argument("--s", default="1")
    p.add_argument("--replicates", type=int, default=100_000)
    p.add_argument("--step", default="1/1000")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--x", default="1/2")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.budget is not None and args.budget < 1:
        parser.error("--budget must be positive")
    args.space_budget = args.budget or DEFAULT_BUDGET
    start = time.perf_counter()
    try:
        report = args.func(args)
    except BudgetError as exc:
        print(json.dumps({"command": args.command, "error": "budget", "message": str(exc)}),
              file=sys.stderr)
        return EXIT_BUDGET
    except (SchemaError, UsageError, ParseError, M.ParameterError, du.KernelError) as exc:
        print(json.dumps({"command": args.command, "error": "usage", "message": str(exc)}),
              file=sys.stderr)
        return EXIT_USAGE
    if args.timing:
        report["timing"] = {"seconds": round(time.perf_counter() - start, 6)}
    print(json.dumps(report, indent=2, sort_keys=True, default=_jsonable))
    return EXIT_PASS if report["pass"] else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())

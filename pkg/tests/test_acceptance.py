"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v -s``; the lines are
also collected into the terminal summary of any pytest run.
"""

import random
import time
from fractions import Fraction

import numpy as np

from markovdual import duality as du
from markovdual import liealg as la
from markovdual import models as M
from markovdual import simulate as sim
from markovdual.cli import main as cli_main
from markovdual.exactnum import GaussRat
from markovdual.linop import EXACT, SparseOp, commutator, compose, exp_nilpotent, kron_all
from markovdual.polyop import ExpKernelElem, Poly, heisenberg_blocks, wf_generator
from markovdual.statespace import ConfigSpace, SiteGraph

Q_VALUES = (Fraction(0), Fraction(-1), Fraction(1, 2), Fraction(-1, 3))
S_VALUES = (Fraction(1), Fraction(2), Fraction(1, 2))


def graphs(sizes=(2, 3, 4)):
    for n in sizes:
        yield SiteGraph.complete(n)
        if n > 2:
            yield SiteGraph.cycle(n)


def test_c01_q_duality_sweep(criterion):
    with criterion(1, "q-duality sweep, >= 200 nonnegative dual parameter sets"):
        start = time.perf_counter()
        rng = random.Random(20240101)
        sites = (2, 3, 4)
        kinds = ("complete", "cycle")
        checked = signed = 0
        attempts = 0
        while checked < 240 and attempts < 5000:
            attempts += 1
            q = Q_VALUES[attempts % 4]
            n = sites[(attempts // 4) % 3]
            kind = kinds[(attempts // 12) % 2]
            g = SiteGraph.preset(kind, n)
            p = M.LSParams(*(Fraction(rng.randint(0, 8), rng.randint(1, 4)) for _ in range(5)))
            dual = du.q_dual_params(p, q)
            D = du.dq_matrix(ConfigSpace.binary(n), q)
            L = M.lloyd_sudbury(p, g).L
            L_hat = M.lloyd_sudbury(dual, g, strict=False).L
            rep = du.check_duality(L, L_hat, D)
            assert rep.residual.is_zero(), (p, q, kind, n)
            if dual.nonnegative():
                checked += 1
            else:
                signed += 1
        elapsed = time.perf_counter() - start
        print(f"  {checked} nonnegative + {signed} signed dual sets, {elapsed:.1f}s")
        assert checked >= 200
        assert elapsed <= 60


def test_c02_biased_voter_braco_ladder(criterion):
    with criterion(2, "biased voter / braco ladder"):
        for s in S_VALUES:
            p = M.biased_voter_params(s)
            assert du.q_dual_params(p, 0) == M.LSParams(0, s, 1, 0, 1)
            assert du.q_dual_params(p, 1 / (1 + s)) == p
            pk = s / (1 + s)
            for g in graphs():
                space = ConfigSpace.binary(g.n)
                K = du.thinning_kernel(space, pk)
                L_bias, L_braco = M.biased_voter(s, g).L, M.braco(s, g).L
                assert du.check_intertwining(L_bias, L_braco, K).residual.is_zero()
                mu = du.product_bernoulli(space, pk)
                assert all(v == 0 for v in L_braco.lapply(mu))


def test_c03_dq_ratio_is_thinning(criterion):
    with criterion(3, "D_q D_q'^-1 = K_p on 3 sites"):
        space = ConfigSpace.binary(3)
        for q, q2 in [(Fraction(1, 2), Fraction(0)), (Fraction(0), Fraction(-1)),
                      (Fraction(1, 4), Fraction(-1))]:
            lhs = compose(du.dq_matrix(space, q), du.dq_inverse(space, q2))
            assert lhs == du.thinning_kernel(space, (1 - q) / (1 - q2))


def test_c04_sep_self_dualities(criterion):
    with criterion(4, "SEP self-dualities, symmetries, exp(K+) factorization"):
        for g in graphs():
            space = ConfigSpace.binary(g.n)
            L = M.sep_generator(g).L
            for rel in ("neq", "geq"):
                assert du.check_duality(L, L, du.indicator_product(space, rel)).residual.is_zero()
            for s in "+-0":
                assert commutator(la.collective_operator(s, space), L).is_zero()
            plus = la._single_site("su2-sep", 2)["j+"]
            S = exp_nilpotent(la.collective_operator("+", space))
            assert S == kron_all([SparseOp.identity(2) + plus] * g.n)
            assert S == du.indicator_product(space, "geq")


def test_c05_lie_representations(criterion):
    with criterion(5, "Lie representation suite"):
        pauli = la.pauli_rep()
        assert pauli.backend == EXACT
        assert all(isinstance(v, (Fraction, GaussRat)) for op in pauli.ops.values() for _, v in op.items())
        assert all(isinstance(v, GaussRat) for _, v in pauli.ops["y"].items())
        assert la.check_representation(pauli, la.SU2_XYZ).passed
        assert la.scalar_residual(la.su2_casimir(pauli), 3) == 0
        for n in range(1, 9):
            rep = la.su2_spin_rep(n)
            assert la.check_representation(rep, la.SU2_PM0, tol=1e-12).passed
            assert la.scalar_residual(la.su2_casimir(rep), n * (n + 2)) <= 1e-12
        pseudo = la.check_representation(la.pseudo_pauli_rep(), la.SU11_XYZ)
        assert all(v["passed"] for v in pseudo.commutation.values())
        assert not pseudo.passed and set(pseudo.failures) == {"y*", "z*"}
        print(f"  pseudo-Pauli reported failures: {sorted(pseudo.failures)}")
        for alpha in (Fraction(1, 2), Fraction(1), Fraction(2)):
            assert la.check_representation(la.su11_conjugate_rep(alpha, 12), la.SU11_CONJ).passed
        for r in (Fraction(1, 2), Fraction(1), Fraction(3, 2), Fraction(5, 2)):
            rep = la.su11_bargmann_rep(r, 12)
            assert la.scalar_residual(la.su11_casimir(rep), float(r * (r - 1))) <= 1e-12


def test_c06_sip_bep(criterion):
    with criterion(6, "SIP-BEP polynomial duality and SIP from blocks"):
        cases = [(2, [1, 1]), (3, [1, 1, 1]), (2, [Fraction(1, 2), Fraction(3, 2)]), (3, [2, 1, 1])]
        for n, alpha in cases:
            for g in (SiteGraph.complete(n), SiteGraph.path(n)):
                rep = du.check_sip_bep_duality(g, alpha, 5)
                assert rep.passed, rep.failures[:2]
                cap = 6
                built, direct = M.sip_from_blocks(g, alpha, cap), M.sip_generator(g, alpha, cap)
                rows = [i for i, x in enumerate(direct.space) if sum(x) <= cap - 1]
                assert (built.L - direct.L).restrict_rows(rows).is_zero()


def test_c07_wright_fisher(criterion):
    with criterion(7, "Wright-Fisher block, moment and exp dualities"):
        for s in S_VALUES:
            rep = du.check_wf_dualities(s, 11)
            assert rep.passed, rep.failures
            assert du.wf_expression_agrees(s, 8) == (True, True)
            assert du.wf_expression_agrees(s, 8, sqrt_form=True) == (True, True)
            L = wf_generator(s)
            K = ExpKernelElem.kernel(s)
            diff = L.lift(2, [0]).apply(K) - L.lift(2, [1]).apply(K)
            assert isinstance(diff, ExpKernelElem) and diff.is_zero()


def test_c08_monte_carlo_gate(criterion):
    with criterion(8, "Monte Carlo gate at 1e5 replicates"):
        start = time.perf_counter()
        plan = sim.SamplePlan(100_000, 0.5, seed=2024, step=1e-3)
        self_dual = sim.wf_self_duality_mc(1, plan)
        moment_plan = sim.SamplePlan(100_000, 0.25, seed=2024, step=1e-3)
        moment = sim.wf_moment_mc(1, moment_plan, x=0.5, n=2, t=0.25)
        zs = [e.z for e in self_dual + moment]
        print(f"  max z self-duality {max(e.z for e in self_dual):.2f}, moment {moment[0].z:.2f}")
        assert sim.gate(self_dual) and sim.gate(moment)
        again = sim.wf_moment_mc(1, moment_plan, x=0.5, n=2, t=0.25)
        assert again[0].as_dict() == moment[0].as_dict()
        assert np.isfinite(zs).all()
        assert time.perf_counter() - start <= 300


def test_c09_heisenberg(criterion):
    with criterion(9, "Heisenberg [A-, A+] = I on capped polynomials"):
        for cap in (4, 16, 64):
            lower, raise_ = heisenberg_blocks(cap)
            for k in range(cap):
                f = Poly.monomial((k,))
                assert lower(raise_(f)) - raise_(lower(f)) == f


def test_c10_map_duality(criterion, tmp_path, capsys):
    with criterion(10, "voter / coalescing map duality and broken pair"):
        for n in (2, 3):
            space = ConfigSpace.binary(n)
            for g in (SiteGraph.complete(n), SiteGraph.cycle(n) if n > 2 else SiteGraph.complete(2)):
                for (m, _), (mh, _) in zip(M.voter_maps(g), M.coalescing_maps(g)):
                    rep = du.check_map_duality(m, mh, du.d0_function, space)
                    assert rep.passed and rep.pairs_checked == 4 ** n
        bad = tmp_path / "broken.yaml"
        bad.write_text("sites: 2\nmodel: {kind: voter}\nduality:\n  kind: map\n  pairs:\n"
                       "    - forward: {kind: copy, src: 0, dst: 1}\n"
                       "      backward: {kind: coalesce, src: 0, dst: 1}\n")
        code = cli_main(["duality-check", str(bad)])
        out = capsys.readouterr().out
        assert code == 1 and '"witnesses": [' in out and '"lhs"' in out

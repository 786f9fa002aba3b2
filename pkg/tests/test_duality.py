import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from markovdual import duality as du
from markovdual import liealg as la
from markovdual import models as M
from markovdual.linop import (SparseOp, compose, exp_nilpotent, inverse, kron_all, transpose,
                              uniformized_semigroup)
from markovdual.statespace import ConfigSpace, SiteGraph
from oracle_values import ORACLES

Q_VALUES = [Fraction(0), Fraction(-1), Fraction(1, 2), Fraction(-1, 3)]


def ls(p, g):
    return M.lloyd_sudbury(p, g).L


def small_rat(rng):
    return Fraction(rng.randint(0, 6), rng.randint(1, 3))


# -- check_duality / check_intertwining ------------------------------------------


@pytest.mark.parametrize("n", [2, 3, 4])
def test_sep_indicator_self_dualities(n):
    g = SiteGraph.cycle(n) if n > 2 else SiteGraph.complete(2)
    L = M.sep_generator(g).L
    space = ConfigSpace.binary(n)
    for rel in ("neq", "geq"):
        rep = du.check_duality(L, L, du.indicator_product(space, rel))
        assert rep.passed and rep.residual.is_zero() and not rep.warnings
        assert rep.extra["symmetric_passed"]


def test_zero_duality_function_flagged():
    L = M.voter(SiteGraph.complete(2)).L
    rep = du.check_duality(L, L, SparseOp.zero(4))
    assert rep.passed
    assert rep.warnings and rep.warnings[0].startswith("rank-0")


def test_dimension_mismatch():
    L = M.voter(SiteGraph.complete(2)).L
    with pytest.raises(ValueError):
        du.check_duality(L, L, SparseOp.identity(3))


def test_failing_duality_has_witnesses():
    g = SiteGraph.complete(2)
    rep = du.check_duality(M.voter(g).L, M.voter(g).L, SparseOp.identity(4))
    assert not rep.passed
    assert 0 < len(rep.witnesses()) <= du.WITNESS_CAP
    assert rep.summary()["residual"] != "exact-zero"


def test_thinning_intertwining_example():
    g = SiteGraph.complete(3)
    K = du.thinning_kernel(ConfigSpace.binary(3), Fraction(1, 2))
    assert du.check_intertwining(M.biased_voter(1, g).L, M.braco(1, g).L, K).passed


def test_identity_intertwining_and_kernel_guard():
    L = M.voter(SiteGraph.cycle(3)).L
    assert du.check_intertwining(L, L, SparseOp.identity(8)).passed
    with pytest.raises(du.KernelError):
        du.check_intertwining(L, L, SparseOp.identity(8).scale(2))
    assert du.check_intertwining(L, L, SparseOp.identity(8).scale(2), waive_kernel=True).passed


def test_thinning_kernels_compose():
    space = ConfigSpace.binary(3)
    for p, p2 in [(Fraction(1, 2), Fraction(1, 3)), (Fraction(2, 5), Fraction(1)), (0, Fraction(3, 4))]:
        assert compose(du.thinning_kernel(space, p), du.thinning_kernel(space, p2)) == \
            du.thinning_kernel(space, Fraction(p) * p2)
    assert du.thinning_kernel(space, 1) == SparseOp.identity(8)
    with pytest.raises(ValueError):
        du.thinning_kernel(space, Fraction(3, 2))


# -- q-duality ---------------------------------------------------------------------


@pytest.mark.parametrize("s", [Fraction(1), Fraction(2), Fraction(1, 2)])
def test_biased_voter_q_duals(s):
    p = M.biased_voter_params(s)
    assert du.q_dual_params(p, 0) == M.braco_params(s)
    assert du.q_dual_params(p, 1 / (1 + s)) == p
    assert du.q_gamma(p, 1 / (1 + s)) == 0


def test_contact_process_self_dual_at_zero():
    lam = Fraction(2)
    p = M.contact_params(lam)
    assert du.q_gamma(p, 0) == 0 and du.q_dual_params(p, 0) == p
    g = SiteGraph.cycle(3)
    L = ls(p, g)
    assert du.check_duality(L, L, du.dq_matrix(ConfigSpace.binary(3), 0)).passed


def test_q_one_rejected():
    with pytest.raises(ValueError):
        du.q_dual_params(M.VOTER, 1)
    with pytest.raises(ValueError):
        du.single_site_q_inverse(1)


@pytest.mark.parametrize("case", sorted(ORACLES["q_dual"]))
def test_q_dual_params_against_linear_solve(case):
    p, q = case
    got = du.q_dual_params(M.LSParams(*p), Fraction(q))
    assert got.astuple() == tuple(Fraction(v) for v in ORACLES["q_dual"][case])


def test_d0_is_additive_indicator():
    space = ConfigSpace.binary(3)
    D = du.dq_matrix(space, 0)
    for i, x in enumerate(space):
        for j, y in enumerate(space):
            assert D[i, j] == du.d0_function(x, y)


def test_dq_entries():
    space = ConfigSpace.binary(3)
    q = Fraction(-1, 3)
    D = du.dq_matrix(space, q)
    for i, x in enumerate(space):
        for j, y in enumerate(space):
            assert D[i, j] == q ** sum(a * b for a, b in zip(x, y))


def test_dq_inverse_closed_form_matches_elimination():
    space = ConfigSpace.binary(2)
    for q in (Fraction(1, 2), Fraction(0), Fraction(-1), Fraction(3)):
        assert du.dq_inverse(space, q) == inverse(du.dq_matrix(space, q))


@pytest.mark.parametrize("q,q2", [(Fraction(1, 2), Fraction(0)), (Fraction(0), Fraction(-1)),
                                  (Fraction(1, 4), Fraction(-1))])
def test_dq_ratio_is_thinning(q, q2):
    space = ConfigSpace.binary(3)
    lhs = compose(du.dq_matrix(space, q), du.dq_inverse(space, q2))
    assert lhs == du.thinning_kernel(space, (1 - q) / (1 - q2))


@settings(max_examples=60, deadline=None)
@given(st.tuples(*[st.fractions(0, 4, max_denominator=4)] * 5), st.sampled_from(Q_VALUES))
def test_q_dual_is_an_involution(t, q):
    p = M.LSParams(*t)
    assert du.q_dual_params(du.q_dual_params(p, q), q) == p


def test_q_duality_randomized():
    rng = random.Random(7)
    checked = 0
    for _ in range(60):
        p = M.LSParams(*(small_rat(rng) for _ in range(5)))
        q = rng.choice(Q_VALUES)
        n = rng.choice([2, 3])
        g = rng.choice([SiteGraph.complete(n), SiteGraph.cycle(n)])
        dual = du.q_dual_params(p, q)
        if not dual.nonnegative():
            continue
        D = du.dq_matrix(ConfigSpace.binary(n), q)
        assert du.check_duality(ls(p, g), ls(dual, g), D).passed, (p, q, n)
        checked += 1
    assert checked >= 15


def test_q_duality_with_signed_dual_parameters():
    # the algebraic identity does not need a Markov dual
    g = SiteGraph.complete(3)
    p = M.LSParams(0, 3, 0, 1, 0)
    dual = du.q_dual_params(p, Fraction(1, 2))
    assert not dual.nonnegative()
    L_hat = M.lloyd_sudbury(dual, g, strict=False).L
    assert du.check_duality(ls(p, g), L_hat, du.dq_matrix(ConfigSpace.binary(3), Fraction(1, 2))).passed


def test_thinning_from_two_q_dualities():
    # L1 and L2 dual to a common L_hat with q1, q2  =>  L1 K_p = K_p L2
    rng = random.Random(11)
    g = SiteGraph.cycle(3)
    space = ConfigSpace.binary(3)
    hits = 0
    for _ in range(80):
        L_hat_p = M.LSParams(*(small_rat(rng) for _ in range(5)))
        q1, q2 = rng.sample(Q_VALUES, 2)
        p = (1 - q1) / (1 - q2)
        if not 0 <= p <= 1:
            continue
        p1, p2 = du.q_dual_params(L_hat_p, q1), du.q_dual_params(L_hat_p, q2)
        if not (p1.nonnegative() and p2.nonnegative()):
            continue
        rep = du.check_intertwining(ls(p1, g), ls(p2, g), du.thinning_kernel(space, p))
        assert rep.passed
        hits += 1
    assert hits >= 3


def test_two_dualities_give_intertwiner():
    g = SiteGraph.complete(3)
    space = ConfigSpace.binary(3)
    s = Fraction(1)
    L_bias = M.biased_voter(s, g).L
    D1 = du.dq_matrix(space, Fraction(1, 2))
    D2 = du.dq_matrix(space, 0)
    L_braco = M.braco(s, g).L
    assert du.check_duality(L_bias, L_bias, D1).passed
    assert du.check_duality(L_braco, L_bias, D2).passed
    K = compose(D2, inverse(D1))
    assert (compose(L_braco, K) - compose(K, L_bias)).is_zero()


def test_duality_transpose_symmetry():
    g = SiteGraph.cycle(3)
    space = ConfigSpace.binary(3)
    cases = [(M.biased_voter(1, g).L, M.braco(1, g).L, du.dq_matrix(space, 0), True),
             (M.voter(g).L, M.voter(g).L, SparseOp.identity(8), False)]
    for L, L_hat, D, expected in cases:
        assert du.check_duality(L, L_hat, D).passed is expected
        assert du.check_duality(L_hat, L, transpose(D)).passed is expected


@pytest.mark.parametrize("t", [0.1, 1.0])
def test_semigroup_level_duality(t):
    g = SiteGraph.complete(3)
    space = ConfigSpace.binary(3)
    L, L_hat = M.biased_voter(1, g).L, M.braco(1, g).L
    D = du.dq_matrix(space, 0).to_float().to_numpy().real
    P = uniformized_semigroup(L, t).to_numpy().real
    Ph = uniformized_semigroup(L_hat, t).to_numpy().real
    assert np.max(np.abs(P @ D - D @ Ph.T)) <= 1e-10


# -- invariant measures, reversal, commutant --------------------------------------


def test_braco_product_bernoulli_invariant():
    for s in (Fraction(1), Fraction(2), Fraction(1, 2)):
        for g in (SiteGraph.complete(2), SiteGraph.cycle(3)):
            space = ConfigSpace.binary(g.n)
            mu = du.product_bernoulli(space, s / (1 + s))
            assert all(v == 0 for v in M.braco(s, g).L.lapply(mu))


def test_invariant_measures_of_flip_chain():
    (mu,) = du.invariant_measures(SparseOp.from_dense([[-1, 1], [2, -2]]))
    assert mu[0] == 2 * mu[1]


def test_reversal_of_reversible_chain():
    L = SparseOp.from_dense([[-1, 1], [2, -2]])
    Lt, R = du.reversal(L, [2, 1])
    assert Lt == L and R == SparseOp.diag([Fraction(1, 2), Fraction(1)])
    assert du.check_duality(L, Lt, R).passed


def test_reversal_of_sep_is_itself():
    L = M.sep_generator(SiteGraph.cycle(3)).L
    Lt, R = du.reversal(L, [1] * 8)
    assert Lt == L and R == SparseOp.identity(8)


def test_reversal_of_cycle():
    C = SparseOp.from_dense([[-1, 1, 0], [0, -1, 1], [1, 0, -1]])
    Lt, R = du.reversal(C, [1, 1, 1])
    assert Lt == SparseOp.from_dense([[Fraction(v) for v in row] for row in ORACLES["cycle3_reversal"]])
    assert Lt != C and M.validate_generator(Lt).valid
    assert du.check_duality(C, Lt, R).passed


def test_reversal_errors():
    L = SparseOp.from_dense([[-1, 1], [2, -2]])
    with pytest.raises(du.NotInvariantError):
        du.reversal(L, [1, 1])
    with pytest.raises(ValueError):
        du.reversal(L, [1, 0])


def test_commutant_examples():
    assert len(du.commutant(SparseOp.identity(3))) == 9
    rng = random.Random(3)
    n = 4
    rows = [[Fraction(rng.randint(1, 5)) if i != j else 0 for j in range(n)] for i in range(n)]
    for i in range(n):
        rows[i][i] = -sum(rows[i])
    L = SparseOp.from_dense(rows)
    basis = du.commutant(L)
    # generic L: commutant is the polynomials in L
    assert len(basis) == n
    for S in basis:
        assert (compose(S, L) - compose(L, S)).is_zero()
    from markovdual.linop import rank
    stacked = SparseOp.from_dense([[S[i, j] for i in range(n) for j in range(n)] for S in basis])
    ident = [1 if i == j else 0 for i in range(n) for j in range(n)]
    with_i = SparseOp.from_dense(stacked.to_dense() + [ident])
    assert rank(with_i) == rank(stacked)


def test_commutant_budget():
    from markovdual.statespace import BudgetError
    with pytest.raises(BudgetError):
        du.commutant(SparseOp.identity(70))


# -- symmetries -------------------------------------------------------------------


def test_symmetry_duality_gives_geq_indicator():
    space = ConfigSpace.binary(3)
    L = M.sep_generator(SiteGraph.cycle(3)).L
    S = exp_nilpotent(la.collective_operator("+", space))
    rep = du.check_symmetry_duality(L, SparseOp.identity(8), S)
    assert rep.passed and rep.extra["base_passed"]
    assert S == du.indicator_product(space, "geq")
    assert du.symmetry_dualities(L, SparseOp.identity(8), SparseOp.identity(8)).passed


def test_symmetry_exp_two_kplus():
    space = ConfigSpace.binary(2)
    L = M.sep_generator(SiteGraph.complete(2)).L
    S = exp_nilpotent(la.collective_operator("+", space).scale(2))
    assert S.to_dense() == ORACLES["sep_exp_2kplus"]
    assert du.check_symmetry_duality(L, SparseOp.identity(4), S).passed


def test_non_symmetry_rejected():
    space = ConfigSpace.binary(2)
    L = M.voter(SiteGraph.complete(2)).L
    with pytest.raises(du.NotASymmetryError):
        du.check_symmetry_duality(L, SparseOp.identity(4), la.collective_operator("+", space))


def test_collective_operators_commute_with_sep():
    for g in (SiteGraph.complete(2), SiteGraph.cycle(3), SiteGraph.path(4)):
        space = ConfigSpace.binary(g.n)
        L = M.sep_generator(g).L
        for s in "+-0":
            J = la.collective_operator(s, space)
            assert (compose(J, L) - compose(L, J)).is_zero()


# -- map duality ------------------------------------------------------------------


def test_map_duality_identity():
    space = ConfigSpace.binary(2)
    assert du.check_map_duality(M.identity_map, M.identity_map, du.d0_function, space).passed


@pytest.mark.parametrize("n", [2, 3])
def test_voter_coalescing_map_duality(n):
    space = ConfigSpace.binary(n)
    g = SiteGraph.complete(n)
    for (m, _), (mh, _) in zip(M.voter_maps(g), M.coalescing_maps(g)):
        rep = du.check_map_duality(m, mh, du.d0_function, space)
        assert rep.passed and rep.pairs_checked == 4 ** n


def test_pathwise_generators_inherit_map_duality():
    g = SiteGraph.cycle(3)
    space = ConfigSpace.binary(3)
    L = M.pathwise_generator(space, M.voter_maps(g)).L
    L_hat = M.pathwise_generator(space, M.coalescing_maps(g)).L
    assert du.check_duality(L, L_hat, du.dq_matrix(space, 0)).passed


def test_broken_map_pair_has_witness():
    space = ConfigSpace.binary(2)
    D = du.matrix_function(SparseOp.identity(4), space)
    rep = du.check_map_duality(M.flip_map(0), M.identity_map, D, space)
    assert not rep.passed and rep.witnesses
    assert rep.summary()["passed"] is False


# -- SIP/BEP and Wright-Fisher ----------------------------------------------------


@pytest.mark.parametrize("n,alpha", [(2, [1, 1]), (2, [Fraction(1, 2), Fraction(3, 2)]),
                                     (3, [2, 1, 1])])
def test_sip_bep_duality(n, alpha):
    rep = du.check_sip_bep_duality(SiteGraph.complete(n), alpha, 4)
    assert rep.passed and rep.checked > 0


def test_sip_bep_rejects_nonpositive_alpha():
    with pytest.raises(M.ParameterError):
        du.check_sip_bep_duality(SiteGraph.complete(2), [0, 1], 2)


def test_bep_block_expression_matches_generator():
    from markovdual.opexpr import apply_expr
    from markovdual.polyop import all_monomials, bep_generator

    for alpha in ([1, 1], [Fraction(1, 2), Fraction(3, 2)]):
        g = SiteGraph.complete(2)
        expr, env = du.bep_block_expr(g, alpha), du.bep_block_env(g, alpha)
        L = bep_generator(g, alpha)
        for f in all_monomials(2, 6):
            assert apply_expr(expr, env, f) == L.apply(f)


@pytest.mark.parametrize("s", [Fraction(0), Fraction(1), Fraction(2), Fraction(1, 2)])
def test_wf_dualities(s):
    rep = du.check_wf_dualities(s, 10)
    assert rep.passed, rep.failures


def test_wf_moment_row_example():
    from markovdual.polyop import Poly, wf_generator

    x = Poly.var(1, 0)
    D = lambda n: (1 - x) ** n
    assert wf_generator(0).apply(D(2)) == (D(1) - D(2)) * 2
    assert wf_generator(0).apply(D(0)).is_zero()


@pytest.mark.parametrize("s", [Fraction(1), Fraction(2), Fraction(1, 2)])
def test_wf_block_expressions(s):
    assert du.wf_expression_agrees(s, 8) == (True, True)
    assert du.wf_expression_agrees(s, 8, sqrt_form=True) == (True, True)


def test_wf_negative_s():
    with pytest.raises(M.ParameterError):
        du.check_wf_dualities(-1, 5)

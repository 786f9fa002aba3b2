from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import nonneg_rationals
from markovdual import models as M
from markovdual.linop import SparseOp
from markovdual.statespace import ConfigSpace, SiteGraph

ls_params = st.builds(M.LSParams, nonneg_rationals, nonneg_rationals, nonneg_rationals,
                      nonneg_rationals, nonneg_rationals)
graphs = st.sampled_from([SiteGraph.complete(2), SiteGraph.complete(3), SiteGraph.cycle(3),
                          SiteGraph.path(3), SiteGraph(3, {(0, 1): Fraction(1, 2), (1, 2): 3})])


def test_validate_generator_examples():
    assert M.validate_generator(SparseOp.from_dense([[-1, 1], [1, -1]])).valid
    assert M.validate_generator(SparseOp.zero(3)).valid
    bad = M.validate_generator(M.wf_moment_dual(-1, 6, strict=False).L)
    assert not bad.valid
    assert {v["kind"] for v in bad.violations} == {"negative-rate"}
    with pytest.raises(M.ParameterError):
        M.wf_moment_dual(-1, 6)


def test_voter_absorbing_states():
    b = M.lloyd_sudbury(M.LSParams(0, 1, 0, 1, 0), SiteGraph.complete(2))
    for cfg in [(0, 0), (1, 1)]:
        assert not b.L.rows.get(b.space.index(cfg))
    assert M.lloyd_sudbury(M.LSParams(0, 0, 0, 0, 0), SiteGraph.complete(3)).L.is_zero()


def test_exclusion_conserves_and_matches_sep():
    g = SiteGraph.cycle(3)
    b = M.lloyd_sudbury(M.EXCLUSION, g)
    assert M.sector_closed(b.L, b.space)
    assert M.sep_generator(g).L == b.L


def test_pair_annihilation_total_rate():
    # 11 -> 00 on one edge at total rate a * q
    b = M.lloyd_sudbury(M.LSParams(3, 0, 0, 0, 0), SiteGraph(2, {(0, 1): 2}))
    assert b.L[b.space.index((1, 1)), b.space.index((0, 0))] == 6


@settings(max_examples=40)
@given(ls_params, ls_params, graphs)
def test_affine_in_parameters(p1, p2, g):
    assert M.lloyd_sudbury(p1 + p2, g).L == M.lloyd_sudbury(p1, g).L + M.lloyd_sudbury(p2, g).L


@settings(max_examples=40)
@given(ls_params, graphs)
def test_builders_are_generators(p, g):
    assert M.validate_generator(M.lloyd_sudbury(p, g).L).valid


def test_sip_rates():
    g = SiteGraph(3, {(0, 1): 2, (1, 2): Fraction(1, 3)})
    alpha = [Fraction(1, 2), 1, 3]
    b = M.sip_generator(g, alpha, cap=4)
    assert M.validate_generator(b.L).valid and M.sector_closed(b.L, b.space)
    x = (2, 1, 0)
    i0 = b.space.index(x)
    for i in range(3):
        for j in range(3):
            if i == j or x[i] == 0:
                continue
            y = list(x)
            y[i] -= 1
            y[j] += 1
            expected = g.q(i, j) * (alpha[j] * x[i] + x[i] * x[j])
            assert b.L[i0, b.space.index(tuple(y))] == expected


def test_biased_voter_zero_is_voter():
    g = SiteGraph.cycle(3)
    assert M.biased_voter(0, g).L == M.voter(g).L


def test_from_blocks_match_direct():
    for n in (2, 3):
        g = SiteGraph.complete(n)
        assert M.sep_from_blocks(g).L == M.sep_generator(g).L
    g = SiteGraph.complete(2)
    for alpha in ([1, 1], [Fraction(1, 2), Fraction(3, 2)]):
        cap = 5
        built, direct = M.sip_from_blocks(g, alpha, cap), M.sip_generator(g, alpha, cap)
        rows = [k for k, x in enumerate(direct.space) if sum(x) <= cap - 1]
        assert (built.L - direct.L).restrict_rows(rows).is_zero()
    lone = SiteGraph(1)
    assert M.sep_from_blocks(lone).L.is_zero()
    assert M.sip_from_blocks(lone, [1], 3).L.is_zero()


def test_pathwise_generator():
    sp1 = ConfigSpace.binary(1)
    assert M.pathwise_generator(sp1, [(M.identity_map, 1)]).L.is_zero()
    assert M.pathwise_generator(sp1, [(M.flip_map(0), 1)]).L == SparseOp.from_dense([[-1, 1], [1, -1]])
    for g in (SiteGraph.complete(3), SiteGraph.cycle(4)):
        space = ConfigSpace.binary(g.n)
        assert M.pathwise_generator(space, M.voter_maps(g)).L == M.voter(g).L


def test_moment_dual_boundary():
    b = M.wf_moment_dual(2, 5)
    assert set(b.L.boundary_rows) == {5}
    assert M.validate_generator(b.L).valid
    assert not M.wf_moment_dual(0, 5).L.boundary_rows

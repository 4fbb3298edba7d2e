import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from rnr import wfst
from rnr.builders import build_reduction_fst
from rnr.wfst import SymbolTable, Wfst

from oracles import composed_relation, enumerate_paths, random_wfst, simple_paths

ABC = SymbolTable("abc")


def output_language(f, max_len=6):
    return {tuple(f.osyms.symbol(x) for x in outs): c
            for (_, outs), c in enumerate_paths(f, max_len).items()}


class TestSymbolTable:
    def test_epsilon_is_zero(self):
        t = SymbolTable(["x", "y"])
        assert t.id(wfst.EPS) == 0 and t.symbol(0) == "<eps>"
        assert [t.id(s) for s in "xy"] == [1, 2]

    def test_duplicates_rejected(self):
        with pytest.raises(wfst.FstError):
            SymbolTable(["x", "x"])

    def test_text_round_trip(self):
        t = SymbolTable(["ζ", "a", "▁"])
        assert SymbolTable.from_text(t.to_text()) == t

    def test_unknown_symbol(self):
        with pytest.raises(wfst.FstError, match="unknown symbol"):
            ABC.id("q")


class TestLinearAcceptor:
    def test_empty(self):
        f = wfst.make_linear_acceptor([], ABC)
        assert f.num_states == 1
        assert enumerate_paths(f, 3) == {((), ()): 0.0}

    def test_zeta_chain(self):
        syms = SymbolTable(["ζ", "a", "l"])
        f = wfst.make_linear_acceptor(["ζ", "a", "l", "l"], syms)
        assert f.num_states == 5 and f.is_acceptor()
        ids = tuple(syms.id(s) for s in "ζall")
        assert enumerate_paths(f, 10) == {(ids, ids): 0.0}

    def test_identity_round_trip(self):
        f = wfst.make_linear_acceptor(list("aba"), ABC)
        p = wfst.shortest_path(wfst.compose(f, wfst.make_identity(ABC, "ab")))
        assert p.cost == 0
        assert [ABC.symbol(x) for x in p.olabels] == list("aba")

    def test_unknown_symbol_names_position(self):
        with pytest.raises(wfst.FstError, match=r"'q' at position 1"):
            wfst.make_linear_acceptor(["a", "q"], ABC)


class TestCompose:
    def test_identity(self):
        f = wfst.compose(wfst.make_linear_acceptor(list("ab"), ABC), wfst.make_identity(ABC, "ab"))
        ab = (1, 2)
        assert enumerate_paths(f, 6) == {(ab, ab): 0.0}

    def test_zeta_output_language(self, zeta):
        s = build_reduction_fst(zeta)
        h = wfst.make_linear_acceptor(list("ζall"), s.isyms)
        assert output_language(wfst.compose(h, s)) == {tuple("call"): 0.0, tuple("kall"): 0.0}

    def test_symbol_mismatch(self):
        with pytest.raises(wfst.FstError, match="cannot compose"):
            wfst.compose(wfst.make_identity(ABC), wfst.make_identity(SymbolTable("xy")))

    def test_epsilon_paths_not_duplicated(self):
        # a: a -> eps then eps -> b ; b: eps -> x then a -> y; every path pair must appear once
        a = Wfst(ABC)
        a.add_states(3)
        a.set_start(0)
        a.add_arc(0, 1, 0, 1.0, 1)
        a.add_arc(1, 0, 2, 2.0, 2)
        a.set_final(2)
        b = Wfst(ABC)
        b.add_states(3)
        b.set_start(0)
        b.add_arc(0, 0, 3, 4.0, 1)
        b.add_arc(1, 2, 1, 8.0, 2)
        b.set_final(2)
        c = wfst.compose(a, b)
        paths = []

        def walk(q, cost, labels):
            if c.is_final(q):
                paths.append((cost + c.final(q), labels))
            for arc in c.arcs(q):
                walk(arc.nextstate, cost + arc.weight, labels + ((arc.ilabel, arc.olabel),))

        walk(c.start, 0.0, ())
        assert len(paths) == 1
        assert paths[0][0] == 15.0

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10**6))
    def test_matches_brute_force(self, seed):
        rng = random.Random(seed)
        a = random_wfst(rng, ABC, n_states=rng.randint(1, 4))
        b = random_wfst(rng, ABC, n_states=rng.randint(1, 4))
        expected = composed_relation(a, b, 3)
        got = enumerate_paths(wfst.compose(a, b), 3)
        assert got.keys() == expected.keys()
        for k, v in expected.items():
            assert got[k] == pytest.approx(v)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10**6))
    def test_associative(self, seed):
        rng = random.Random(seed)
        a, b, c = (random_wfst(rng, ABC, n_states=rng.randint(1, 3), n_arcs=5) for _ in range(3))
        left = enumerate_paths(wfst.compose(wfst.compose(a, b), c), 3)
        right = enumerate_paths(wfst.compose(a, wfst.compose(b, c)), 3)
        assert left.keys() == right.keys()
        for k in left:
            assert left[k] == pytest.approx(right[k])

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10**6))
    def test_compose_best_keeps_optimum(self, seed):
        rng = random.Random(seed)
        # positive weights keep the lexicographic tie-break well defined (no free labelled cycles)
        a = random_wfst(rng, ABC, n_states=rng.randint(1, 5), n_arcs=9, min_weight=1)
        b = random_wfst(rng, ABC, n_states=rng.randint(1, 5), n_arcs=9, min_weight=1)
        full = wfst.shortest_path(wfst.compose(a, b))
        best = wfst.shortest_path(wfst.compose_best(a, b))
        if full is None:
            assert best is None
        else:
            assert best.cost == pytest.approx(full.cost, abs=1e-9)
            assert best.olabels == full.olabels


class TestShortestPath:
    def test_single_state(self):
        f = Wfst(ABC)
        f.set_start(f.add_state())
        f.set_final(0)
        assert wfst.shortest_path(f) == wfst.Path(0.0, (), ())

    def test_forced_minimum(self):
        f = Wfst(ABC)
        f.add_states(2)
        f.set_start(0)
        f.set_final(1)
        f.add_arc(0, 1, 1, 5.0, 1)
        f.add_arc(0, 2, 2, 3.0, 1)
        assert wfst.shortest_path(f) == wfst.Path(3.0, (2,), (2,))

    def test_empty_language(self):
        f = Wfst(ABC)
        f.set_start(f.add_state())
        assert wfst.shortest_path(f) is None

    def test_tie_break_smallest_output(self):
        f = Wfst(ABC)
        f.add_states(3)
        f.set_start(0)
        f.set_final(2)
        f.add_arc(0, 1, 3, 1.0, 1)
        f.add_arc(1, 1, 1, 1.0, 2)
        f.add_arc(0, 1, 2, 2.0, 2)
        # "c a" and "b" both cost 2; (2,) < (3, 1)
        assert wfst.shortest_path(f).olabels == (2,)

    def test_rejects_negative(self):
        f = Wfst(ABC)
        f.add_states(2)
        f.set_start(0)
        f.set_final(1)
        f.add_arc(0, 1, 1, -1.0, 1)
        with pytest.raises(wfst.FstError):
            wfst.shortest_path(f)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10**6))
    def test_matches_enumeration(self, seed):
        rng = random.Random(seed)
        n = rng.randint(1, 8)
        f = random_wfst(rng, ABC, n_states=n, n_arcs=rng.randint(0, 14), min_weight=1)
        p = wfst.shortest_path(f)
        paths = simple_paths(f)
        if p is None:
            assert not paths
        else:
            brute = min(c for c, _ in paths)
            assert p.cost == pytest.approx(brute)
            assert p.olabels == min(o for c, o in paths if c <= brute + 1e-9)


class TestHelpers:
    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10**6))
    def test_connect_project_rmeps_keep_language(self, seed):
        rng = random.Random(seed)
        f = random_wfst(rng, ABC, n_states=rng.randint(1, 6), n_arcs=10, p_eps=0.4)
        proj = {outs: c for (_, outs), c in enumerate_paths(f, 3, outputs_only=True).items()}
        g = wfst.rm_epsilon(wfst.project(wfst.connect(f)))
        assert not any(a.ilabel == 0 for q in g.states() for a in g.arcs(q))
        got = {outs: c for (_, outs), c in enumerate_paths(g, 3).items()}
        assert got.keys() == proj.keys()
        for k, v in proj.items():
            assert got[k] == pytest.approx(v)

    def test_nonnegative_check(self):
        f = Wfst(ABC)
        f.set_start(f.add_state())
        f.set_final(0, -0.5)
        with pytest.raises(wfst.FstError):
            wfst.check_nonnegative(f)


class TestTextFormat:
    def test_round_trip_random(self):
        rng = random.Random(3)
        for _ in range(20):
            f = random_wfst(rng, ABC, SymbolTable("xyz"), n_states=4)
            g = wfst.read_fst_text(wfst.write_fst_text(f), ABC, f.osyms)
            assert wfst.same_structure(f, g)

    def test_empty_language_round_trip(self):
        f = Wfst(ABC)
        f.add_states(2)
        f.set_start(0)
        f.add_arc(0, 1, 1, 1.0, 1)
        g = wfst.read_fst_text(wfst.write_fst_text(f), ABC)
        assert wfst.same_structure(f, g) and not g.finals

    def test_golden_epsilon_transducer(self):
        syms = SymbolTable(["a", "b"])
        f = Wfst(syms)
        f.add_states(3)
        f.set_start(0)
        f.add_arc(0, 1, 0, 0.5, 1)
        f.add_arc(1, 0, 2, 1.0, 2)
        f.set_final(2, 0.25)
        text = wfst.write_fst_text(f)
        assert text == "0\n0\t1\ta\t<eps>\t0.5\n1\t2\t<eps>\tb\t1.0\n2\t0.25\n"
        assert wfst.same_structure(wfst.read_fst_text(text, syms), f)

    def test_malformed_line(self):
        with pytest.raises(wfst.FstError, match="line 2"):
            wfst.read_fst_text("0\n0 1 a\n")

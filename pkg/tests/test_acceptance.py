"""Acceptance checks for the whole toolkit.

Each test prints one ``[acceptance] <n> PASS|FAIL <title>`` line to the
terminal, whatever the outcome.  The regression numbers of the toy
experiment were computed once by the pipeline and frozen here.
"""

import filecmp
import itertools
import math
import random
import time
from contextlib import contextmanager

import pytest

from rnr import metrics, ngram, wfst
from rnr.builders import SEP, EditConfig, build_edit_fst, build_lm_fst, word_table
from rnr.cli import main as cli_main
from rnr.config import load_config
from rnr.corpus import read_lines
from rnr.pipeline import run_pipeline
from rnr.reconstruct import Hypothesis, build_assets, reconstruct
from rnr.reduction import apply_reduction, identity_map, load_mapping

from conftest import MAPPINGS, TOY
from oracles import KneserNey, edit_counts, lev, random_instance, reconstruction_oracle


@contextmanager
def criterion(capsys, number, title):
    info = []
    try:
        yield info
    except BaseException:
        status = "FAIL"
        raise
    else:
        status = "PASS"
    finally:
        detail = f" ({'; '.join(info)})" if info else ""
        with capsys.disabled():
            print(f"\n[acceptance] {number} {status} {title}{detail}")


# -- 1 -------------------------------------------------------------------------

def test_1_cascade_matches_exhaustive_oracle(capsys):
    with criterion(capsys, 1, "cascade cost and output match exhaustive search on 200 instances") as info:
        rng = random.Random(20240601)
        spent = 0.0
        mismatches = []
        for i in range(200):
            m, vocab, lm, words, d = random_instance(rng)
            t0 = time.perf_counter()
            assets = build_assets(m, vocab, lm, d=d, lam=5, eta=100)
            r = reconstruct(Hypothesis(tuple(words)), assets)
            spent += time.perf_counter() - t0
            cost, expected = reconstruction_oracle(words, {w: tuple(m.graphemes(w)) for w in vocab},
                                                   m.mapping, lm, assets.words.id, d, 5.0, 100.0)
            if abs(r.total_cost - cost) > 1e-6 or r.words != expected:
                mismatches.append((i, words, r.words, expected, r.total_cost, cost))
        info.append(f"{200 - len(mismatches)}/200 agree, cascade time {spent:.1f}s")
        assert not mismatches, mismatches[:3]
        assert spent < 60


# -- 2 -------------------------------------------------------------------------

def _edit_cost(e, syms, x, y):
    c = wfst.compose(wfst.compose(wfst.make_linear_acceptor(list(x), syms), e),
                     wfst.make_linear_acceptor(list(y), syms))
    p = wfst.shortest_path(c)
    return math.inf if p is None else p.cost


def test_2_edit_fst_law(capsys):
    with criterion(capsys, 2, "edit machine cost equals lambda * Levenshtein within the budget") as info:
        rng = random.Random(7)
        syms = wfst.SymbolTable(["a", "b", "c", SEP])
        machines = {d: build_edit_fst(syms, EditConfig(d, 5.0)) for d in range(4)}
        bad = []
        for _ in range(1000):
            x = "".join(rng.choice("abc") for _ in range(rng.randint(0, 6)))
            y = "".join(rng.choice("abc") for _ in range(rng.randint(0, 6)))
            d = rng.randint(0, 3)
            k = lev(x, y)
            want = 5.0 * k if k <= d else math.inf
            if _edit_cost(machines[d], syms, x, y) != want:
                bad.append((x, y, d))
        info.append(f"{1000 - len(bad)}/1000 agree")
        assert not bad, bad[:5]


# -- 3 -------------------------------------------------------------------------

def test_3_worked_examples(capsys):
    with criterion(capsys, 3, "worked examples reconstruct exactly") as info:
        vocab = ["call", "the", "bus", "game", "came", "is", "on"]
        lm = ngram.train(["call the bus", "the game is on", "game is on", "the bus came", "call the game"], 4)
        zeta = load_mapping(MAPPINGS / "toy_zeta.tsv")
        kappa = load_mapping(MAPPINGS / "toy_kappa.tsv")
        a = reconstruct(Hypothesis.from_text("ζall the bus"), build_assets(zeta, vocab, lm, d=0)).text
        b = reconstruct(Hypothesis.from_text("κame is on"), build_assets(kappa, vocab, lm)).text
        info.append(f"{a!r}, {b!r}")
        assert a == "call the bus"
        assert b == "game is on"


# -- 4 -------------------------------------------------------------------------

def _walk(g, start_state, start_cost, label):
    """Follow one word through a backoff acceptor, taking epsilon arcs only as failure moves."""
    q, cost = start_state, start_cost
    while True:
        arcs = g.arcs(q)
        hit = [a for a in arcs if a.ilabel == label]
        if hit:
            return hit[0].nextstate, cost + hit[0].weight
        back = [a for a in arcs if a.ilabel == 0]
        if not back:
            return None, math.inf
        q, cost = back[0].nextstate, cost + back[0].weight


def test_4_kneser_ney_lm(capsys, tmp_path):
    with criterion(capsys, 4, "KN distributions normalise, ARPA round-trips, G scores every sentence") as info:
        rng = random.Random(3)
        toy = ngram.train(read_lines(TOY / "train.txt"), 4)
        worst = max(abs(s - 1.0) for s in ngram.conditional_sums(toy).values())
        for _ in range(20):
            corpus = [" ".join(rng.choice("a b c d e f".split()) for _ in range(rng.randint(0, 6)))
                      for _ in range(rng.randint(1, 15))]
            lm = ngram.train(corpus, rng.randint(1, 4))
            worst = max(worst, max(abs(s - 1.0) for s in ngram.conditional_sums(lm).values()))
            ref = KneserNey(corpus, lm.order)
            assert ngram.score_sentence(lm, corpus[0]) == pytest.approx(
                ref.sentence_logprob(corpus[0].split()), abs=1e-9)
        info.append(f"max |sum - 1| = {worst:.1e}")
        assert worst <= 1e-9

        path = tmp_path / "toy.arpa"
        ngram.write_arpa(toy, path)
        again = ngram.import_arpa(path)
        assert again.probs.keys() == toy.probs.keys() and again.bows.keys() == toy.bows.keys()
        drift = max(max(abs(again.probs[k] - v) for k, v in toy.probs.items()),
                    max((abs(again.bows[k] - v) for k, v in toy.bows.items()), default=0.0))
        info.append(f"ARPA drift {drift:.1e}")
        assert drift <= 1e-9

        vocab = "the a cat dog sat ran on mat is big".split()
        corpus = [" ".join(rng.choice(vocab) for _ in range(rng.randint(1, 7))) for _ in range(80)]
        lm = ngram.train(corpus, 3)
        assert sorted(w for w in lm.vocab if w not in ("<s>", "</s>", "<unk>")) == sorted(vocab)
        words = word_table(vocab)
        g = build_lm_fst(lm, words)

        # the walker is itself checked against composition with a chain on a sample
        for _ in range(300):
            s = [rng.choice(vocab) for _ in range(rng.randint(0, 6))]
            q, c = g.start, 0.0
            for w in s:
                q, c = _walk(g, q, c, words.id(w))
            chain = wfst.make_linear_acceptor(s, words)
            best = wfst.shortest_path(wfst.compose(chain, g, backoff=True)).cost
            assert c + g.final(q) == pytest.approx(best, abs=1e-9)

        ln10 = math.log(10)
        worst = 0.0
        count = 0
        # depth-first over all sentences of length <= 6, extending prefixes incrementally
        stack = [((), g.start, 0.0, 0.0)]
        while stack:
            prefix, q, gcost, direct = stack.pop()
            full = direct + lm.logprob("</s>", ("<s>",) + prefix)
            worst = max(worst, abs(gcost + g.final(q) + full * ln10))
            count += 1
            if len(prefix) == 6:
                continue
            hist = ("<s>",) + prefix
            for w in vocab:
                nq, nc = _walk(g, q, gcost, words.id(w))
                stack.append((prefix + (w,), nq, nc, direct + lm.logprob(w, hist)))
        sample = [list(p) for p in itertools.islice(itertools.product(vocab, repeat=6), 0, 10**6, 9973)]
        for s in sample:
            direct = ngram.score_sentence(lm, s)
            q, c = g.start, 0.0
            for w in s:
                q, c = _walk(g, q, c, words.id(w))
            worst = max(worst, abs(c + g.final(q) + direct * ln10))
        info.append(f"{count} sentences, max |G - score| = {worst:.1e} nats")
        assert count == sum(10 ** k for k in range(7))
        assert worst <= 1e-6


# -- 5 -------------------------------------------------------------------------

def test_5_metrics(capsys):
    with criterion(capsys, 5, "WER, reduced WER, substitution correction and the reduction lemma") as info:
        rng = random.Random(5)
        tokens = "a b c d e".split()
        for _ in range(1000):
            r = [rng.choice(tokens) for _ in range(rng.randint(1, 8))]
            h = [rng.choice(tokens) for _ in range(rng.randint(0, 8))]
            rate, rep = metrics.wer(r, h)
            e, n = edit_counts(r, h)
            assert (rep.errors, rate) == (e, e / n)
            assert metrics.r_wer(identity_map("abcde"), r, h) == rate

        kappa = load_mapping(MAPPINGS / "toy_kappa.tsv")
        sc = metrics.substitution_correction("kite", "gite", kappa, apply_reduction(kappa, "kite"))
        info.append(f"kite/gite correction {sc.percent}%")
        assert sc.percent == 100.0

        rho1 = load_mapping(MAPPINGS / "toy_rho1.tsv")
        letters = "abcdefgikmnopqtuyz"
        for _ in range(1000):
            a = "".join(rng.choice(letters) for _ in range(rng.randint(0, 8)))
            b = "".join(rng.choice(letters) for _ in range(rng.randint(0, 8)))
            for m in (kappa, rho1):
                assert lev(apply_reduction(m, a), apply_reduction(m, b)) <= lev(a, b)


# -- 6, 7, 9: the synthetic experiment -----------------------------------------

@pytest.fixture(scope="module")
def toy_runs(tmp_path_factory):
    cfg = load_config(TOY / "toy.cfg")
    runs = []
    for name in ("first", "second"):
        out = tmp_path_factory.mktemp(name)
        runs.append((out, run_pipeline(load_config(TOY / "toy.cfg", out=out))))
    return cfg, runs


# frozen after the first computation; percentages rounded to two decimals
FROZEN_WER = {
    "baseline": (18.41, 17.53),
    ("identity", 0): (18.41, 17.53),
    ("rho1", 0): (10.83, 14.78),
    ("identity", 3): (0.00, 0.34),
    ("rho1", 3): (0.00, 0.69),
}
FROZEN_PPL = {"original": 12.75, "rho1": 12.74}


def test_6_synthetic_end_to_end(capsys, toy_runs):
    cfg, [(_, res), _] = toy_runs
    with criterion(capsys, 6, "d=3 beats d=0, and the reduced system beats identity after reconstruction") as info:
        got = {"baseline": tuple(round(res.baseline[s].percent, 2) for s in ("dev", "test"))}
        for key in res.wer:
            got[key] = tuple(round(res.wer[key][s].percent, 2) for s in ("dev", "test"))
        info.append(", ".join(f"{k if isinstance(k, str) else f'{k[0]} d={k[1]}'} {v[0]:.2f}/{v[1]:.2f}"
                              for k, v in got.items()))
        assert got == FROZEN_WER
        assert len(read_lines(cfg.train)) + len(read_lines(cfg.dev)) + len(read_lines(cfg.test)) == 500
        assert cfg.p_sub == 0.05 and cfg.d == 3 and cfg.lam == 5.0
        for system in ("identity", "rho1"):
            for split in ("dev", "test"):
                assert res.wer[system, 3][split].percent < res.wer[system, 0][split].percent
        behind = [s for s in ("dev", "test")
                  if not res.wer["rho1", 3][s].percent < res.wer["identity", 3][s].percent]
        assert not behind, f"reduced system not ahead of identity at d=3 on {behind}"


def test_7_perplexity_direction(capsys, toy_runs):
    _, [(_, res), _] = toy_runs
    with criterion(capsys, 7, "trigram perplexity of reduced text <= original") as info:
        got = {k: round(p.ppl, 2) for k, p in res.ppl.items()}
        info.append(f"original {got['original']}, rho1 {got['rho1']}")
        assert got == FROZEN_PPL
        assert res.ppl["rho1"].ppl <= res.ppl["original"].ppl


def test_9_determinism(capsys, toy_runs):
    _, [(a, ra), (b, rb)] = toy_runs
    with criterion(capsys, 9, "two runs with one config give byte-identical artifacts") as info:
        names = sorted(p.name for p in a.iterdir())
        assert names == sorted(p.name for p in b.iterdir()) == ra.files == rb.files
        match, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
        info.append(f"{len(match)} files identical")
        assert not mismatch and not errors


# -- 8 -------------------------------------------------------------------------

def test_8_alphabet_sizes(capsys):
    with criterion(capsys, 8, "mapping validators confirm declared alphabet sizes") as info:
        want = {"toy_zeta": (26, 25), "toy_kappa": (26, 24), "toy_rho1": (26, 22), "toy_rho2": (26, 24),
                "gujarati_rho1": (63, 27), "telugu_rho1": (70, 27)}
        for name, sizes in want.items():
            m = load_mapping(MAPPINGS / f"{name}.tsv")
            assert m.sizes == sizes == m.expected_sizes, name
        codes = [cli_main(["validate-mapping", "--mapping", str(MAPPINGS / f"{lang}_rho1.tsv"),
                           "--expect", expect]) for lang, expect in (("gujarati", "63:27"), ("telugu", "70:27"))]
        wrong = cli_main(["validate-mapping", "--mapping", str(MAPPINGS / "gujarati_rho1.tsv"),
                          "--expect", "63:28"])
        capsys.readouterr()
        info.append("gujarati 63->27, telugu 70->27")
        assert codes == [0, 0] and wrong == 2

"""Recover original-alphabet word sequences from reduced-alphabet hypotheses.

The cascade is evaluated left to right starting from the hypothesis chain, so
every intermediate machine stays proportional to the utterance.  Once the
dictionary has been applied, the grapheme-level machine is projected onto its
word labels and epsilon-removed; the resulting word lattice is then composed
with the LM acceptor and decoded.  Both steps preserve the min-cost word
language exactly.
"""

from __future__ import annotations

import logging
import math
import multiprocessing
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from . import wfst
from .builders import (
    DEFAULT_D, DEFAULT_ETA, DEFAULT_LAMBDA, LN10, SEP, DictConfig, EditConfig,
    build_dictionary_fst, build_edit_fst, build_lm_fst, build_reduction_fst,
    cascade_tables, check_eta, word_table,
)
from .ngram import UNK, NGramModel, score_sentence
from .reduction import ReductionMap, _segmenter

log = logging.getLogger(__name__)


class ReconstructError(ValueError):
    pass


@dataclass(frozen=True)
class Hypothesis:
    words: tuple[str, ...]
    utt_id: str = ""

    @classmethod
    def from_text(cls, text: str, utt_id: str = "") -> "Hypothesis":
        return cls(tuple(text.split()), utt_id)


@dataclass(frozen=True)
class Reconstruction:
    utt_id: str
    words: tuple[str, ...]
    total_cost: float
    edit_cost: float
    unk_cost: float
    lm_cost: float
    edits: int = 0
    error: str | None = None

    @property
    def text(self) -> str:
        return " ".join(self.words)

    def to_tsv(self) -> str:
        return (f"{self.utt_id}\t{self.text}\t{self.total_cost:.6f}\t{self.edit_cost:.6f}"
                f"\t{self.unk_cost:.6f}\t{self.lm_cost:.6f}")


@dataclass
class Assets:
    """The S, E, L and G machines plus what is needed to split the cost."""

    mapping: ReductionMap
    edit: EditConfig
    eta: float
    lm: NGramModel
    S: wfst.Wfst
    E: wfst.Wfst
    L: wfst.Wfst
    G: wfst.Wfst

    @property
    def reduced_syms(self) -> wfst.SymbolTable:
        return self.S.isyms

    @property
    def words(self) -> wfst.SymbolTable:
        return self.L.osyms


def build_assets(mapping: ReductionMap, vocabulary: Iterable[str], lm: NGramModel,
                 d: int = DEFAULT_D, lam: float = DEFAULT_LAMBDA,
                 eta: float = DEFAULT_ETA) -> Assets:
    edit = EditConfig(d, lam)
    check_eta(edit, eta)
    dcfg = DictConfig.from_words(vocabulary, mapping, eta)
    extra = sorted({g for sp in dcfg.vocabulary.values() for g in sp} - set(mapping.original_alphabet))
    unknown = [g for g in extra if g not in mapping.passthrough]
    if unknown:
        raise ReconstructError(
            f"vocabulary uses graphemes outside the mapping's alphabet: {' '.join(unknown)}")
    tables = cascade_tables(mapping, extra)
    words = word_table([*dcfg.vocabulary, *lm.words()])
    return Assets(
        mapping=mapping, edit=edit, eta=float(eta), lm=lm,
        S=build_reduction_fst(mapping, tables=tables),
        E=build_edit_fst(tables[1], edit),
        L=build_dictionary_fst(dcfg, tables[1], words),
        G=build_lm_fst(lm, words),
    )


def hypothesis_fst(h: Hypothesis, assets: Assets) -> wfst.Wfst:
    syms = assets.reduced_syms
    split = _segmenter(syms.symbols[1:])
    seq: list[str] = []
    for i, word in enumerate(h.words):
        if i:
            seq.append(SEP)
        for g in split(word):
            if g not in syms or g == SEP:
                raise ReconstructError(f"grapheme {g!r} in word {word!r} is not in the reduced alphabet")
            seq.append(g)
    return wfst.make_linear_acceptor(seq, syms)


def word_lattice(h: Hypothesis, assets: Assets) -> wfst.Wfst:
    """H o S o E o L, trimmed, projected onto words and epsilon-removed."""
    m = wfst.compose(hypothesis_fst(h, assets), assets.S)
    m = wfst.compose(m, assets.E)
    m = wfst.compose(m, assets.L)
    return wfst.rm_epsilon(wfst.project(wfst.connect(m)))


def reconstruct(h: Hypothesis, assets: Assets, *, strategy: str = "lattice") -> Reconstruction:
    """Best original-alphabet word sequence for ``h``.

    The default route decodes the word lattice against G, expanding the
    product best-first.  ``strategy="full"`` instead builds the complete
    composition of G with the trimmed grapheme-level machine; it is much
    slower and exists to cross-check the default route.
    """
    if not h.words:
        lm_cost = -score_sentence(assets.lm, []) * LN10
        return Reconstruction(h.utt_id, (), lm_cost, 0.0, 0.0, lm_cost)
    if strategy == "lattice":
        lattice = word_lattice(h, assets)
        decoded = wfst.compose_best(lattice, assets.G, backoff=True)
    elif strategy == "full":
        m = wfst.compose(hypothesis_fst(h, assets), assets.S)
        m = wfst.compose(wfst.compose(m, assets.E), assets.L)
        decoded = wfst.compose(wfst.connect(m), assets.G, backoff=True)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    path = wfst.shortest_path(decoded)
    if path is None:
        raise ReconstructError(f"{h.utt_id or 'hypothesis'}: empty output language (asset mismatch?)")
    words = tuple(assets.words.symbol(x) for x in path.olabels)
    return _split_cost(h.utt_id, words, path.cost, assets)


def _split_cost(utt_id, words, cost, assets: Assets) -> Reconstruction:
    lm_cost = -score_sentence(assets.lm, list(words)) * LN10
    unk_cost = assets.eta * sum(w == UNK for w in words)
    rest = cost - lm_cost - unk_cost
    lam = assets.edit.lam
    edits = int(round(rest / lam)) if lam > 0 else 0
    edit_cost = lam * edits
    if abs(rest - edit_cost) > 1e-6 * max(1.0, cost):
        raise ReconstructError(
            f"{utt_id}: path cost {cost} does not decompose into edits + unk + lm ({rest} left for edits)")
    return Reconstruction(utt_id, words, edit_cost + unk_cost + lm_cost, edit_cost, unk_cost, lm_cost, edits)


def read_hypotheses(path) -> list[Hypothesis]:
    """One hypothesis per line, either ``id<TAB>text`` or bare text; blank lines are skipped."""
    hyps = []
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), 1):
        if "\t" in line:
            utt, _, body = line.partition("\t")
            hyps.append(Hypothesis.from_text(body, utt))
        elif line.strip():
            hyps.append(Hypothesis.from_text(line, f"{lineno:06d}"))
    return hyps


_worker_assets: Assets | None = None


def _init_worker(assets):
    global _worker_assets
    _worker_assets = assets


def _safe(h: Hypothesis, assets: Assets | None = None) -> Reconstruction:
    assets = assets or _worker_assets
    try:
        return reconstruct(h, assets)
    except (ReconstructError, wfst.FstError) as e:
        return Reconstruction(h.utt_id, (), math.inf, 0.0, 0.0, 0.0, error=str(e))


def reconstruct_many(hyps: Sequence[Hypothesis], assets: Assets, parallelism: int = 1) -> list[Reconstruction]:
    """Reconstruct every hypothesis; failures are reported in ``Reconstruction.error``."""
    if parallelism <= 1 or len(hyps) <= 1:
        return [_safe(h, assets) for h in hyps]
    ctx = multiprocessing.get_context("fork")
    with ProcessPoolExecutor(max_workers=parallelism, mp_context=ctx,
                             initializer=_init_worker, initargs=(assets,)) as pool:
        return list(pool.map(_safe, hyps, chunksize=max(1, len(hyps) // (4 * parallelism))))


def reconstruct_file(path, assets: Assets, parallelism: int = 1) -> list[Reconstruction]:
    return reconstruct_many(read_hypotheses(path), assets, parallelism)


def write_reconstructions(results: Iterable[Reconstruction]) -> str:
    return "".join(r.to_tsv() + "\n" for r in results if r.error is None)


def simulate_noise(text: str, alphabet: Sequence[str], p_sub: float = 0.0, p_del: float = 0.0,
                   p_ins: float = 0.0, seed=0, confusions: Iterable[Iterable[str]] | None = None,
                   p_within: float = 0.0) -> str:
    """Corrupt graphemes independently; word separators and line breaks are kept.

    Each grapheme is deleted with ``p_del``; a surviving grapheme is replaced
    with ``p_sub`` by a different grapheme drawn uniformly from ``alphabet``
    (or, with probability ``p_within``, from its own class in ``confusions``);
    after it a uniform grapheme is inserted with ``p_ins``.  Graphemes outside
    ``alphabet`` are copied unchanged.  Words that lose every grapheme vanish.
    """
    for name, p in (("p_sub", p_sub), ("p_del", p_del), ("p_ins", p_ins), ("p_within", p_within)):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"{name} must be in [0, 1], got {p}")
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    alphabet = list(dict.fromkeys(alphabet))
    known = set(alphabet)
    peers: dict[str, list[str]] = {}
    for cls in confusions or ():
        members = [g for g in dict.fromkeys(cls) if g in known]
        for g in members:
            others = [x for x in members if x != g]
            if others:
                peers[g] = others
    split = _segmenter(alphabet)
    lines = []
    for line in text.split("\n"):
        words = []
        for word in line.split():
            out = []
            for g in split(word):
                if g not in known:
                    out.append(g)
                    continue
                if rng.random() < p_del:
                    pass
                elif rng.random() < p_sub and len(alphabet) > 1:
                    if g in peers and rng.random() < p_within:
                        out.append(rng.choice(peers[g]))
                    else:
                        choice = rng.randrange(len(alphabet) - 1)
                        idx = alphabet.index(g)
                        out.append(alphabet[choice + (choice >= idx)])
                else:
                    out.append(g)
                if rng.random() < p_ins:
                    out.append(rng.choice(alphabet))
            if out:
                words.append("".join(out))
        lines.append(" ".join(words))
    return "\n".join(lines)

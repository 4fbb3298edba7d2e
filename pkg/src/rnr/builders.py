"""Construction of the reduction (S), edit (E), dictionary (L) and LM (G) machines."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .ngram import BOS, EOS, NO_PROB, UNK, NGramModel
from .reduction import ReductionMap
from .wfst import ONE, Arc, SymbolTable, Wfst

SEP = "▁"
LN10 = math.log(10.0)

DEFAULT_D = 3
DEFAULT_LAMBDA = 5.0
DEFAULT_ETA = 100.0


class BuildError(ValueError):
    pass


@dataclass(frozen=True)
class EditConfig:
    d: int = DEFAULT_D
    lam: float = DEFAULT_LAMBDA

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 0:
            raise BuildError(f"edit budget d must be a non-negative integer, got {self.d}")
        if self.lam < 0:
            raise BuildError(f"edit cost lambda must be >= 0, got {self.lam}")


@dataclass(frozen=True)
class DictConfig:
    """Word -> grapheme spelling, plus the penalty for the ``<unk>`` word."""

    vocabulary: Mapping[str, tuple[str, ...]]
    eta: float = DEFAULT_ETA

    def __post_init__(self):
        if not self.vocabulary:
            raise BuildError("vocabulary is empty")
        if self.eta < 0:
            raise BuildError(f"unk penalty eta must be >= 0, got {self.eta}")
        for w, spelling in self.vocabulary.items():
            if not spelling:
                raise BuildError(f"word {w!r} has an empty spelling")
        if UNK in self.vocabulary:
            raise BuildError(f"{UNK} is reserved and cannot be a vocabulary word")

    @classmethod
    def from_words(cls, words: Iterable[str], m: ReductionMap, eta: float = DEFAULT_ETA) -> "DictConfig":
        return cls.from_pairs(((w, tuple(m.graphemes(w))) for w in words), eta)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, Iterable[str]]], eta: float = DEFAULT_ETA) -> "DictConfig":
        vocab: dict[str, tuple[str, ...]] = {}
        for w, spelling in pairs:
            if w == UNK:
                continue
            spelling = tuple(spelling)
            if w in vocab and vocab[w] != spelling:
                raise BuildError(f"word {w!r} listed with conflicting spellings {vocab[w]} and {spelling}")
            vocab[w] = spelling
        return cls(dict(sorted(vocab.items())), eta)


def check_eta(cfg: EditConfig, eta: float) -> None:
    if not eta > cfg.d * cfg.lam:
        raise BuildError(f"unk penalty eta={eta} must exceed d*lambda={cfg.d * cfg.lam}")


def cascade_tables(m: ReductionMap, extra: Iterable[str] = ()) -> tuple[SymbolTable, SymbolTable]:
    """(reduced-side, original-side) grapheme tables; ``extra`` are pass-through graphemes."""
    extra = [g for g in dict.fromkeys(extra) if g not in m.mapping]
    for g in (*m.reduced_alphabet, *m.original_alphabet, *extra):
        if g == SEP:
            raise BuildError(f"grapheme {SEP!r} is reserved as the word separator")
    reduced = SymbolTable([*m.reduced_alphabet, *(g for g in extra if g not in m.reduced_alphabet), SEP])
    original = SymbolTable([*m.original_alphabet, *extra, SEP])
    return reduced, original


def word_table(words: Iterable[str]) -> SymbolTable:
    rest = sorted(set(words) - {UNK, BOS, EOS})
    return SymbolTable([UNK, *rest])


def build_reduction_fst(m: ReductionMap, extra: Iterable[str] = (),
                        tables: tuple[SymbolTable, SymbolTable] | None = None) -> Wfst:
    """One-state machine reading reduced graphemes and writing every original counterpart."""
    rsyms, osyms = tables or cascade_tables(m, extra)
    f = Wfst(rsyms, osyms)
    q = f.add_state()
    f.set_start(q)
    f.set_final(q)
    for orig, red in m.pairs:
        f.add_arc(q, rsyms.id(red), osyms.id(orig), ONE, q)
    for g in osyms.symbols[1:]:
        if g not in m.mapping:
            f.add_arc(q, rsyms.id(g), osyms.id(g), ONE, q)
    return f.arcsort()


def build_edit_fst(syms: SymbolTable, cfg: EditConfig = EditConfig(), sep: str = SEP) -> Wfst:
    """Per-word bounded edit transducer over the graphemes of ``syms``.

    State ``b`` means ``b`` edits were spent in the current word.  The
    separator maps to itself at no cost and resets the budget; edits never
    touch it.
    """
    s = syms.id(sep)
    labels = [i for i in range(1, len(syms)) if i != s]
    f = Wfst(syms)
    f.add_states(cfg.d + 1)
    f.set_start(0)
    lam = float(cfg.lam)
    for b in range(cfg.d + 1):
        f.set_final(b)
        arcs = f._arcs[b]
        for x in labels:
            arcs.append(Arc(x, x, ONE, b))
        arcs.append(Arc(s, s, ONE, 0))
        if b == cfg.d:
            continue
        for x in labels:
            for y in labels:
                if x != y:
                    arcs.append(Arc(x, y, lam, b + 1))
            arcs.append(Arc(x, 0, lam, b + 1))
            arcs.append(Arc(0, x, lam, b + 1))
    return f.arcsort()


def build_dictionary_fst(cfg: DictConfig, graphemes: SymbolTable | None = None,
                         words: SymbolTable | None = None, sep: str = SEP) -> Wfst:
    """Grapheme-to-word transducer: a spelling trie plus an ``<unk>`` branch.

    A word's label is emitted on the arc that closes it, reading either the
    separator (back to the root) or nothing (into the final state).
    """
    if graphemes is None:
        graphemes = SymbolTable([*sorted({g for sp in cfg.vocabulary.values() for g in sp}), sep])
    if words is None:
        words = word_table(cfg.vocabulary)
    s = graphemes.id(sep)
    unk = words.id(UNK)
    f = Wfst(graphemes, words)
    root, end, unk_state = f.add_states(3)
    f.set_start(root)
    f.set_final(end)

    children: list[dict[int, int]] = [{}, {}, {}]
    for w, spelling in cfg.vocabulary.items():
        wl = words.find(w)
        if wl is None:
            raise BuildError(f"word {w!r} missing from the word symbol table")
        q = root
        for i, g in enumerate(spelling):
            gl = graphemes.find(g)
            if gl is None or gl == s or gl == 0:
                raise BuildError(f"word {w!r}: grapheme {g!r} at position {i} is not in the grapheme alphabet")
            nxt = children[q].get(gl)
            if nxt is None:
                nxt = f.add_state()
                children.append({})
                children[q][gl] = nxt
                f._arcs[q].append(Arc(gl, 0, ONE, nxt))
            q = nxt
        f._arcs[q].append(Arc(s, wl, ONE, root))
        f._arcs[q].append(Arc(0, wl, ONE, end))

    eta = float(cfg.eta)
    for gl in range(1, len(graphemes)):
        if gl == s:
            continue
        f._arcs[root].append(Arc(gl, 0, ONE, unk_state))
        f._arcs[unk_state].append(Arc(gl, 0, ONE, unk_state))
    f._arcs[unk_state].append(Arc(s, unk, eta, root))
    f._arcs[unk_state].append(Arc(0, unk, eta, end))
    return f.arcsort()


def _cost(log10p: float) -> float:
    return -log10p * LN10


def build_lm_fst(lm: NGramModel, words: SymbolTable | None = None) -> Wfst:
    """Backoff acceptor for ``lm`` with natural-log costs.

    States are n-gram histories.  Each history gets an epsilon arc to its
    longest proper suffix state carrying the backoff cost, and a final weight
    equal to the exact end-of-sentence cost.  The machine is meant to be
    composed with ``backoff=True`` so those epsilon arcs act as failure
    transitions.  Words of ``words`` unknown to the model behave like
    ``<unk>``.
    """
    if words is None:
        words = word_table(lm.words())
    n_hist = max(lm.order - 1, 0)
    hists = {()}
    for g in lm.probs:
        if len(g) >= 2:
            hists.add(g[:-1])
    hists.update(h for h in lm.bows if len(h) <= n_hist)
    order = sorted(hists, key=lambda h: (len(h), h))
    f = Wfst(words)
    f.add_states(len(order))
    sid = {h: i for i, h in enumerate(order)}

    def state_of(h):
        h = h[-n_hist:] if n_hist else ()
        while h not in sid:
            h = h[1:]
        return sid[h]

    f.set_start(state_of((BOS,)))
    aliases = [w for w in words.symbols[1:] if w not in lm.vocab and w != UNK]

    for gram, p in lm.probs.items():
        w = gram[-1]
        if p <= NO_PROB or w in (BOS, EOS):
            continue
        src = sid[gram[:-1]]
        dst = state_of(gram)
        cost = _cost(p)
        label = words.find(w)
        if label is not None:
            f._arcs[src].append(Arc(label, label, cost, dst))
        if w == UNK:
            for a in aliases:
                al = words.id(a)
                f._arcs[src].append(Arc(al, al, cost, dst))

    for h, q in sid.items():
        if h:
            bow = lm.bows.get(h, 0.0)
            if bow > NO_PROB:
                f._arcs[q].append(Arc(0, 0, _cost(bow), state_of(h[1:])))
        eos = lm.logprob(EOS, h)
        if eos > -math.inf:
            f.set_final(q, _cost(eos))
    return f.arcsort()

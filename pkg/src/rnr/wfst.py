"""Weighted finite-state transducers over the tropical semiring.

Only what the reconstruction cascade needs: construction, composition with an
epsilon-sequencing filter, trimming, output projection, epsilon removal and a
deterministic single-best shortest path.  Weights are plain floats; the
semiring zero is ``math.inf`` and the one is ``0.0``.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from typing import Iterable, NamedTuple, Sequence

EPS = "<eps>"

ZERO = math.inf
ONE = 0.0


def plus(a: float, b: float) -> float:
    return a if a <= b else b


def times(a: float, b: float) -> float:
    return a + b


class FstError(ValueError):
    pass


class SymbolTable:
    """Bijection between string symbols and integer labels; id 0 is epsilon."""

    def __init__(self, symbols: Iterable[str] = ()):
        syms = [EPS]
        ids = {EPS: 0}
        for s in symbols:
            if s == EPS:
                continue
            if not s or any(c.isspace() for c in s):
                raise FstError(f"invalid symbol {s!r}: symbols must be non-empty and contain no whitespace")
            if s in ids:
                raise FstError(f"duplicate symbol {s!r}")
            ids[s] = len(syms)
            syms.append(s)
        self._syms = tuple(syms)
        self._ids = ids

    def id(self, sym: str) -> int:
        try:
            return self._ids[sym]
        except KeyError:
            raise FstError(f"unknown symbol {sym!r}") from None

    def find(self, sym: str, default=None):
        return self._ids.get(sym, default)

    def symbol(self, label: int) -> str:
        return self._syms[label]

    @property
    def symbols(self) -> tuple[str, ...]:
        return self._syms

    def __contains__(self, sym) -> bool:
        return sym in self._ids

    def __len__(self) -> int:
        return len(self._syms)

    def __iter__(self):
        return iter(self._syms)

    def __eq__(self, other) -> bool:
        return isinstance(other, SymbolTable) and self._syms == other._syms

    def __hash__(self) -> int:
        return hash(self._syms)

    def __repr__(self) -> str:
        return f"SymbolTable({len(self)} symbols)"

    def to_text(self) -> str:
        return "".join(f"{s}\t{i}\n" for i, s in enumerate(self._syms))

    @classmethod
    def from_text(cls, text: str) -> "SymbolTable":
        rows = []
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 2 or not parts[1].isdigit():
                raise FstError(f"line {lineno}: expected 'symbol id', got {line!r}")
            rows.append((int(parts[1]), parts[0]))
        rows.sort()
        if [i for i, _ in rows] != list(range(len(rows))) or not rows or rows[0][1] != EPS:
            raise FstError("symbol ids must be contiguous from 0 with <eps> at 0")
        return cls(s for _, s in rows)


class Arc(NamedTuple):
    ilabel: int
    olabel: int
    weight: float
    nextstate: int


class Path(NamedTuple):
    cost: float
    ilabels: tuple[int, ...]
    olabels: tuple[int, ...]


class Wfst:
    """A weighted transducer with integer states ``0..num_states-1``.

    Machines are built through ``add_state``/``add_arc``/``set_final`` and are
    treated as read-only afterwards; no operation in this module mutates its
    arguments.
    """

    def __init__(self, isyms: SymbolTable, osyms: SymbolTable | None = None):
        self.isyms = isyms
        self.osyms = isyms if osyms is None else osyms
        self.start: int | None = None
        self._arcs: list[list[Arc]] = []
        self._finals: dict[int, float] = {}

    def add_state(self) -> int:
        self._arcs.append([])
        return len(self._arcs) - 1

    def add_states(self, n: int) -> range:
        first = len(self._arcs)
        self._arcs.extend([] for _ in range(n))
        return range(first, first + n)

    def set_start(self, state: int) -> None:
        self._check_state(state)
        self.start = state

    def set_final(self, state: int, weight: float = ONE) -> None:
        self._check_state(state)
        if weight == ZERO:
            self._finals.pop(state, None)
        else:
            self._finals[state] = float(weight)

    def add_arc(self, src: int, ilabel: int, olabel: int, weight: float, dst: int) -> None:
        self._check_state(src)
        self._check_state(dst)
        if not 0 <= ilabel < len(self.isyms):
            raise FstError(f"input label {ilabel} not in input symbol table")
        if not 0 <= olabel < len(self.osyms):
            raise FstError(f"output label {olabel} not in output symbol table")
        self._arcs[src].append(Arc(ilabel, olabel, float(weight), dst))

    def _check_state(self, state: int) -> None:
        if not 0 <= state < len(self._arcs):
            raise FstError(f"no such state {state}")

    @property
    def num_states(self) -> int:
        return len(self._arcs)

    def states(self) -> range:
        return range(len(self._arcs))

    def arcs(self, state: int) -> list[Arc]:
        return self._arcs[state]

    def num_arcs(self, state: int | None = None) -> int:
        if state is None:
            return sum(len(a) for a in self._arcs)
        return len(self._arcs[state])

    def final(self, state: int) -> float:
        return self._finals.get(state, ZERO)

    def is_final(self, state: int) -> bool:
        return state in self._finals

    @property
    def finals(self) -> dict[int, float]:
        return dict(self._finals)

    def is_acceptor(self) -> bool:
        return self.isyms == self.osyms and all(
            a.ilabel == a.olabel for arcs in self._arcs for a in arcs
        )

    def arcsort(self) -> "Wfst":
        """Sort every state's arcs by (ilabel, olabel, nextstate) in place."""
        for arcs in self._arcs:
            arcs.sort(key=lambda a: (a.ilabel, a.olabel, a.nextstate, a.weight))
        return self

    def weights(self) -> Iterable[float]:
        for arcs in self._arcs:
            for a in arcs:
                yield a.weight
        yield from self._finals.values()

    def __repr__(self) -> str:
        return f"Wfst({self.num_states} states, {self.num_arcs()} arcs)"


def make_linear_acceptor(seq: Sequence[str], syms: SymbolTable) -> Wfst:
    f = Wfst(syms)
    f.add_states(len(seq) + 1)
    f.set_start(0)
    for i, sym in enumerate(seq):
        label = syms.find(sym)
        if label is None or label == 0:
            raise FstError(f"unknown symbol {sym!r} at position {i}")
        f._arcs[i].append(Arc(label, label, ONE, i + 1))
    f.set_final(len(seq), ONE)
    return f


def make_identity(syms: SymbolTable, symbols: Iterable[str] | None = None) -> Wfst:
    """One-state identity transducer over ``symbols`` (default: all of ``syms``)."""
    f = Wfst(syms)
    q = f.add_state()
    f.set_start(q)
    f.set_final(q)
    for s in (syms.symbols[1:] if symbols is None else symbols):
        label = syms.id(s)
        f.add_arc(q, label, label, ONE, q)
    return f


def _index(arcs: list[Arc], by_output: bool) -> dict[int, list[Arc]]:
    out: dict[int, list[Arc]] = {}
    for a in arcs:
        out.setdefault(a.olabel if by_output else a.ilabel, []).append(a)
    return out


def _expander(a: Wfst, b: Wfst, backoff: bool):
    """Arc generator of the composed machine: ``expand(qa, qb, flt)`` yields
    ``(ilabel, olabel, weight, (qa', qb', flt'))`` tuples."""
    if a.osyms != b.isyms:
        raise FstError("cannot compose: output symbols of the left machine differ from input symbols of the right")
    a_idx: list[dict | None] = [None] * a.num_states
    b_idx: list[dict | None] = [None] * b.num_states
    a_arcs, b_arcs = a._arcs, b._arcs

    def a_index(q):
        d = a_idx[q]
        if d is None:
            d = a_idx[q] = _index(a_arcs[q], True)
        return d

    def b_index(q):
        d = b_idx[q]
        if d is None:
            d = b_idx[q] = _index(b_arcs[q], False)
        return d

    fail: list[tuple[float, int] | None] = []
    if backoff:
        for q in b.states():
            eps = [x for x in b_arcs[q] if x.ilabel == 0]
            if len(eps) > 1:
                raise FstError(f"state {q} has more than one backoff arc")
            if eps and eps[0].olabel != 0:
                raise FstError(f"backoff arc at state {q} must be epsilon on both sides")
            fail.append((eps[0].weight, eps[0].nextstate) if eps else None)

    def lookup(qb: int, label: int):
        """Arcs for ``label`` at ``qb`` following failure arcs, with the accumulated cost."""
        cost = 0.0
        while True:
            found = b_index(qb).get(label)
            if found:
                return cost, found
            f = fail[qb]
            if f is None:
                return cost, ()
            cost += f[0]
            qb = f[1]

    def expand(qa, qb, flt):
        ia = a_index(qa)
        if backoff:
            for label, xs in ia.items():
                if label == 0:
                    continue
                extra, ys = lookup(qb, label)
                for x in xs:
                    for y in ys:
                        yield x.ilabel, y.olabel, x.weight + extra + y.weight, (x.nextstate, y.nextstate, 0)
        else:
            ib = b_index(qb)
            if len(ia) <= len(ib):
                pairs = ((xs, ib.get(lab)) for lab, xs in ia.items() if lab != 0)
            else:
                pairs = ((ia.get(lab), ys) for lab, ys in ib.items() if lab != 0)
            for xs, ys in pairs:
                if not xs or not ys:
                    continue
                for x in xs:
                    for y in ys:
                        yield x.ilabel, y.olabel, x.weight + y.weight, (x.nextstate, y.nextstate, 0)
            for y in ib.get(0, ()):
                yield 0, y.olabel, y.weight, (qa, y.nextstate, 1)
        if flt == 0:
            for x in ia.get(0, ()):
                yield x.ilabel, 0, x.weight, (x.nextstate, qb, 0)

    return expand


def _final_weight(a: Wfst, b: Wfst, qa: int, qb: int) -> float | None:
    fa = a._finals.get(qa)
    if fa is None:
        return None
    fb = b._finals.get(qb)
    return None if fb is None else fa + fb


def compose(a: Wfst, b: Wfst, *, backoff: bool = False) -> Wfst:
    """Compose ``a`` with ``b`` (only states reachable from the start are built).

    Epsilon moves are sequenced so that, between two matching labels, all of
    ``a``'s output-epsilon moves come before ``b``'s input-epsilon moves; every
    pair of paths therefore contributes exactly one composed path.

    With ``backoff=True`` the input-epsilon arcs of ``b`` are read as failure
    transitions: one is followed only when the current ``b`` state has no arc
    for the label being matched.  This is the exact semantics of a backoff
    language model; plain epsilon semantics can undercut it.
    """
    expand = _expander(a, b, backoff)
    c = Wfst(a.isyms, b.osyms)
    if a.start is None or b.start is None:
        return c
    ids: dict[tuple[int, int, int], int] = {}
    queue: deque = deque()
    c_arcs = c._arcs

    def state(key):
        s = ids.get(key)
        if s is None:
            s = ids[key] = len(c_arcs)
            c_arcs.append([])
            queue.append(key)
        return s

    c.start = state((a.start, b.start, 0))
    while queue:
        key = queue.popleft()
        src = ids[key]
        w = _final_weight(a, b, key[0], key[1])
        if w is not None:
            c._finals[src] = w
        c_arcs[src] = [Arc(i, o, w, state(nk)) for i, o, w, nk in expand(*key)]
    return c.arcsort()


def compose_best(a: Wfst, b: Wfst, *, backoff: bool = False) -> Wfst:
    """The part of ``compose(a, b)`` that can lie on a near-optimal accepting path.

    States are expanded best-first, guided by ``a``'s distance to a final
    state, which never overestimates because ``b`` carries non-negative
    weights.  Expansion stops once no unexpanded state can reach a path
    within the shortest-path tie tolerance of the optimum, so
    ``shortest_path`` returns the same answer as on the full composition.
    """
    check_nonnegative(a)
    check_nonnegative(b)
    expand = _expander(a, b, backoff)
    c = Wfst(a.isyms, b.osyms)
    if a.start is None or b.start is None:
        return c
    h = _reverse_distances(a)
    ids: dict[tuple[int, int, int], int] = {}
    g: dict[tuple[int, int, int], float] = {}
    c_arcs = c._arcs

    def state(key):
        s = ids.get(key)
        if s is None:
            s = ids[key] = len(c_arcs)
            c_arcs.append([])
        return s

    start = (a.start, b.start, 0)
    c.start = state(start)
    g[start] = ONE
    heap = [(h[a.start], 0, start)]
    tick = 1
    best = ZERO
    expanded = set()
    while heap:
        f, _, key = heapq.heappop(heap)
        if f > best + TIE_TOLERANCE * max(1.0, best):
            break
        if key in expanded or f > g[key] + h[key[0]]:
            continue
        expanded.add(key)
        src, gk = ids[key], g[key]
        w = _final_weight(a, b, key[0], key[1])
        if w is not None:
            c._finals[src] = w
            best = min(best, gk + w)
        out = c_arcs[src]
        for i, o, w, nk in expand(*key):
            nh = h[nk[0]]
            if nh == ZERO:
                continue
            out.append(Arc(i, o, w, state(nk)))
            ng = gk + w
            if ng < g.get(nk, ZERO):
                g[nk] = ng
                heapq.heappush(heap, (ng + nh, tick, nk))
                tick += 1
    return connect(c).arcsort()


def _reverse_distances(f: Wfst) -> list[float]:
    """Shortest distance from every state to a final state (Dijkstra on the reverse graph)."""
    rev: list[list[tuple[float, int]]] = [[] for _ in f.states()]
    for q in f.states():
        for a in f._arcs[q]:
            rev[a.nextstate].append((a.weight, q))
    dist = [ZERO] * f.num_states
    heap = []
    for q, w in f._finals.items():
        dist[q] = w
        heap.append((w, q))
    heapq.heapify(heap)
    while heap:
        d, q = heapq.heappop(heap)
        if d > dist[q]:
            continue
        for w, p in rev[q]:
            nd = d + w
            if nd < dist[p]:
                dist[p] = nd
                heapq.heappush(heap, (nd, p))
    return dist


def _forward_distances(f: Wfst) -> list[float]:
    dist = [ZERO] * f.num_states
    if f.start is None:
        return dist
    dist[f.start] = ONE
    heap = [(ONE, f.start)]
    while heap:
        d, q = heapq.heappop(heap)
        if d > dist[q]:
            continue
        for a in f._arcs[q]:
            nd = d + a.weight
            if nd < dist[a.nextstate]:
                dist[a.nextstate] = nd
                heapq.heappush(heap, (nd, a.nextstate))
    return dist


def check_nonnegative(f: Wfst) -> None:
    for w in f.weights():
        if w < 0 or math.isnan(w):
            raise FstError(f"negative or NaN weight {w}: shortest path needs non-negative weights")


TIE_TOLERANCE = 1e-9


def shortest_path(f: Wfst) -> Path | None:
    """Single best path of ``f``, or ``None`` when the language is empty.

    Among paths whose cost is within a relative ``1e-9`` of the optimum, the
    one with the lexicographically smallest output label sequence (epsilons
    removed) is returned.
    """
    check_nonnegative(f)
    if f.start is None:
        return None
    to_final = _reverse_distances(f)
    best = to_final[f.start]
    if best == ZERO:
        return None
    tol = TIE_TOLERANCE * max(1.0, best)
    limit = best + tol
    arcs = f._arcs

    # frontier: state -> (cost so far, backpointer); a backpointer is (parent bp, ilabel, olabel)
    frontier = {f.start: (ONE, None)}
    for _ in range(f.num_states * max(1, len(f.osyms)) + 1):
        # epsilon-output closure restricted to near-optimal continuations
        heap = [(g, q) for q, (g, _) in frontier.items()]
        heapq.heapify(heap)
        closure = dict(frontier)
        while heap:
            g, q = heapq.heappop(heap)
            if g > closure[q][0]:
                continue
            bp = closure[q][1]
            for a in arcs[q]:
                if a.olabel != 0:
                    continue
                ng = g + a.weight
                if ng + to_final[a.nextstate] > limit:
                    continue
                old = closure.get(a.nextstate)
                if old is None or ng < old[0]:
                    closure[a.nextstate] = (ng, (bp, a.ilabel, 0))
                    heapq.heappush(heap, (ng, a.nextstate))
        done = [(g + f._finals[q], q) for q, (g, _) in closure.items()
                if q in f._finals and g + f._finals[q] <= limit]
        if done:
            cost, q = min(done)
            return _unwind(cost, closure[q][1])
        label = None
        for q, (g, _) in closure.items():
            for a in arcs[q]:
                if a.olabel and (label is None or a.olabel < label) \
                        and g + a.weight + to_final[a.nextstate] <= limit:
                    label = a.olabel
        if label is None:
            raise FstError("shortest path extraction lost the optimal path")
        nxt: dict[int, tuple] = {}
        for q, (g, bp) in sorted(closure.items()):
            for a in arcs[q]:
                if a.olabel != label:
                    continue
                ng = g + a.weight
                if ng + to_final[a.nextstate] > limit:
                    continue
                old = nxt.get(a.nextstate)
                if old is None or ng < old[0]:
                    nxt[a.nextstate] = (ng, (bp, a.ilabel, a.olabel))
        frontier = nxt
    raise FstError("no finite lexicographically smallest shortest path (zero-cost labelled cycle)")


def _unwind(cost: float, bp) -> Path:
    ilabels, olabels = [], []
    while bp is not None:
        bp, il, ol = bp
        if il:
            ilabels.append(il)
        if ol:
            olabels.append(ol)
    return Path(cost, tuple(reversed(ilabels)), tuple(reversed(olabels)))


def connect(f: Wfst) -> Wfst:
    """Copy of ``f`` keeping only states that are both accessible and co-accessible."""
    if f.start is None:
        return Wfst(f.isyms, f.osyms)
    fwd = _forward_distances(f)
    bwd = _reverse_distances(f)
    keep = [q for q in f.states() if fwd[q] < ZERO and bwd[q] < ZERO]
    out = Wfst(f.isyms, f.osyms)
    if not keep:
        q = out.add_state()
        out.set_start(q)
        return out
    remap = {q: i for i, q in enumerate(keep)}
    out.add_states(len(keep))
    out.start = remap[f.start]
    for q in keep:
        new = remap[q]
        out._arcs[new] = [Arc(a.ilabel, a.olabel, a.weight, remap[a.nextstate])
                          for a in f._arcs[q] if a.nextstate in remap]
        if q in f._finals:
            out._finals[new] = f._finals[q]
    return out


def project(f: Wfst, output: bool = True) -> Wfst:
    """Acceptor over the output (or input) labels of ``f``."""
    syms = f.osyms if output else f.isyms
    out = Wfst(syms)
    out.add_states(f.num_states)
    out.start = f.start
    out._finals = dict(f._finals)
    for q in f.states():
        out._arcs[q] = [Arc(a.olabel, a.olabel, a.weight, a.nextstate) if output
                        else Arc(a.ilabel, a.ilabel, a.weight, a.nextstate)
                        for a in f._arcs[q]]
    return out


def rm_epsilon(f: Wfst) -> Wfst:
    """Remove arcs labelled epsilon on both sides.

    Surviving states are the start state and the targets of non-epsilon arcs.
    Parallel arcs with identical labels and destination are merged with the
    semiring sum (min).
    """
    if f.start is None:
        return Wfst(f.isyms, f.osyms)
    arcs = f._arcs

    def closure(p):
        dist = {p: ONE}
        heap = [(ONE, p)]
        while heap:
            d, q = heapq.heappop(heap)
            if d > dist[q]:
                continue
            for a in arcs[q]:
                if a.ilabel == 0 and a.olabel == 0:
                    nd = d + a.weight
                    if nd < dist.get(a.nextstate, ZERO):
                        dist[a.nextstate] = nd
                        heapq.heappush(heap, (nd, a.nextstate))
        return dist

    out = Wfst(f.isyms, f.osyms)
    remap: dict[int, int] = {}
    queue = deque()

    def state(q):
        s = remap.get(q)
        if s is None:
            s = remap[q] = out.add_state()
            queue.append(q)
        return s

    out.start = state(f.start)
    while queue:
        p = queue.popleft()
        src = remap[p]
        best: dict[tuple[int, int, int], float] = {}
        final = ZERO
        for q, d in closure(p).items():
            fw = f._finals.get(q)
            if fw is not None and d + fw < final:
                final = d + fw
            for a in arcs[q]:
                if a.ilabel == 0 and a.olabel == 0:
                    continue
                k = (a.ilabel, a.olabel, a.nextstate)
                w = d + a.weight
                if w < best.get(k, ZERO):
                    best[k] = w
        if final < ZERO:
            out._finals[src] = final
        for (il, ol, q), w in sorted(best.items()):
            out._arcs[src].append(Arc(il, ol, w, state(q)))
    return out


def _fmt_weight(w: float) -> str:
    return repr(float(w))


def write_fst_text(f: Wfst) -> str:
    """Line format: start state first, then ``src dst isym osym weight`` arcs and ``state weight`` finals."""
    if f.start is None:
        raise FstError("cannot write a machine without a start state")
    lines = [str(f.start)]
    for q in f.states():
        for a in f._arcs[q]:
            lines.append(f"{q}\t{a.nextstate}\t{f.isyms.symbol(a.ilabel)}\t"
                         f"{f.osyms.symbol(a.olabel)}\t{_fmt_weight(a.weight)}")
    for q in sorted(f._finals):
        lines.append(f"{q}\t{_fmt_weight(f._finals[q])}")
    return "\n".join(lines) + "\n"


def read_fst_text(text: str, isyms: SymbolTable | None = None,
                  osyms: SymbolTable | None = None) -> Wfst:
    """Parse :func:`write_fst_text` output.

    Without symbol tables, tables are built from the symbols in order of first
    appearance.
    """
    rows = []
    start = None
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split()
        try:
            if start is None:
                if len(parts) != 1:
                    raise ValueError("first line must hold only the start state")
                start = int(parts[0])
                if start < 0:
                    raise ValueError("negative state id")
            elif len(parts) in (4, 5):
                src, dst = int(parts[0]), int(parts[1])
                w = float(parts[4]) if len(parts) == 5 else ONE
                if src < 0 or dst < 0:
                    raise ValueError("negative state id")
                rows.append(("arc", src, dst, parts[2], parts[3], w))
            elif len(parts) in (1, 2):
                q = int(parts[0])
                w = float(parts[1]) if len(parts) == 2 else ONE
                if q < 0:
                    raise ValueError("negative state id")
                rows.append(("final", q, w))
            else:
                raise ValueError(f"expected 1, 2, 4 or 5 fields, got {len(parts)}")
        except ValueError as e:
            raise FstError(f"line {lineno}: {e}: {line!r}") from None
    if start is None:
        raise FstError("empty FST text: missing start state line")

    def table_from(col):
        seen = {}
        for r in rows:
            if r[0] == "arc":
                seen.setdefault(r[col], None)
        return SymbolTable(seen)

    if isyms is None:
        isyms = table_from(3)
    if osyms is None:
        osyms = table_from(4)
        if osyms == isyms:
            osyms = isyms
    f = Wfst(isyms, osyms)
    n = start + 1
    for r in rows:
        n = max(n, r[1] + 1, r[2] + 1 if r[0] == "arc" else 0)
    f.add_states(n)
    f.start = start
    for r in rows:
        if r[0] == "arc":
            _, src, dst, il, ol, w = r
            f._arcs[src].append(Arc(isyms.id(il), osyms.id(ol), w, dst))
        else:
            f._finals[r[1]] = r[2]
    return f


def same_structure(a: Wfst, b: Wfst) -> bool:
    """Structural equality compared through symbol strings."""
    if a.start != b.start or a.num_states != b.num_states or a._finals != b._finals:
        return False
    for q in a.states():
        xa = sorted((a.isyms.symbol(x.ilabel), a.osyms.symbol(x.olabel), x.weight, x.nextstate)
                    for x in a._arcs[q])
        xb = sorted((b.isyms.symbol(x.ilabel), b.osyms.symbol(x.olabel), x.weight, x.nextstate)
                    for x in b._arcs[q])
        if xa != xb:
            return False
    return True

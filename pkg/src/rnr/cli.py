"""Command-line interface: ``rnr <subcommand> [flags]``.

Exit status is 0 on success, 1 on usage errors and 2 on data or validation
errors; failures print one ``rnr <subcommand>: <module>: <message>`` line on
standard error.  Every subcommand that takes reconstruction hyperparameters
also accepts ``--config``; explicit flags override values from the file.
"""

from __future__ import annotations

import argparse
import logging
import random
import sys
from pathlib import Path

from . import builders, metrics, ngram, wfst
from .config import ConfigError, PipelineConfig, load_config
from .corpus import format_counts, read_lines, read_word_list, vocab_extract
from .reconstruct import build_assets, reconstruct_file, simulate_noise, write_reconstructions
from .reduction import (ReductionError, apply_reduction, generate_random_reduction,
                        load_mapping, write_mapping)

DEFAULTS = PipelineConfig()


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def _opt(p, *flags, default=None, help="", **kw):
    """Flag whose default is shown in --help but left unset so config files can fill it."""
    if default is not None:
        help = f"{help} (default: {default})"
    p.add_argument(*flags, default=None, help=help, **kw)


def _read_text_arg(path) -> str:
    if path in (None, "-"):
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def _write_out(path, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _resolve(args, *names):
    """Fill unset flags from --config, then from the built-in defaults."""
    cfg = load_config(args.config) if getattr(args, "config", None) else DEFAULTS
    for name in names:
        if getattr(args, name, None) is None:
            setattr(args, name, getattr(cfg, name))
    return args


# -- subcommands ---------------------------------------------------------------

def cmd_reduce(args) -> int:
    m = load_mapping(args.mapping)
    text = _read_text_arg(args.text)
    unknown = None
    if args.permissive:
        from collections import Counter
        unknown = Counter()
    lines = [apply_reduction(m, line, strict=not args.permissive, unknown=unknown)
             for line in text.splitlines()]
    _write_out(args.out, "".join(f"{x}\n" for x in lines))
    if unknown:
        print(f"rnr reduce: passed through {sum(unknown.values())} unknown graphemes: "
              f"{' '.join(sorted(unknown))}", file=sys.stderr)
    return 0


def cmd_train_lm(args) -> int:
    _resolve(args, "order")
    lm = ngram.train(read_lines(args.text), args.order, args.discount)
    _write_out(args.out_arpa, ngram.export_arpa(lm))
    return 0


def _assets(args):
    _resolve(args, "d", "lam", "eta")
    cfg = load_config(args.config) if args.config else None
    mapping = args.mapping or (cfg.mapping if cfg else None)
    if mapping is None or args.vocab is None or args.arpa is None:
        raise UsageError("--mapping, --vocab and --arpa are required (mapping may come from --config)")
    return build_assets(load_mapping(mapping), read_word_list(args.vocab),
                        ngram.import_arpa(args.arpa), d=args.d, lam=args.lam, eta=args.eta)


def cmd_build(args) -> int:
    a = _assets(args)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name in ("S", "E", "L", "G"):
        f = getattr(a, name)
        (out / f"{name}.fst").write_text(wfst.write_fst_text(f), encoding="utf-8")
    (out / "reduced.syms").write_text(a.S.isyms.to_text(), encoding="utf-8")
    (out / "graphemes.syms").write_text(a.S.osyms.to_text(), encoding="utf-8")
    (out / "words.syms").write_text(a.L.osyms.to_text(), encoding="utf-8")
    return 0


def cmd_reconstruct(args) -> int:
    _resolve(args, "jobs")
    a = _assets(args)
    results = reconstruct_file(args.hyp, a, args.jobs)
    _write_out(args.out, write_reconstructions(results))
    failed = [r for r in results if r.error]
    for r in failed:
        print(f"rnr reconstruct: {r.utt_id}: {r.error}", file=sys.stderr)
    return 2 if failed else 0


def _pairs(args):
    refs = _read_text_arg(args.ref).splitlines()
    hyps = _read_text_arg(args.hyp).splitlines()
    if len(refs) != len(hyps):
        raise ValueError(f"{len(refs)} reference lines but {len(hyps)} hypothesis lines")
    return refs, hyps


def _strip_ids(lines):
    return [line.split("\t")[1] if "\t" in line else line for line in lines]


def cmd_evaluate(args) -> int:
    refs, hyps = _pairs(args)
    refs, hyps = _strip_ids(refs), _strip_ids(hyps)
    m = load_mapping(args.mapping) if args.mapping else None
    if args.metric == "subcorrection":
        if m is None or args.identity_hyp is None:
            raise UsageError("--metric subcorrection needs --mapping and --identity-hyp")
        ident = _strip_ids(_read_text_arg(args.identity_hyp).splitlines())
        sc = metrics.substitution_correction(refs, ident, m, hyps)
        rows = [{"metric": "subcorrection", "x": sc.x, "y": sc.y,
                 "percent": sc.percent if sc.defined else "undefined"}]
        text, tsv = metrics.report(rows, ["metric", "x", "y", "percent"])
    else:
        if args.metric == "rwer":
            if m is None:
                raise UsageError("--metric rwer needs --mapping")
            refs = [" ".join(metrics.reduce_tokens(m, r)) for r in refs]
            hyps = [" ".join(metrics.reduce_tokens(m, h)) for h in hyps]
        if args.unit == "grapheme":
            split = m.graphemes if m else list
            refs = [metrics.grapheme_sequence(r, split) for r in refs]
            hyps = [metrics.grapheme_sequence(h, split) for h in hyps]
        c = metrics.corpus_wer(refs, hyps)
        rows = [{"metric": args.metric, "unit": args.unit, "rate": c.percent, "errors": c.errors,
                 "n_ref": c.n_ref, "sub": c.substitutions, "ins": c.insertions, "del": c.deletions}]
        text, tsv = metrics.report(rows, list(rows[0]))
    _write_out(args.out, tsv if args.tsv else text)
    return 0


def cmd_simulate_noise(args) -> int:
    _resolve(args, "p_sub", "p_del", "p_ins", "p_within", "seed", "confusions")
    if args.mapping:
        alphabet = load_mapping(args.mapping).original_alphabet
    elif args.alphabet:
        alphabet = read_word_list(args.alphabet)
    else:
        raise UsageError("one of --mapping or --alphabet is required")
    classes = args.confusions
    if isinstance(classes, str):
        classes = [c.strip() for c in classes.split(",") if c.strip()]
    classes = [c.split() if " " in c else list(c) for c in classes]
    rng = random.Random(args.seed)
    print(f"# simulate-noise seed={args.seed}", file=sys.stderr)
    text = _read_text_arg(args.text)
    lines = [simulate_noise(line, alphabet, args.p_sub, args.p_del, args.p_ins, rng, classes,
                            args.p_within) for line in text.splitlines()]
    _write_out(args.out, "".join(f"{x}\n" for x in lines))
    return 0


def cmd_random_reduction(args) -> int:
    alphabet = read_word_list(args.alphabet)
    m = generate_random_reduction(alphabet, args.size, args.seed, name=args.name)
    _write_out(args.out, f"# random reduction seed={args.seed}\n" + write_mapping(m))
    return 0


def cmd_vocab(args) -> int:
    split = load_mapping(args.mapping).graphemes if args.mapping else list
    inv = vocab_extract(read_lines(args.text), split)
    _write_out(args.out_words, format_counts(inv.words))
    if args.out_alphabet:
        _write_out(args.out_alphabet, format_counts(inv.graphemes))
    return 0


def cmd_validate_mapping(args) -> int:
    m = load_mapping(args.mapping)
    n, k = m.sizes
    print(f"{m.name}\t{n}\t{k}")
    if args.expect:
        try:
            want = tuple(int(x) for x in args.expect.split(":"))
            if len(want) != 2:
                raise ValueError
        except ValueError:
            raise UsageError(f"--expect must look like N:K, got {args.expect!r}") from None
        if (n, k) != want:
            raise ReductionError(f"{m.name}: expected {want[0]} -> {want[1]} graphemes, found {n} -> {k}")
    return 0


def cmd_pipeline(args) -> int:
    from .pipeline import run_pipeline

    overrides = {"out": Path(args.out) if args.out else None, "seed": args.seed,
                 "jobs": args.jobs, "d": args.d, "lam": args.lam, "eta": args.eta}
    cfg = load_config(args.config, **overrides)
    run_pipeline(cfg)
    sys.stdout.write((Path(cfg.out) / "report.txt").read_text(encoding="utf-8"))
    return 0


# -- parser --------------------------------------------------------------------

def _hyper(p, with_config=True):
    _opt(p, "--d", type=int, default=DEFAULTS.d, help="maximum edits per word")
    _opt(p, "--lambda", dest="lam", type=float, default=DEFAULTS.lam, help="cost per edit")
    _opt(p, "--eta", type=float, default=DEFAULTS.eta, help="penalty of the <unk> word")
    if with_config:
        p.add_argument("--config", help="key=value config file supplying unset flags")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="rnr", description="Reduce-and-reconstruct toolkit for grapheme-reduced ASR output.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("reduce", help="apply a reduction map to text", formatter_class=fmt)
    p.add_argument("--mapping", required=True, help="mapping TSV")
    p.add_argument("--text", default="-", help="input text, one utterance per line")
    p.add_argument("--out", default="-", help="output file")
    p.add_argument("--permissive", action="store_true", help="pass unknown graphemes through")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("train-lm", help="train a Kneser-Ney LM and write ARPA")
    p.add_argument("--text", required=True, help="training text, one sentence per line")
    _opt(p, "--order", type=int, default=DEFAULTS.order, help="n-gram order")
    p.add_argument("--discount", type=float, default=None,
                   help="fixed discount for every order (default: estimated per order)")
    p.add_argument("--out-arpa", default="-", help="output ARPA file (default: stdout)")
    p.add_argument("--config", help="key=value config file supplying unset flags")
    p.set_defaults(func=cmd_train_lm)

    p = sub.add_parser("build", help="write the S, E, L and G machines")
    p.add_argument("--mapping", help="mapping TSV")
    p.add_argument("--vocab", help="word list (first column)")
    p.add_argument("--arpa", help="ARPA language model")
    _hyper(p)
    p.add_argument("--out-dir", default="fsts", help="output directory (default: fsts)")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("reconstruct", help="reconstruct reduced hypotheses")
    p.add_argument("--mapping", help="mapping TSV")
    p.add_argument("--vocab", help="word list (first column)")
    p.add_argument("--arpa", help="ARPA language model")
    _hyper(p)
    p.add_argument("--hyp", required=True, help="hypotheses, 'id<TAB>text' or bare text per line")
    p.add_argument("--out", default="-", help="output TSV (default: stdout)")
    _opt(p, "--jobs", type=int, default=DEFAULTS.jobs, help="worker processes")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("evaluate", help="WER, reduced WER or substitution correction", formatter_class=fmt)
    p.add_argument("--ref", required=True, help="reference text")
    p.add_argument("--hyp", required=True, help="hypothesis text (reduced hypothesis for subcorrection)")
    p.add_argument("--mapping", default=None, help="mapping TSV (rwer, subcorrection, grapheme units)")
    p.add_argument("--identity-hyp", default=None, help="identity-system hypothesis (subcorrection)")
    p.add_argument("--unit", choices=["word", "grapheme"], default="word", help="alignment unit")
    p.add_argument("--metric", choices=["wer", "rwer", "subcorrection"], default="wer", help="metric")
    p.add_argument("--tsv", action="store_true", help="print TSV instead of an aligned table")
    p.add_argument("--out", default="-", help="output file")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("simulate-noise", help="corrupt text with a seeded grapheme noise channel")
    p.add_argument("--text", default="-", help="input text (default: stdin)")
    p.add_argument("--mapping", help="take the alphabet from this mapping's originals")
    p.add_argument("--alphabet", help="alphabet file, one grapheme per line")
    _opt(p, "--p-sub", type=float, default=DEFAULTS.p_sub, help="substitution probability")
    _opt(p, "--p-del", type=float, default=DEFAULTS.p_del, help="deletion probability")
    _opt(p, "--p-ins", type=float, default=DEFAULTS.p_ins, help="insertion probability")
    _opt(p, "--p-within", type=float, default=DEFAULTS.p_within,
         help="share of substitutions drawn from the grapheme's confusion class")
    _opt(p, "--confusions", help="comma-separated confusion classes, e.g. 'ckg,ou' (default: none)")
    _opt(p, "--seed", type=int, default=DEFAULTS.seed, help="random seed")
    p.add_argument("--out", default="-", help="output file (default: stdout)")
    p.add_argument("--config", help="key=value config file supplying unset flags")
    p.set_defaults(func=cmd_simulate_noise)

    p = sub.add_parser("random-reduction", help="size-matched random reduction map", formatter_class=fmt)
    p.add_argument("--alphabet", required=True, help="alphabet file, one grapheme per line")
    p.add_argument("--size", type=int, required=True, help="reduced alphabet size")
    p.add_argument("--seed", type=int, default=DEFAULTS.seed, help="random seed")
    p.add_argument("--name", default=None, help="map name")
    p.add_argument("--out", default="-", help="output mapping TSV")
    p.set_defaults(func=cmd_random_reduction)

    p = sub.add_parser("vocab", help="word and grapheme inventories of a corpus", formatter_class=fmt)
    p.add_argument("--text", required=True, help="corpus, one utterance per line")
    p.add_argument("--mapping", default=None, help="segment graphemes with this mapping")
    p.add_argument("--out-words", default="-", help="word counts TSV")
    p.add_argument("--out-alphabet", default=None, help="grapheme counts TSV")
    p.set_defaults(func=cmd_vocab)

    p = sub.add_parser("validate-mapping", help="check a mapping and report its sizes", formatter_class=fmt)
    p.add_argument("--mapping", required=True, help="mapping TSV")
    p.add_argument("--expect", default=None, help="required sizes as N:K, e.g. 63:27")
    p.set_defaults(func=cmd_validate_mapping)

    p = sub.add_parser("pipeline", help="run the synthetic end-to-end experiment")
    p.add_argument("--config", required=True, help="key=value pipeline config")
    p.add_argument("--out", default=None, help="output directory (default: from config, else rnr-out)")
    _opt(p, "--seed", type=int, default=DEFAULTS.seed, help="random seed")
    _opt(p, "--jobs", type=int, default=DEFAULTS.jobs, help="worker processes")
    _hyper(p, with_config=False)
    p.set_defaults(func=cmd_pipeline)
    return parser


_DATA_ERRORS = (ReductionError, ngram.LMError, builders.BuildError, wfst.FstError, ConfigError,
                ValueError, OSError, RuntimeError)


def main(argv=None) -> int:
    parser = build_parser()
    command = "rnr"
    try:
        args = parser.parse_args(argv)
        command = f"rnr {args.command}"
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(name)s: %(message)s")
        return args.func(args)
    except UsageError as e:
        print(str(e) if str(e).startswith("rnr") else f"{command}: {e}", file=sys.stderr)
        return 1
    except _DATA_ERRORS as e:
        module = type(e).__module__.rpartition(".")[2]
        if module in ("builtins", "__main__"):
            module = "io" if isinstance(e, OSError) else "error"
        msg = f"{e.strerror}: {e.filename}" if isinstance(e, OSError) and e.filename else str(e)
        print(f"{command}: {module}: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface and experiment driver.

Subcommands wire the library into pipelines: learn error patterns or a
phrase table from annotated data, corrupt clean text, train and apply
the detector, and score the results. Every subcommand accepts --config
FILE holding `key = value` lines (# starts a comment); a config entry
fills in any flag not given explicitly, and explicit flags always win.
Keys match the flag names without the leading dashes.

All randomness derives from --seed: injection version j uses seed + j,
detector training and the significance test consume the seed directly.
Given identical inputs and seed, every subcommand writes bitwise
identical outputs and never mutates its inputs.

Exit status: 0 on success, 1 on data errors (malformed files, mismatched
corpora, bad values), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Callable, Sequence

from . import __version__, detector, evaluation, inject, lm, patterns, smt
from .align import align_tokens, label_from_alignment, read_labeled_tsv, write_labeled_tsv
from .corpus import (
    FormatError,
    attach_tags,
    compute_background,
    parse_m2,
    parse_tagged,
    read_background,
    write_background,
)

_UNSET = object()


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError("not a boolean: %r" % text)


def _parse_weights(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.replace(",", " ").split())


def _parse_krange(text: str) -> list[int]:
    """`0..3` (inclusive) or a comma list like `0,1,3`."""
    text = text.strip()
    if ".." in text:
        lo, _, hi = text.partition("..")
        start, stop = int(lo), int(hi)
        if stop < start:
            raise ValueError("empty k range %r" % text)
        return list(range(start, stop + 1))
    values = [int(x) for x in text.split(",") if x.strip()]
    if not values:
        raise ValueError("no k values in %r" % text)
    return values


class _Flags:
    """Per-subcommand flag table supporting config-file fallback."""

    def __init__(self, parser: argparse.ArgumentParser):
        self.parser = parser
        self.defaults: dict[str, object] = {}
        self.types: dict[str, Callable] = {}
        self.required: set[str] = set()
        self.input_paths: set[str] = set()
        self.multi: set[str] = set()

    def add(
        self,
        flag: str,
        *,
        default=None,
        required=False,
        type: Callable = str,
        help: str = "",
        choices=None,
        is_input=False,
        multi=False,
        boolean=False,
    ):
        dest = flag.lstrip("-").replace("-", "_")
        self.defaults[dest] = default
        self.required.update([dest] if required else [])
        if is_input:
            self.input_paths.add(dest)
        kwargs: dict = {"dest": dest, "default": _UNSET, "help": help}
        if boolean:
            kwargs["action"] = "store_true"
            self.types[dest] = _parse_bool
            self.defaults[dest] = False
        else:
            kwargs["type"] = type
            self.types[dest] = type
            if choices is not None:
                kwargs["choices"] = choices
            if multi:
                kwargs["nargs"] = "+"
                self.multi.add(dest)
        self.parser.add_argument(flag, **kwargs)

    def resolve(self, args: argparse.Namespace) -> None:
        config = _load_config(args.config) if args.config else {}
        unknown = set(config) - set(self.defaults)
        if unknown:
            raise ValueError("unknown config keys: %s" % ", ".join(sorted(unknown)))
        for dest, declared in self.defaults.items():
            value = getattr(args, dest)
            if value is _UNSET:
                if dest in config:
                    raw = config[dest]
                    if dest in self.multi:
                        value = [self.types[dest](part) for part in raw.split()]
                    else:
                        value = self.types[dest](raw)
                else:
                    value = declared
            setattr(args, dest, value)
        missing = [d for d in sorted(self.required) if getattr(args, d) is None]
        if missing:
            self.parser.error(
                "missing required arguments: %s" % ", ".join("--" + d.replace("_", "-") for d in missing)
            )
        for dest in sorted(self.input_paths):
            value = getattr(args, dest)
            paths = value if isinstance(value, list) else [value] if value else []
            for path in paths:
                if not os.path.exists(path):
                    raise OSError("input path does not exist: %s" % path)


def _load_config(path: str) -> dict[str, str]:
    config: dict[str, str] = {}
    with open(path, encoding="utf-8") as stream:
        for n, raw in enumerate(stream, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise FormatError("%s line %d: expected `key = value`, got %r" % (path, n, raw.rstrip()))
            config[key.strip().replace("-", "_")] = value.strip()
    return config


def _read_tagged(path: str):
    with open(path, encoding="utf-8") as stream:
        return parse_tagged(stream)


def _read_labeled(path: str):
    with open(path, encoding="utf-8") as stream:
        return read_labeled_tsv(stream)


def _read_sentences_any(path: str):
    """Tagged (2-column) or labeled (3-column) TSV, decided by the first row."""
    with open(path, encoding="utf-8") as stream:
        text = stream.read()
    for line in text.splitlines():
        if line.strip():
            columns = len(line.split("\t"))
            break
    else:
        return []
    if columns == 3:
        return read_labeled_tsv(text.splitlines())
    return parse_tagged(text.splitlines())


def _sentence_id(sent, index: int) -> str:
    sid = getattr(sent, "id", "")
    return sid if sid else str(index)


# ---------------------------------------------------------------- commands

def _setup_align(flags: _Flags):
    flags.add("--orig", required=True, is_input=True, help="original (learner) tagged TSV")
    flags.add("--corr", required=True, is_input=True, help="corrected tagged TSV, parallel to --orig")
    flags.add("--out", required=True, help="labeled TSV output")


def _run_align(args):
    orig = _read_tagged(args.orig)
    corr = _read_tagged(args.corr)
    if len(orig) != len(corr):
        raise ValueError("%d original sentences vs %d corrected" % (len(orig), len(corr)))
    labeled = [label_from_alignment(o, align_tokens(o, c)) for o, c in zip(orig, corr)]
    with open(args.out, "w", encoding="utf-8") as stream:
        write_labeled_tsv(labeled, stream)


def _setup_extract(flags: _Flags):
    flags.add("--m2", required=True, is_input=True, help="M2 annotation file")
    flags.add("--orig-tags", required=True, is_input=True, help="tagged TSV of the original sentences")
    flags.add("--corr-tags", required=True, is_input=True, help="tagged TSV of the corrected sentences")
    flags.add("--threshold", default=patterns.DEFAULT_THRESHOLD, type=int, help="minimum pattern count")
    flags.add("--out", required=True, help="pattern file output")
    flags.add("--background-out", help="also write background error statistics here")


def _run_extract(args):
    with open(args.m2, encoding="utf-8") as stream:
        pairs = parse_m2(stream)
    tagged = attach_tags(pairs, _read_tagged(args.orig_tags), _read_tagged(args.corr_tags))
    scripts = [(pair, align_tokens(pair.original, pair.corrected)) for pair in tagged]
    store = patterns.build_store(scripts, threshold=args.threshold)
    with open(args.out, "w", encoding="utf-8") as stream:
        patterns.write_patterns(store, stream)
    if args.background_out:
        with open(args.background_out, "w", encoding="utf-8") as stream:
            write_background(compute_background(tagged), stream)


def _setup_inject(flags: _Flags):
    flags.add("--patterns", required=True, is_input=True, help="pattern file")
    flags.add("--background", required=True, is_input=True, help="background statistics file")
    flags.add("--input", required=True, is_input=True, help="clean tagged TSV to corrupt")
    flags.add("--out", required=True, help="labeled TSV output")
    flags.add("--seed", default=0, type=int, help="random seed")
    flags.add("--quota-floor", default=inject.QUOTA_FLOOR, type=float, help="per-type sampling floor")
    flags.add("--max-attempts", default=100, type=int, help="pattern draws per sentence")
    flags.add("--audit", help="JSONL audit log of applied patterns")


def _run_inject(args):
    with open(args.patterns, encoding="utf-8") as stream:
        store = patterns.read_patterns(stream)
    with open(args.background, encoding="utf-8") as stream:
        background = read_background(stream)
    corpus = _read_tagged(args.input)
    config = inject.InjectionConfig(
        background, seed=args.seed, max_attempts=args.max_attempts, quota_floor=args.quota_floor
    )
    records = inject.corrupt_corpus(corpus, store, config)
    with open(args.out, "w", encoding="utf-8") as stream:
        write_labeled_tsv([r.result for r in records], stream)
    if args.audit:
        with open(args.audit, "w", encoding="utf-8") as stream:
            inject.write_audit_log(records, stream)


def _setup_train_lm(flags: _Flags):
    flags.add("--input", required=True, is_input=True, help="tagged or labeled TSV corpus")
    flags.add("--order", default=5, type=int, help="n-gram order")
    flags.add("--out", required=True, help="ARPA output")


def _run_train_lm(args):
    corpus = _read_sentences_any(args.input)
    model = lm.train_lm(corpus, order=args.order)
    for warning in model.warnings:
        print("warning: %s" % warning, file=sys.stderr)
    with open(args.out, "w", encoding="utf-8") as stream:
        lm.write_arpa(model, stream)


def _setup_build_table(flags: _Flags):
    flags.add("--corr", required=True, is_input=True, help="corrected (source) tagged TSV")
    flags.add("--orig", required=True, is_input=True, help="original (target) tagged TSV")
    flags.add("--max-len", default=smt.MAX_PHRASE_LEN, type=int, help="maximum phrase length")
    flags.add("--floor", default=smt.IDENTITY_FLOOR, type=float, help="identity translation floor")
    flags.add("--out", required=True, help="phrase table output")


def _run_build_table(args):
    corr = _read_tagged(args.corr)
    orig = _read_tagged(args.orig)
    if len(corr) != len(orig):
        raise ValueError("%d corrected sentences vs %d original" % (len(corr), len(orig)))
    triples = [(c, o, align_tokens(c, o)) for c, o in zip(corr, orig)]
    table = smt.extract_phrase_table(triples, max_len=args.max_len, identity_floor=args.floor)
    with open(args.out, "w", encoding="utf-8") as stream:
        smt.write_phrase_table(table, stream)


def _setup_translate(flags: _Flags):
    flags.add("--input", required=True, is_input=True, help="clean tagged TSV to translate")
    flags.add("--table", required=True, is_input=True, help="phrase table")
    flags.add("--lm", required=True, is_input=True, help="ARPA language model")
    flags.add("--weights", default=smt.DEFAULT_WEIGHTS, type=_parse_weights, help="six feature weights")
    flags.add("--beam", default=100, type=int, help="beam width")
    flags.add("--nbest", default=10, type=int, help="n-best size")
    flags.add("--out", help="n-best list output")
    flags.add("--versions", default=0, type=int, help="write this many labeled corpora")
    flags.add("--version-prefix", help="output prefix for --versions (suffix `<j>.tsv`)")


def _run_translate(args):
    if not args.out and not args.versions:
        raise ValueError("nothing to do: pass --out and/or --versions with --version-prefix")
    if args.versions and not args.version_prefix:
        raise ValueError("--versions requires --version-prefix")
    corpus = _read_tagged(args.input)
    with open(args.table, encoding="utf-8") as stream:
        table = smt.read_phrase_table(stream)
    with open(args.lm, encoding="utf-8") as stream:
        model = lm.read_arpa(stream)
    config = smt.DecoderConfig(
        weights=tuple(args.weights), beam_width=args.beam, nbest=max(args.nbest, args.versions or 1)
    )
    if args.out:
        with open(args.out, "w", encoding="utf-8") as stream:
            for idx, sent in enumerate(corpus):
                smt.write_nbest(stream, _sentence_id(sent, idx), smt.decode(sent, table, model, config))
    if args.versions:
        versions = smt.generate_artificial(corpus, table, model, config, k=args.versions)
        for j, version in enumerate(versions, start=1):
            with open("%s%d.tsv" % (args.version_prefix, j), "w", encoding="utf-8") as stream:
                write_labeled_tsv(version, stream)


def _detector_flags(flags: _Flags):
    flags.add("--emb-dim", default=50, type=int, help="embedding size")
    flags.add("--hidden-dim", default=100, type=int, help="recurrent state size per direction")
    flags.add("--ff-dim", default=50, type=int, help="feedforward layer size")
    flags.add("--epochs", default=15, type=int, help="training epochs")
    flags.add("--batch-size", default=32, type=int, help="sentences per batch")
    flags.add("--rho", default=0.95, type=float, help="AdaDelta decay")
    flags.add("--epsilon", default=1e-6, type=float, help="AdaDelta epsilon")
    flags.add("--min-freq", default=2, type=int, help="vocabulary frequency cutoff")
    flags.add("--threshold", default=0.5, type=float, help="p(incorrect) decision threshold")
    flags.add("--seed", default=0, type=int, help="random seed")


def _train_config(args) -> detector.TrainConfig:
    return detector.TrainConfig(
        emb_dim=args.emb_dim,
        hidden_dim=args.hidden_dim,
        ff_dim=args.ff_dim,
        epochs=args.epochs,
        batch_size=args.batch_size,
        rho=args.rho,
        epsilon=args.epsilon,
        seed=args.seed,
        threshold=args.threshold,
        min_freq=args.min_freq,
    )


def _setup_train_detector(flags: _Flags):
    flags.add("--train", required=True, is_input=True, multi=True, help="labeled TSV corpora, concatenated")
    flags.add("--dev", required=True, is_input=True, help="labeled TSV dev corpus")
    flags.add("--out", required=True, help="model output (.npz)")
    _detector_flags(flags)


def _run_train_detector(args):
    train_corpus = []
    for path in args.train:
        train_corpus.extend(_read_labeled(path))
    dev = _read_labeled(args.dev)
    model = detector.train(train_corpus, dev, _train_config(args))
    detector.save_model(model, args.out)
    for entry in model.history:
        print(
            "epoch %d  train_loss %.6f  dev_f05 %.6f"
            % (entry["epoch"], entry["train_loss"], entry["dev_f05"])
        )


def _setup_detect(flags: _Flags):
    flags.add("--model", required=True, is_input=True, help="trained model (.npz)")
    flags.add("--input", required=True, is_input=True, help="tagged or labeled TSV")
    flags.add("--threshold", default=0.5, type=float, help="p(incorrect) decision threshold")
    flags.add("--out", required=True, help="labeled TSV output")


def _run_detect(args):
    model = detector.load_model(args.model)
    corpus = _read_sentences_any(args.input)
    predictions = detector.predict(model, corpus, threshold=args.threshold)
    with open(args.out, "w", encoding="utf-8") as stream:
        write_labeled_tsv(predictions, stream)


def _setup_evaluate(flags: _Flags):
    flags.add("--pred", required=True, is_input=True, help="predicted labeled TSV")
    flags.add("--gold", required=True, is_input=True, help="gold labeled TSV")
    flags.add("--beta", default=0.5, type=float, help="F-measure beta")
    flags.add("--json", boolean=True, help="machine-readable output")


def _run_evaluate(args):
    pred = _read_labeled(args.pred)
    gold = _read_labeled(args.gold)
    p, r, f, counts = evaluation.score(pred, gold, beta=args.beta)
    if args.json:
        print(
            json.dumps(
                {
                    "precision": 100.0 * p,
                    "recall": 100.0 * r,
                    "f%.1f" % args.beta: 100.0 * f,
                    "tp": counts.tp,
                    "fp": counts.fp,
                    "fn": counts.fn,
                    "tn": counts.tn,
                },
                sort_keys=True,
            )
        )
    else:
        print(evaluation.format_metrics(p, r, f, counts, beta=args.beta))


def _setup_significance(flags: _Flags):
    flags.add("--sys-a", required=True, is_input=True, help="system A labeled TSV")
    flags.add("--sys-b", required=True, is_input=True, help="system B labeled TSV")
    flags.add("--gold", required=True, is_input=True, help="gold labeled TSV")
    flags.add("--rounds", default=10000, type=int, help="randomization rounds")
    flags.add("--seed", default=0, type=int, help="random seed")


def _run_significance(args):
    sys_a = _read_labeled(args.sys_a)
    sys_b = _read_labeled(args.sys_b)
    gold = _read_labeled(args.gold)
    observed = evaluation.observed_statistic(sys_a, sys_b, gold)
    p_value = evaluation.randomization_test(sys_a, sys_b, gold, rounds=args.rounds, rng=args.seed)
    print("%-10s %.6f" % ("observed", observed))
    print("%-10s %d" % ("rounds", args.rounds))
    print("%-10s %d" % ("seed", args.seed))
    print("%-10s %.6f" % ("p-value", p_value))


def _setup_experiment(flags: _Flags):
    flags.add("--train", required=True, is_input=True, help="annotated labeled TSV")
    flags.add("--dev", required=True, is_input=True, help="labeled TSV dev corpus")
    flags.add("--clean", required=True, is_input=True, help="clean tagged TSV pool")
    flags.add("--generator", required=True, choices=("pat", "mt"), help="error generation method")
    flags.add("--k", default="1..3", help="version counts, `0..3` or `0,1,3`")
    flags.add("--patterns", is_input=True, help="pattern file (pat)")
    flags.add("--background", is_input=True, help="background statistics (pat and mt)")
    flags.add("--table", is_input=True, help="phrase table (mt)")
    flags.add("--lm", is_input=True, help="ARPA language model (mt)")
    flags.add("--weights", default=smt.DEFAULT_WEIGHTS, type=_parse_weights, help="decoder weights (mt)")
    flags.add("--beam", default=100, type=int, help="decoder beam width (mt)")
    flags.add("--out", help="output table path (default stdout)")
    _detector_flags(flags)


def experiment_versions(
    base_train: Sequence,
    dev: Sequence,
    generate: Callable[[int], list],
    ks: Sequence[int],
    config: detector.TrainConfig,
) -> list[tuple[int, float]]:
    """Dev F0.5 for detectors trained on base + k generated versions.

    `generate(k)` must return k corpora of LabeledSentence; it is called
    once with max(ks) and the result is sliced, so version j is identical
    across rows. Rows come back in the requested k order.
    """
    ks = list(ks)
    if not ks or min(ks) < 0:
        raise ValueError("k values must be non-negative")
    top = max(ks)
    versions = generate(top) if top > 0 else []
    if len(versions) != top:
        raise ValueError("generator produced %d versions, expected %d" % (len(versions), top))
    rows = []
    for k in ks:
        corpus = list(base_train)
        for version in versions[:k]:
            corpus.extend(version)
        model = detector.train(corpus, dev, config)
        rows.append((k, max(entry["dev_f05"] for entry in model.history)))
    return rows


def _run_experiment(args):
    base = _read_labeled(args.train)
    dev = _read_labeled(args.dev)
    clean = _read_tagged(args.clean)
    ks = _parse_krange(args.k)
    top = max(ks) if ks else 0

    if args.generator == "pat":
        if not (args.patterns and args.background):
            raise ValueError("generator pat needs --patterns and --background")
        with open(args.patterns, encoding="utf-8") as stream:
            store = patterns.read_patterns(stream)
        with open(args.background, encoding="utf-8") as stream:
            background = read_background(stream)

        def generate(k: int) -> list:
            config = inject.InjectionConfig(background, seed=args.seed)
            versions = inject.generate_versions(clean, store, config, k)
            return [[record.result for record in records] for records in versions]

    else:
        if not (args.table and args.lm):
            raise ValueError("generator mt needs --table and --lm")
        with open(args.table, encoding="utf-8") as stream:
            table = smt.read_phrase_table(stream)
        with open(args.lm, encoding="utf-8") as stream:
            model = lm.read_arpa(stream)
        config = smt.DecoderConfig(
            weights=tuple(args.weights), beam_width=args.beam, nbest=max(top, 1)
        )

        def generate(k: int) -> list:
            return smt.generate_artificial(clean, table, model, config, k)

    rows = experiment_versions(base, dev, generate, ks, _train_config(args))
    lines = ["%d\t%.6f" % (k, f) for k, f in rows]
    if args.out:
        with open(args.out, "w", encoding="utf-8") as stream:
            stream.write("\n".join(lines) + "\n")
    else:
        print("\n".join(lines))


_COMMANDS = (
    ("align", "label original sentences against corrected ones", _setup_align, _run_align),
    ("extract-patterns", "learn error patterns from M2 annotations", _setup_extract, _run_extract),
    ("inject", "corrupt clean text with learned patterns", _setup_inject, _run_inject),
    ("train-lm", "train a Kneser-Ney n-gram model, write ARPA", _setup_train_lm, _run_train_lm),
    ("build-phrase-table", "extract a phrase table from parallel text", _setup_build_table, _run_build_table),
    ("translate", "decode clean text into erroneous text", _setup_translate, _run_translate),
    ("train-detector", "train the token-level error detector", _setup_train_detector, _run_train_detector),
    ("detect", "label a corpus with a trained detector", _setup_detect, _run_detect),
    ("evaluate", "precision/recall/F-beta against gold labels", _setup_evaluate, _run_evaluate),
    ("significance", "approximate randomization test between two systems", _setup_significance, _run_significance),
    ("experiment-versions", "dev F0.5 as generated versions accumulate", _setup_experiment, _run_experiment),
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="errgen",
        description="learn, inject, and detect artificial writing errors",
    )
    parser.add_argument("--version", action="version", version="%(prog)s " + __version__)
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
    for name, blurb, setup, run in _COMMANDS:
        sub = subparsers.add_parser(name, help=blurb, description=blurb)
        sub.add_argument("--version", action="version", version="errgen " + __version__)
        sub.add_argument("--config", default=None, help="key=value config file; flags override")
        sub.add_argument(
            "--threads",
            type=int,
            default=1,
            help="worker threads (advisory; execution is sequential and deterministic)",
        )
        flags = _Flags(sub)
        setup(flags)
        sub.set_defaults(_flags=flags, _run=run)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_:
        return int(exit_.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    if args.threads < 1:
        print("errgen: error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        args._flags.resolve(args)
        args._run(args)
    except SystemExit as exit_:  # parser.error inside resolve
        return int(exit_.code or 0)
    except (FormatError, ValueError, KeyError, OSError, FloatingPointError) as exc:
        print("errgen: error: %s" % exc, file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

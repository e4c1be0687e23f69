"""End-to-end CLI tests: every subcommand, in process, on a tiny world."""

import json

import pytest

import synthworld
from errgen import lm, patterns, smt
from errgen.align import align_tokens, label_from_alignment, read_labeled_tsv, write_labeled_tsv
from errgen.cli import main
from errgen.corpus import parse_tagged, read_background, serialize_m2, serialize_tagged
from errgen.detector import load_model


class Env:
    def __init__(self, root):
        self.root = root

    def path(self, name):
        return str(self.root / name)

    def write(self, name, text):
        target = self.root / name
        target.write_text(text, encoding="utf-8")
        return str(target)

    def read(self, name):
        return (self.root / name).read_text(encoding="utf-8")


@pytest.fixture(scope="module")
def env(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    env = Env(root)

    annotated = synthworld.annotated_corpus(160, seed=70)
    dev_pairs = synthworld.annotated_corpus(40, seed=72)
    clean = synthworld.clean_corpus(120, seed=71)

    env.write("orig.tsv", serialize_tagged([p.original for p in annotated]))
    env.write("corr.tsv", serialize_tagged([p.corrected for p in annotated]))
    env.write("dev_orig.tsv", serialize_tagged([p.original for p in dev_pairs]))
    env.write("dev_corr.tsv", serialize_tagged([p.corrected for p in dev_pairs]))
    env.write("clean.tsv", serialize_tagged(clean))
    env.write("annotated.m2", serialize_m2(annotated))

    assert main(["align", "--orig", env.path("orig.tsv"), "--corr", env.path("corr.tsv"),
                 "--out", env.path("train.labeled")]) == 0
    assert main(["align", "--orig", env.path("dev_orig.tsv"), "--corr", env.path("dev_corr.tsv"),
                 "--out", env.path("dev.labeled")]) == 0
    assert main(["extract-patterns", "--m2", env.path("annotated.m2"),
                 "--orig-tags", env.path("orig.tsv"), "--corr-tags", env.path("corr.tsv"),
                 "--threshold", "2", "--out", env.path("patterns.txt"),
                 "--background-out", env.path("background.jsonl")]) == 0
    assert main(["train-lm", "--input", env.path("orig.tsv"), "--order", "3",
                 "--out", env.path("orig.arpa")]) == 0
    assert main(["build-phrase-table", "--corr", env.path("corr.tsv"),
                 "--orig", env.path("orig.tsv"), "--out", env.path("table.txt")]) == 0
    return env


def test_no_command_prints_usage(capsys):
    assert main([]) == 2
    assert "usage" in capsys.readouterr().err.lower()


def test_version_flag(capsys):
    assert main(["--version"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("errgen ")


def test_align_output_matches_library(env):
    orig = parse_tagged(env.read("orig.tsv").splitlines())
    corr = parse_tagged(env.read("corr.tsv").splitlines())
    want = [label_from_alignment(o, align_tokens(o, c)) for o, c in zip(orig, corr)]
    got = read_labeled_tsv(env.read("train.labeled").splitlines())
    assert got == want


def test_extracted_patterns_and_background_parse(env):
    store = patterns.read_patterns(env.read("patterns.txt").splitlines())
    assert store.patterns
    assert all(p.count >= 2 for p in store.patterns)
    background = read_background(env.read("background.jsonl").splitlines())
    assert sum(background.count_probs.values()) == pytest.approx(1.0)
    assert background.type_probs


def test_inject_is_seed_deterministic(env):
    base = ["inject", "--patterns", env.path("patterns.txt"),
            "--background", env.path("background.jsonl"), "--input", env.path("clean.tsv")]
    assert main(base + ["--out", env.path("inj_a.tsv"), "--seed", "3",
                        "--audit", env.path("audit.jsonl")]) == 0
    assert main(base + ["--out", env.path("inj_b.tsv"), "--seed", "3"]) == 0
    assert main(base + ["--out", env.path("inj_c.tsv"), "--seed", "4"]) == 0
    assert env.read("inj_a.tsv") == env.read("inj_b.tsv")
    assert env.read("inj_a.tsv") != env.read("inj_c.tsv")

    labeled = read_labeled_tsv(env.read("inj_a.tsv").splitlines())
    assert len(labeled) == 120
    records = [json.loads(line) for line in env.read("audit.jsonl").splitlines()]
    assert len(records) == 120
    assert all({"id", "requested", "applied", "exhausted"} <= set(r) for r in records)


def test_trained_lm_is_valid_arpa(env):
    model = lm.read_arpa(env.read("orig.arpa").splitlines())
    assert model.order == 3
    corpus = parse_tagged(env.read("orig.tsv").splitlines())
    assert model.sequence_log_prob(corpus[0].surfaces) < 0.0


def test_phrase_table_parses_with_identity_pairs(env):
    table = smt.read_phrase_table(env.read("table.txt").splitlines())
    corpus = parse_tagged(env.read("corr.tsv").splitlines())
    word = corpus[0].surfaces[0]
    matches = table.lookup((word,))
    assert any(pair.target == (word,) for pair in matches)


def test_translate_nbest_and_versions(env):
    head = parse_tagged(env.read("clean.tsv").splitlines())[:8]
    env.write("clean_head.tsv", serialize_tagged(head))
    base = ["translate", "--input", env.path("clean_head.tsv"), "--table", env.path("table.txt"),
            "--lm", env.path("orig.arpa"), "--beam", "10"]
    assert main(base + ["--nbest", "3", "--out", env.path("head.nbest")]) == 0
    lines = env.read("head.nbest").splitlines()
    assert lines and all(line.count("|||") == 3 for line in lines)

    assert main(base + ["--versions", "2", "--version-prefix", env.path("mtv")]) == 0
    for j in (1, 2):
        version = read_labeled_tsv(env.read("mtv%d.tsv" % j).splitlines())
        assert len(version) == 8


def test_translate_usage_errors(env, capsys):
    base = ["translate", "--input", env.path("clean.tsv"), "--table", env.path("table.txt"),
            "--lm", env.path("orig.arpa")]
    assert main(base) == 1
    assert "nothing to do" in capsys.readouterr().err
    assert main(base + ["--versions", "2"]) == 1
    assert "--version-prefix" in capsys.readouterr().err


DETECTOR_FLAGS = ["--emb-dim", "4", "--hidden-dim", "4", "--ff-dim", "4",
                  "--epochs", "2", "--batch-size", "16", "--min-freq", "1", "--seed", "1"]


def test_train_detector_then_detect_then_evaluate(env, capsys):
    rc = main(["train-detector", "--train", env.path("train.labeled"),
               "--dev", env.path("dev.labeled"), "--out", env.path("model.npz")]
              + DETECTOR_FLAGS)
    assert rc == 0
    out = capsys.readouterr().out
    assert "epoch 1" in out and "dev_f05" in out
    model = load_model(env.path("model.npz"))
    assert model.vocab

    assert main(["detect", "--model", env.path("model.npz"), "--input", env.path("dev_orig.tsv"),
                 "--out", env.path("dev.pred")]) == 0
    pred = read_labeled_tsv(env.read("dev.pred").splitlines())
    gold = read_labeled_tsv(env.read("dev.labeled").splitlines())
    assert len(pred) == len(gold)
    orig = parse_tagged(env.read("dev_orig.tsv").splitlines())
    assert [tuple(t.surface for t in s.tokens) for s in pred] == [o.surfaces for o in orig]

    assert main(["evaluate", "--pred", env.path("dev.pred"), "--gold", env.path("dev.labeled")]) == 0
    text = capsys.readouterr().out
    assert "precision" in text and "F0.5" in text


def test_evaluate_json_on_perfect_predictions(env, capsys):
    assert main(["evaluate", "--pred", env.path("dev.labeled"), "--gold", env.path("dev.labeled"),
                 "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert set(payload) == {"precision", "recall", "f0.5", "tp", "fp", "fn", "tn"}
    assert payload["precision"] == 100.0
    assert payload["recall"] == 100.0
    assert payload["fp"] == 0 and payload["fn"] == 0


def test_significance_command(env, capsys):
    rc = main(["significance", "--sys-a", env.path("dev.pred"), "--sys-b", env.path("dev.labeled"),
               "--gold", env.path("dev.labeled"), "--rounds", "200", "--seed", "5"])
    assert rc == 0
    out = capsys.readouterr().out
    fields = dict(line.split(None, 1) for line in out.splitlines())
    assert set(fields) == {"observed", "rounds", "seed", "p-value"}
    assert 0.0 < float(fields["p-value"]) <= 1.0

    assert main(["significance", "--sys-a", env.path("dev.pred"), "--sys-b", env.path("dev.pred"),
                 "--gold", env.path("dev.labeled"), "--rounds", "100"]) == 0
    out = capsys.readouterr().out
    assert "p-value    1.000000" in out


def test_experiment_versions_command(env):
    head = read_labeled_tsv(env.read("train.labeled").splitlines())[:60]
    with open(env.path("exp_train.labeled"), "w", encoding="utf-8") as stream:
        write_labeled_tsv(head, stream)
    clean_head = parse_tagged(env.read("clean.tsv").splitlines())[:40]
    env.write("exp_clean.tsv", serialize_tagged(clean_head))
    rc = main(["experiment-versions", "--train", env.path("exp_train.labeled"),
               "--dev", env.path("dev.labeled"), "--clean", env.path("exp_clean.tsv"),
               "--generator", "pat", "--patterns", env.path("patterns.txt"),
               "--background", env.path("background.jsonl"), "--k", "1,0",
               "--out", env.path("exp.tsv"), "--epochs", "1", "--emb-dim", "4",
               "--hidden-dim", "4", "--ff-dim", "4", "--min-freq", "1", "--seed", "2"])
    assert rc == 0
    rows = [line.split("\t") for line in env.read("exp.tsv").splitlines()]
    assert [int(k) for k, _ in rows] == [1, 0]
    assert all(0.0 <= float(f) <= 1.0 for _, f in rows)


def test_config_file_fills_in_flags(env):
    base = ["inject", "--patterns", env.path("patterns.txt"),
            "--background", env.path("background.jsonl"), "--input", env.path("clean.tsv")]
    config = env.write("inject.cfg", "# defaults for injection\nseed = 3\nmax-attempts = 100\n")
    assert main(base + ["--out", env.path("cfg_a.tsv"), "--config", config]) == 0
    assert env.read("cfg_a.tsv") == env.read("inj_a.tsv")
    # explicit flags beat config entries
    assert main(base + ["--out", env.path("cfg_b.tsv"), "--config", config, "--seed", "4"]) == 0
    assert env.read("cfg_b.tsv") == env.read("inj_c.tsv")


def test_config_file_errors(env, capsys):
    bad_key = env.write("bad_key.cfg", "bogus = 1\n")
    assert main(["evaluate", "--pred", env.path("dev.labeled"), "--gold", env.path("dev.labeled"),
                 "--config", bad_key]) == 1
    assert "unknown config keys: bogus" in capsys.readouterr().err

    malformed = env.write("malformed.cfg", "no equals sign here\n")
    assert main(["evaluate", "--pred", env.path("dev.labeled"), "--gold", env.path("dev.labeled"),
                 "--config", malformed]) == 1
    assert "key = value" in capsys.readouterr().err


def test_usage_and_data_error_exit_codes(env, capsys):
    assert main(["align", "--orig", env.path("orig.tsv")]) == 2  # missing required flags
    capsys.readouterr()
    assert main(["align", "--orig", env.path("orig.tsv"), "--corr", env.path("nope.tsv"),
                 "--out", env.path("x.tsv")]) == 1
    assert "does not exist" in capsys.readouterr().err
    assert main(["evaluate", "--pred", env.path("dev.labeled"), "--gold", env.path("dev.labeled"),
                 "--threads", "0"]) == 2
    capsys.readouterr()
    assert main(["experiment-versions", "--generator", "bogus"]) == 2
    capsys.readouterr()
    # parallel corpora must agree in length
    assert main(["align", "--orig", env.path("orig.tsv"), "--corr", env.path("dev_corr.tsv"),
                 "--out", env.path("x.tsv")]) == 1
    assert "160 original sentences vs 40" in capsys.readouterr().err


def test_threads_flag_is_accepted(env):
    assert main(["evaluate", "--pred", env.path("dev.labeled"), "--gold", env.path("dev.labeled"),
                 "--threads", "2"]) == 0

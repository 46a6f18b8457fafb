"""Metrics, config validation, and the command line surface."""

import json
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conceptlearn.cli import main
from conceptlearn.config import (
    ConfigError,
    load_config,
    merge_options,
    validate_config,
)
from conceptlearn.metrics import (
    format_float,
    mean_accuracy,
    pairwise_auc,
    rank_auc,
    read_json,
    taxonomy_pairs,
    write_csv,
    write_json,
)
from conceptlearn.seeding import rng_for
from conceptlearn.worldgen import make_schema


# ---------------------------------------------------------------------------
# ranking metrics

def test_rank_auc_hand_cases():
    assert rank_auc([2.0, 3.0], [0.0, 1.0]) == 1.0
    assert rank_auc([0.0, 1.0], [2.0, 3.0]) == 0.0
    assert rank_auc([1.0], [1.0]) == 0.5
    assert rank_auc([0.0, 2.0], [1.0]) == 0.5


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-5, 5), min_size=1, max_size=30),
       st.lists(st.integers(-5, 5), min_size=1, max_size=30))
def test_rank_auc_matches_pairwise_oracle(pos, neg):
    # integer scores force heavy ties; the rank form must still agree
    a = rank_auc([float(x) for x in pos], [float(x) for x in neg])
    b = pairwise_auc([float(x) for x in pos], [float(x) for x in neg])
    assert a == pytest.approx(b, abs=1e-12)


def test_taxonomy_pairs_cover_ancestry():
    s = make_schema("taxonomy_like", 0)
    names = list(s.base)
    pos, neg = taxonomy_pairs(s, names)
    for child, parent in pos:
        assert parent in s.ancestry(child)[1:]
    pos_set = set(pos)
    for a, b in neg:
        assert (a, b) not in pos_set
    # ordering matters: (ancestor, descendant) is a negative
    flipped = [(b, a) for a, b in pos if (b, a) in set(neg)]
    assert flipped


def test_mean_accuracy():
    assert mean_accuracy([1.0, 0.0, 1.0, 1.0]) == 0.75
    assert mean_accuracy([]) == 0.0


# ---------------------------------------------------------------------------
# deterministic serialization

def test_format_float_uses_repr():
    assert format_float(0.1) == "0.1"
    assert format_float(1.0 / 3.0) == repr(1.0 / 3.0)
    assert format_float(3) == "3"


def test_write_csv_is_bytewise_deterministic(tmp_path):
    rows = [{"a": 1.0 / 3.0, "b": "x"}, {"a": 0.25, "b": "y"}]
    p1, p2 = tmp_path / "one.csv", tmp_path / "two.csv"
    write_csv(p1, ("a", "b"), rows)
    write_csv(p2, ("a", "b"), rows)
    assert p1.read_bytes() == p2.read_bytes()
    text = p1.read_text()
    assert text.splitlines()[0] == "a,b"
    assert repr(1.0 / 3.0) in text


def test_write_json_roundtrip(tmp_path):
    doc = {"b": [1, 2.5], "a": {"nested": True}}
    p = tmp_path / "doc.json"
    write_json(p, doc)
    assert read_json(p) == doc
    # keys are sorted so equal docs serialize identically
    q = tmp_path / "doc2.json"
    write_json(q, {"a": {"nested": True}, "b": [1, 2.5]})
    assert p.read_bytes() == q.read_bytes()


# ---------------------------------------------------------------------------
# config validation

def test_validate_config_accepts_good_doc():
    validate_config({"world": "clevr_like", "seed": 3, "episodes": 10,
                     "related_fraction": 0.5, "fractions": [0.0, 1.0]})


def test_validate_config_reports_all_problems_at_once():
    with pytest.raises(ConfigError) as err:
        validate_config({"world": "flatland", "seed": "three", "bogus": 1})
    msg = str(err.value)
    assert "flatland" in msg and "seed" in msg and "bogus" in msg


def test_validate_config_rejects_bool_as_int():
    with pytest.raises(ConfigError):
        validate_config({"seed": True})


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(bad)
    good = tmp_path / "good.json"
    good.write_text('{"seed": 4}')
    assert load_config(good) == {"seed": 4}


def test_merge_options_precedence():
    defaults = {"seed": 0, "space": "box", "out": "runs"}
    config = {"seed": 5, "space": "hypercone"}
    cli = {"seed": 9, "space": None, "out": None}
    merged = merge_options(defaults, config, cli)
    assert merged["seed"] == 9        # flag beats file
    assert merged["space"] == "hypercone"  # file beats default
    assert merged["out"] == "runs"    # default survives absent flag


# ---------------------------------------------------------------------------
# command line

def test_cli_usage_error_exits_2():
    assert main(["pretrain", "--space", "pyramid"]) == 2
    assert main(["no-such-verb"]) == 2


def test_cli_config_error_exits_2(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"space": "dodecahedron"}')
    assert main(["pretrain", "--config", str(cfg)]) == 2
    assert "dodecahedron" in capsys.readouterr().err


def test_cli_missing_checkpoint_exits_2(tmp_path):
    assert main(["meta-test", "--out", str(tmp_path)]) == 2
    assert main(["meta-test", "--checkpoint", str(tmp_path / "nope"),
                 "--out", str(tmp_path)]) == 2


def test_cli_runtime_error_exits_1(tmp_path):
    broken = tmp_path / "model.json"
    broken.write_text("{}")
    assert main(["meta-test", "--checkpoint", str(broken),
                 "--out", str(tmp_path / "o")]) == 1


def test_cli_gen_data_writes_artifacts(tmp_path):
    out = tmp_path / "data"
    code = main(["gen-data", "--world", "clevr_like", "--seed", "2",
                 "--scenes", "3", "--episodes", "2", "--mode", "biased",
                 "--out", str(out)])
    assert code == 0
    manifest = read_json(out / "manifest.json")
    assert manifest["n_blocks"] == 3 and manifest["n_episodes"] == 2
    assert manifest["mode"] == "biased"
    lines = (out / "episodes.jsonl").read_text().splitlines()
    assert len(lines) == 2
    ep = json.loads(lines[0])
    assert set(ep) >= {"concept", "examples", "supplemental", "tests"}


def test_cli_gen_data_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["gen-data", "--seed", "7", "--scenes", "2",
                     "--episodes", "2", "--out", str(out)]) == 0
    assert (a / "pretrain.jsonl").read_bytes() == (b / "pretrain.jsonl").read_bytes()
    assert (a / "episodes.jsonl").read_bytes() == (b / "episodes.jsonl").read_bytes()


def test_cli_export_trace_untrained(tmp_path):
    out = tmp_path / "trace"
    assert main(["export-trace", "--world", "clevr_like", "--seed", "4",
                 "--out", str(out)]) == 0
    doc = read_json(out / "trace.json")
    assert doc["trained"] is False
    assert doc["sexpr"].startswith("(")
    assert doc["trace"], "execution trace must not be empty"
    assert doc["best"] in dict(doc["answer"])
    probs = list(doc["answer"].values())
    assert all(0.0 <= p <= 1.0 + 1e-9 for p in probs)


def test_cli_export_trace_explicit_question(tmp_path):
    out = tmp_path / "trace"
    q = "Is there a red object?"
    assert main(["export-trace", "--world", "clevr_like", "--seed", "4",
                 "--question", q, "--out", str(out)]) == 0
    doc = read_json(out / "trace.json")
    assert doc["question"] == q
    assert doc["sexpr"] == "(Exist (Filter (Scene) red))"


def test_cli_pipeline_tiny_end_to_end(tmp_path):
    pre = tmp_path / "pre"
    meta = tmp_path / "meta"
    test = tmp_path / "test"
    assert main(["pretrain", "--world", "taxonomy_like", "--seed", "1",
                 "--pretrain-iters", "120", "--out", str(pre)]) == 0
    saved = read_json(pre / "model.json")
    assert saved["meta"]["stage"] == "pretrain"
    assert main(["meta-train", "--checkpoint", str(pre), "--model", "falcon-g",
                 "--seed", "1", "--meta-iters", "6", "--out", str(meta)]) == 0
    assert read_json(meta / "model.json")["meta"]["model_kind"] == "falcon-g"
    assert main(["meta-test", "--checkpoint", str(meta), "--episodes", "2",
                 "--seed", "1", "--out", str(test)]) == 0
    summary = read_json(test / "summary.json")
    assert summary["n_episodes"] == 2
    assert (test / "results.csv").exists()


def test_cli_meta_test_prototype_from_pretrain_checkpoint(tmp_path):
    pre = tmp_path / "pre"
    out = tmp_path / "proto"
    assert main(["pretrain", "--world", "taxonomy_like", "--seed", "2",
                 "--pretrain-iters", "80", "--out", str(pre)]) == 0
    assert main(["meta-test", "--checkpoint", str(pre), "--model", "prototype",
                 "--episodes", "2", "--seed", "2", "--out", str(out)]) == 0
    assert read_json(out / "summary.json")["model"] == "prototype"


def test_cli_meta_test_without_model_kind_exits_2(tmp_path):
    pre = tmp_path / "pre"
    assert main(["pretrain", "--world", "taxonomy_like", "--seed", "3",
                 "--pretrain-iters", "40", "--out", str(pre)]) == 0
    # a pretrain checkpoint records no inference model
    assert main(["meta-test", "--checkpoint", str(pre),
                 "--out", str(tmp_path / "x")]) == 2


def test_cli_continual_rejects_attribute_world(tmp_path):
    pre = tmp_path / "pre"
    assert main(["pretrain", "--world", "clevr_like", "--seed", "0",
                 "--pretrain-iters", "5", "--out", str(pre)]) == 0
    assert main(["continual", "--checkpoint", str(pre), "--model", "prototype",
                 "--out", str(tmp_path / "c")]) == 2


def test_thread_env_is_validated():
    env = dict(os.environ, CONCEPTLEARN_THREADS="zero")
    proc = subprocess.run(
        [sys.executable, "-m", "conceptlearn.cli", "gen-data", "--scenes", "1",
         "--episodes", "1", "--out", "/tmp/ct-env-test"],
        capture_output=True, text=True, env=env)
    assert proc.returncode == 2
    assert "CONCEPTLEARN_THREADS" in proc.stderr


def test_thread_env_sets_blas_limits():
    env = dict(os.environ, CONCEPTLEARN_THREADS="1")
    env.pop("OMP_NUM_THREADS", None)
    proc = subprocess.run(
        [sys.executable, "-c",
         "import conceptlearn, os; print(os.environ['OMP_NUM_THREADS'])"],
        capture_output=True, text=True, env=env)
    assert proc.stdout.strip() == "1"

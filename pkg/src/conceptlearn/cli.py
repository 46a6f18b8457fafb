"""Command line interface.

Verbs mirror the pipeline stages: gen-data, pretrain, meta-train,
meta-test, continual, ablate, compare-spaces, export-trace. Every verb
takes --config (flat JSON), --seed, and --out; flags given on the
command line win over config-file values. --out is a directory and each
verb writes fixed-name artifacts into it, so stages chain by pointing
--checkpoint at a previous --out.

Exit codes: 0 success, 1 runtime failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .config import (MODELS, MODES, PRESETS, SPACES, WORLDS, ConfigError,
                     load_config, merge_options)

DEFAULTS = {
    "world": "clevr_like",
    "space": "box",
    "model": None,
    "preset": "desk",
    "mode": None,
    "seed": 0,
    "out": "runs/out",
    "checkpoint": None,
    "episodes": 100,
    "scenes": 50,
    "q_per_scene": 5,
    "k_examples": 4,
    "m_tests": 10,
    "n_seeds": 5,
    "related_fraction": 1.0,
    "fractions": [0.0, 0.25, 0.5, 0.75, 1.0],
    "question": None,
    "pretrain_iters": None,
    "meta_iters": None,
    "sigma_f": None,
    "graph_type": None,
}


def _check_thread_env() -> None:
    raw = os.environ.get("CONCEPTLEARN_THREADS")
    if raw is None or raw == "":
        return
    if not raw.isdigit() or int(raw) < 1:
        raise ConfigError(
            f"CONCEPTLEARN_THREADS must be a positive integer, got {raw!r}")


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="conceptlearn",
        description="fast visual-concept learning in geometric embedding spaces")
    sub = top.add_subparsers(dest="verb", required=True)

    def add(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="flat JSON config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--preset", choices=list(PRESETS))
        p.add_argument("--space", choices=list(SPACES))
        p.add_argument("--model", choices=list(MODELS))
        p.add_argument("--mode", choices=list(MODES))
        p.add_argument("--out")
        p.add_argument("--world", choices=list(WORLDS))
        p.add_argument("--checkpoint")
        p.add_argument("--episodes", type=int)
        p.add_argument("--scenes", type=int)
        p.add_argument("--q-per-scene", dest="q_per_scene", type=int)
        p.add_argument("--k-examples", dest="k_examples", type=int)
        p.add_argument("--m-tests", dest="m_tests", type=int)
        p.add_argument("--n-seeds", dest="n_seeds", type=int)
        p.add_argument("--related-fraction", dest="related_fraction", type=float)
        p.add_argument("--fractions",
                       help="comma-separated fractions for ablate")
        p.add_argument("--question")
        p.add_argument("--pretrain-iters", dest="pretrain_iters", type=int)
        p.add_argument("--meta-iters", dest="meta_iters", type=int)
        return p

    add("gen-data", "write scene/question blocks and episodes as JSONL")
    add("pretrain", "ground base concepts and relations with QA")
    add("meta-train", "train a concept-inference network on base episodes")
    add("meta-test", "evaluate episode learning from a trained checkpoint")
    add("continual", "learn held-out concepts sequentially, committing each")
    add("ablate", "accuracy as a function of the kept related-fact fraction")
    add("compare-spaces", "run the pipeline per embedding space on one world")
    add("export-trace", "execute one question and dump the execution trace")
    return top


def _options(args) -> dict:
    file_cfg = load_config(args.config) if args.config else {}
    cli = {k: getattr(args, k, None) for k in DEFAULTS}
    if isinstance(cli.get("fractions"), str):
        try:
            cli["fractions"] = [float(x) for x in cli["fractions"].split(",") if x]
        except ValueError:
            raise ConfigError(
                f"--fractions expects comma-separated numbers, got "
                f"{cli['fractions']!r}") from None
    opts = merge_options(DEFAULTS, file_cfg, cli)
    opts["out"] = Path(opts["out"])
    return opts


def _preset_overrides(opts) -> dict:
    out = {}
    if opts.get("sigma_f") is not None:
        out["sigma_f"] = float(opts["sigma_f"])
    return out


def _stack(opts):
    from .experiments import build_stack
    doc, schema, synth, model = build_stack(
        opts["world"], opts["space"], opts["preset"], opts["seed"],
        overrides=_preset_overrides(opts))
    if opts["pretrain_iters"] is not None:
        doc["pretrain"]["iters"] = opts["pretrain_iters"]
    if opts["meta_iters"] is not None:
        doc["meta"]["iters"] = opts["meta_iters"]
    return doc, schema, synth, model


def _resolve_checkpoint(opts) -> Path:
    raw = opts.get("checkpoint")
    if not raw:
        raise ConfigError("this verb needs --checkpoint (a previous --out)")
    p = Path(raw)
    if p.is_dir():
        p = p / "model.json"
    if not p.exists():
        raise ConfigError(f"checkpoint {p} does not exist")
    return p


def _load_model(opts):
    from .model import GroundedModel
    return GroundedModel.load(_resolve_checkpoint(opts))


def _synth_for(model, meta, opts):
    from .worldgen import FeatureSynthesizer
    return FeatureSynthesizer(model.schema, model.feat_dim,
                              float(meta["sigma_f"]), int(meta["seed"]))


def _inference_from_checkpoint(model, meta, opts):
    """Rebuild the inference strategy whose parameters live in the store."""
    from .experiments import prototype_for
    from .infer import make_inference
    kind = opts.get("model") or meta.get("model_kind")
    if kind is None:
        raise ConfigError("checkpoint records no inference model; pass --model")
    if kind == "prototype":
        return kind, prototype_for(model)
    prefix = "gnn" if kind == "falcon-g" else "rnn"
    if not model.store.keys_with_prefix(f"{prefix}/"):
        raise ConfigError(
            f"checkpoint has no trained {kind} parameters; run meta-train first")
    return kind, make_inference(kind, model.store, model.obj_space)


def _history_rows(history, fields):
    return [dict(zip(fields, row)) for row in history]


# ---------------------------------------------------------------------------
# verbs

def cmd_gen_data(opts) -> int:
    from .metrics import write_json
    from .worldgen import (make_episode, make_pretrain_block, make_schema,
                           save_episodes, save_pretrain)
    from .seeding import intseed
    schema = make_schema(opts["world"], opts["seed"])
    out = opts["out"]
    out.mkdir(parents=True, exist_ok=True)
    n_scenes = opts["scenes"]
    last_phase = 1 if schema.kind == "clevr_like" else 0
    blocks = [
        make_pretrain_block(schema, opts["seed"], i,
                            phase=min(i * (last_phase + 1) // max(n_scenes, 1),
                                      last_phase),
                            q_per_scene=opts["q_per_scene"])
        for i in range(n_scenes)
    ]
    save_pretrain(out / "pretrain.jsonl", blocks)
    mode = opts["mode"] or "standard"
    concepts = list(schema.test)
    episodes = [
        make_episode(schema, intseed(opts["seed"], "gen-data", i),
                     concepts[i % len(concepts)], mode=mode,
                     k_examples=opts["k_examples"], m_tests=opts["m_tests"],
                     related_fraction=opts["related_fraction"])
        for i in range(opts["episodes"])
    ]
    save_episodes(out / "episodes.jsonl", episodes)
    write_json(out / "manifest.json", {
        "verb": "gen-data", "world": opts["world"], "preset": opts["preset"],
        "seed": opts["seed"], "mode": mode, "n_blocks": len(blocks),
        "n_episodes": len(episodes),
    })
    print(f"wrote {len(blocks)} pretrain blocks and {len(episodes)} episodes "
          f"to {out}")
    return 0


def cmd_pretrain(opts) -> int:
    from .experiments import pretrain_stage
    from .metrics import write_csv, write_json
    doc, schema, synth, model = _stack(opts)
    res = pretrain_stage(model, synth, doc, opts["seed"])
    out = opts["out"]
    out.mkdir(parents=True, exist_ok=True)
    model.save(out / "model.json", extra_meta={
        "stage": "pretrain", "world": opts["world"], "space": opts["space"],
        "preset": opts["preset"], "seed": opts["seed"],
        "sigma_f": doc["sigma_f"], "best_acc": res.best_acc,
    })
    write_csv(out / "history.csv", ("iter", "phase", "val_acc", "lr"),
              _history_rows(res.history, ("iter", "phase", "val_acc", "lr")))
    summary = {"verb": "pretrain", **res.to_dict()}
    summary.pop("history", None)
    write_json(out / "summary.json", summary)
    print(f"pretrain done: best val acc {res.best_acc:.3f} "
          f"after {res.iters_run} iters -> {out}")
    return 0


def cmd_meta_train(opts) -> int:
    from .experiments import inference_for, metatrain_stage
    from .metrics import write_csv, write_json
    from .train.schedules import preset as load_preset
    model, meta = _load_model(opts)
    if meta.get("stage") != "pretrain":
        raise ConfigError("meta-train expects a pretrain checkpoint")
    kind = opts.get("model") or "falcon-g"
    if kind == "prototype":
        raise ConfigError("the prototype baseline has nothing to meta-train")
    synth = _synth_for(model, meta, opts)
    doc = load_preset(opts["preset"])
    if opts["meta_iters"] is not None:
        doc["meta"]["iters"] = opts["meta_iters"]
    inf = inference_for(model, kind, opts["seed"])
    mode = opts["mode"] or "standard"
    graph_type = opts.get("graph_type") or (
        "type2" if model.schema.kind == "taxonomy_like" else "type1")
    res = metatrain_stage(model, inf, synth, doc, opts["seed"], mode=mode,
                          graph_type=graph_type)
    out = opts["out"]
    out.mkdir(parents=True, exist_ok=True)
    model.save(out / "model.json", extra_meta={
        "stage": "meta", "world": meta["world"], "space": meta["space"],
        "preset": opts["preset"], "seed": meta["seed"],
        "sigma_f": meta["sigma_f"], "model_kind": kind,
        "graph_type": graph_type, "best_acc": res.best_acc,
    })
    write_csv(out / "history.csv", ("iter", "val_acc", "train_loss"),
              _history_rows(res.history, ("iter", "val_acc", "train_loss")))
    summary = {"verb": "meta-train", "model": kind, **res.to_dict()}
    summary.pop("history", None)
    write_json(out / "summary.json", summary)
    print(f"meta-train done: best episode val acc {res.best_acc:.3f} -> {out}")
    return 0


def cmd_meta_test(opts) -> int:
    from .experiments import supplemental_gain
    from .metrics import write_csv, write_json
    model, meta = _load_model(opts)
    kind, inf = _inference_from_checkpoint(model, meta, opts)
    synth = _synth_for(model, meta, opts)
    mode = opts["mode"] or "biased"
    graph_type = opts.get("graph_type") or meta.get("graph_type") or "type1"
    res = supplemental_gain(model, inf, synth, n_episodes=opts["episodes"],
                            seed=opts["seed"], mode=mode,
                            graph_type=graph_type,
                            k_examples=opts["k_examples"],
                            m_tests=opts["m_tests"])
    out = opts["out"]
    out.mkdir(parents=True, exist_ok=True)
    rows = [
        {"episode": i, "acc_with_facts": a, "acc_fewshot": b}
        for i, (a, b) in enumerate(zip(res["per_episode_with"],
                                       res["per_episode_fewshot"]))
    ]
    write_csv(out / "results.csv",
              ("episode", "acc_with_facts", "acc_fewshot"), rows)
    write_json(out / "summary.json", {
        "verb": "meta-test", "model": kind, "mode": mode,
        "n_episodes": res["n_episodes"], "with_facts": res["with_facts"],
        "fewshot": res["fewshot"], "gain": res["gain"],
    })
    print(f"meta-test ({kind}, {mode}): with facts {res['with_facts']:.3f}, "
          f"few-shot {res['fewshot']:.3f}, gain {res['gain']:+.3f} -> {out}")
    return 0


def cmd_continual(opts) -> int:
    from .metrics import write_csv, write_json
    from .train.continual import run_continual
    model, meta = _load_model(opts)
    if model.schema.kind != "taxonomy_like":
        raise ConfigError("continual runs on the taxonomy world")
    kind, inf = _inference_from_checkpoint(model, meta, opts)
    synth = _synth_for(model, meta, opts)
    rows = run_continual(model, inf, synth, model.schema.test,
                         seed=opts["seed"], mode=opts["mode"] or "standard",
                         k_examples=opts["k_examples"],
                         m_tests=opts["m_tests"],
                         related_fraction=opts["related_fraction"])
    out = opts["out"]
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "continual.csv",
              ("concept", "hop", "accuracy", "n_facts", "n_edges"), rows)
    accs = [r["accuracy"] for r in rows]
    write_json(out / "summary.json", {
        "verb": "continual", "model": kind, "n_concepts": len(rows),
        "mean_accuracy": sum(accs) / max(len(accs), 1),
    })
    print(f"continual: {len(rows)} concepts, "
          f"mean acc {sum(accs) / max(len(accs), 1):.3f} -> {out}")
    return 0


def cmd_ablate(opts) -> int:
    from .experiments import related_fraction_curve
    from .metrics import write_csv, write_json
    model, meta = _load_model(opts)
    kind, inf = _inference_from_checkpoint(model, meta, opts)
    synth = _synth_for(model, meta, opts)
    rows = related_fraction_curve(
        model, inf, synth, fractions=tuple(opts["fractions"]),
        n_episodes=opts["episodes"], seed=opts["seed"],
        mode=opts["mode"] or "biased",
        graph_type=opts.get("graph_type") or meta.get("graph_type") or "type1")
    out = opts["out"]
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "ablation.csv", ("fraction", "accuracy"),
              [{"fraction": r["fraction"], "accuracy": r["accuracy"]}
               for r in rows])
    write_json(out / "summary.json", {
        "verb": "ablate", "model": kind,
        "curve": {str(r["fraction"]): r["accuracy"] for r in rows},
    })
    print("ablation:", ", ".join(f"f={r['fraction']}: {r['accuracy']:.3f}"
                                 for r in rows), f"-> {out}")
    return 0


def cmd_compare_spaces(opts) -> int:
    from .experiments import space_comparison
    from .metrics import write_csv, write_json
    rows = space_comparison(opts["world"], SPACES,
                            opts.get("model") or "falcon-g",
                            opts["preset"], opts["seed"],
                            mode=opts["mode"] or "standard")
    out = opts["out"]
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "spaces.csv",
              ("space", "pretrain_acc", "meta_val_acc", "episode_acc",
               "entailment_auc"), rows)
    write_json(out / "summary.json", {"verb": "compare-spaces",
                                      "world": opts["world"], "rows": rows})
    for r in rows:
        print(f"  {r['space']:<11} pretrain {r['pretrain_acc']:.3f} "
              f"episode {r['episode_acc']:.3f} auc {r['entailment_auc']}")
    print(f"-> {out}")
    return 0


def cmd_export_trace(opts) -> int:
    from .executor import execute
    from .lang.parser import parse_question
    from .lang.programs import to_sexpr
    from .metrics import write_json
    from .tape import FLOAT_OPS
    from .worldgen import make_pretrain_block
    if opts.get("checkpoint"):
        model, meta = _load_model(opts)
        synth = _synth_for(model, meta, opts)
        trained = True
    else:
        _doc, _schema, synth, model = _stack(opts)
        trained = False
    schema = model.schema
    block = make_pretrain_block(
        schema, opts["seed"], 0,
        phase=1 if schema.kind == "clevr_like" else 0,
        q_per_scene=opts["q_per_scene"])
    if opts.get("question"):
        text = opts["question"]
        prog = parse_question(text)
    else:
        text = block.items[0].text
        prog = parse_question(text)
    trace: list = []
    ctx = model.context_for(FLOAT_OPS, block.scene, synth, trace=trace)
    ans = execute(prog, ctx)
    out = opts["out"]
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "trace.json", {
        "verb": "export-trace", "trained": trained, "question": text,
        "sexpr": to_sexpr(prog), "scene": block.scene.to_dict(),
        "answer": dict(zip(ans.labels, ans.value_probs(FLOAT_OPS))),
        "best": ans.best(FLOAT_OPS), "trace": trace,
    })
    print(f"trace for {text!r} -> {out / 'trace.json'}")
    return 0


VERBS = {
    "gen-data": cmd_gen_data,
    "pretrain": cmd_pretrain,
    "meta-train": cmd_meta_train,
    "meta-test": cmd_meta_test,
    "continual": cmd_continual,
    "ablate": cmd_ablate,
    "compare-spaces": cmd_compare_spaces,
    "export-trace": cmd_export_trace,
}


def main(argv=None) -> int:
    try:
        _check_thread_env()
        args = _build_parser().parse_args(argv)
        opts = _options(args)
        return VERBS[args.verb](opts)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except SystemExit as e:
        # argparse exits 2 on usage errors; pass its code through
        return int(e.code or 0)
    except KeyboardInterrupt:
        return 1
    except Exception as e:  # noqa: BLE001 - the CLI boundary reports and exits
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

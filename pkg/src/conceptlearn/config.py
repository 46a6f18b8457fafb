"""Flat JSON run configuration with strict key validation.

A config file is one flat JSON object; every key must be known and
scalar-typed (fractions may be a list of numbers). Unknown or mistyped
keys are reported all at once by name, and the CLI turns that report
into a usage-error exit.
"""

from __future__ import annotations

import json
from pathlib import Path

WORLDS = ("clevr_like", "taxonomy_like")
SPACES = ("box", "hyperplane", "hypercone")
MODELS = ("falcon-g", "falcon-r", "prototype")
PRESETS = ("desk", "paper")
MODES = ("standard", "biased", "fewshot")
GRAPH_TYPES = ("type1", "type2")

# key -> (type, allowed choices or None)
CONFIG_KEYS = {
    "world": (str, WORLDS),
    "space": (str, SPACES),
    "model": (str, MODELS),
    "preset": (str, PRESETS),
    "mode": (str, MODES),
    "graph_type": (str, GRAPH_TYPES),
    "seed": (int, None),
    "out": (str, None),
    "checkpoint": (str, None),
    "episodes": (int, None),
    "scenes": (int, None),
    "q_per_scene": (int, None),
    "k_examples": (int, None),
    "m_tests": (int, None),
    "n_seeds": (int, None),
    "related_fraction": (float, None),
    "fractions": (list, None),
    "question": (str, None),
    "pretrain_iters": (int, None),
    "meta_iters": (int, None),
    "sigma_f": (float, None),
}


class ConfigError(ValueError):
    pass


def _type_ok(value, want) -> bool:
    if want is float:
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if want is int:
        return isinstance(value, int) and not isinstance(value, bool)
    if want is list:
        return (isinstance(value, list)
                and all(isinstance(v, (int, float)) and not isinstance(v, bool)
                        for v in value))
    return isinstance(value, want)


def validate_config(doc) -> dict:
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    problems = []
    for key, value in doc.items():
        if key not in CONFIG_KEYS:
            problems.append(f"unknown key {key!r}")
            continue
        want, choices = CONFIG_KEYS[key]
        if not _type_ok(value, want):
            problems.append(f"key {key!r} expects {want.__name__}, "
                            f"got {type(value).__name__}")
        elif choices is not None and value not in choices:
            problems.append(f"key {key!r} must be one of {list(choices)}, "
                            f"got {value!r}")
    if problems:
        raise ConfigError("invalid config: " + "; ".join(problems))
    return dict(doc)


def load_config(path) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file {path!r} does not exist")
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {path!r} is not valid JSON: {e}") from None
    return validate_config(doc)


def merge_options(defaults: dict, config: dict, cli: dict) -> dict:
    """defaults < config file < explicit CLI flags."""
    out = dict(defaults)
    out.update(config)
    out.update({k: v for k, v in cli.items() if v is not None})
    return out

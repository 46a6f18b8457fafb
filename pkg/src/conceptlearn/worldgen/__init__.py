from .schema import CLEVR_CATEGORIES, SPATIAL_RELATIONS, Schema, make_schema
from .scenes import (
    MIN_SEPARATION, ObjectSpec, SceneSpec, compose_scene, rel_true, sample_scene,
)
from .features import FeatureSynthesizer
from .oracle import denotation, symbolic_oracle
from .questions import AnswerBalancer, balanced_questions, find_referent, sample_question
from .episodes import (
    Episode, Example, PretrainBlock, PretrainItem, TestItem, base_pools,
    load_episodes, load_jsonl, load_pretrain, make_episode, make_pretrain_block,
    save_episodes, save_jsonl, save_pretrain,
)

__all__ = [
    "CLEVR_CATEGORIES", "SPATIAL_RELATIONS", "Schema", "make_schema",
    "MIN_SEPARATION", "ObjectSpec", "SceneSpec", "compose_scene", "rel_true",
    "sample_scene", "FeatureSynthesizer", "denotation", "symbolic_oracle",
    "AnswerBalancer", "balanced_questions", "find_referent", "sample_question",
    "Episode", "Example", "PretrainBlock", "PretrainItem", "TestItem",
    "base_pools", "load_episodes", "load_jsonl", "load_pretrain",
    "make_episode", "make_pretrain_block", "save_episodes", "save_jsonl",
    "save_pretrain",
]

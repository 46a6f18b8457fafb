from .losses import answer_nll, collect_grads, question_loss
from .pretrain import PretrainConfig, PretrainResult, evaluate_blocks, pretrain
from .meta import (MetaConfig, MetaResult, answer_tests, episode_facts,
                   episode_task, evaluate_episodes, example_point, meta_train,
                   qa_embedding)
from .continual import hop_order, run_continual
from .schedules import PRESETS, preset

__all__ = [
    "answer_nll", "collect_grads", "question_loss",
    "PretrainConfig", "PretrainResult", "evaluate_blocks", "pretrain",
    "MetaConfig", "MetaResult", "answer_tests", "episode_facts",
    "episode_task", "evaluate_episodes", "example_point", "meta_train",
    "qa_embedding",
    "hop_order", "run_continual",
    "PRESETS", "preset",
]

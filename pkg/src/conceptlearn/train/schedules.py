"""Named hyperparameter presets.

"desk" finishes the full pipeline on one core in well under an hour and
is what the test suite runs. "paper" is the full-scale configuration for
overnight runs; nothing in the code depends on which one is active.
"""

from __future__ import annotations

import copy

PRESETS = {
    "desk": {
        "feat_dim": 12,
        "sigma_f": 0.02,
        "d_obj": {"box": 16, "hyperplane": 32, "hypercone": 32},
        "d_rel": 16,
        "pretrain": {
            "iters": 5000, "batch_scenes": 2, "q_per_scene": 5, "lr": 1e-2,
            "vol_reg": 3e-3, "val_every": 200, "val_scenes": 32, "patience": 3,
            "lr_decay": 0.3, "stop_acc": 0.95, "advance_acc": 0.90,
            "advance_frac": 0.4,
        },
        "meta": {
            "iters": 2000, "lr": 1e-3, "lam": 0.01, "drop_fact": 0.2,
            "drop_all": 0.25, "k_examples": 4, "m_tests": 10,
            "val_every": 200, "val_episodes": 16,
        },
        "eval_episodes": 100,
    },
    "paper": {
        "feat_dim": 24,
        "sigma_f": 0.05,
        "d_obj": {"box": 32, "hyperplane": 64, "hypercone": 64},
        "d_rel": 32,
        "pretrain": {
            "iters": 60000, "batch_scenes": 4, "q_per_scene": 5, "lr": 1e-3,
            "vol_reg": 3e-3, "val_every": 500, "val_scenes": 64, "patience": 8,
            "lr_decay": 0.1, "stop_acc": 0.99, "advance_acc": 0.95,
            "advance_frac": 0.4,
        },
        "meta": {
            "iters": 10000, "lr": 5e-4, "lam": 0.01, "drop_fact": 0.2,
            "drop_all": 0.25, "k_examples": 4, "m_tests": 10,
            "val_every": 500, "val_episodes": 32,
        },
        "eval_episodes": 500,
    },
}


def preset(name: str) -> dict:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; have {sorted(PRESETS)}")
    return copy.deepcopy(PRESETS[name])

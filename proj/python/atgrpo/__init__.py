"""Multi-agent group-relative policy optimisation on grid games."""

import json

from ._atgrpo import (
    ConfigError,
    ContractViolation,
    compute_advantages,
    evaluate_scripted,
    generate,
    menu,
    run_cli,
    score,
    train_json,
)

__all__ = [
    "ConfigError",
    "ContractViolation",
    "compute_advantages",
    "evaluate_scripted",
    "generate",
    "menu",
    "run_cli",
    "score",
    "train",
]


def train(config=None, **overrides):
    """Train from a config dict (same keys as the CLI JSON config).

    Returns a dict with ``evals``, ``metrics`` (parsed JSON lines),
    ``weights`` and the echoed ``config``.
    """
    merged = dict(config or {})
    merged.update(overrides)
    result = train_json(json.dumps(merged))
    result["metrics"] = [json.loads(line) for line in result["metrics"]]
    result["config"] = json.loads(result["config"])
    return result

from __future__ import annotations

import os
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import numpy as np
import pytest

from relrank.core import Group, Response


def artifacts_dir() -> Path:
    """Where acceptance runs drop their run logs (the figures frontend reads
    them from here). Override with RELRANK_ACCEPTANCE_DIR."""
    root = os.environ.get("RELRANK_ACCEPTANCE_DIR")
    path = Path(root) if root else Path(__file__).resolve().parent.parent / "artifacts" / "acceptance"
    path.mkdir(parents=True, exist_ok=True)
    return path


def random_group(rng: np.random.Generator, size: int, prompt_id="p") -> Group:
    correct = rng.random(size) < rng.uniform(0.1, 0.9)
    lengths = rng.integers(32, 8192, size)
    qualities = rng.normal(0, 1, size)
    return Group(
        prompt_id=prompt_id,
        responses=tuple(
            Response(
                id=i,
                prompt_id=prompt_id,
                correct=bool(correct[i]),
                length=int(lengths[i]),
                latent_quality=float(qualities[i]),
            )
            for i in range(size)
        ),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)

import math
from functools import lru_cache

import pytest

from orthoproj import tasks


@lru_cache(maxsize=None)
def _quadratic(alpha_key: str, seed: int):
    return tasks.quadratic_family(12, float(alpha_key), seed)


@lru_cache(maxsize=None)
def _regression(alpha_key: str, seed: int):
    return tasks.regression_family(16, 12, float(alpha_key), 1.0, 200, 2000, seed)


@pytest.fixture
def quadratic_family():
    """Cached quadratic families keyed by (alpha, seed); immutable tasks."""
    return lambda alpha, seed=0: _quadratic(repr(alpha), seed)


@pytest.fixture
def regression_family():
    """Cached regression families; their tasks hold no mutable state."""
    return lambda alpha=math.pi / 3, seed=0: _regression(repr(alpha), seed)


@pytest.fixture
def policy_family():
    """Fresh policy family per use: its dpo task's reference policy is
    re-frozen during training."""
    return lambda seed=0: tasks.policy_family(8, 10, 200, 2000, seed)

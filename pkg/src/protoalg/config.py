"""Runtime limits and their environment overrides."""

import os
from typing import Optional

from .errors import UsageError

STATE_CAP_ENV = "PROTOALG_STATE_CAP"
DEFAULT_STATE_CAP = 10**6

DEFAULT_MAX_STEPS = 200
DEFAULT_MAX_RUNS = 1000


def get_state_cap(override: Optional[int] = None) -> int:
    """
    Resolve the state-space cap.

    Args:
        override: Explicit cap; wins over the environment when given

    Returns:
        The cap to use for state-graph construction and relation search
    """
    if override is not None:
        if override <= 0:
            raise UsageError(f"state cap must be positive, got {override}")
        return override

    raw = os.environ.get(STATE_CAP_ENV)
    if raw is None or raw.strip() == "":
        return DEFAULT_STATE_CAP

    try:
        cap = int(raw)
    except ValueError:
        raise UsageError(f"{STATE_CAP_ENV} must be an integer, got {raw!r}") from None
    if cap <= 0:
        raise UsageError(f"{STATE_CAP_ENV} must be positive, got {cap}")
    return cap

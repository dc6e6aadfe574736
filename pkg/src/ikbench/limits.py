import os

from .errors import ResourceLimitExceeded

DEFAULT_LIMIT = 2_000_000


def resource_limit():
    """Search-node cap, overridable through ``IK_RESOURCE_LIMIT``."""
    raw = os.environ.get("IK_RESOURCE_LIMIT")
    if raw is None:
        return DEFAULT_LIMIT
    return int(raw)


class Budget:
    def __init__(self, limit=None, what="search"):
        self.limit = resource_limit() if limit is None else limit
        self.used = 0
        self.what = what

    def tick(self, n=1):
        self.used += n
        if self.used > self.limit:
            raise ResourceLimitExceeded(f"{self.what} exceeded {self.limit} nodes")

from dataclasses import dataclass, field


@dataclass
class Verdict:
    """Accept/reject result carrying the first failed condition."""

    ok: bool
    reason: str = ""
    where: object = None
    details: dict = field(default_factory=dict)

    def __bool__(self):
        return self.ok

    @classmethod
    def accept(cls, **details):
        return cls(True, details=details)

    @classmethod
    def reject(cls, reason, where=None, **details):
        return cls(False, reason, where, details)

class IKError(ValueError):
    """Base class for all workbench errors."""


class ParseError(IKError):
    def __init__(self, msg, pos=None, line=None):
        self.pos = pos
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if pos is not None:
            where.append(f"col {pos + 1}")
        super().__init__(f"{msg} ({', '.join(where)})" if where else msg)


class SortError(IKError):
    pass


class ArityError(SortError):
    pass


class PreconditionError(IKError):
    pass


class ResourceLimitExceeded(IKError):
    pass

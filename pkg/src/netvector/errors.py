class NetVectorError(Exception):
    pass


class ValidationError(NetVectorError, ValueError):
    """Input violates a documented precondition."""


class ParseError(ValidationError):
    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = "" if path is None and line is None else f"{path or '<input>'}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class DeadEndError(NetVectorError):
    """Raised when a walk reaches a node with no outgoing edges."""

"""Exception types shared across the package."""


class UavbsError(Exception):
    pass


class ConfigError(UavbsError, ValueError):
    """Invalid configuration value or structure.

    ``key`` is the dotted config path when the error comes from a config
    file, ``line`` the 1-based line number when known.
    """

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        parts = []
        if key is not None:
            parts.append(key)
        if line is not None:
            parts.append(f"line {line}")
        prefix = f"[{', '.join(parts)}] " if parts else ""
        super().__init__(prefix + message)


class DomainError(UavbsError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class ParseError(UavbsError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InfeasibleError(UavbsError, RuntimeError):
    """No solution satisfies the constraints (no altitude, no placement...)."""


class NotTrainedError(UavbsError, RuntimeError):
    pass

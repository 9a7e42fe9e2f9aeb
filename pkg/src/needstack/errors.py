"""Shared exception types.

ConfigError maps to CLI exit code 1 (bad usage/config), InputFormatError to
exit code 2 (malformed input file).
"""


class ConfigError(ValueError):
    pass


class InputFormatError(ValueError):
    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        prefix = ""
        if path is not None:
            prefix += f"{path}:"
        if line is not None:
            prefix += f"{line}:"
        if prefix:
            message = f"{prefix} {message}"
        super().__init__(message)

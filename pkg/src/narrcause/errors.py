"""Exception types shared across the pipeline."""


class NarrCauseError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(NarrCauseError):
    """Bad input: malformed files, invalid config, violated preconditions."""


class ParseError(ValidationError):
    """A file could not be parsed. Carries the file name and line number."""

    def __init__(self, path, lineno, message):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{self.path}:{lineno}: {message}")

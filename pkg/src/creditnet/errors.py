"""Exception hierarchy shared by all creditnet modules."""


class CreditNetError(Exception):
    """Base class for every error raised by creditnet."""


class InvalidNodeError(CreditNetError, IndexError):
    """A node reference is out of range or of the wrong mode."""


class UndefinedMeasureError(CreditNetError, ValueError):
    """A measure is mathematically undefined for the given input."""


class ConfigError(CreditNetError, ValueError):
    """Invalid parameters passed to a constructor, generator or command."""


class LoadError(CreditNetError):
    """One or more violations found while reading an input file.

    ``violations`` is a list of ``(line_number, message)`` pairs; line numbers
    are 1-based physical lines of the source file.
    """

    def __init__(self, path, violations):
        self.path = str(path)
        self.violations = list(violations)
        lines = [f"{self.path}:{ln}: {msg}" for ln, msg in self.violations]
        super().__init__(
            f"{len(self.violations)} violation(s) in {self.path}\n" + "\n".join(lines)
        )

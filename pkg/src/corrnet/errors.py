"""Exception hierarchy.

``DataError`` covers problems with the input data (CLI exit status 1);
``ConfigError`` covers invalid options or parameters (exit status 2).
"""

from __future__ import annotations


class CorrnetError(Exception):
    pass


class DataError(CorrnetError):
    pass


class ConfigError(CorrnetError):
    pass


class EmptyInput(DataError):
    pass


class MalformedRow(DataError):
    def __init__(self, line: int, reason: str):
        self.line = line
        super().__init__(f"line {line}: {reason}")


class NonPositivePrice(MalformedRow):
    def __init__(self, line: int, value: float):
        self.value = value
        super().__init__(line, f"non-positive price {value!r}")


class DuplicateObservation(MalformedRow):
    def __init__(self, line: int, date: str, instrument: str):
        super().__init__(line, f"duplicate observation for {instrument!r} on {date}")


class EmptyIntersection(DataError):
    pass


class InsufficientData(DataError):
    pass


class NoWindow(DataError):
    pass


class NotPositiveSemidefinite(ConfigError):
    def __init__(self, smallest_eigenvalue: float):
        self.smallest_eigenvalue = smallest_eigenvalue
        super().__init__(
            f"block correlation matrix is not positive semi-definite "
            f"(smallest eigenvalue {smallest_eigenvalue:.6g})"
        )

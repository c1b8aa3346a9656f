"""Shared exception types."""


class ValidationError(ValueError):
    """Malformed input or a violated operation precondition."""


class BudgetError(RuntimeError):
    """A configured resource budget would be exceeded.

    Raised instead of silently truncating or sampling; the message names
    the budget and the offending size.
    """

"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument violates a mathematical precondition."""


class ResourceError(RuntimeError):
    """A computation would exceed a configured size/complexity guard."""


class NonFiniteError(ArithmeticError):
    """A floating-point result overflowed or is otherwise non-finite."""

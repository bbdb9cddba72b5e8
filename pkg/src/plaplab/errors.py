"""Exception hierarchy.

Validation problems (bad configuration, malformed input) derive from
``ConfigError``; failures during computation derive from ``NumericalError``.
The CLI maps the two families to exit codes 1 and 2.
"""


class PlapError(Exception):
    pass


class ConfigError(PlapError, ValueError):
    pass


class NumericalError(PlapError, ArithmeticError):
    pass


class DegenerateGradientError(NumericalError):
    """eps = 0 and q = 0: the coefficient matrix is undefined."""


class BlowUpError(NumericalError):
    def __init__(self, node, level):
        super().__init__(f"blow-up: non-finite value at node {node}, level {level}")
        self.node = node
        self.level = level


class NonMonotoneStencilError(NumericalError):
    def __init__(self, node, p, grad, level=None):
        super().__init__(
            f"non-monotone stencil at node {node} (level {level}): p={p}, grad_h u={list(grad)}"
        )
        self.node = node
        self.p = p
        self.grad = grad
        self.level = level


class OneSidedNodeError(ConfigError):
    pass


class EmptyCylinderError(ConfigError):
    pass


class FitError(NumericalError):
    pass


class UnresolvableError(ConfigError):
    pass

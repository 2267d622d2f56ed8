"""Exception hierarchy.

Two families: :class:`InvalidInput` (bad parameters, specs or files) and
:class:`NumericalFailure` (the numerics could not deliver a trusted answer).
The CLI maps them to exit codes 2 and 3.
"""


class NlqrmError(Exception):
    """Base class for every error raised by this package."""


class InvalidInput(NlqrmError, ValueError):
    pass


class NumericalFailure(NlqrmError, RuntimeError):
    pass


class CollapseRegime(InvalidInput):
    """|g2| >= omega/2: the Hamiltonian is unbounded below."""


class NonPositiveFrequency(InvalidInput):
    pass


class UnsupportedParameter(InvalidInput):
    pass


class BiasNeedsNonlinearity(InvalidInput):
    """The biased phase boundary is singular at g2 = 0."""


class GridTooNarrow(InvalidInput):
    pass


class InvalidSpec(InvalidInput):
    pass


class ConfigError(InvalidInput):
    def __init__(self, message, *, line=None, key=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.line = line
        self.key = key


class DimensionTooLarge(NumericalFailure):
    pass


class NoConvergence(NumericalFailure):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class TruncationExhausted(NumericalFailure):
    def __init__(self, message, history):
        super().__init__(message)
        self.history = list(history)


class DegenerateGround(NumericalFailure):
    pass


class QuadratureStalled(NumericalFailure):
    def __init__(self, message, evaluations=None):
        super().__init__(message)
        self.evaluations = list(evaluations or [])


class NoInteriorPeak(NumericalFailure):
    pass

"""Exception hierarchy shared by every stage of the pipeline."""


class LjsaaError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(LjsaaError, ValueError):
    """Array shapes disagree with each other."""


class InfeasibleError(LjsaaError):
    """A feasible set that must be nonempty turned out empty."""


class UnboundedError(LjsaaError):
    """An optimization problem has no finite optimum."""


class UnboundableError(LjsaaError):
    """No finite upper bound could be derived for a variable."""


class NumericalError(LjsaaError):
    """A solver lost numerical control and gave up."""


class NodeLimitError(LjsaaError):
    """Branch-and-bound hit its node limit.

    The best integer solution found so far (possibly ``None``) is kept on
    ``incumbent``.
    """

    def __init__(self, msg, incumbent=None):
        super().__init__(msg)
        self.incumbent = incumbent


class DegenerateError(LjsaaError):
    """The polyhedron has (numerically) empty interior."""

    def __init__(self, msg, inradius=0.0):
        super().__init__(msg)
        self.inradius = inradius


class ScaleGuardError(LjsaaError):
    """Input exceeds the size a brute-force routine accepts."""


class ProtocolError(LjsaaError):
    """Malformed or unexpected frame on the worker wire protocol."""


class RemoteError(LjsaaError):
    """Every remote worker was lost before the batch finished.

    ``completed`` lists the coordinates that did arrive, in index order.
    """

    def __init__(self, msg, completed=None):
        super().__init__(msg)
        self.completed = list(completed or [])


class FormatError(LjsaaError, ValueError):
    """An input file violates its documented format."""

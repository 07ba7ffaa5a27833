"""Exception types raised across the package."""


class TriHomError(Exception):
    """Base class for all package errors."""


class NonConvergence(TriHomError):
    def __init__(self, iterations: int, message: str = ""):
        self.iterations = iterations
        super().__init__(message or f"no convergence after {iterations} iterations")


class DegenerateInput(TriHomError):
    """The input makes a quantity undefined (zero denominator, no valid class, ...)."""


class DegenerateGraph(DegenerateInput):
    """A generated graph has no edges."""


class EmptyGraph(DegenerateInput):
    """The graph has no edges (or no non-isolated node) where one is required."""


class NotApplicable(TriHomError):
    def __init__(self, bound: str, message: str = ""):
        self.bound = bound
        super().__init__(message or f"{bound} is not defined (negative discriminant)")


class MissingClass(TriHomError):
    """A class has no training node."""


class TooFewNodes(TriHomError):
    """A split part would be empty."""


class ConstantInput(DegenerateInput):
    """A correlation input has zero variance."""


class BundleError(TriHomError):
    """Base class for dataset bundle loading problems."""


class ParseError(BundleError):
    def __init__(self, file: str, line: int, message: str):
        self.file = file
        self.line = line
        super().__init__(f"{file}:{line}: {message}")


class InconsistentSizes(BundleError):
    pass


class NonContiguousIds(BundleError):
    pass

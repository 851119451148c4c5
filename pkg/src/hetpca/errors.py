"""Exception hierarchy. Every validation error is a ``ValueError`` so callers
can catch the whole family at once."""


class HetPCAError(ValueError):
    pass


class EmptyMixture(HetPCAError):
    pass


class ProportionSumInvalid(HetPCAError):
    pass


class NegativeVariance(HetPCAError):
    pass


class InvalidProportions(HetPCAError):
    pass


class InvalidParams(HetPCAError):
    pass


class NonpositiveScale(HetPCAError):
    pass


class PoleEvaluation(HetPCAError):
    pass


class NoRoot(HetPCAError):
    pass


class NoTransition(HetPCAError):
    pass


class ZeroTrueSubspace(HetPCAError):
    pass


class NotConverged(RuntimeError):
    """Raised by the eigensolver in strict mode; ``result`` holds the best iterate."""

    def __init__(self, message, result):
        super().__init__(message)
        self.result = result

"""Exception hierarchy shared by every module of the package."""


class BesovEmbedError(Exception):
    """Base class for all errors raised by besov_embed."""


class ParseError(BesovEmbedError, ValueError):
    pass


class SingularMatrix(BesovEmbedError):
    pass


class EigenSolverFailure(BesovEmbedError):
    pass


class NotAnEigenvalue(BesovEmbedError, ValueError):
    pass


class NotExpansive(BesovEmbedError):
    pass


class ClusterAmbiguity(BesovEmbedError):
    """Raised only in strict mode; otherwise ambiguity is attached as a warning."""


class NormOverflow(BesovEmbedError, OverflowError):
    pass


class IllConditioned(BesovEmbedError):
    pass

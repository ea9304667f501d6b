"""Exception hierarchy shared by every module of the package."""


class AcimError(Exception):
    """Base class for all package errors."""


class EndpointNonvanishing(AcimError):
    pass


class MarkovBroken(AcimError):
    pass


class RootCountMismatch(AcimError):
    pass


class NoConvergence(AcimError):
    pass


class SingularAtEndpoint(AcimError):
    pass


class SingularMatrix(AcimError):
    pass


class SpectralAnomaly(AcimError):
    pass


class H0DefectTooLarge(AcimError):
    pass


class NoDecay(AcimError):
    pass


class PoleHit(AcimError):
    def __init__(self, lam, pole):
        super().__init__(f"lambda={lam!r} hits the pole at {pole!r}")
        self.lam = lam
        self.pole = pole


class RouteDisagreement(AcimError):
    def __init__(self, n, decomposition, raw):
        super().__init__(
            f"kappa_{n}: decomposition={decomposition!r} raw={raw!r}")
        self.n = n
        self.values = (decomposition, raw)


class IllConditioned(AcimError):
    pass


class UnsupportedFixture(AcimError):
    pass

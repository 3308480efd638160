"""Exception hierarchy. Every failure mode named in the module contracts has a class here."""


class CubicWaveError(Exception):
    """Base class; ``diagnostics`` carries whatever the raiser found useful."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class InvalidInput(CubicWaveError, ValueError):
    pass


class IntegrationFailure(CubicWaveError):
    """Non-finite right-hand side or step budget exhausted."""

    def __init__(self, message, last_x=None, last_state=None, **diagnostics):
        super().__init__(message, **diagnostics)
        self.last_x = last_x
        self.last_state = last_state


class QuadratureFailure(CubicWaveError):
    pass


class SeriesDomainError(CubicWaveError, ValueError):
    pass


class InfiniteEnergy(CubicWaveError):
    pass


class BracketFailure(CubicWaveError):
    pass


class WrongBranch(CubicWaveError):
    pass


class NonConvergence(CubicWaveError):
    pass


class SpectralFailure(CubicWaveError):
    pass


class PreconditionViolation(CubicWaveError, ValueError):
    pass


class CertificateFailure(CubicWaveError):
    pass


class ScanFailure(CubicWaveError):
    pass


class LemmaViolation(CubicWaveError):
    pass

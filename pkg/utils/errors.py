class OrbitraceError(Exception):
    """Base class, every instance carries a dict of diagnostics for the error records."""

    def __init__(self, message='', **diagnostics):
        super().__init__(message)
        self.message = message
        self.diagnostics = diagnostics

    def record(self):
        return {'error': self.__class__.__name__, 'message': self.message,
                **{k: _plain(v) for k, v in self.diagnostics.items()}}


def _plain(value):
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, (list, tuple)):
        return [_plain(aa) for aa in value]
    if hasattr(value, 'item'):
        return _plain(value.item())
    return value


class ConfigError(OrbitraceError):
    def __init__(self, key, message):
        super().__init__(f'{key}: {message}', key=key)


# models
class DegenerateBranch(OrbitraceError):
    pass


class RootFindingFailed(OrbitraceError):
    pass


# contour integrator
class BlowUp(OrbitraceError):
    pass


class SampleMismatch(OrbitraceError):
    pass


# action
class BranchTrackingFailed(OrbitraceError):
    pass


class ContourCollision(OrbitraceError):
    pass


class TurningPointOnPath(OrbitraceError):
    pass


# quantizer
class NoConvergence(OrbitraceError):
    pass


class LeftValidityWindow(OrbitraceError):
    pass


class UnpairedAsymmetricOrbit(OrbitraceError):
    pass


class PoleProximity(OrbitraceError):
    pass


# quantum reference
class NoConvergenceQR(OrbitraceError):
    pass


# spin
class Unaligned(OrbitraceError):
    pass

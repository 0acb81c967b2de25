from __future__ import annotations


class ThetaBlockError(ValueError):
    """Base for domain errors raised by the library."""


class IdenticallyZeroError(ThetaBlockError):
    """A theta factor ``theta(tau, 0 * z)`` makes the whole block vanish."""


class WindowError(ThetaBlockError):
    """A computation needs coefficients beyond the expanded ``q`` window."""


class DescriptorError(ThetaBlockError):
    pass

"""P-value plumbing: complementary error function and regularized upper
incomplete gamma Q(a, x), with domain checks."""

import math

from scipy import special as _special

from ..errors import DomainError


def erfc(x: float) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"erfc argument must be finite, got {x!r}")
    return math.erfc(x)


def igamc(a: float, x: float) -> float:
    """Q(a, x) = Gamma(a, x) / Gamma(a), for a > 0 and x >= 0."""
    a = float(a)
    x = float(x)
    if not math.isfinite(a) or a <= 0:
        raise DomainError(f"igamc needs a > 0, got {a!r}")
    if not math.isfinite(x) or x < 0:
        raise DomainError(f"igamc needs x >= 0, got {x!r}")
    if x == 0.0:
        return 1.0
    return float(_special.gammaincc(a, x))

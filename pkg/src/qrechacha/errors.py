"""Typed errors shared across the toolkit.

Every error carries the process exit code the CLI maps it to:
2 usage, 3 I/O and transport, 4 pool exhausted, 5 verification/test failure.
"""


class QreChachaError(Exception):
    exit_code = 1


class UsageError(QreChachaError):
    exit_code = 2


class ParamError(UsageError):
    """Invalid argument value (bad word width, odd round count, ...)."""


class MaskCountMismatch(UsageError):
    """Session material does not cover the requested round count."""


class CounterOverflow(UsageError):
    """Message would need a block counter past 2**32 - 1 (wrap is forbidden)."""


class SequenceTooShort(UsageError):
    """Bit sequence shorter than the test's minimum length."""


class ParamTooLarge(UsageError):
    """Pattern length too large for the sequence length."""


class DomainError(UsageError):
    """Special-function argument outside its domain."""


class InsufficientResults(UsageError):
    """Comparison needs at least two benchmark results."""


class IoFailure(QreChachaError):
    exit_code = 3


class MalformedMaterial(IoFailure):
    """Session material bytes are truncated, versioned wrong, or inconsistent."""


class NetworkFailure(IoFailure):
    """Remote QRNG endpoint unreachable or request failed."""


class ShortResponse(IoFailure):
    """Remote QRNG returned fewer bytes than requested."""


class DecodeError(IoFailure):
    """Remote QRNG response could not be decoded in the configured mode."""


class PoolExhausted(QreChachaError):
    """Entropy pool has too few unconsumed bytes; refill it from a QRNG."""

    exit_code = 4


class VerificationFailure(QreChachaError):
    exit_code = 5

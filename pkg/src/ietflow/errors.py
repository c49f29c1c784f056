"""Exception hierarchy shared by all ietflow modules."""


class IETError(Exception):
    """Base class for every error raised by the package."""


# scalars / precision
class MixedFieldError(IETError):
    pass


class PrecisionExhausted(IETError):
    """A float-mode comparison could not be certified by its error bound."""


# iet-core
class NonPositiveLength(IETError):
    pass


class NotAdmissible(IETError):
    pass


class AlphabetMismatch(IETError):
    pass


class OutOfDomain(IETError):
    pass


class FloatModeUncertifiable(IETError):
    pass


# induction
class TiedLengths(IETError):
    def __init__(self, step, message=None):
        self.step = step
        super().__init__(message or f"tied lengths at induction step {step}")


class DepthExceeded(IETError):
    pass


class BadLevel(IETError):
    pass


class CapExceeded(IETError):
    pass


# regularity
class ZeroEntry(IETError):
    pass


class BadIndex(IETError):
    pass


class CertificateMismatch(IETError):
    pass


class NotPrimitive(IETError):
    pass


class PerronDegreeTooHigh(IETError):
    def __init__(self, message, instance=None):
        super().__init__(message)
        self.instance = instance


# roof-flow
class AtSingularity(IETError):
    pass


class OrbitHitsSingularity(IETError):
    def __init__(self, iterate, message=None):
        self.iterate = iterate
        super().__init__(message or f"orbit hits a singularity at iterate {iterate}")


class RoofSpecError(IETError):
    pass


# ratner
class BadInputs(IETError):
    pass


class NotNormalized(IETError):
    pass


class PairTooFar(IETError):
    pass


class SameOrbit(IETError):
    pass


class NeitherHolds(IETError):
    pass


class NotFound(IETError):
    def __init__(self, scanned, message=None):
        self.scanned = scanned
        super().__init__(message or f"no hit time in scanned range {scanned}")


class NoBranchInP(IETError):
    pass


class DriftNotKept(IETError):
    def __init__(self, witness_n, deviation, message=None):
        self.witness_n = witness_n
        self.deviation = deviation
        super().__init__(message or f"drift not kept: deviation {deviation} at n={witness_n}")

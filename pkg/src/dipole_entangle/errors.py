"""Exception types shared across the package."""


class ContractViolation(RuntimeError):
    """A numerical contract was broken (maps to CLI exit code 3)."""


class FactorizationError(ContractViolation):
    """Photon labels and source space did not factorize."""


class ZeroAmplitudeError(ContractViolation):
    """The initial state has no overlap with |22>, so no pair can be produced."""


class QuadratureError(ContractViolation):
    """Estimated quadrature truncation error exceeds the requested tolerance."""


class EnvelopeViolation(ContractViolation):
    """A rejection-sampling proposal exceeded its envelope bound."""

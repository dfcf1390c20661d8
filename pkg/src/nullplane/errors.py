"""Exception types shared across the package."""


class NullplaneError(Exception):
    """Base class for all package errors."""


class NonConvergent(NullplaneError):
    """Quadrature failed to stabilise under panel doubling."""


class BoundaryLeak(NullplaneError):
    """Grid data carries non-negligible weight at (or beyond) the window ends."""


class ZeroModePresent(NullplaneError):
    """A lightlike profile has a nonzero mean, so its one-particle vector
    does not exist (the truncated norm diverges)."""


class NotCyclic(NullplaneError):
    def __init__(self, deficiency: int):
        self.deficiency = deficiency
        super().__init__(f"real span plus its i-image misses {deficiency} real dimension(s)")


class NotSeparating(NullplaneError):
    def __init__(self, overlap_dim: int):
        self.overlap_dim = overlap_dim
        super().__init__(f"real span meets its i-image in {overlap_dim} dimension(s)")


class SingularSpectrum(NullplaneError):
    """The vector has too much weight on the eigenvalue-1 subspace of the
    modular operator, where the cutting projection is undefined."""


class ZeroMassZeroMomentum(NullplaneError):
    """Massless dispersion evaluated at vanishing transverse momentum."""


class ProfileOrderViolation(NullplaneError):
    """A pair of cut profiles does not satisfy the required strict ordering."""


class ScenarioError(NullplaneError):
    """Scenario file failed validation; message names the offending entry."""

"""Exception hierarchy shared across the package."""


class EncKFError(Exception):
    """Base class for every error raised by this package."""


class KeygenError(EncKFError):
    """Key generation failed (bit length too small to find two distinct primes)."""


class PlaintextRangeError(EncKFError):
    """Plaintext integer outside [0, n)."""


class KeyMismatchError(EncKFError):
    """Ciphertexts under different public keys were combined."""


class CiphertextError(EncKFError):
    """Malformed ciphertext (out of range, or not a unit mod n^2)."""


class EncodeOverflowError(EncKFError):
    """Fixed-point encoding would exceed half the plaintext modulus."""


class ExponentBudgetExceeded(EncKFError):
    """Ciphertext exponent grew past the safe budget for this key size.

    Carries ``step`` when raised inside a protocol run.
    """

    def __init__(self, msg, step=None):
        super().__init__(msg)
        self.step = step


class DimensionMismatchError(EncKFError):
    """Vector/matrix dimensions inconsistent."""


class SingularMatrixError(EncKFError):
    """Matrix inverse requested for a singular or ill-conditioned matrix."""


class NotPositiveDefiniteError(EncKFError):
    """Cholesky factorization requested for a non-SPD matrix."""


class NumericalError(EncKFError):
    """Numerical routine failed (SVD non-convergence, inconsistent attack system)."""


class IncompleteRoundError(EncKFError):
    """A synchronous protocol round is missing at least one expected message."""


class BarrierViolation(EncKFError):
    """A party touched messages of a later step before finishing the current one."""


class AttackInapplicable(EncKFError):
    """The coalition lacks the information the attack construction requires.

    Raised for a singular process matrix in the group-estimation attack, and
    when visibility flags withhold the model parameters the attack needs.
    """


class ScenarioError(EncKFError):
    """Scenario configuration invalid; message starts with the offending field path."""

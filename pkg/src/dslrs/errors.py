"""Exception hierarchy for the DSLRS package."""


class DslrsError(Exception):
    """Base class for every error raised by this package."""


class DecodeError(DslrsError, ValueError):
    """Malformed byte encoding (wrong length, off-curve point, scalar >= q)."""


# -- registry ---------------------------------------------------------------

class RegistrationError(DslrsError):
    pass


class IdentityPoint(RegistrationError):
    pass


class DuplicateKey(RegistrationError):
    pass


class NotInSubgroup(RegistrationError):
    pass


class InvalidPoP(RegistrationError):
    pass


# -- signing ----------------------------------------------------------------

class SignError(DslrsError):
    pass


class SignerNotInRing(SignError):
    pass


class UnknownScope(SignError):
    pass


class RingTooSmall(SignError):
    pass


class RingNotRegistered(SignError):
    pass


class DuplicateRingMember(SignError):
    pass


# -- threshold --------------------------------------------------------------

class InvalidThreshold(DslrsError, ValueError):
    pass


class DeanonError(DslrsError):
    pass


class WrongShareCount(DeanonError):
    pass


class DuplicateIndex(DeanonError):
    pass


class UnknownIndex(DeanonError):
    pass


class InvalidSignature(DeanonError):
    """Raised when deanonymization is asked to check a signature that fails."""


# -- network simulator ------------------------------------------------------

class DkgFailed(DslrsError):
    pass


class DeanonTimeout(DslrsError, TimeoutError):
    """Fewer than k nodes answered a deanonymization request."""


# -- consent ledger ---------------------------------------------------------

class LedgerError(DslrsError):
    pass


class VerifyFailed(LedgerError):
    pass


class DuplicateActiveKeyImage(LedgerError):
    pass


class NotLinked(LedgerError):
    pass


class RecordNotValid(LedgerError):
    pass


class RevealInconsistent(LedgerError):
    pass


class UnknownRecord(LedgerError, KeyError):
    pass

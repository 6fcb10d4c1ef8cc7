"""Exception hierarchy shared across the package.

The HTTP layer maps these onto status codes: UnknownIdError -> 404,
ConflictError subclasses -> 409, everything else -> 400/500.
"""


class MailgraphError(Exception):
    pass


class UnknownIdError(MailgraphError):
    """A referenced message, category, or edge does not exist."""


class ConflictError(MailgraphError):
    """The operation is valid but the current state forbids it."""


class DepthExceededError(ConflictError):
    pass


class TooFewMembersError(ConflictError):
    pass


class MaxDepthError(ConflictError):
    pass


class JobOverlapError(ConflictError):
    pass


class StoreFormatError(MailgraphError):
    """Persisted store document is corrupt or has an unsupported version."""


class UntrainedModelError(MailgraphError):
    pass


class EmptyCorpusError(MailgraphError):
    pass


class TransportError(MailgraphError):
    """Mail server interaction failed."""


class AuthError(TransportError):
    pass

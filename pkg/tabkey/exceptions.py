class TabkeyError(Exception):
    """Base class for every error tabkey raises on bad data or backends."""


class VocabError(TabkeyError):
    pass


class TokenizerTrainingError(TabkeyError):
    pass


class PredictorError(TabkeyError):
    """A predictor backend failed; `position` is the token being ranked."""

    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{message} (position {position})"
        super().__init__(message)


class RemoteProtocolError(PredictorError):
    """The remote predictor replied with something the protocol forbids."""


class ClaimParseError(TabkeyError):
    def __init__(self, message, claim=None):
        self.claim = claim
        super().__init__(message)


class MultipleDependentClaimError(ClaimParseError):
    pass


class EvaluationError(TabkeyError):
    pass


class ReportError(TabkeyError):
    pass

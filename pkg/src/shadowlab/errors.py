"""Exception hierarchy. Every error carries a short machine-readable ``tag``."""


class ShadowlabError(Exception):
    tag = "error"

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details

    def to_dict(self):
        return {"tag": self.tag, "message": str(self), **self.details}


class InvalidParameters(ShadowlabError):
    tag = "invalid-parameters"

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}", field=field)
        self.field = field


class HorizonTooSmall(ShadowlabError):
    tag = "horizon-too-small"


class HorizonExhausted(ShadowlabError):
    tag = "horizon-exhausted"


class NotErgodicInput(ShadowlabError):
    tag = "not-ergodic-input"


class BlocksTooShort(ShadowlabError):
    tag = "blocks-too-short"


class NoPreimage(ShadowlabError):
    tag = "no-preimage"


class ReturnTimeNotFound(ShadowlabError):
    tag = "return-time-not-found"


class EmptyCandidateSet(ShadowlabError):
    tag = "empty-candidate-set"


class NetTooCoarse(ShadowlabError):
    tag = "net-too-coarse"


class EmptyBall(ShadowlabError):
    tag = "empty-ball"


class SegmentTooShort(ShadowlabError):
    tag = "segment-too-short"


class SystemNotFinite(ShadowlabError):
    tag = "system-not-finite"


class ConfigInvalid(ShadowlabError):
    tag = "config-invalid"

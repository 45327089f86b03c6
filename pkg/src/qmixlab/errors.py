"""Exception hierarchy shared across qmixlab."""


class QmixlabError(Exception):
    """Base class for all library errors."""


class EpisodeFinished(QmixlabError):
    def __init__(self, msg: str = "episode finished"):
        super().__init__(msg)


class MapError(QmixlabError, ValueError):
    """Malformed commons map."""


class UnknownOpponent(QmixlabError, KeyError):
    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown opponent"


class InvalidMixture(QmixlabError, ValueError):
    pass


class DimensionError(QmixlabError, ValueError):
    pass


class ConvergenceError(QmixlabError, RuntimeError):
    def __init__(self, msg: str, residual: float):
        super().__init__(f"{msg} (residual={residual:.3e})")
        self.residual = residual


class ArtifactError(QmixlabError):
    """Problems reading or writing persisted artifacts."""


class CorruptDocument(ArtifactError):
    pass


class VersionMismatch(ArtifactError):
    pass


class MissingArtifact(ArtifactError, FileNotFoundError):
    pass


class ConfigError(QmixlabError, ValueError):
    pass

"""Exception hierarchy."""


class GenAgentError(Exception):
    """Base class for all errors raised by genagent."""


class DegenerateGeometry(GenAgentError, ValueError):
    pass


class EndpointMismatch(GenAgentError, ValueError):
    pass


class KindMismatch(GenAgentError, ValueError):
    pass


class EmptyScene(GenAgentError, ValueError):
    pass


class ConfigError(GenAgentError, ValueError):
    pass


class ParseError(GenAgentError, ValueError):
    pass


class SchemaError(GenAgentError, ValueError):
    def __init__(self, message: str, feature_index: int | None = None):
        super().__init__(message)
        self.feature_index = feature_index


class IoError(GenAgentError, OSError):
    pass

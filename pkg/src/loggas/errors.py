"""Exception types. ``exit_code`` is what the CLI returns when one escapes."""


class LoggasError(Exception):
    exit_code = 3


class ConfigError(LoggasError, ValueError):
    exit_code = 2


class DomainError(LoggasError, ValueError):
    exit_code = 3


class NumericFailure(LoggasError, RuntimeError):
    exit_code = 3


class SolveDiverged(NumericFailure):
    pass


class NotOneCut(NumericFailure):
    pass


class ChainStalled(NumericFailure):
    pass


class StepCollapse(NumericFailure):
    def __init__(self, msg, time=None, index=None):
        super().__init__(msg)
        self.time = time
        self.index = index


class StepTooLarge(NumericFailure):
    pass


class OptimFailed(NumericFailure):
    pass

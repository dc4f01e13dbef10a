"""Exception types shared across the package."""


class DiffRestoreError(Exception):
    """Base class for all package-specific failures."""


class UnsupportedWavError(DiffRestoreError):
    """WAV file uses an encoding the loader does not handle."""


class NonFiniteSignalError(DiffRestoreError, ValueError):
    """A signal buffer picked up NaN or Inf values."""


class InfeasibleTargetError(DiffRestoreError):
    """A calibration target (e.g. clipping SDR) cannot be reached."""


class GuidanceBlowupError(DiffRestoreError):
    """Guidance produced non-finite values; the run must abort.

    Attributes:
        step_index: schedule iteration at which the blow-up occurred
            (None when raised outside the sampler loop).
        residual_norm: last finite measurement residual, if known.
        trace: partial sampling trace up to the failure point, if any.
    """

    def __init__(self, message, step_index=None, residual_norm=None, trace=None):
        super().__init__(message)
        self.step_index = step_index
        self.residual_norm = residual_norm
        self.trace = trace

"""Exception hierarchy shared by every module."""

import json
import math


class NLWError(Exception):
    """Base class for all errors raised by nlwlab."""


class ConfigurationError(NLWError, ValueError):
    """Invalid grid, solver or scenario parameters."""

    def __init__(self, message, field=None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class RangeError(NLWError, ValueError):
    """A requested index, radius or time lies outside the resolved range."""


class UnsupportedOrderError(RangeError):
    """Sobolev order outside the supported interval."""


class InsufficientDataError(NLWError, ValueError):
    """Too few samples for a fit or finite-difference stencil."""


class CoverageError(NLWError, ValueError):
    """A trajectory does not cover the (t, r) region a transform needs."""

    def __init__(self, message, t_needed=None, t_available=None):
        self.t_needed = t_needed
        self.t_available = t_available
        super().__init__(message)


class TargetUnreachableError(NLWError):
    """Frequency split could not reach the requested smallness."""

    def __init__(self, message, best):
        self.best = best
        super().__init__(f"{message} (best achieved {best:.6g})")


class DivergenceError(NLWError, FloatingPointError):
    """Non-finite or overflowing state during time integration."""

    def __init__(self, step, t, max_amplitude, component="u"):
        self.step = step
        self.t = t
        self.max_amplitude = max_amplitude
        self.component = component
        super().__init__(
            f"divergence in {component} at step {step} (t={t:.6g}), "
            f"max amplitude {max_amplitude:.6g}"
        )

    def payload(self):
        return {
            "error": "divergence",
            "component": self.component,
            "step": int(self.step),
            "t": float(self.t),
            # inf/nan are not valid JSON numbers
            "max_amplitude": (float(self.max_amplitude)
                              if math.isfinite(self.max_amplitude)
                              else str(self.max_amplitude)),
        }

    def to_json(self):
        return json.dumps(self.payload(), sort_keys=True)


class ConfigParseError(ConfigurationError):
    """Malformed configuration text; carries the 1-based line and column."""

    def __init__(self, message, line=None, column=None, field=None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where, field)


class CheckpointError(NLWError, ValueError):
    """Corrupt, truncated or foreign checkpoint data."""

"""Exception types raised across gaitlab."""


class GaitlabError(Exception):
    """Base class for all gaitlab errors."""


class InvalidParameterError(GaitlabError, ValueError):
    """A parameter set violates a physical or control invariant."""


class DegenerateConfigurationError(GaitlabError):
    """A linear system that should be regular turned out singular."""


class InvalidImpactError(GaitlabError):
    """The impact map was asked to act on a state that is not an impact posture."""


class InvalidLinearizationError(GaitlabError):
    """The chosen expansion point gives a non-positive fall-phase stiffness."""


class GaitFailure(GaitlabError):
    """A step could not be completed.

    Attributes
    ----------
    kind : str
        One of ``"no-impact"``, ``"contact-violation"``, ``"control-incomplete"``.
    step : int
        Index of the step that failed (the step started by impact ``step``).
    records : list
        Step records of the steps completed before the failure.
    """

    KINDS = ("no-impact", "contact-violation", "control-incomplete")

    def __init__(self, kind, step, message="", records=None):
        if kind not in self.KINDS:
            raise ValueError(f"unknown failure kind {kind!r}")
        self.kind = kind
        self.step = step
        self.detail = message
        self.records = list(records or [])
        where = "" if step is None else f"step {step}: "
        super().__init__(where + kind + (f" ({message})" if message else ""))

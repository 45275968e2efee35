"""Exception hierarchy shared by every stage of the pipeline."""


class WormGaitError(Exception):
    """Base class for all model errors (CLI exit status 3)."""


class ParameterError(WormGaitError, ValueError):
    """A parameter set violates its invariants."""


class ResolutionError(WormGaitError):
    """The requested time step is too coarse for the dynamics."""


class LivelockError(WormGaitError):
    """Anchor switching did not reach a fixpoint."""


class GridError(WormGaitError):
    """Time grids are non-uniform or do not match."""


class WindowError(WormGaitError):
    """A trace is too short for the requested evaluation window."""


class DegenerateLogError(WormGaitError):
    """Logged data carries no information about the fitted parameters."""

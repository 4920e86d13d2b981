"""Exception types shared across the solver modules."""


class UnsupportedConfiguration(ValueError):
    """A level pairing or node set that the nested-grid machinery cannot handle."""


class SolverDiverged(RuntimeError):
    """Multigrid residual grew over several consecutive cycles."""


class ProtocolViolation(RuntimeError):
    """A rank waited on a message that can never arrive (or arrived out of protocol)."""

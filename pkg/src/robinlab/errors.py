"""Shared exception types."""


class SolverError(RuntimeError):
    """A solve failed or left its validity envelope (resonance, blowup)."""

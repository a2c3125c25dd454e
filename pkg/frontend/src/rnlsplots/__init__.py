"""Read-only figure rendering for the rotating-NLS solver's artifacts."""

__version__ = "0.1.0"

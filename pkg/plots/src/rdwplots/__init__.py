"""Read-only figure generation for the simulator's summary / sweep CSVs."""

__version__ = "0.1.0"

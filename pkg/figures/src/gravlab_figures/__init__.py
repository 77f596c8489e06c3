"""Figure scripts for gravlab run artifacts."""

__version__ = "0.1.0"

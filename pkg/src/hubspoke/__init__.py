"""Hub-and-spoke portfolio calculus on discretized simplices."""

__version__ = "0.1.0"

"""SimLoss: cross entropy with a class-similarity matrix."""

__version__ = "0.1.0"

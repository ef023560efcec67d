"""Energy flux of ambit fields through shrinking boundary layers."""

__version__ = "0.1.0"

"""Change-point detection for finite-alphabet sequences by counting crossings of a match graph."""

__version__ = "0.1.0"

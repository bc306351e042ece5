"""Adjacent-bits-swapped polar codes: construction, encoding and list decoding."""

__version__ = "0.1.0"

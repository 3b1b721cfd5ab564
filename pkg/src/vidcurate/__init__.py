"""vidcurate: desk-scale image/video dataset curation and geometry planning."""

__version__ = "0.1.0"

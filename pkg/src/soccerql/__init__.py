"""Natural-language question answering over a relational soccer archive."""

__version__ = "0.1.0"

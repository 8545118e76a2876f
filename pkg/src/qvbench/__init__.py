"""Query-variant benchmarking toolkit.

Generates demographically inspired variants of seed search queries,
validates them, runs and evaluates retrieval, and analyses system
rankings across the resulting query populations.
"""

__version__ = "0.1.0"

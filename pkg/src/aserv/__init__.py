"""Real-time analysis engine for fast sky surveys: per-cycle catalog
ingestion into a key-value store with spatial partitioning, interval
indexing of scientific events, pre-aggregated counting, and the three
interactive analyses (probe, list, stretch)."""

__version__ = "0.1.0"

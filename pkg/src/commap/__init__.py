"""Consensus communities, stability ranking and hashtag topics for
reciprocal interaction networks."""

__version__ = "0.1.0"

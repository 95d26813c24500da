"""Bootstrapped named entity classification with jointly learned entity and
pattern embeddings, plus an interpretable decision-list export."""

__version__ = "0.1.0"

"""Semantic data virtualization: tabular sources to RDF entities via explicit N3 rules."""

__version__ = "0.1.0"

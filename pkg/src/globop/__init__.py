"""Computational kernel for globular operads: pasting trees, collections,
operads with contraction, enrichment via multitensors, and the lifting and
hom constructions that relate them across dimensions."""

__version__ = "0.1.0"

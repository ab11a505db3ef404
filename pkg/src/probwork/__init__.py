"""Workbench for Mallows permutations, exclusion processes, Kac's walk,
operator compressions and Ginibre eigenvector overlaps."""

__version__ = "0.1.0"

"""Cost-based sampling for robust multi-structure model fitting."""

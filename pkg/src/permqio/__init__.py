"""Quantum-inspired optimizers (PT, PA, SSMC) over permutation spaces."""

"""Numerical core: spectral expansions, the Bernstein model, path simulation and checks."""

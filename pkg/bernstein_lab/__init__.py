"""Bernstein diffusion lab.

This package builds Bernstein (reciprocal) diffusions on the unit interval and
the unit disk from an initial datum phi and a final datum psi, simulates their
paths in both time directions and verifies them numerically.

Main components:
    - core: spectral Green functions, Bessel roots, the Bernstein model,
      the SDE engine, Feynman-Kac estimators and the verification suite
    - pipeline: model configuration files, CSV/Parquet exports and the CLI
    - utils: logging helpers, quadrature rules and per-path random streams
    - config: Global configuration and logging setup

Example:
    >>> from bernstein_lab.pipeline.model_config import parse_config, build_model
    >>> model = build_model(parse_config("geometry=interval\\nphi=example1_phi\\npsi=unit"))
"""

__version__ = "0.1.0"

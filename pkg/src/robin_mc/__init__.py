"""Monte Carlo solver for Robin boundary value problems via reflecting Brownian motion."""

__version__ = "0.1.0"

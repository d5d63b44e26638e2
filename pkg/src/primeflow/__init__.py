"""Special flows over irrational rotations, reparametrized torus flows, and
prime-orbit statistics, with an experiment registry and CLI."""

__version__ = "0.1.0"

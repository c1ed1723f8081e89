"""psrl-lab: desk-scale partially supervised RL on POMDPs, with exact oracles."""

__version__ = "0.1.0"

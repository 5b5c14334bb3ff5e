"""Double-critic deep-RL agents for mapless 3D UAV navigation at desk scale."""

__version__ = "0.1.0"

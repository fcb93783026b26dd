"""Traveling wavefronts for diffusion-convection-reaction equations with
forward-backward diffusivity and bistable reaction."""
from __future__ import annotations

__version__ = "0.1.0"

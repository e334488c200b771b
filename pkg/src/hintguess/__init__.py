"""Hint-guess coordination lab.

Five Q-architectures trained by independent Q-learning self-play on the
hint-guess game, cross-play evaluation with cluster detection, probe
scenarios, and a zero-feedback human-session service.
"""

__version__ = "0.1.0"

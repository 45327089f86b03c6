"""Q-Mixing: composing per-opponent best responses into responses to opponent mixtures."""

__version__ = "0.1.0"

"""Backbone-free few-shot segmentation with support-induced graph reasoning."""

from .config import Config, load_config
from .episodes import Episode, GeneratorConfig, Shot, generate_episode, load_episode, save_episode
from .errors import SigcnError

__version__ = "0.1.0"

__all__ = [
    "Config", "load_config", "Episode", "GeneratorConfig", "Shot", "generate_episode",
    "load_episode", "save_episode", "SigcnError",
]

"""Coordinated spatial reuse (C-SR) throughput analysis and simulation for multi-AP WLANs."""

from .config import Config, ContentionParams, MacTiming, McsEntry, RadioConfig, load_config
from .deployment import Deployment, PairId, generate, load, save

__version__ = "0.1.0"

"""
Evolving trade-network simulator with avalanche, tail and risk analysis
"""

__version__ = "1.0.0"

"""Random Walk Metropolis out of stationarity: the chain, its scalar limit laws and the limit equations."""

__version__ = "0.1.0"

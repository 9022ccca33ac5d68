"""Distributed detection of a mean shift with spatially correlated Gaussian sensors.

Centralized GLR and consensus-based marginal-product (L-MP) statistics,
their asymptotic laws with saddlepoint tail approximations, and Monte Carlo
experiments that compare the two.
"""
from .model import GaussianMeanModel, Hypothesis, ObservationBlock, build_toeplitz_cov
from .network import SensorNetwork, generate_geometric_network
from .consensus import TransmissionLedger, spatial_sum
from .detectors import StatisticKind, decide

__all__ = [
    "GaussianMeanModel",
    "Hypothesis",
    "ObservationBlock",
    "build_toeplitz_cov",
    "SensorNetwork",
    "generate_geometric_network",
    "TransmissionLedger",
    "spatial_sum",
    "StatisticKind",
    "decide",
]
__version__ = "0.1.0"

"""Transductive node classification by atomic decomposition of graph, features and labels."""
from .cado import Prediction, SolverConfig, SolverState, solve, test_accuracy
from .datagen import GenParams, PlantedInstance, generate
from .errors import NumericalError, ParameterError, StageError, UnsupportedConfiguration
from .objective import AtomModels, TermWeights, objective_phi

__all__ = [
    "GenParams", "PlantedInstance", "generate", "SolverConfig", "SolverState",
    "Prediction", "solve", "test_accuracy", "AtomModels", "TermWeights",
    "objective_phi", "ParameterError", "NumericalError", "StageError",
    "UnsupportedConfiguration",
]

"""Franck-Condon factors from the Doktorov transformation on two bosonic modes."""

from .fcf import JointDistribution, distance, fcf_distribution, spectrum
from .fockspace import FockOperator, StateVector, doktorov_unitary
from .molparams import DoktorovParams, MolecularTransition, doktorov_params, preset

__all__ = [
    "DoktorovParams", "FockOperator", "JointDistribution", "MolecularTransition", "StateVector",
    "distance", "doktorov_params", "doktorov_unitary", "fcf_distribution", "preset", "spectrum",
]
__version__ = "0.1.0"

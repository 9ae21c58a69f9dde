"""Models for a two-node trapped-ion quantum repeater.

Modules
-------
qmath        two-qubit states, channels, fidelity and concurrence
tomo         Bayesian count conversion, maximum-likelihood tomography, local-rotation fits
protosim     Monte-Carlo simulation of the repeater and direct-transmission protocols
ratemodel    analytic rates, bounds, secret key rate and repeater-chain models
nodephysics  cavity coupling geometry, ion-string heating and the spin-echo model
cli          command-line front end
"""
from . import nodephysics, protosim, qmath, ratemodel, tomo

__version__ = "0.1.0"
__all__ = ["qmath", "tomo", "protosim", "ratemodel", "nodephysics"]

"""Post-selected quantum-annealing simulation toolkit.

Builds the phase-concentration circuit exactly on a dense state-vector
simulator, verifies it against the closed-form post-selected Boltzmann
distribution, and exposes the effective-thermodynamics layer (free energy,
entropy, effective cost, accuracy) together with classical baselines.
"""

__version__ = "0.1.0"

from . import baseline, circuit, cost, ensemble, statevec

__all__ = ["baseline", "circuit", "cost", "ensemble", "statevec", "__version__"]

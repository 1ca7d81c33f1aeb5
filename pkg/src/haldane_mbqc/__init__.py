"""Measurement-based single-qubit gates on spin-1 chain resource states.

The package builds boundary-coupled spin-1 chain Hamiltonians as matrix product
operators, finds their ground states with a two-site DMRG sweep, and evaluates
average gate fidelities of teleported single-qubit gates as closed sums of
operator-string expectation values on the resource state.  A dense brute-force
oracle that enumerates every measurement branch cross-checks the formulas on
small chains.
"""

__version__ = "0.1.0"

from . import dmrg, fidelity, linalg, model, mps, oracle, spin_ops

__all__ = [
    "__version__",
    "dmrg",
    "fidelity",
    "linalg",
    "model",
    "mps",
    "oracle",
    "spin_ops",
]

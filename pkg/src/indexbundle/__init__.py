"""Index-bundle invariants of selfadjoint Fredholm families and Hamiltonian systems."""

__version__ = "0.1.0"

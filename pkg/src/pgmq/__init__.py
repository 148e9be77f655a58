"""Phase-gadget compiler targeting programmable multiqubit entangling gates.

Rewrites input circuits into a three-layer form — classical CNOT layer,
phase-gadget body realized as native multiqubit gates, classical CNOT layer —
minimizing the multiqubit gate count and total nuclear norm, and estimates
the fidelity gain under stochastic Pauli noise.
"""

__version__ = "0.1.0"

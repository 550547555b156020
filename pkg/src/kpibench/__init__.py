"""Benchmarks for quantum key performance indicators.

Clifford volume, GHZ fidelity, period finding with linear permutations and
the Bell-state error-correction benefit, on stabilizer and statevector
simulators with configurable Pauli noise.
"""

__version__ = "0.1.0"

"""
qbattery: quantum computation powered by a shared bosonic battery.

Simulates qubits exchanging energy with a cavity prepared in a Fock state,
synthesizes gates from piecewise-constant detuning schedules and estimates the
cryogenic heat budget of the resulting architecture.
"""

__version__ = "0.1.0"
__author__ = "qbattery Team"

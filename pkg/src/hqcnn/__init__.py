"""Hybrid quantum-classical CNN laboratory.

A statevector-simulated quantum layer (feature map + trainable ansatz with
parameter-shift gradients) embedded in a small from-scratch convolutional
network, plus the training-dynamics diagnostics and the experiment CLI.
"""

__version__ = "0.1.0"

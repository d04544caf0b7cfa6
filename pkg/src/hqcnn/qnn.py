"""Expectation-value quantum layer with parameter-shift gradients.

The layer runs a composed circuit (feature map followed by a trainable
ansatz) and reads out single-qubit Pauli-Z expectations, so the output is
a vector in [-1, 1]^k.  Gradients with respect to both trainable weights
and input features are exact: every parametric gate here (RX, RY, RZ, and
PHASE up to a global phase) has a generator with eigenvalues +-1/2, so the
two-point rule (E(a + pi/2) - E(a - pi/2)) / 2 differentiates each gate
occurrence, and occurrences sharing a slot or feature are summed by the
chain rule with the analytic d(angle)/d(feature) of the encoding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .simulator import ParamCircuit, StateVector, bind_angles, run_bound

OBSERVABLE_MODES = ("per_qubit_z", "single_z0")


def expectation_z(state: StateVector, qubit: int) -> float:
    """<Z> on one qubit: signed sum of basis probabilities."""
    if not 0 <= qubit < state.n_qubits:
        raise ValueError(f"qubit {qubit} out of range for {state.n_qubits} qubits")
    probs = state.probabilities()
    signs = _z_signs(state.n_qubits, qubit)
    return float(probs @ signs)


def _z_signs(n_qubits: int, qubit: int) -> np.ndarray:
    k = np.arange(2**n_qubits)
    return 1.0 - 2.0 * ((k >> qubit) & 1)


def _expectations(amps: np.ndarray, n_qubits: int, qubits: tuple[int, ...]) -> np.ndarray:
    """Z expectations for a stack of states [M, 2**n] -> [M, len(qubits)]."""
    probs = np.abs(amps) ** 2
    out = np.empty((amps.shape[0], len(qubits)))
    for i, q in enumerate(qubits):
        out[:, i] = probs @ _z_signs(n_qubits, q)
    return out


def observable_qubits(mode: str, n_qubits: int) -> tuple[int, ...]:
    """Measured qubits for an observable mode: all of them, or just qubit 0."""
    if mode == "per_qubit_z":
        return tuple(range(n_qubits))
    if mode == "single_z0":
        return (0,)
    raise ValueError(f"unknown observable mode {mode!r}")


@dataclass
class QnnLayer:
    """Composed circuit + measured qubits + trainable weight vector."""

    circuit: ParamCircuit
    observables: tuple[int, ...]
    weights: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.weights is None:
            self.weights = np.zeros(self.circuit.weight_slots)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (self.circuit.weight_slots,):
            raise ValueError(
                f"expected {self.circuit.weight_slots} weights, "
                f"got shape {self.weights.shape}"
            )
        for q in self.observables:
            if not 0 <= q < self.circuit.n_qubits:
                raise ValueError(f"observable qubit {q} out of range")

    @property
    def n_outputs(self) -> int:
        return len(self.observables)

    @property
    def n_features(self) -> int:
        return self.circuit.data_slots


def qnn_forward(layer: QnnLayer, features: np.ndarray | list) -> np.ndarray:
    """Per-observable <Z> of the encoded-and-evolved state."""
    angles = bind_angles(layer.circuit, features, layer.weights)
    amps = run_bound(layer.circuit, angles[None, :])
    return _expectations(amps, layer.circuit.n_qubits, layer.observables)[0]


def qnn_grad(
    layer: QnnLayer, features: np.ndarray | list
) -> tuple[np.ndarray, np.ndarray]:
    """Exact Jacobians (d_out/d_weights, d_out/d_features).

    Shapes are [n_outputs, weight_slots] and [n_outputs, data_slots].  Each
    parametric gate occurrence is shifted by +-pi/2 independently; all
    shifted variants evolve in one batched pass and are then routed to
    their weight slot or, through the encoding derivative, their feature.
    """
    features = np.asarray(features, dtype=float)
    circuit = layer.circuit
    base = bind_angles(circuit, features, layer.weights)
    occ = [j for j, g in enumerate(circuit.ops) if g.parametric]
    d_weights = np.zeros((layer.n_outputs, circuit.weight_slots))
    d_features = np.zeros((layer.n_outputs, circuit.data_slots))
    if not occ:
        return d_weights, d_features

    rows = np.tile(base, (2 * len(occ), 1))
    for i, j in enumerate(occ):
        rows[2 * i, j] += math.pi / 2
        rows[2 * i + 1, j] -= math.pi / 2
    amps = run_bound(circuit, rows)
    evals = _expectations(amps, circuit.n_qubits, layer.observables)

    for i, j in enumerate(occ):
        shift = 0.5 * (evals[2 * i] - evals[2 * i + 1])
        gate = circuit.ops[j]
        if gate.weight_slot is not None:
            d_weights[:, gate.weight_slot] += shift
        elif gate.data_term is not None:
            for f in gate.data_term.features:
                d_features[:, f] += shift * gate.data_term.dangle(features, f)
        # fixed-angle parametric gates contribute to neither jacobian
    return d_weights, d_features

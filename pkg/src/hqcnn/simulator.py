"""Dense statevector simulation of small parameterized circuits.

Conventions used throughout the package:

* Qubit 0 is the least-significant bit of the amplitude index, i.e. basis
  state ``|q_{n-1} ... q_1 q_0>`` has index ``sum(q_i << i)``.
* States are compared amplitude-wise.  All builders and the dense-matrix
  oracle use the same gate matrices, so no global-phase quotient is needed.
* ``RZ(theta) = diag(exp(-i*theta/2), exp(+i*theta/2))`` and
  ``PHASE(phi) = diag(1, exp(i*phi))``; they differ by a global phase only.

Amplitudes are always complex128; the oracle tolerances used by the test
suite (1e-9 at circuit depth) are unreachable in single precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MAX_QUBITS = 20
MAX_ORACLE_QUBITS = 6

GATE_KINDS = ("H", "X", "Y", "Z", "S", "T", "RX", "RY", "RZ", "PHASE", "CX")
PARAMETRIC_KINDS = frozenset({"RX", "RY", "RZ", "PHASE"})

_SQRT2_INV = 1.0 / math.sqrt(2.0)

_FIXED_1Q = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT2_INV,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "S": np.array([[1, 0], [0, 1j]], dtype=complex),
    "T": np.array([[1, 0], [0, np.exp(1j * math.pi / 4)]], dtype=complex),
}


def gate_matrix(kind: str, angle: float | None = None) -> np.ndarray:
    """2x2 matrix of a single-qubit gate (``CX`` is handled separately)."""
    if kind in _FIXED_1Q:
        return _FIXED_1Q[kind].copy()
    if kind == "RX":
        c, s = math.cos(angle / 2), math.sin(angle / 2)
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if kind == "RY":
        c, s = math.cos(angle / 2), math.sin(angle / 2)
        return np.array([[c, -s], [s, c]], dtype=complex)
    if kind == "RZ":
        return np.array(
            [[np.exp(-0.5j * angle), 0], [0, np.exp(0.5j * angle)]], dtype=complex
        )
    if kind == "PHASE":
        return np.array([[1, 0], [0, np.exp(1j * angle)]], dtype=complex)
    raise ValueError(f"unknown single-qubit gate kind {kind!r}")


def cx_matrix() -> np.ndarray:
    """4x4 CNOT matrix for (control, target) = (qubit 1, qubit 0) ordering."""
    # With qubit 0 as the LSB, index = control*2 + target.
    m = np.zeros((4, 4), dtype=complex)
    m[0, 0] = m[1, 1] = 1.0
    m[2, 3] = m[3, 2] = 1.0
    return m


@dataclass(frozen=True)
class DataTerm:
    """Angle contribution of input features to one encoding gate.

    ``features`` holds distinct feature indices.  A single feature encodes
    first-order: angle = 2*x_f.  Several features encode a product term:
    angle = 2 * prod(pi - x_f).
    """

    features: tuple[int, ...]

    def __post_init__(self):
        if len(self.features) == 0:
            raise ValueError("data term needs at least one feature index")
        if len(set(self.features)) != len(self.features):
            raise ValueError("data term feature indices must be distinct")

    def angle(self, x: np.ndarray) -> float:
        if len(self.features) == 1:
            return 2.0 * float(x[self.features[0]])
        prod = 1.0
        for f in self.features:
            prod *= math.pi - float(x[f])
        return 2.0 * prod

    def dangle(self, x: np.ndarray, feature: int) -> float:
        """Analytic d(angle)/d(x_feature)."""
        if feature not in self.features:
            return 0.0
        if len(self.features) == 1:
            return 2.0
        prod = 1.0
        for f in self.features:
            if f != feature:
                prod *= math.pi - float(x[f])
        return -2.0 * prod


@dataclass(frozen=True)
class Gate:
    """One circuit operation.

    ``qubits`` is ``(q,)`` for single-qubit gates and ``(control, target)``
    for CX.  Parametric gates carry exactly one of ``weight_slot`` (index
    into the trainable weight vector) or ``data_term`` (feature-derived
    angle); fixed-angle parametric gates carry ``angle`` instead.
    """

    kind: str
    qubits: tuple[int, ...]
    weight_slot: int | None = None
    data_term: DataTerm | None = None
    angle: float | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        want = 2 if self.kind == "CX" else 1
        if len(self.qubits) != want:
            raise ValueError(f"{self.kind} acts on {want} qubit(s), got {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError("gate qubit indices must be distinct")
        if any(q < 0 for q in self.qubits):
            raise ValueError("gate qubit indices must be nonnegative")
        sources = sum(
            v is not None for v in (self.weight_slot, self.data_term, self.angle)
        )
        if self.kind in PARAMETRIC_KINDS:
            if sources > 1:
                raise ValueError("parametric gate must have a single angle source")
        elif sources:
            raise ValueError(f"{self.kind} takes no angle")

    @property
    def parametric(self) -> bool:
        return self.kind in PARAMETRIC_KINDS


@dataclass(frozen=True)
class ParamCircuit:
    """Ordered gate list with data slots (input features) and weight slots.

    Data slot ``i`` is the i-th input feature; encoding gates derive their
    rotation angles from those values through their ``DataTerm``.  Weight
    slots index the trainable angle vector, one slot per trainable gate.
    """

    n_qubits: int
    ops: tuple[Gate, ...] = field(default_factory=tuple)
    data_slots: int = 0
    weight_slots: int = 0

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ValueError(f"n_qubits must be in [1, {MAX_QUBITS}]")
        for g in self.ops:
            if max(g.qubits) >= self.n_qubits:
                raise ValueError(
                    f"gate {g.kind} on {g.qubits} exceeds {self.n_qubits} qubits"
                )
            if g.weight_slot is not None and not (
                0 <= g.weight_slot < self.weight_slots
            ):
                raise ValueError(f"weight slot {g.weight_slot} out of range")
            if g.data_term is not None and max(g.data_term.features) >= self.data_slots:
                raise ValueError("data term references feature beyond data_slots")
            if g.parametric and g.weight_slot is None and g.data_term is None and g.angle is None:
                raise ValueError(f"parametric gate {g.kind} has no angle source")


class StateVector:
    """2**n_qubits complex amplitudes of an n-qubit pure state."""

    __slots__ = ("n_qubits", "amps")

    def __init__(self, n_qubits: int, amps: np.ndarray):
        amps = np.asarray(amps, dtype=complex)
        if amps.shape != (2**n_qubits,):
            raise ValueError(
                f"expected {2**n_qubits} amplitudes for {n_qubits} qubits, "
                f"got shape {amps.shape}"
            )
        self.n_qubits = n_qubits
        self.amps = amps

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amps.copy())


def zero_state(n_qubits: int) -> StateVector:
    """|0...0> on ``n_qubits`` qubits."""
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ValueError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")
    amps = np.zeros(2**n_qubits, dtype=complex)
    amps[0] = 1.0
    return StateVector(n_qubits, amps)


# Index caches keyed by (n_qubits, qubit...): pair lists used by the flat
# gate kernels below.  Read-mostly dicts; safe under CPython for the pure
# functions in this module.
_PAIR_CACHE: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}
_CX_CACHE: dict[tuple[int, int, int], tuple[np.ndarray, np.ndarray]] = {}


def _pair_indices(n: int, q: int) -> tuple[np.ndarray, np.ndarray]:
    """Amplitude indices with bit q = 0 and their bit-q = 1 partners."""
    key = (n, q)
    cached = _PAIR_CACHE.get(key)
    if cached is None:
        k = np.arange(2**n)
        idx0 = k[(k >> q) & 1 == 0]
        cached = (idx0, idx0 | (1 << q))
        _PAIR_CACHE[key] = cached
    return cached


def _cx_indices(n: int, control: int, target: int) -> tuple[np.ndarray, np.ndarray]:
    """Swap partners: control bit set, target bit 0 vs 1."""
    key = (n, control, target)
    cached = _CX_CACHE.get(key)
    if cached is None:
        k = np.arange(2**n)
        sel = k[((k >> control) & 1 == 1) & ((k >> target) & 1 == 0)]
        cached = (sel, sel | (1 << target))
        _CX_CACHE[key] = cached
    return cached


def _apply_1q(block: np.ndarray, n: int, q: int, m: np.ndarray) -> None:
    """Apply one 2x2 matrix in place on ``block`` of shape [M, 2**n]."""
    idx0, idx1 = _pair_indices(n, q)
    a0 = block[:, idx0]
    a1 = block[:, idx1]
    block[:, idx0] = m[0, 0] * a0 + m[0, 1] * a1
    block[:, idx1] = m[1, 0] * a0 + m[1, 1] * a1


def _apply_1q_rows(
    block: np.ndarray, n: int, q: int, mats: np.ndarray
) -> None:
    """Apply per-row 2x2 matrices ``mats`` [M, 2, 2] in place."""
    idx0, idx1 = _pair_indices(n, q)
    a0 = block[:, idx0]
    a1 = block[:, idx1]
    block[:, idx0] = mats[:, 0, 0, None] * a0 + mats[:, 0, 1, None] * a1
    block[:, idx1] = mats[:, 1, 0, None] * a0 + mats[:, 1, 1, None] * a1


def _apply_cx(block: np.ndarray, n: int, control: int, target: int) -> None:
    sel0, sel1 = _cx_indices(n, control, target)
    tmp = block[:, sel0].copy()
    block[:, sel0] = block[:, sel1]
    block[:, sel1] = tmp


def _rotation_rows(kind: str, angles: np.ndarray) -> np.ndarray:
    """Stack of 2x2 matrices [M, 2, 2] for one parametric kind."""
    m = angles.shape[0]
    out = np.empty((m, 2, 2), dtype=complex)
    half = angles / 2.0
    if kind == "RX":
        c, s = np.cos(half), np.sin(half)
        out[:, 0, 0] = c
        out[:, 0, 1] = -1j * s
        out[:, 1, 0] = -1j * s
        out[:, 1, 1] = c
    elif kind == "RY":
        c, s = np.cos(half), np.sin(half)
        out[:, 0, 0] = c
        out[:, 0, 1] = -s
        out[:, 1, 0] = s
        out[:, 1, 1] = c
    elif kind == "RZ":
        out[:, 0, 0] = np.exp(-1j * half)
        out[:, 0, 1] = 0
        out[:, 1, 0] = 0
        out[:, 1, 1] = np.exp(1j * half)
    elif kind == "PHASE":
        out[:, 0, 0] = 1
        out[:, 0, 1] = 0
        out[:, 1, 0] = 0
        out[:, 1, 1] = np.exp(1j * angles)
    else:
        raise ValueError(f"{kind} is not parametric")
    return out


def apply_gate(
    state: StateVector, gate: Gate, bound_angle: float | None = None
) -> StateVector:
    """Apply one gate, returning a new StateVector.

    Parametric gates take their angle from ``bound_angle`` or, failing
    that, from a fixed ``gate.angle``.
    """
    if max(gate.qubits) >= state.n_qubits:
        raise ValueError(
            f"gate {gate.kind} on {gate.qubits} exceeds {state.n_qubits} qubits"
        )
    block = state.amps[None, :].copy()
    if gate.kind == "CX":
        _apply_cx(block, state.n_qubits, gate.qubits[0], gate.qubits[1])
    else:
        angle = bound_angle if bound_angle is not None else gate.angle
        if gate.parametric and angle is None:
            raise ValueError(f"parametric gate {gate.kind} requires a bound angle")
        _apply_1q(block, state.n_qubits, gate.qubits[0], gate_matrix(gate.kind, angle))
    return StateVector(state.n_qubits, block[0])


def bind_angles(
    circuit: ParamCircuit, data: np.ndarray | list, weights: np.ndarray | list
) -> np.ndarray:
    """Resolve the bound angle of every op (nan for non-parametric ops).

    ``data`` holds one value per data slot (the encoded feature values);
    ``weights`` one value per weight slot.
    """
    data = np.asarray(data, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if data.shape != (circuit.data_slots,):
        raise ValueError(
            f"expected {circuit.data_slots} data values, got {data.shape}"
        )
    if weights.shape != (circuit.weight_slots,):
        raise ValueError(
            f"expected {circuit.weight_slots} weight values, got {weights.shape}"
        )
    angles = np.full(len(circuit.ops), np.nan)
    for j, g in enumerate(circuit.ops):
        if not g.parametric:
            continue
        if g.weight_slot is not None:
            angles[j] = weights[g.weight_slot]
        elif g.data_term is not None:
            angles[j] = g.data_term.angle(data)
        else:
            angles[j] = g.angle
    return angles


def run_bound(circuit: ParamCircuit, angle_rows: np.ndarray) -> np.ndarray:
    """Evolve |0...0> under the circuit for a batch of angle bindings.

    ``angle_rows`` has shape [M, n_ops]; entry [m, j] is the bound angle of
    op j in variant m (ignored for non-parametric ops).  Returns the final
    amplitudes as an [M, 2**n_qubits] array.  Variants evolve independently,
    so parameter-shift evaluations can share one pass.
    """
    angle_rows = np.atleast_2d(np.asarray(angle_rows, dtype=float))
    m = angle_rows.shape[0]
    if angle_rows.shape[1] != len(circuit.ops):
        raise ValueError("angle_rows second dimension must match op count")
    n = circuit.n_qubits
    block = np.zeros((m, 2**n), dtype=complex)
    block[:, 0] = 1.0
    for j, g in enumerate(circuit.ops):
        if g.kind == "CX":
            _apply_cx(block, n, g.qubits[0], g.qubits[1])
        elif g.parametric:
            col = angle_rows[:, j]
            if np.isnan(col).any():
                raise ValueError(f"op {j} ({g.kind}) has an unbound angle")
            if m > 1 and np.ptp(col) == 0.0:
                _apply_1q(block, n, g.qubits[0], gate_matrix(g.kind, col[0]))
            else:
                _apply_1q_rows(block, n, g.qubits[0], _rotation_rows(g.kind, col))
        else:
            _apply_1q(block, n, g.qubits[0], _FIXED_1Q[g.kind])
    return block


def run(
    circuit: ParamCircuit,
    data: np.ndarray | list = (),
    weights: np.ndarray | list = (),
) -> StateVector:
    """Apply the circuit's ops in order to |0...0> with the given bindings."""
    angles = bind_angles(circuit, data, weights)
    amps = run_bound(circuit, angles[None, :])[0]
    return StateVector(circuit.n_qubits, amps)


def _expand_1q(n: int, q: int, m: np.ndarray) -> np.ndarray:
    """Kronecker-expand a 2x2 matrix onto qubit q of an n-qubit register."""
    full = np.eye(2 ** (n - 1 - q), dtype=complex)
    full = np.kron(full, m)
    return np.kron(full, np.eye(2**q, dtype=complex))


def _expand_cx(n: int, control: int, target: int) -> np.ndarray:
    dim = 2**n
    full = np.zeros((dim, dim), dtype=complex)
    for k in range(dim):
        out = k ^ (1 << target) if (k >> control) & 1 else k
        full[out, k] = 1.0
    return full


def dense_unitary(
    circuit: ParamCircuit,
    data: np.ndarray | list = (),
    weights: np.ndarray | list = (),
) -> np.ndarray:
    """Full 2**n x 2**n matrix of the bound circuit (test oracle).

    Built as an explicit product of Kronecker-expanded gate matrices, a
    deliberately independent route from the statevector kernels in
    :func:`run`.
    """
    n = circuit.n_qubits
    if n > MAX_ORACLE_QUBITS:
        raise ValueError(
            f"dense_unitary supports at most {MAX_ORACLE_QUBITS} qubits, got {n}"
        )
    angles = bind_angles(circuit, data, weights)
    u = np.eye(2**n, dtype=complex)
    for j, g in enumerate(circuit.ops):
        if g.kind == "CX":
            step = _expand_cx(n, g.qubits[0], g.qubits[1])
        else:
            angle = angles[j] if g.parametric else None
            step = _expand_1q(n, g.qubits[0], gate_matrix(g.kind, angle))
        u = step @ u
    return u

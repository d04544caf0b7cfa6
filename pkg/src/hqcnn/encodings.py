"""Builders for the data-encoding feature maps and the trainable ansatz.

Angle conventions (the de-facto circuit-library conventions, so the named
configurations are concrete and reproducible):

* first-order terms rotate by ``2 * x_j``;
* higher-order (product) terms rotate by ``2 * prod(pi - x_j)`` over the
  qubits the term touches;
* basis changes for Pauli letters: ``X -> H`` (self-inverse) and
  ``Y -> RX(pi/2)`` with ``RX(-pi/2)`` on the way back;
* product terms are realised as a CX ladder onto the last qubit of the
  subset, a PHASE there, and the mirrored uncompute ladder.

Data slots are shared across repetitions: re-application re-encodes the
same features rather than consuming new ones.

Layer layout differs between families.  The plain Z map applies the H
layer once and then one diagonal phase layer per repetition; since
everything after the H layer is diagonal, every per-qubit Z expectation
of the encoded state is exactly zero for any repetition count.  The ZZ
and Pauli maps start every repetition with a fresh H layer, so repeated
blocks interfere instead of merely accumulating phase.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .simulator import DataTerm, Gate, ParamCircuit

ENTANGLEMENTS = ("linear", "full")
PAULI_LETTERS = frozenset("XYZ")


def entangler_pairs(kind: str, n_qubits: int) -> list[tuple[int, int]]:
    """Qubit pairs receiving entangling blocks under a scheme."""
    if kind == "linear":
        return [(j, j + 1) for j in range(n_qubits - 1)]
    if kind == "full":
        return list(itertools.combinations(range(n_qubits), 2))
    raise ValueError(f"unknown entanglement scheme {kind!r}")


def _placements(kind: str, n_qubits: int, length: int) -> list[tuple[int, ...]]:
    """Qubit subsets a Pauli string of the given length is placed on.

    Single letters go on every qubit.  Longer strings cover consecutive
    windows under linear entanglement and all strictly increasing index
    tuples under full entanglement.
    """
    if length == 1:
        return [(q,) for q in range(n_qubits)]
    if kind == "linear":
        return [tuple(range(j, j + length)) for j in range(n_qubits - length + 1)]
    if kind == "full":
        return list(itertools.combinations(range(n_qubits), length))
    raise ValueError(f"unknown entanglement scheme {kind!r}")


@dataclass(frozen=True)
class FeatureMapSpec:
    """One encoding configuration: family, depth, and structure knobs."""

    family: str
    reps: int = 1
    entanglement: str = "linear"
    strings: tuple[str, ...] = ()

    def __post_init__(self):
        if self.family not in ("z", "zz", "pauli"):
            raise ValueError(f"unknown feature-map family {self.family!r}")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.entanglement not in ENTANGLEMENTS:
            raise ValueError(f"unknown entanglement scheme {self.entanglement!r}")
        if self.family == "pauli":
            if not self.strings:
                raise ValueError("pauli family requires at least one string")
            for s in self.strings:
                if not s or not set(s) <= PAULI_LETTERS:
                    raise ValueError(
                        f"pauli string {s!r} must be nonempty over X/Y/Z"
                    )
        elif self.strings:
            raise ValueError("strings are only valid for the pauli family")

    def to_string(self) -> str:
        parts = [f"family={self.family}"]
        if self.family == "pauli":
            parts.append("strings=" + ",".join(self.strings))
        parts.append(f"reps={self.reps}")
        if self.family in ("zz", "pauli"):
            parts.append(f"entanglement={self.entanglement}")
        return " ".join(parts)

    @classmethod
    def from_string(cls, text: str) -> "FeatureMapSpec":
        fields: dict[str, str] = {}
        for token in text.split():
            if "=" not in token:
                raise ValueError(f"bad feature-map token {token!r}")
            key, _, value = token.partition("=")
            if key in fields:
                raise ValueError(f"duplicate feature-map key {key!r}")
            fields[key] = value
        unknown = set(fields) - {"family", "reps", "entanglement", "strings"}
        if unknown:
            raise ValueError(f"unknown feature-map keys {sorted(unknown)}")
        if "family" not in fields:
            raise ValueError("feature-map spec needs family=")
        kwargs: dict = {"family": fields["family"]}
        if "reps" in fields:
            kwargs["reps"] = int(fields["reps"])
        if "entanglement" in fields:
            kwargs["entanglement"] = fields["entanglement"]
        if "strings" in fields:
            kwargs["strings"] = tuple(
                s.strip().upper() for s in fields["strings"].split(",") if s.strip()
            )
        return cls(**kwargs)


# The nine encoding configurations exercised by the experiment sweeps.
PRESETS: dict[str, FeatureMapSpec] = {
    "zz-2-linear": FeatureMapSpec("zz", reps=2, entanglement="linear"),
    "z-2": FeatureMapSpec("z", reps=2),
    "pauli-z-yy-zxz-1-linear": FeatureMapSpec(
        "pauli", reps=1, entanglement="linear", strings=("Z", "YY", "ZXZ")
    ),
    "pauli-xyz-1": FeatureMapSpec("pauli", reps=1, strings=("X", "Y", "Z")),
    "zz-3-full": FeatureMapSpec("zz", reps=3, entanglement="full"),
    "zz-1-linear": FeatureMapSpec("zz", reps=1, entanglement="linear"),
    "pauli-z-yy-zxz-2-linear": FeatureMapSpec(
        "pauli", reps=2, entanglement="linear", strings=("Z", "YY", "ZXZ")
    ),
    "z-1": FeatureMapSpec("z", reps=1),
    "z-3": FeatureMapSpec("z", reps=3),
}


def build_z_feature_map(n_qubits: int, reps: int) -> ParamCircuit:
    """First-order Z encoding: one H layer, then a phase layer per rep."""
    if n_qubits < 1:
        raise ValueError("n_qubits must be >= 1")
    if reps < 1:
        raise ValueError("reps must be >= 1")
    ops: list[Gate] = [Gate("H", (q,)) for q in range(n_qubits)]
    for _ in range(reps):
        ops.extend(
            Gate("PHASE", (q,), data_term=DataTerm((q,))) for q in range(n_qubits)
        )
    return ParamCircuit(n_qubits, tuple(ops), data_slots=n_qubits)


def build_zz_feature_map(
    n_qubits: int, reps: int, entanglement: str = "linear"
) -> ParamCircuit:
    """Second-order Z encoding with CX-conjugated pair phases."""
    if n_qubits < 2:
        raise ValueError("zz feature map needs at least 2 qubits")
    if reps < 1:
        raise ValueError("reps must be >= 1")
    pairs = entangler_pairs(entanglement, n_qubits)
    ops: list[Gate] = []
    for _ in range(reps):
        ops.extend(Gate("H", (q,)) for q in range(n_qubits))
        ops.extend(
            Gate("PHASE", (q,), data_term=DataTerm((q,))) for q in range(n_qubits)
        )
        for j, k in pairs:
            ops.append(Gate("CX", (j, k)))
            ops.append(Gate("PHASE", (k,), data_term=DataTerm((j, k))))
            ops.append(Gate("CX", (j, k)))
    return ParamCircuit(n_qubits, tuple(ops), data_slots=n_qubits)


def _string_block(letters: str, subset: tuple[int, ...]) -> list[Gate]:
    """Basis change + CX ladder + data phase + uncompute for one placement."""
    ops: list[Gate] = []
    forward: list[Gate] = []
    backward: list[Gate] = []
    for letter, q in zip(letters, subset):
        if letter == "X":
            forward.append(Gate("H", (q,)))
            backward.append(Gate("H", (q,)))
        elif letter == "Y":
            forward.append(Gate("RX", (q,), angle=+1.5707963267948966))
            backward.append(Gate("RX", (q,), angle=-1.5707963267948966))
    ops.extend(forward)
    ops.extend(Gate("CX", (subset[i], subset[i + 1])) for i in range(len(subset) - 1))
    ops.append(Gate("PHASE", (subset[-1],), data_term=DataTerm(subset)))
    ops.extend(
        Gate("CX", (subset[i], subset[i + 1]))
        for i in reversed(range(len(subset) - 1))
    )
    ops.extend(reversed(backward))
    return ops


def build_pauli_feature_map(
    n_qubits: int,
    strings: tuple[str, ...] | list[str],
    reps: int,
    entanglement: str = "linear",
) -> ParamCircuit:
    """General Pauli-rotation encoding over the given strings.

    Letters map onto the placement qubits in order (letter p acts on the
    p-th qubit of the subset).  ``strings=("Z",)`` reduces gate-for-gate to
    :func:`build_z_feature_map`.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    strings = tuple(s.upper() for s in strings)
    if not strings:
        raise ValueError("need at least one pauli string")
    for s in strings:
        if not s or not set(s) <= PAULI_LETTERS:
            raise ValueError(f"pauli string {s!r} must be nonempty over X/Y/Z")
        if len(s) > n_qubits:
            raise ValueError(f"pauli string {s!r} longer than {n_qubits} qubits")
    if strings == ("Z",):
        return build_z_feature_map(n_qubits, reps)
    ops: list[Gate] = []
    for _ in range(reps):
        ops.extend(Gate("H", (q,)) for q in range(n_qubits))
        for s in strings:
            for subset in _placements(entanglement, n_qubits, len(s)):
                ops.extend(_string_block(s, subset))
    return ParamCircuit(n_qubits, tuple(ops), data_slots=n_qubits)


def build_two_local(n_qubits: int, reps: int) -> ParamCircuit:
    """Trainable ansatz: RY rotation layers alternating with CX ladders.

    Every RY has its own weight slot, ``n_qubits * (reps + 1)`` in total.
    """
    if n_qubits < 1:
        raise ValueError("n_qubits must be >= 1")
    if reps < 1:
        raise ValueError("reps must be >= 1")
    ops: list[Gate] = []
    slot = 0
    for q in range(n_qubits):
        ops.append(Gate("RY", (q,), weight_slot=slot))
        slot += 1
    for _ in range(reps):
        ops.extend(Gate("CX", (j, j + 1)) for j in range(n_qubits - 1))
        for q in range(n_qubits):
            ops.append(Gate("RY", (q,), weight_slot=slot))
            slot += 1
    return ParamCircuit(n_qubits, tuple(ops), weight_slots=slot)


def build_feature_map(spec: FeatureMapSpec, n_qubits: int) -> ParamCircuit:
    if spec.family == "z":
        return build_z_feature_map(n_qubits, spec.reps)
    if spec.family == "zz":
        return build_zz_feature_map(n_qubits, spec.reps, spec.entanglement)
    return build_pauli_feature_map(n_qubits, spec.strings, spec.reps, spec.entanglement)


def compose(feature_map: ParamCircuit, ansatz: ParamCircuit) -> ParamCircuit:
    """Concatenate two circuits, re-indexing the second one's weight slots."""
    if feature_map.n_qubits != ansatz.n_qubits:
        raise ValueError(
            f"qubit-count mismatch: {feature_map.n_qubits} vs {ansatz.n_qubits}"
        )
    shift = feature_map.weight_slots
    shifted = tuple(
        Gate(g.kind, g.qubits, weight_slot=g.weight_slot + shift)
        if g.weight_slot is not None
        else g
        for g in ansatz.ops
    )
    return ParamCircuit(
        feature_map.n_qubits,
        feature_map.ops + shifted,
        data_slots=max(feature_map.data_slots, ansatz.data_slots),
        weight_slots=feature_map.weight_slots + ansatz.weight_slots,
    )

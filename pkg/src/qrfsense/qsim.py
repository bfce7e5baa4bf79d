"""Dense statevector simulator: gate application, Pauli-Z readout, gradients.

States are flat complex128 arrays of length 2^N with qubit 0 stored in the
least significant bit of the basis index. Rotations follow the convention
R_P(theta) = exp(-i theta P / 2); the two-qubit entangler RZZ(theta) is
exp(-i theta (Z x Z) / 2), diagonal in the computational basis.

Gradients come in two flavors:

* ``parameter_shift_grad`` is the hardware-style reference: each parameter
  is shifted by +-pi/2 and the scalar function is re-evaluated in full.
* ``adjoint_grad`` is the simulator fast path for expectation values of
  sums of single-qubit observables; it sweeps once backwards through the
  circuit and must agree with the parameter-shift result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "MAX_QUBITS",
    "GateOp",
    "zero_state",
    "num_qubits",
    "rot_x",
    "rot_y",
    "rot_z",
    "apply_gate",
    "apply_ops",
    "run_circuit",
    "expectation_z",
    "expectation_all_z",
    "sampled_all_z",
    "parameter_shift_grad",
    "adjoint_grad",
]

MAX_QUBITS = 20

ROTATION_KINDS = ("rx", "ry", "rz", "rzz")
GATE_KINDS = ROTATION_KINDS + ("fixed",)


@dataclass(frozen=True)
class GateOp:
    """One circuit operation.

    Rotation gates carry either a literal ``angle`` or a ``param_idx`` into
    the parameter vector supplied at execution time. ``fixed`` gates carry
    an arbitrary 2x2 ``matrix`` and are never differentiated.
    """

    kind: str
    targets: tuple[int, ...]
    angle: float | None = None
    param_idx: int | None = None
    matrix: np.ndarray | None = None


def zero_state(n: int) -> np.ndarray:
    if not (1 <= n <= MAX_QUBITS):
        raise ValueError(f"qubit count must be in [1, {MAX_QUBITS}], got {n}")
    state = np.zeros(1 << n, dtype=np.complex128)
    state[0] = 1.0
    return state


def num_qubits(state: np.ndarray) -> int:
    n = int(round(math.log2(state.size)))
    if (1 << n) != state.size:
        raise ValueError("state length is not a power of two")
    return n


@lru_cache(maxsize=None)
def _bits(n: int) -> tuple[np.ndarray, ...]:
    idx = np.arange(1 << n)
    out = []
    for q in range(n):
        b = ((idx >> q) & 1).astype(bool)
        b.setflags(write=False)
        out.append(b)
    return tuple(out)


@lru_cache(maxsize=None)
def _z_signs(n: int) -> np.ndarray:
    signs = np.empty((n, 1 << n))
    for q, b in enumerate(_bits(n)):
        signs[q] = 1.0 - 2.0 * b
    signs.setflags(write=False)
    return signs


def rot_x(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)


def rot_y(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def rot_z(theta: float) -> np.ndarray:
    p = np.exp(-0.5j * theta)
    return np.array([[p, 0.0], [0.0, np.conj(p)]], dtype=np.complex128)


def _apply_1q(state: np.ndarray, u: np.ndarray, q: int) -> np.ndarray:
    """Apply a 2x2 matrix to qubit q (LSB indexing)."""
    view = state.reshape(-1, 2, 1 << q)
    out = np.empty_like(view)
    out[:, 0, :] = u[0, 0] * view[:, 0, :] + u[0, 1] * view[:, 1, :]
    out[:, 1, :] = u[1, 0] * view[:, 0, :] + u[1, 1] * view[:, 1, :]
    return out.reshape(-1)


def _apply_rz(state: np.ndarray, theta: float, q: int) -> np.ndarray:
    n = num_qubits(state)
    p = np.exp(0.5j * theta)
    return state * np.where(_bits(n)[q], p, np.conj(p))


def _apply_rzz(state: np.ndarray, theta: float, q0: int, q1: int) -> np.ndarray:
    n = num_qubits(state)
    differ = _bits(n)[q0] ^ _bits(n)[q1]
    p = np.exp(0.5j * theta)
    return state * np.where(differ, p, np.conj(p))


def _gate_angle(gate: GateOp, params) -> float:
    if gate.param_idx is not None:
        if params is None:
            raise ValueError("circuit has bound parameters but no vector was given")
        return float(params[gate.param_idx])
    if gate.angle is None:
        raise ValueError(f"{gate.kind} gate needs an angle or a param_idx")
    return float(gate.angle)


def _check_targets(gate: GateOp, n: int) -> None:
    want = 2 if gate.kind == "rzz" else 1
    if len(gate.targets) != want:
        raise ValueError(f"{gate.kind} takes {want} target(s), got {gate.targets}")
    if len(set(gate.targets)) != len(gate.targets):
        raise ValueError(f"duplicate targets in {gate.targets}")
    for q in gate.targets:
        if not (0 <= q < n):
            raise ValueError(f"target {q} out of range for {n} qubits")


def apply_gate(state: np.ndarray, gate: GateOp, params=None) -> np.ndarray:
    """Returns the updated state; the input array is left untouched."""
    n = num_qubits(state)
    _check_targets(gate, n)
    if gate.kind == "rx":
        return _apply_1q(state, rot_x(_gate_angle(gate, params)), gate.targets[0])
    if gate.kind == "ry":
        return _apply_1q(state, rot_y(_gate_angle(gate, params)), gate.targets[0])
    if gate.kind == "rz":
        return _apply_rz(state, _gate_angle(gate, params), gate.targets[0])
    if gate.kind == "rzz":
        return _apply_rzz(state, _gate_angle(gate, params), *gate.targets)
    if gate.kind == "fixed":
        if gate.matrix is None or gate.matrix.shape != (2, 2):
            raise ValueError("fixed gate needs a 2x2 matrix")
        return _apply_1q(state, gate.matrix, gate.targets[0])
    raise ValueError(f"unknown gate kind {gate.kind!r}")


def apply_ops(state: np.ndarray, ops, params=None) -> np.ndarray:
    for gate in ops:
        state = apply_gate(state, gate, params)
    return state


def run_circuit(n: int, ops, params=None) -> np.ndarray:
    return apply_ops(zero_state(n), ops, params)


def expectation_z(state: np.ndarray, q: int) -> float:
    n = num_qubits(state)
    if not (0 <= q < n):
        raise ValueError(f"qubit {q} out of range for {n} qubits")
    probs = state.real**2 + state.imag**2
    return float(_z_signs(n)[q] @ probs)


def expectation_all_z(state: np.ndarray) -> np.ndarray:
    """All single-qubit <Z_q> values from one probability pass."""
    n = num_qubits(state)
    probs = state.real**2 + state.imag**2
    return _z_signs(n) @ probs


def sampled_all_z(state: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Finite-shot estimate of every <Z_q>: joint computational-basis
    measurement repeated `shots` times."""
    if shots <= 0:
        raise ValueError("shots must be positive")
    n = num_qubits(state)
    probs = state.real**2 + state.imag**2
    probs = probs / probs.sum()
    draws = rng.choice(probs.size, size=shots, p=probs)
    bits = (draws[:, None] >> np.arange(n)[None, :]) & 1
    return 1.0 - 2.0 * bits.mean(axis=0)


# ---------------------------------------------------------------------------
# Gradients
# ---------------------------------------------------------------------------

def _validate_parameterized(ops) -> dict[int, int]:
    """Map param index -> occurrence count, rejecting unsupported bindings."""
    counts: dict[int, int] = {}
    for gate in ops:
        if gate.param_idx is None:
            continue
        if gate.kind not in ROTATION_KINDS:
            raise ValueError(
                f"parameterized {gate.kind!r} gate is unsupported; only Pauli "
                "rotations (rx, ry, rz, rzz) can carry parameters")
        counts[gate.param_idx] = counts.get(gate.param_idx, 0) + 1
    shared = sorted(j for j, c in counts.items() if c > 1)
    if shared:
        raise ValueError(f"parameters {shared} are shared across gates; the "
                         "two-point shift rule requires one gate per parameter")
    return counts


def parameter_shift_grad(ops, scalar_fn, params) -> np.ndarray:
    """Exact gradient of scalar_fn(params) via +-pi/2 shifts.

    `ops` declares which parameters are bound to Pauli rotations;
    `scalar_fn` must re-run the full pipeline for the shifted vectors.
    Parameters that appear in no gate get gradient zero.
    """
    params = np.asarray(params, dtype=float)
    counts = _validate_parameterized(ops)
    grad = np.zeros_like(params)
    for j in sorted(counts):
        shifted = params.copy()
        shifted[j] += math.pi / 2.0
        plus = scalar_fn(shifted)
        shifted[j] -= math.pi
        minus = scalar_fn(shifted)
        grad[j] = 0.5 * (plus - minus)
    return grad


_PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)
_PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=np.complex128)


def _apply_generator(state: np.ndarray, gate: GateOp) -> np.ndarray:
    """Apply the Pauli word P of R_P = exp(-i theta P / 2)."""
    n = num_qubits(state)
    if gate.kind == "rx":
        return _apply_1q(state, _PAULI_X, gate.targets[0])
    if gate.kind == "ry":
        return _apply_1q(state, _PAULI_Y, gate.targets[0])
    if gate.kind == "rz":
        return state * _z_signs(n)[gate.targets[0]]
    if gate.kind == "rzz":
        q0, q1 = gate.targets
        return state * (_z_signs(n)[q0] * _z_signs(n)[q1])
    raise ValueError(f"gate kind {gate.kind!r} has no rotation generator")


def _apply_inverse(state: np.ndarray, gate: GateOp, params) -> np.ndarray:
    if gate.kind == "fixed":
        return _apply_1q(state, gate.matrix.conj().T, gate.targets[0])
    theta = _gate_angle(gate, params)
    inv = GateOp(gate.kind, gate.targets, angle=-theta)
    return apply_gate(state, inv)


def adjoint_grad(n: int, ops, params, obs_by_qubit) -> np.ndarray:
    """Gradient of sum_q <O_q on qubit q> after the circuit, one backward sweep.

    `obs_by_qubit` lists a 2x2 Hermitian per qubit (None to skip). Matches
    parameter_shift_grad on the same expectation, without the 2P circuit
    re-executions.
    """
    params = np.asarray(params, dtype=float)
    _validate_parameterized(ops)
    ket = run_circuit(n, ops, params)
    bra = np.zeros_like(ket)
    for q, obs in enumerate(obs_by_qubit):
        if obs is None:
            continue
        bra += _apply_1q(ket, np.asarray(obs, dtype=np.complex128), q)
    grad = np.zeros_like(params)
    for gate in reversed(ops):
        if gate.param_idx is not None:
            grad[gate.param_idx] = np.vdot(bra, _apply_generator(ket, gate)).imag
        ket = _apply_inverse(ket, gate, params)
        bra = _apply_inverse(bra, gate, params)
    return grad

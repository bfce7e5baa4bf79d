"""Hybrid model: variational probe, field readout, MLP head, joint gradients.

The probe is a 10-qubit, 5-layer circuit (RZZ chain + RZ + RY per layer,
145 unshared parameters). A location's field interaction perturbs the
probe; the ten Pauli-Z expectations feed a 10-128-64-2 ReLU network with
inverted dropout. Head gradients come from plain backpropagation; probe
gradients either from the parameter-shift rule (reference) or from a
single adjoint sweep per batch (fast path, identical values).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import qsim
from .field import FieldInteraction, apply_field, interaction_unitary
from .qsim import GateOp

__all__ = [
    "NUM_QUBITS",
    "NUM_LAYERS",
    "NUM_ANSATZ_PARAMS",
    "HeadParams",
    "Prediction",
    "ansatz_ops",
    "init_ansatz_params",
    "prepare_probe",
    "sense",
    "init_head_params",
    "num_head_params",
    "head_forward",
    "softmax",
    "cross_entropy",
    "cross_entropy_grad",
    "mse",
    "mse_from_logits",
    "hybrid_grad",
    "predict",
]

NUM_QUBITS = 10
NUM_LAYERS = 5


def ansatz_ops(n_qubits: int = NUM_QUBITS, n_layers: int = NUM_LAYERS) -> tuple[GateOp, ...]:
    """Layer-major probe circuit: RZZ on the nearest-neighbor chain, then
    RZ and RY on every qubit; parameters indexed in gate order."""
    ops = []
    j = 0
    for _ in range(n_layers):
        for q in range(n_qubits - 1):
            ops.append(GateOp("rzz", (q, q + 1), param_idx=j))
            j += 1
        for q in range(n_qubits):
            ops.append(GateOp("rz", (q,), param_idx=j))
            j += 1
        for q in range(n_qubits):
            ops.append(GateOp("ry", (q,), param_idx=j))
            j += 1
    return tuple(ops)


_ANSATZ = ansatz_ops()
NUM_ANSATZ_PARAMS = len(_ANSATZ)  # 5 * (9 + 10 + 10) = 145


def init_ansatz_params(rng: np.random.Generator) -> np.ndarray:
    """Small-angle start so the probe does not begin saturated."""
    return rng.uniform(-math.pi / 10.0, math.pi / 10.0, size=NUM_ANSATZ_PARAMS)


def prepare_probe(lam: np.ndarray) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (NUM_ANSATZ_PARAMS,):
        raise ValueError(f"expected {NUM_ANSATZ_PARAMS} ansatz parameters, got {lam.shape}")
    return qsim.run_circuit(NUM_QUBITS, _ANSATZ, lam)


def sense(lam: np.ndarray, fi: FieldInteraction,
          shots: int | None = None,
          rng: np.random.Generator | None = None) -> np.ndarray:
    """Feature vector: <Z_q> of the perturbed probe, exact by default."""
    state = apply_field(prepare_probe(lam), fi)
    if shots is None:
        return qsim.expectation_all_z(state)
    if rng is None:
        raise ValueError("finite-shot readout needs a seeded generator")
    return qsim.sampled_all_z(state, shots, rng)


# ---------------------------------------------------------------------------
# Classifier head
# ---------------------------------------------------------------------------

@dataclass
class HeadParams:
    """Dense 10-128-64-2 network stored as one flat parameter vector."""

    theta: np.ndarray
    in_dim: int = NUM_QUBITS
    hidden1: int = 128
    hidden2: int = 64
    out_dim: int = 2
    dropout: float = 0.2

    def _offsets(self):
        i, h1, h2, o = self.in_dim, self.hidden1, self.hidden2, self.out_dim
        sizes = [h1 * i, h1, h2 * h1, h2, o * h2, o]
        offs = np.cumsum([0] + sizes)
        return offs, (h1, i), (h2, h1), (o, h2)

    def views(self):
        offs, s1, s2, s3 = self._offsets()
        t = self.theta
        return (
            t[offs[0]:offs[1]].reshape(s1), t[offs[1]:offs[2]],
            t[offs[2]:offs[3]].reshape(s2), t[offs[3]:offs[4]],
            t[offs[4]:offs[5]].reshape(s3), t[offs[5]:offs[6]],
        )


def num_head_params(in_dim: int = NUM_QUBITS, hidden1: int = 128,
                    hidden2: int = 64, out_dim: int = 2) -> int:
    return (hidden1 * in_dim + hidden1
            + hidden2 * hidden1 + hidden2
            + out_dim * hidden2 + out_dim)


def init_head_params(rng: np.random.Generator, dropout: float = 0.2) -> HeadParams:
    """Glorot-uniform weights, zero biases."""
    head = HeadParams(theta=np.zeros(num_head_params()), dropout=dropout)
    w1, b1, w2, b2, w3, b3 = head.views()
    for w in (w1, w2, w3):
        fan_out, fan_in = w.shape
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        w[:] = rng.uniform(-limit, limit, size=w.shape)
    return head


def _draw_masks(head: HeadParams, rng: np.random.Generator):
    keep = 1.0 - head.dropout
    m1 = (rng.random(head.hidden1) < keep) / keep
    m2 = (rng.random(head.hidden2) < keep) / keep
    return m1, m2


def _head_forward_cached(head: HeadParams, z: np.ndarray, masks=None):
    w1, b1, w2, b2, w3, b3 = head.views()
    pre1 = w1 @ z + b1
    h1 = np.maximum(pre1, 0.0)
    d1 = h1 if masks is None else h1 * masks[0]
    pre2 = w2 @ d1 + b2
    h2 = np.maximum(pre2, 0.0)
    d2 = h2 if masks is None else h2 * masks[1]
    logits = w3 @ d2 + b3
    return logits, (z, pre1, d1, pre2, d2)


def head_forward(head: HeadParams, z: np.ndarray, training: bool = False,
                 rng: np.random.Generator | None = None) -> np.ndarray:
    """Logits for one feature vector. Inverted dropout is active only when
    `training` is set (and then needs a generator); evaluation is exact."""
    z = np.asarray(z, dtype=float)
    if z.shape != (head.in_dim,):
        raise ValueError(f"expected {head.in_dim} features, got {z.shape}")
    masks = None
    if training:
        if rng is None:
            raise ValueError("training-mode dropout needs a seeded generator")
        masks = _draw_masks(head, rng)
    logits, _ = _head_forward_cached(head, z, masks)
    return logits


def _head_backward(head: HeadParams, cache, masks, dlogits):
    """Gradient of the loss w.r.t. the flat head vector and the input."""
    z, pre1, d1, pre2, d2 = cache
    w1, _, w2, _, w3, _ = head.views()
    grad = np.zeros_like(head.theta)
    g1, gb1, g2, gb2, g3, gb3 = HeadParams(theta=grad, dropout=head.dropout).views()

    g3 += np.outer(dlogits, d2)
    gb3 += dlogits
    dd2 = w3.T @ dlogits
    dh2 = dd2 if masks is None else dd2 * masks[1]
    dpre2 = dh2 * (pre2 > 0.0)
    g2 += np.outer(dpre2, d1)
    gb2 += dpre2
    dd1 = w2.T @ dpre2
    dh1 = dd1 if masks is None else dd1 * masks[0]
    dpre1 = dh1 * (pre1 > 0.0)
    g1 += np.outer(dpre1, z)
    gb1 += dpre1
    dz = w1.T @ dpre1
    return grad, dz


# ---------------------------------------------------------------------------
# Losses
# ---------------------------------------------------------------------------

def softmax(w: np.ndarray) -> np.ndarray:
    e = np.exp(w - np.max(w))
    return e / e.sum()


def cross_entropy(w: np.ndarray, r: int) -> float:
    """-log softmax(w)[r], max-subtracted for stability."""
    m = np.max(w)
    return float(np.log(np.exp(w - m).sum()) - (w[r] - m))


def cross_entropy_grad(w: np.ndarray, r: int) -> np.ndarray:
    g = softmax(w)
    g[r] -= 1.0
    return g


def mse(prediction: float, r: float) -> float:
    return float((prediction - r) ** 2)


def mse_from_logits(w: np.ndarray, r: int) -> float:
    """Squared error between the class-1 probability and the label."""
    return mse(softmax(w)[1], float(r))


@dataclass(frozen=True)
class Prediction:
    features: np.ndarray
    logits: np.ndarray
    predicted: int


def predict(lam: np.ndarray, head: HeadParams, fi: FieldInteraction) -> Prediction:
    z = sense(lam, fi)
    w = head_forward(head, z, training=False)
    return Prediction(features=z, logits=w, predicted=int(np.argmax(w)))


# ---------------------------------------------------------------------------
# Joint gradient
# ---------------------------------------------------------------------------

_Z2 = np.diag([1.0, -1.0]).astype(np.complex128)


def _batch_forward(probe: np.ndarray, head: HeadParams, batch, masks_per_sample):
    """Per-sample forward pass; returns losses, head grads, dL/dz and the
    2x2 interaction matrix for each sample."""
    losses = []
    head_grads = np.zeros_like(head.theta)
    dz_list = []
    u_list = []
    for (fi, r), masks in zip(batch, masks_per_sample):
        u = interaction_unitary(fi)
        state = probe
        for q in range(NUM_QUBITS):
            state = qsim._apply_1q(state, u, q)
        z = qsim.expectation_all_z(state)
        logits, cache = _head_forward_cached(head, z, masks)
        losses.append(cross_entropy(logits, r))
        dlogits = cross_entropy_grad(logits, r)
        hgrad, dz = _head_backward(head, cache, masks, dlogits)
        head_grads += hgrad
        dz_list.append(dz)
        u_list.append(u)
    b = len(batch)
    return np.array(losses), head_grads / b, dz_list, u_list


def hybrid_grad(lam: np.ndarray, head: HeadParams, batch,
                training: bool = False,
                rng: np.random.Generator | None = None,
                method: str = "adjoint"):
    """Mean loss and joint gradient over a batch of (interaction, label).

    The interaction parameters are data, not trainable: the probe gradient
    flows only through the ansatz. `method` selects the probe-gradient
    route: "adjoint" folds the whole batch into one backward sweep using
    the conjugated readout observable; "parameter-shift" re-executes the
    batch at +-pi/2 per parameter and is the tested reference.
    """
    if method not in ("adjoint", "parameter-shift"):
        raise ValueError(f"unknown gradient method {method!r}")
    lam = np.asarray(lam, dtype=float)
    batch = list(batch)
    if not batch:
        raise ValueError("empty batch")
    if training and rng is None:
        raise ValueError("training-mode dropout needs a seeded generator")
    masks_per_sample = [
        _draw_masks(head, rng) if training else None for _ in batch
    ]

    probe = prepare_probe(lam)
    losses, head_grad, dz_list, u_list = _batch_forward(
        probe, head, batch, masks_per_sample)

    if method == "adjoint":
        # <Z_q> after u on every qubit equals <(u^dag Z u)_q> before it, so
        # the whole batch collapses to one observable per qubit.
        obs = [np.zeros((2, 2), dtype=np.complex128) for _ in range(NUM_QUBITS)]
        b = len(batch)
        for dz, u in zip(dz_list, u_list):
            conj = u.conj().T @ _Z2 @ u
            conj = 0.5 * (conj + conj.conj().T)
            for q in range(NUM_QUBITS):
                obs[q] += (dz[q] / b) * conj
        lam_grad = qsim.adjoint_grad(NUM_QUBITS, _ANSATZ, lam, obs)
    else:
        def batch_loss(lam_vec):
            p = prepare_probe(lam_vec)
            total = 0.0
            for (fi, r), masks in zip(batch, masks_per_sample):
                s = p
                u = interaction_unitary(fi)
                for q in range(NUM_QUBITS):
                    s = qsim._apply_1q(s, u, q)
                logits, _ = _head_forward_cached(
                    head, qsim.expectation_all_z(s), masks)
                total += cross_entropy(logits, r)
            return total / len(batch)

        lam_grad = qsim.parameter_shift_grad(_ANSATZ, batch_loss, lam)

    return float(losses.mean()), lam_grad, head_grad

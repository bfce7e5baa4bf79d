"""Classical benchmark: an LSTM over the delay-ordered multipath phases.

Each location's channel becomes a variable-length sequence of path phases
arg(a * exp(-i omega tau)), earliest arrival first. A single LSTM layer
(hidden size 64, separate input and recurrent biases per gate block) feeds
a dense 64->2 readout: 17,282 trainable scalars. Gradients are manual
backpropagation through time.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .raytracer import PathSet

__all__ = [
    "LstmParams",
    "phase_sequence",
    "init_lstm_params",
    "num_lstm_params",
    "count_parameters",
    "lstm_forward",
    "lstm_loss_grad",
]


def phase_sequence(paths: PathSet, omega: float) -> np.ndarray:
    """Per-path phases in (-pi, pi], ascending delay; ties broken by
    transmitter index then reflection count."""
    ordered = sorted(paths, key=lambda p: (p.delay, p.tx, p.order))
    out = np.empty(len(ordered))
    for i, p in enumerate(ordered):
        phi = cmath.phase(p.gain * cmath.exp(-1j * omega * p.delay))
        if phi <= -math.pi:
            phi += 2.0 * math.pi
        out[i] = phi
    return out


@dataclass
class LstmParams:
    """Gate blocks ordered (input, forget, cell, output) in one flat vector."""

    theta: np.ndarray
    input_size: int = 1
    hidden_size: int = 64
    out_dim: int = 2

    def views(self):
        i, h, o = self.input_size, self.hidden_size, self.out_dim
        sizes = [4 * h * i, 4 * h * h, 4 * h, 4 * h, o * h, o]
        offs = np.cumsum([0] + sizes)
        t = self.theta
        return (
            t[offs[0]:offs[1]].reshape(4 * h, i),   # w_ih
            t[offs[1]:offs[2]].reshape(4 * h, h),   # w_hh
            t[offs[2]:offs[3]],                     # b_ih
            t[offs[3]:offs[4]],                     # b_hh
            t[offs[4]:offs[5]].reshape(o, h),       # w_out
            t[offs[5]:offs[6]],                     # b_out
        )


def num_lstm_params(input_size: int = 1, hidden_size: int = 64, out_dim: int = 2) -> int:
    h = hidden_size
    return 4 * h * input_size + 4 * h * h + 4 * h + 4 * h + out_dim * h + out_dim


def count_parameters(params: LstmParams) -> int:
    return int(params.theta.size)


def init_lstm_params(rng: np.random.Generator, input_size: int = 1,
                     hidden_size: int = 64, out_dim: int = 2) -> LstmParams:
    n = num_lstm_params(input_size, hidden_size, out_dim)
    limit = 1.0 / math.sqrt(hidden_size)
    return LstmParams(theta=rng.uniform(-limit, limit, size=n),
                      input_size=input_size, hidden_size=hidden_size,
                      out_dim=out_dim)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


def _forward_cached(params: LstmParams, seq: np.ndarray):
    w_ih, w_hh, b_ih, b_hh, w_out, b_out = params.views()
    h_dim = params.hidden_size
    h = np.zeros(h_dim)
    c = np.zeros(h_dim)
    steps = []
    for x in seq:
        a = w_ih @ np.atleast_1d(x) + b_ih + w_hh @ h + b_hh
        i = _sigmoid(a[:h_dim])
        f = _sigmoid(a[h_dim:2 * h_dim])
        g = np.tanh(a[2 * h_dim:3 * h_dim])
        o = _sigmoid(a[3 * h_dim:])
        c_new = f * c + i * g
        tanh_c = np.tanh(c_new)
        steps.append((float(x), h, c, i, f, g, o, tanh_c))
        h = o * tanh_c
        c = c_new
    logits = w_out @ h + b_out
    return logits, h, steps


def lstm_forward(params: LstmParams, seq: np.ndarray) -> np.ndarray:
    """Logits after consuming the phase sequence one value per step.

    Zero initial state; an empty sequence reads out the output bias plus
    the dense layer applied to the zero history.
    """
    logits, _, _ = _forward_cached(params, np.asarray(seq, dtype=float))
    return logits


def lstm_grad(params: LstmParams, seq: np.ndarray, dlogits: np.ndarray) -> np.ndarray:
    """Backpropagation through time for d(loss)/d(theta) given dlogits."""
    seq = np.asarray(seq, dtype=float)
    _, h_last, steps = _forward_cached(params, seq)
    w_ih, w_hh, b_ih, b_hh, w_out, b_out = params.views()
    h_dim = params.hidden_size

    grad = np.zeros_like(params.theta)
    gp = LstmParams(theta=grad, input_size=params.input_size,
                    hidden_size=params.hidden_size, out_dim=params.out_dim)
    g_ih, g_hh, gb_ih, gb_hh, g_out, gb_out = gp.views()

    g_out += np.outer(dlogits, h_last)
    gb_out += dlogits
    dh = w_out.T @ dlogits
    dc = np.zeros(h_dim)
    for x, h_prev, c_prev, i, f, g, o, tanh_c in reversed(steps):
        do = dh * tanh_c
        dc = dc + dh * o * (1.0 - tanh_c**2)
        di = dc * g
        dg = dc * i
        df = dc * c_prev
        dc_prev = dc * f
        da = np.concatenate([
            di * i * (1.0 - i),
            df * f * (1.0 - f),
            dg * (1.0 - g**2),
            do * o * (1.0 - o),
        ])
        g_ih += np.outer(da, np.atleast_1d(x))
        gb_ih += da
        gb_hh += da
        g_hh += np.outer(da, h_prev)
        dh = w_hh.T @ da
        dc = dc_prev
    return grad


def lstm_loss_grad(params: LstmParams, seq: np.ndarray, r: int):
    """Cross-entropy loss and its full parameter gradient for one sample."""
    from .model import cross_entropy, cross_entropy_grad

    logits = lstm_forward(params, seq)
    loss = cross_entropy(logits, r)
    grad = lstm_grad(params, seq, cross_entropy_grad(logits, r))
    return loss, grad

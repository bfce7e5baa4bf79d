"""Rotating-frame interaction: multipath superposition and the probe unitary.

All paths reaching a receiver superpose coherently into a single complex
amplitude Xi = sum a * exp(-i omega tau). Its magnitude and argument set
the Rabi frequency and phase of a resonant drive on every probe qubit;
the resulting single-qubit unitary is a rotation about an axis in the XY
plane (tilted toward Z when detuned) applied identically to all qubits.

hbar = 1 throughout: drive strengths enter only as rotation angles
Omega * t, so the interaction time is a free calibration constant chosen
once from the training data.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from . import qsim
from .raytracer import PathSet

__all__ = [
    "FieldInteraction",
    "superpose",
    "interaction_params",
    "calibrate_time",
    "interaction_unitary",
    "apply_field",
]


@dataclass(frozen=True)
class FieldInteraction:
    """Effective drive felt by the probe at one receiver location."""

    xi: complex
    omega: float          # Rabi frequency |xi| (coupled units)
    phi: float            # drive phase arg(xi), 0 by convention when xi == 0
    delta: float = 0.0    # detuning; 0 = resonant
    t_int: float = 1.0    # interaction time (coupled units)


def superpose(paths: PathSet, omega: float) -> complex:
    """Coherent multipath sum Xi = sum_kl a_kl * exp(-i omega tau_kl)."""
    if not omega > 0:
        raise ValueError("carrier angular frequency must be positive")
    xi = 0.0 + 0.0j
    for p in paths:
        xi += p.gain * cmath.exp(-1j * omega * p.delay)
    return xi


def interaction_params(xi: complex, t_int: float, delta: float = 0.0) -> FieldInteraction:
    if not t_int > 0:
        raise ValueError("interaction time must be positive")
    omega = abs(xi)
    phi = cmath.phase(xi) if omega > 0.0 else 0.0
    return FieldInteraction(xi=xi, omega=omega, phi=phi, delta=delta, t_int=t_int)


def calibrate_time(omegas, target_angle: float = math.pi / 2.0) -> float:
    """Interaction time putting the median positive Rabi frequency at
    `target_angle` of rotation. Calibrated once on training data and frozen."""
    positive = [w for w in omegas if w > 0.0]
    if not positive:
        raise ValueError("degenerate field: every Rabi frequency is zero")
    return float(target_angle / np.median(positive))


def _axis_unitary(omega: float, phi: float, delta: float, t_int: float) -> np.ndarray:
    """exp(-i t [delta/2 Z + omega/2 (cos phi X + sin phi Y)]) via the
    rotation-axis form; handles the resonant case too."""
    g = math.hypot(omega, delta)
    if g == 0.0:
        return np.eye(2, dtype=np.complex128)
    ux = omega * math.cos(phi) / g
    uy = omega * math.sin(phi) / g
    uz = delta / g
    half = 0.5 * g * t_int
    c, s = math.cos(half), math.sin(half)
    return np.array(
        [[c - 1j * s * uz, -1j * s * (ux - 1j * uy)],
         [-1j * s * (ux + 1j * uy), c + 1j * s * uz]],
        dtype=np.complex128,
    )


def interaction_unitary(fi: FieldInteraction) -> np.ndarray:
    """2x2 unitary applied to each probe qubit for one interaction window.

    Resonant case: the axis-in-XY rotation decomposed as
    Rz(phi) Rx(omega t) Rz(-phi). Detuned case: rotation about the tilted
    axis (omega cos phi, omega sin phi, delta) by sqrt(omega^2+delta^2) t.
    """
    if fi.delta == 0.0:
        return (qsim.rot_z(fi.phi)
                @ qsim.rot_x(fi.omega * fi.t_int)
                @ qsim.rot_z(-fi.phi))
    return _axis_unitary(fi.omega, fi.phi, fi.delta, fi.t_int)


def apply_field(state: np.ndarray, fi: FieldInteraction) -> np.ndarray:
    """Uniform coupling: the same single-qubit unitary on every qubit."""
    u = interaction_unitary(fi)
    n = qsim.num_qubits(state)
    for q in range(n):
        state = qsim._apply_1q(state, u, q)
    return state

"""Inner current-loop design: the shaped plant and its explicit controller.

The inner loop closes a second-order controller Kc around the converter's
current integrator 1/(sL) so that the closed u_tilde -> iL map becomes a
unity-DC-gain low-pass with a notch-like dip at the rectifier ripple frequency.
The dip depth is set by zeta1/zeta2 and trades ripple between the inductor
current and the DC-link capacitor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ClosureMismatch
from .lti import Polynomial, RationalFunction, freq_response, log_grid, tf_feedback

RIPPLE_OMEGA_DEFAULT = 2.0 * math.pi * 120.0  # rad/s, 60 Hz grids


@dataclass(frozen=True)
class InnerLoopDesign:
    """Shaping parameters for the closed current loop."""

    omega_tilde: float                    # loop bandwidth [rad/s]
    zeta1: float                          # numerator damping (dip depth = zeta1/zeta2)
    zeta2: float                          # denominator damping
    omega0: float = RIPPLE_OMEGA_DEFAULT  # ripple frequency [rad/s]

    def __post_init__(self):
        if not (self.omega_tilde > self.omega0 > 0.0):
            raise ValueError("require omega_tilde > omega0 > 0")
        if not (self.zeta2 > self.zeta1 > 0.0):
            raise ValueError("require zeta2 > zeta1 > 0")


def shaped_plant(design: InnerLoopDesign) -> RationalFunction:
    """Target closed inner loop: low-pass times notch, unity DC gain."""
    w0, wt = design.omega0, design.omega_tilde
    num = Polynomial([wt]) * Polynomial([w0**2, 2.0 * design.zeta1 * w0, 1.0])
    den = Polynomial([wt, 1.0]) * Polynomial([w0**2, 2.0 * design.zeta2 * w0, 1.0])
    return RationalFunction(num, den)


def design_inner_controller(L: float, design: InnerLoopDesign) -> RationalFunction:
    """Biproper second-order controller whose unity-feedback closure of 1/(sL)
    equals the shaped plant exactly."""
    if L <= 0:
        raise ValueError("inductance must be positive")
    w0, wt = design.omega0, design.omega_tilde
    num = Polynomial([w0**2, 2.0 * design.zeta1 * w0, 1.0]) * (L * wt)
    den = Polynomial(
        [w0**2 + 2.0 * (design.zeta2 - design.zeta1) * w0 * wt,
         2.0 * design.zeta2 * w0,
         1.0]
    )
    return RationalFunction(num, den)


def verify_inner_closure(
    L: float,
    design: InnerLoopDesign,
    omegas: np.ndarray | None = None,
    fail_above: float = 1e-6,
) -> float:
    """Max relative deviation between the closed inner loop and the shaped plant.

    The identity is exact in exact arithmetic; anything above `fail_above`
    indicates a transcription bug and raises ClosureMismatch.
    """
    if omegas is None:
        omegas = log_grid(1e-1, 1e6, 200)
    kc = design_inner_controller(L, design)
    plant = RationalFunction([1.0], [0.0, L])
    closed = tf_feedback(kc * plant, RationalFunction.constant(1.0))
    target = shaped_plant(design)
    got = freq_response(closed, omegas).values
    want = freq_response(target, omegas).values
    err = float(np.max(np.abs(got - want) / np.abs(want)))
    if err > fail_above:
        raise ClosureMismatch(
            f"inner closure deviates from the shaped plant by {err:.3e}"
        )
    return err

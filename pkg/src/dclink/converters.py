"""Averaged boost/buck converter dynamics and their small-signal blocks.

The nonlinear right-hand sides keep the exact bilinear coupling between duty
cycle and state; the linear blocks freeze the complementary duty at its nominal
value D' = Vg/Vref, which is what every frequency-domain design step uses.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import VoltageNearZero
from .lti import RationalFunction

V_DIVISION_GUARD = 1e-3  # volts; below this the boost duty division is unsafe


class ConverterKind(Enum):
    BOOST = "boost"
    BUCK = "buck"


@dataclass(frozen=True)
class ConverterParams:
    """Physical parameters of one converter stage."""

    L: float                 # inductance [H]
    C: float                 # DC-link capacitance [F], shared bus in networks
    Vg: float                # input source voltage [V]
    Vref: float              # regulated DC-link voltage [V]
    kind: ConverterKind = ConverterKind.BOOST

    def __post_init__(self):
        if self.L <= 0 or self.C <= 0 or self.Vg <= 0 or self.Vref <= 0:
            raise ValueError("L, C, Vg, Vref must all be positive")
        if self.kind is ConverterKind.BOOST and self.Vref <= self.Vg:
            raise ValueError("boost output must exceed the source voltage")
        if self.kind is ConverterKind.BUCK and self.Vref >= self.Vg:
            raise ValueError("buck output must be below the source voltage")

    @property
    def dprime(self) -> float:
        """Nominal complementary duty: Vg/Vref for boost, 1 for buck."""
        if self.kind is ConverterKind.BOOST:
            return self.Vg / self.Vref
        return 1.0


@dataclass(frozen=True)
class ConverterState:
    """Inductor current and DC-link voltage."""

    iL: float  # [A]
    V: float   # [V]


def boost_rhs(
    state: ConverterState, dprime: float, iload: float, params: ConverterParams
) -> tuple[float, float]:
    """Averaged boost dynamics: returns (diL/dt, dV/dt)."""
    diL = (-dprime * state.V + params.Vg) / params.L
    dV = (dprime * state.iL - iload) / params.C
    return diL, dV


def buck_rhs(
    state: ConverterState, d: float, iload: float, params: ConverterParams
) -> tuple[float, float]:
    """Averaged buck dynamics: returns (diL/dt, dV/dt)."""
    diL = (-state.V + d * params.Vg) / params.L
    dV = (state.iL - iload) / params.C
    return diL, dV


def duty_from_control(
    u_tilde: float, state: ConverterState, params: ConverterParams
) -> tuple[float, bool]:
    """Map the control voltage u_tilde onto a duty cycle in [0, 1].

    Boost: u_tilde = Vg - d'*V, so d' = (Vg - u_tilde)/V and d = 1 - d'.
    Buck:  u_tilde = -V + d*Vg, so d = (u_tilde + V)/Vg.
    Returns (d, saturated). Raises VoltageNearZero for a boost with V below the
    division guard; callers that must keep integrating catch it and hold d = 0.
    """
    if params.kind is ConverterKind.BOOST:
        if state.V < V_DIVISION_GUARD:
            raise VoltageNearZero(
                f"boost duty undefined at V={state.V:g} V; holding switch off"
            )
        dprime = (params.Vg - u_tilde) / state.V
        clipped = min(max(dprime, 0.0), 1.0)
        return 1.0 - clipped, clipped != dprime
    d = (u_tilde + state.V) / params.Vg
    clipped = min(max(d, 0.0), 1.0)
    return clipped, clipped != d


def small_signal_blocks(params: ConverterParams) -> dict:
    """Integrator blocks of the linearized converter and the nominal duty.

    current_plant is the u_tilde -> iL path 1/(sL); voltage_plant is the
    output-current -> V path 1/(sC).
    """
    return {
        "current_plant": RationalFunction([1.0], [0.0, params.L]),
        "voltage_plant": RationalFunction([1.0], [0.0, params.C]),
        "dprime": params.dprime,
    }

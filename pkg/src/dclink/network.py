"""Parallel multi-converter architecture and its single-converter equivalent.

Each converter runs the same outer design scaled as Kv/m alongside an unscaled
Kr, with its current reference prescaled by a time-varying share gamma_k. All
inner loops are shaped to one nominal closed plant, which is what collapses the
whole network into an equivalent single-converter loop when the shares sum to
one. The per-converter current maps and the steady-state sharing bound come
from eliminating the per-converter reference errors.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .converters import ConverterParams
from .errors import ShareSumViolation
from .inner import InnerLoopDesign, design_inner_controller, shaped_plant, verify_inner_closure
from .lti import RationalFunction, dc_gain
from .outer import ClosedLoopSet, OuterControllers, build_closed_loop

SHARE_SUM_TOL = 1e-9


@dataclass(frozen=True)
class ShareSchedule:
    """Piecewise-constant power-sharing coefficients over time.

    breakpoints: ((time [s], (gamma_1 .. gamma_m)), ...); each segment holds
    from its breakpoint until the next one.
    """

    breakpoints: tuple

    def __init__(self, breakpoints: Sequence[tuple[float, Sequence[float]]]):
        bps = tuple(
            (float(t), tuple(float(g) for g in gammas)) for t, gammas in breakpoints
        )
        if not bps:
            raise ValueError("schedule needs at least one breakpoint")
        times = [t for t, _ in bps]
        if sorted(times) != times or len(set(times)) != len(times):
            raise ValueError("breakpoint times must be strictly increasing")
        m = len(bps[0][1])
        if any(len(g) != m for _, g in bps):
            raise ValueError("all breakpoints must list the same number of shares")
        object.__setattr__(self, "breakpoints", bps)

    @property
    def m(self) -> int:
        return len(self.breakpoints[0][1])

    def validate(self):
        """Shares must be in (0, 1] and sum to one at every breakpoint."""
        for t, gammas in self.breakpoints:
            if any(not (0.0 < g <= 1.0) for g in gammas):
                raise ShareSumViolation(
                    f"shares at t={t:g}s must lie in (0, 1]: {gammas}"
                )
            total = sum(gammas)
            if abs(total - 1.0) > SHARE_SUM_TOL:
                raise ShareSumViolation(
                    f"shares at t={t:g}s sum to {total:.12g}, expected 1"
                )

    def gamma_at(self, t: float) -> tuple:
        times = [bp[0] for bp in self.breakpoints]
        idx = bisect.bisect_right(times, t) - 1
        return self.breakpoints[max(idx, 0)][1]


@dataclass(frozen=True)
class ConverterUnit:
    """One physical converter with its inner-loop shaping."""

    params: ConverterParams
    design: InnerLoopDesign

    @property
    def kc(self) -> RationalFunction:
        return design_inner_controller(self.params.L, self.design)


@dataclass(frozen=True)
class ConverterNetwork:
    """m parallel converters on one DC link under a shared outer design."""

    units: tuple
    ctrl: OuterControllers
    share: ShareSchedule
    nominal: ConverterParams
    inner: InnerLoopDesign

    def __init__(self, units, ctrl, share, nominal, inner):
        units = tuple(units)
        if not units:
            raise ValueError("network needs at least one converter")
        if share.m != len(units):
            raise ValueError("share schedule width does not match converter count")
        for k, unit in enumerate(units):
            if unit.design != inner:
                raise ValueError(
                    f"converter {k} inner design differs from the nominal shaping"
                )
            # each unit's own Kc must close its own 1/(sL_k) into the nominal plant
            verify_inner_closure(unit.params.L, unit.design, fail_above=1e-6)
        object.__setattr__(self, "units", units)
        object.__setattr__(self, "ctrl", ctrl)
        object.__setattr__(self, "share", share)
        object.__setattr__(self, "nominal", nominal)
        object.__setattr__(self, "inner", inner)

    @property
    def m(self) -> int:
        return len(self.units)

    def nominal_gc(self) -> RationalFunction:
        return shaped_plant(self.inner)

    def nominal_gv(self) -> RationalFunction:
        return RationalFunction([1.0], [0.0, self.nominal.C])


def reduce_to_equivalent(net: ConverterNetwork) -> ClosedLoopSet:
    """Equivalent single-converter closed loop of the network.

    Valid when the shares sum to one (checked across the whole schedule);
    the returned maps equal the multi-converter transfer functions from
    (Vref, iref, iload) to V.
    """
    net.share.validate()
    return build_closed_loop(
        net.nominal_gc(), net.nominal_gv(), net.nominal.dprime, net.ctrl
    )


def _inner_denominator(net: ConverterNetwork) -> RationalFunction:
    gc = net.nominal_gc()
    one = RationalFunction.constant(1.0)
    return one + gc * net.ctrl.kr * net.nominal.dprime


def per_converter_current(
    net: ConverterNetwork, k: int, at_time: float = 0.0
) -> dict:
    """Transfer functions from (iref, e1) to converter k's output current."""
    if not 0 <= k < net.m:
        raise IndexError(f"converter index {k} out of range for m={net.m}")
    gammas = net.share.gamma_at(at_time)
    gk = gammas[k]
    gc = net.nominal_gc()
    dp = net.nominal.dprime
    denom = _inner_denominator(net)
    front = gc * dp
    from_iref = front * (net.ctrl.kr * gk) / denom
    from_e1 = front * (
        net.ctrl.kv * (1.0 / net.m) + net.ctrl.kr * (net.ctrl.eta * gk)
    ) / denom
    return {"from_iref": from_iref, "from_e1": from_e1}


def total_current_transfer(net: ConverterNetwork) -> dict:
    """Equivalent single-converter maps from (iref, e1) to the total output current."""
    gc = net.nominal_gc()
    dp = net.nominal.dprime
    denom = _inner_denominator(net)
    front = gc * dp
    return {
        "from_iref": front * net.ctrl.kr / denom,
        "from_e1": front * (net.ctrl.kv + net.ctrl.kr * net.ctrl.eta) / denom,
    }


def t_tilde_1(net: ConverterNetwork) -> RationalFunction:
    """Inner complementary map D' gc Kr / (1 + D' gc Kr)."""
    gc = net.nominal_gc()
    return (gc * net.ctrl.kr * net.nominal.dprime) / _inner_denominator(net)


def t_tilde_2(net: ConverterNetwork) -> RationalFunction:
    """Voltage-path map D' gc Kv / (m (1 + D' gc Kr))."""
    gc = net.nominal_gc()
    return (gc * net.ctrl.kv * (net.nominal.dprime / net.m)) / _inner_denominator(net)


def sharing_bound(
    net: ConverterNetwork, k: int, l: int, e1_dc: float, at_time: float = 0.0
) -> float:
    """Steady-state bound [A] on |i_k/gamma_k - i_l/gamma_l| for a DC error e1_dc."""
    gammas = net.share.gamma_at(at_time)
    gk, gl = gammas[k], gammas[l]
    if gk <= 0.0 or gl <= 0.0:
        raise ShareSumViolation("sharing bound requires positive shares")
    t1 = abs(dc_gain(t_tilde_1(net)))
    t2 = abs(dc_gain(t_tilde_2(net)))
    return (net.ctrl.eta * t1 + abs(1.0 / gk - 1.0 / gl) * t2) * abs(e1_dc)


def multi_converter_response(
    net: ConverterNetwork,
    omegas: np.ndarray,
    gammas: Sequence[float] | None = None,
) -> dict:
    """Frequency response of the full block diagram, built converter by converter.

    Nothing here assumes the shares sum to one; each converter's reference
    error is eliminated separately and the link voltage loop is closed around
    the summed output currents. Used as the independent construction against
    which the equivalent single-converter reduction is checked.
    """
    if gammas is None:
        gammas = net.share.gamma_at(0.0)
    if len(gammas) != net.m:
        raise ValueError("gamma vector length must match converter count")
    s = 1j * np.asarray(omegas, dtype=float)
    gc = net.nominal_gc()(s)
    gv = net.nominal_gv()(s)
    kv = net.ctrl.kv(s)
    kr = net.ctrl.kr(s)
    dp = net.nominal.dprime
    eta = net.ctrl.eta
    denom = 1.0 + dp * gc * kr
    phi_e1 = np.zeros_like(s)
    phi_iref = np.zeros_like(s)
    for gk in gammas:
        phi_e1 = phi_e1 + dp * gc * (kv / net.m + eta * gk * kr) / denom
        phi_iref = phi_iref + dp * gc * (gk * kr) / denom
    loop = 1.0 + gv * phi_e1
    return {
        "from_vref": gv * phi_e1 / loop,
        "from_iref": gv * phi_iref / loop,
        "from_iload": -gv / loop,
    }


def equivalence_max_error(
    net: ConverterNetwork,
    omegas: np.ndarray | None = None,
    gammas: Sequence[float] | None = None,
) -> float:
    """Max relative gap between the network diagram and its equivalent reduction."""
    from .lti import freq_response, log_grid

    if omegas is None:
        omegas = log_grid(1e-2, 1e6, 200)
    eq = reduce_to_equivalent(net)
    multi = multi_converter_response(net, omegas, gammas)
    single = {
        "from_vref": freq_response(eq.t_vref_v, omegas).values,
        "from_iref": freq_response(eq.t_iref_v, omegas).values,
        "from_iload": -(
            freq_response(eq.t_iref_v, omegas).values
            + freq_response(eq.gv_s, omegas).values
        ),
    }
    worst = 0.0
    for key, ref in single.items():
        err = np.max(np.abs(multi[key] - ref) / np.maximum(np.abs(ref), 1e-300))
        worst = max(worst, float(err))
    return worst

"""Outer-loop assembly for a single converter on the DC link.

The voltage controller Kv and current-reference controller Kr close around the
shaped inner plant gc and the link integrator gv = 1/(sC). This module builds
the closed-loop transfer functions, the stacked weighted plant used to score a
controller pair, and the steady-state error bounds of the droop architecture.

Closed-loop algebra is assembled directly over the common denominator

    delta = P + D'*gc_n*kr_n*gv_d*kv_d + D'*gc_n*(kv_n*kr_d + eta*kr_n*kv_d)*gv_n

(P the product of all block denominators) rather than by chained rational
arithmetic. That keeps polynomial degrees minimal and makes the textbook DC
identities hold to machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .converters import ConverterParams
from .errors import UnstableLoop
from .inner import InnerLoopDesign, shaped_plant
from .lti import (
    Polynomial,
    RationalFunction,
    StateSpaceModel,
    dc_gain,
    matrix_hinf_norm,
    realize,
)

_STAB_TOL = 1e-9


@dataclass(frozen=True)
class OuterControllers:
    """Voltage/current controller pair plus the droop coefficient eta [A/V]."""

    kv: RationalFunction
    kr: RationalFunction
    eta: float

    def __post_init__(self):
        if not (self.kv.is_proper() and self.kr.is_proper()):
            raise ValueError("outer controllers must be proper")
        if self.eta < 0:
            raise ValueError("droop coefficient must be nonnegative")


@dataclass(frozen=True)
class WeightSet:
    """Stable, proper weighting filters for the stacked design objective."""

    w1: RationalFunction
    w2: RationalFunction
    w3: RationalFunction
    w4: RationalFunction

    def __post_init__(self):
        from .lti import is_stable

        for name in ("w1", "w2", "w3", "w4"):
            w = getattr(self, name)
            if not w.is_proper():
                raise ValueError(f"{name} must be proper")
            if w.den.degree >= 1 and not is_stable(w):
                raise ValueError(f"{name} must be stable")

    def scaled(self, k: float) -> "WeightSet":
        return WeightSet(self.w1 * k, self.w2 * k, self.w3 * k, self.w4 * k)


@dataclass(frozen=True)
class ClosedLoopSet:
    """Closed-loop maps from (Vref, iref, iload) to the DC-link voltage.

    V = t_vref_v * Vref + t_iref_v * (iref - iload) - gv_s * iload, and
    s is the loop sensitivity (gv_s = gv * s).
    """

    t_vref_v: RationalFunction
    t_iref_v: RationalFunction
    gv_s: RationalFunction
    s: RationalFunction

    def dc_gains(self) -> dict:
        return {
            "t_vref_v": dc_gain(self.t_vref_v),
            "t_iref_v": dc_gain(self.t_iref_v),
            "gv_s": dc_gain(self.gv_s),
        }


def _outer_loop_a_matrix(
    gc: RationalFunction,
    gv: RationalFunction,
    dprime: float,
    ctrl: OuterControllers,
) -> np.ndarray:
    """Closed-loop state matrix of the outer interconnection (inputs zeroed)."""
    sg = realize(gc)
    sv = realize(gv)
    skv = realize(ctrl.kv)
    skr = realize(ctrl.kr)
    if abs(sg.D[0, 0]) > 0 or abs(sv.D[0, 0]) > 0:
        raise UnstableLoop("stability certification expects strictly proper gc, gv")
    ng, nv_, nkv, nkr = sg.order, sv.order, skv.order, skr.order
    n = ng + nv_ + nkv + nkr
    A = np.zeros((n, n))
    i_g = slice(0, ng)
    i_v = slice(ng, ng + nv_)
    i_kv = slice(ng + nv_, ng + nv_ + nkv)
    i_kr = slice(ng + nv_ + nkv, n)
    Cg = sg.C[0]
    Cv = sv.C[0]
    Ckv = skv.C[0]
    Ckr = skr.C[0]
    dkv = skv.D[0, 0]
    dkr = skr.D[0, 0]
    eta = ctrl.eta
    # signal rows (exogenous inputs zero): e1 = -V, e2 = -eta*V - D'*y_gc
    # u_hat = Ckv xkv + Ckr xkr + dkv*e1 + dkr*e2
    A[i_g, i_g] = sg.A
    A[i_g, i_v] = -sg.B @ ((dkv + eta * dkr) * Cv)[None, :]
    A[i_g, i_g] += -sg.B @ (dkr * dprime * Cg)[None, :]
    A[i_g, i_kv] = sg.B @ Ckv[None, :]
    A[i_g, i_kr] = sg.B @ Ckr[None, :]
    A[i_v, i_v] = sv.A
    A[i_v, i_g] = sv.B @ (dprime * Cg)[None, :]
    A[i_kv, i_kv] = skv.A
    A[i_kv, i_v] = -skv.B @ Cv[None, :]
    A[i_kr, i_kr] = skr.A
    A[i_kr, i_v] = -skr.B @ (eta * Cv)[None, :]
    A[i_kr, i_g] = -skr.B @ (dprime * Cg)[None, :]
    return A


def certify_outer_stability(
    gc: RationalFunction,
    gv: RationalFunction,
    dprime: float,
    ctrl: OuterControllers,
) -> bool:
    A = _outer_loop_a_matrix(gc, gv, dprime, ctrl)
    if A.shape[0] == 0:
        return True
    lam = scipy.linalg.eigvals(A)
    return bool(np.all(lam.real < -_STAB_TOL * np.maximum(1.0, np.abs(lam))))


@dataclass(frozen=True)
class _LoopPolynomials:
    """Shared polynomial pieces of the closed loop over the common denominator."""

    delta: Polynomial          # closed-loop characteristic polynomial
    p_open: Polynomial         # product of all open-loop denominators
    t_vref_num: Polynomial
    t_iref_num: Polynomial
    gvs_num: Polynomial


def _assemble_loop(
    gc: RationalFunction, gv: RationalFunction, dprime: float, ctrl: OuterControllers
) -> _LoopPolynomials:
    nc, dc = gc.num, gc.den
    ngv, dgv = gv.num, gv.den
    nv, dv = ctrl.kv.num, ctrl.kv.den
    nr, dr = ctrl.kr.num, ctrl.kr.den
    eta = ctrl.eta
    p_open = dgv * dc * dv * dr
    kr_term = (nc * nr * dgv * dv) * dprime
    sum_ctrl = nv * dr + (nr * dv) * eta
    t_vref_num = (nc * ngv * sum_ctrl) * dprime
    delta = p_open + kr_term + t_vref_num
    return _LoopPolynomials(
        delta=delta,
        p_open=p_open,
        t_vref_num=t_vref_num,
        t_iref_num=(nc * ngv * nr * dv) * dprime,
        gvs_num=ngv * dc * dv * dr,
    )


def build_closed_loop(
    gc: RationalFunction,
    gv: RationalFunction,
    dprime: float,
    ctrl: OuterControllers,
) -> ClosedLoopSet:
    """Closed-loop transfer functions of the single-converter loop.

    Raises UnstableLoop when the interconnection has closed-loop poles outside
    the open left half-plane.
    """
    if not certify_outer_stability(gc, gv, dprime, ctrl):
        raise UnstableLoop("closed loop has right-half-plane poles")
    lp = _assemble_loop(gc, gv, dprime, ctrl)
    return ClosedLoopSet(
        t_vref_v=RationalFunction(lp.t_vref_num, lp.delta),
        t_iref_v=RationalFunction(lp.t_iref_num, lp.delta),
        gv_s=RationalFunction(lp.gvs_num, lp.delta),
        s=RationalFunction(lp.p_open, lp.delta),
    )


@dataclass(frozen=True)
class GeneralizedPlant:
    """Stacked open-loop map from (Vref, iref, iload, u_hat) to (z1..z4, e1, e2).

    `matrix` is the 6x4 array of transfer functions; the structural pieces are
    kept alongside so closures can be evaluated without symbolic blow-up.
    """

    matrix: tuple
    gc: RationalFunction
    gv: RationalFunction
    dprime: float
    eta: float
    weights: WeightSet


def build_generalized_plant(
    gc: RationalFunction,
    gv: RationalFunction,
    dprime: float,
    eta: float,
    weights: WeightSet,
) -> GeneralizedPlant:
    one = RationalFunction.constant(1.0)
    zero = RationalFunction.constant(0.0)
    w1, w2, w3, w4 = weights.w1, weights.w2, weights.w3, weights.w4
    dgc = gc * dprime
    dgvgc = gv * dgc
    # 1 + eta*gv enters the e2/z2 column through the measured-current droop path
    one_plus_eta_gv = (gv * eta) + 1.0
    rows = (
        (w1, zero, w1 * gv, w1 * dgvgc * -1.0),
        (w2 * eta, w2, w2 * gv * eta, w2 * one_plus_eta_gv * dgc * -1.0),
        (zero, zero, zero, w3),
        (zero, zero, w4 * gv * -1.0, w4 * dgvgc),
        (one, zero, gv, dgvgc * -1.0),
        (RationalFunction.constant(eta), one, gv * eta, one_plus_eta_gv * dgc * -1.0),
    )
    return GeneralizedPlant(
        matrix=rows, gc=gc, gv=gv, dprime=dprime, eta=eta, weights=weights
    )


def _closed_weighted_map(
    plant: GeneralizedPlant, ctrl: OuterControllers
) -> Callable[[complex], np.ndarray]:
    """Pointwise lower-LFT closure u_hat = Kv e1 + Kr e2 of the stacked plant."""

    def at(s: complex) -> np.ndarray:
        P = np.array([[tf(s) for tf in row] for row in plant.matrix], dtype=complex)
        K = np.array([ctrl.kv(s), ctrl.kr(s)], dtype=complex)
        loop = 1.0 - K @ P[4:6, 3]
        u_w = (K @ P[4:6, 0:3]) / loop
        return P[0:4, 0:3] + np.outer(P[0:4, 3], u_w)

    return at


def evaluate_controller(
    plant: GeneralizedPlant,
    ctrl: OuterControllers,
    lo: float = 1e-2,
    hi: float = 1e6,
    n_grid: int = 2000,
) -> dict:
    """Weighted closed-loop H-infinity norm and a stability certificate.

    The norm is the peak maximum singular value of the closed (z1..z4) x
    (Vref, iref, iload) map, located on a log grid and sharpened by
    golden-section refinement; the stability flag comes from the closed-loop
    state matrix eigenvalues.
    """
    stable = certify_outer_stability(plant.gc, plant.gv, plant.dprime, ctrl)
    closed_at = _closed_weighted_map(plant, ctrl)
    om = np.logspace(np.log10(lo), np.log10(hi), n_grid)
    sig = np.empty(om.size)
    for i, w in enumerate(om):
        sig[i] = np.linalg.svd(closed_at(1j * w), compute_uv=False)[0]
    # grid starts at lo; the open-loop integrator entries preclude evaluating the
    # LFT formula literally at s=0, and every closed-loop corner sits far above lo
    k = int(np.argmax(sig))
    peak = float(sig[k])
    from .lti import _golden_refine

    wlo, whi = om[max(k - 1, 0)], om[min(k + 1, om.size - 1)]
    if whi > wlo:
        refine = _golden_refine(
            lambda w: float(np.linalg.svd(closed_at(1j * w), compute_uv=False)[0]),
            wlo,
            whi,
        )
        peak = max(peak, refine)
    return {"closed_weighted_norm": peak, "stable": stable}


def dc_gain_formulas(ctrl: OuterControllers, dprime: float) -> dict:
    """Printed DC-gain ratios of the closed loop in terms of controller DC values."""
    kv0 = dc_gain(ctrl.kv)
    kr0 = dc_gain(ctrl.kr)
    denom = abs(kv0 + ctrl.eta * kr0)
    return {
        "t_vref_v": 1.0,
        "t_iref_v": abs(kr0) / denom,
        "gv_s": 1.0 / (dprime * denom),
    }


def tracking_error_bounds(
    ctrl: OuterControllers,
    dprime: float,
    iref0: float,
    iload0: float,
    centralized: bool,
) -> float:
    """Steady-state |e1| bound [V] for the centralized / decentralized modes."""
    kv0 = dc_gain(ctrl.kv)
    kr0 = dc_gain(ctrl.kr)
    if not (np.isfinite(kv0) and np.isfinite(kr0)):
        return 0.0
    denom = dprime * abs(kv0 + ctrl.eta * kr0)
    if centralized:
        return abs(iref0) / denom
    return (abs(kr0) * abs(iref0) + (dprime * abs(kr0) + 1.0) * abs(iload0)) / denom


# ---------------------------------------------------------------------------
# preset registry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ControlPreset:
    """A complete, named outer/inner design with its nominal plant."""

    name: str
    controllers: OuterControllers
    weights: WeightSet
    inner: InnerLoopDesign
    nominal: ConverterParams


def _poly(*factors: Sequence[float]) -> Polynomial:
    out = Polynomial([1.0])
    for f in factors:
        out = out * Polynomial(f)
    return out


def _paper_vi_preset() -> ControlPreset:
    # sixth-order controllers entered in factored form, exactly as reduced
    kv_num = _poly([-4.615e9, 1.0], [6007.0, 1.0],
                   [5.97e6, 5042.0, 1.0], [1.039e5, 753.6, 1.0]) * (-0.00064)
    kv_den = _poly([1.604e4, 1.0], [578.3, 1.0],
                   [5.69e5, 1061.0, 1.0], [2.074e9, 7.354e4, 1.0])
    kr_num = _poly([181.3, 1.0], [0.001012, 1.0],
                   [6.065e6, 5141.0, 1.0], [2.804e11, 3.818e6, 1.0]) * 0.00267
    kr_den = _poly([4.395, 1.0], [0.001013, 1.0],
                   [5.694e5, 1059.0, 1.0], [3.69e9, 9.783e4, 1.0])
    ctrl = OuterControllers(
        kv=RationalFunction(kv_num, kv_den),
        kr=RationalFunction(kr_num, kr_den),
        eta=1.2667,
    )
    weights = WeightSet(
        w1=RationalFunction(_poly([452.4, 1.0]) * 0.4167, _poly([1.885, 1.0])),
        w2=RationalFunction(_poly([1056.0, 1.0]) * 0.4167, _poly([4.398, 1.0])),
        w3=RationalFunction.constant(0.04),
        w4=RationalFunction(_poly([314.2, 1.0]) * 37.037, _poly([3.142e4, 1.0])),
    )
    inner = InnerLoopDesign(
        omega_tilde=2.0 * np.pi * 300.0,
        zeta1=0.7,
        zeta2=2.2,
        omega0=2.0 * np.pi * 120.0,
    )
    nominal = ConverterParams(L=0.12e-3, C=500e-6, Vg=125.0, Vref=250.0)
    return ControlPreset(
        name="paper-vi", controllers=ctrl, weights=weights, inner=inner,
        nominal=nominal,
    )


_PRESETS: dict[str, Callable[[], ControlPreset]] = {
    "paper-vi": _paper_vi_preset,
}


def list_presets() -> list[str]:
    return sorted(_PRESETS)


def load_preset(name: str) -> ControlPreset:
    try:
        factory = _PRESETS[name]
    except KeyError:
        raise KeyError(
            f"unknown preset {name!r}; available: {', '.join(list_presets())}"
        ) from None
    return factory()


def nominal_shaped_plant(preset: ControlPreset) -> RationalFunction:
    return shaped_plant(preset.inner)


def nominal_link_integrator(preset: ControlPreset) -> RationalFunction:
    return RationalFunction([1.0], [0.0, preset.nominal.C])

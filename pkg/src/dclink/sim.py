"""Nonlinear time-domain simulation of the closed-loop converter network.

Integrates the exact bilinear averaged converter models (not the frozen-duty
linearization the analysis uses) together with state-space realizations of all
inner and outer controllers, under constant-power loading, PV disturbance
injection, and per-converter voltage-sensor noise. Fixed-step RK4 keeps runs
bit-reproducible; the hot loop is compiled with numba.

Wiring per converter k (boost):
    e1_k   = Vref - (V + offset_k + noise_k)
    ref_k  = gamma_k(t) * (iref + eta * e1)     droop-augmented current reference
    e2_k   = ref_k - d'_k * iL_k                measured own output current
    u_hat  = Kv/m(e1_k) + Kr(e2_k)              inner current reference
    u_tilde= Kc(u_hat - iL_k)                   inner loop output, mapped onto a duty cycle

In centralized mode the droop-augmented reference uses the broadcast link
measurement (co-located with the load-current sensor), while each converter's
voltage controller still runs on its own noisy sensor; in decentralized mode
every path is local, which is what the steady-state bounds quantify.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit

from .converters import ConverterKind
from .errors import ConfigError, NumericalBlowup, WindowTooShort
from .lti import realize
from .network import ConverterNetwork

DT_MAX = 1e-4  # [s]; resolves the inner-loop bandwidth with margin


@dataclass(frozen=True)
class LoadProfile:
    """Constant-power load with a square-wave component, step overrides and PV."""

    base_power: float                    # [W]
    square_amp: float = 0.0              # [W], added as +/- square at square_freq
    square_freq: float = 0.0             # [Hz], full period of the square
    steps: tuple = ()                    # ((time [s], base power [W]) overrides)
    pv_current: tuple | None = None      # ((t [s], i_pv [A]) samples, interpolated)
    min_voltage: float = 100.0           # [V] undervoltage limit of the P/V division

    def __post_init__(self):
        object.__setattr__(
            self, "steps", tuple((float(t), float(p)) for t, p in self.steps)
        )
        if self.pv_current is not None:
            pv = tuple((float(t), float(i)) for t, i in self.pv_current)
            object.__setattr__(self, "pv_current", pv)
            times = [t for t, _ in pv]
            if sorted(times) != times or len(set(times)) != len(times):
                raise ValueError("pv_current times must be strictly increasing")
        levels = [self.base_power] + [p for _, p in self.steps]
        if any(p - abs(self.square_amp) < 0.0 for p in levels):
            raise ValueError("instantaneous load power must stay nonnegative")
        if self.min_voltage <= 0.0:
            raise ValueError("min_voltage must be positive")

    def power_at(self, t: float) -> float:
        base = self.base_power
        for ts, p in self.steps:
            if ts <= t:
                base = p
        if self.square_amp != 0.0 and self.square_freq > 0.0:
            phase = (t * self.square_freq) % 1.0
            base += -self.square_amp if phase < 0.5 else self.square_amp
        return base

    def step_times(self, horizon: float) -> np.ndarray:
        """Instants where the load power jumps (square toggles and overrides)."""
        times = [t for t, _ in self.steps if 0.0 < t <= horizon]
        if self.square_amp != 0.0 and self.square_freq > 0.0:
            half = 0.5 / self.square_freq
            k = 1
            while k * half <= horizon:
                times.append(k * half)
                k += 1
        return np.unique(np.asarray(times, dtype=float))


def synthetic_pv_trace(
    peak_power: float = 1700.0,
    vref: float = 250.0,
    duration: float = 19.5,
    n: int = 79,
) -> tuple:
    """Bell-shaped stand-in for a compressed day of insolation, as a current."""
    t = np.linspace(0.0, duration, n)
    i = (peak_power / vref) * np.sin(np.pi * t / duration) ** 2
    return tuple((float(a), float(b)) for a, b in zip(t, i))


@dataclass(frozen=True)
class NoiseModel:
    """Per-converter voltage-sensor corruption; deterministic given the seed."""

    dc_offsets: tuple                 # [V] per converter
    relative_noise: tuple             # std as a fraction of |V|, per converter
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "dc_offsets", tuple(float(v) for v in self.dc_offsets))
        object.__setattr__(
            self, "relative_noise", tuple(float(v) for v in self.relative_noise)
        )
        if len(self.dc_offsets) != len(self.relative_noise):
            raise ValueError("offset and noise lists must have equal length")
        if any(v < 0 for v in self.relative_noise):
            raise ValueError("relative noise fractions must be nonnegative")

    @classmethod
    def silent(cls, m: int, seed: int = 0) -> "NoiseModel":
        return cls((0.0,) * m, (0.0,) * m, seed)

    @property
    def active(self) -> bool:
        return any(v != 0.0 for v in self.relative_noise)


@dataclass(frozen=True)
class SimMode:
    """Current-reference distribution mode."""

    centralized: bool
    iref: float = 0.0  # [A], used in decentralized mode only

    @classmethod
    def central(cls) -> "SimMode":
        return cls(True)

    @classmethod
    def decentral(cls, iref: float) -> "SimMode":
        return cls(False, float(iref))


@dataclass(frozen=True, eq=False)
class SimTrace:
    """Time-indexed record of one simulation run. Arrays share the t grid."""

    t: np.ndarray
    V: np.ndarray
    iL: np.ndarray          # (n, m)
    i_out: np.ndarray       # (n, m), applied d'_k * iL_k delivered to the link
    duty: np.ndarray        # (n, m)
    e1: np.ndarray          # true Vref - V
    e2: np.ndarray          # (n, m), controller-side current errors
    iref: np.ndarray
    iload: np.ndarray       # net load current (load minus PV)
    i_pv: np.ndarray
    gamma: np.ndarray       # (n, m)
    saturated: np.ndarray   # (n, m) 0/1
    dt: float
    vref: float
    load_step_times: np.ndarray

    @property
    def i_C(self) -> np.ndarray:
        """Capacitor current by link KCL: total delivered minus net load."""
        return self.i_out.sum(axis=1) - self.iload

    def column_names(self) -> list[str]:
        m = self.iL.shape[1]
        cols = ["t", "V", "e1", "iref", "iload", "i_pv", "i_C"]
        for k in range(m):
            cols += [
                f"iL_{k+1}", f"i_{k+1}", f"duty_{k+1}", f"e2_{k+1}",
                f"gamma_{k+1}", f"sat_{k+1}",
            ]
        return cols

    def to_csv(self, path) -> None:
        m = self.iL.shape[1]
        i_c = self.i_C
        with open(path, "w", newline="") as fh:
            fh.write(",".join(self.column_names()) + "\n")
            for i in range(self.t.size):
                row = [
                    self.t[i], self.V[i], self.e1[i], self.iref[i],
                    self.iload[i], self.i_pv[i], i_c[i],
                ]
                for k in range(m):
                    row += [
                        self.iL[i, k], self.i_out[i, k], self.duty[i, k],
                        self.e2[i, k], self.gamma[i, k], float(self.saturated[i, k]),
                    ]
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


@njit(cache=True)
def _piecewise_index(times, t):
    idx = 0
    for j in range(times.size):
        if times[j] <= t:
            idx = j
        else:
            break
    return idx


@njit(cache=True)
def _load_power(t, base, amp, freq, step_times, step_powers):
    p = base
    for j in range(step_times.size):
        if step_times[j] <= t:
            p = step_powers[j]
        else:
            break
    if amp != 0.0 and freq > 0.0:
        phase = (t * freq) % 1.0
        p += -amp if phase < 0.5 else amp
    return p


@njit(cache=True)
def _rhs(
    t, x, noise, dx,
    m, nc, nv, nr,
    L, Vg, kind, C_link, vref,
    Ac, Bc, Cc, Dc, Av, Bv, Cv, Dv, Ar, Br, Cr, Dr, eta,
    centralized, iref_fixed,
    share_times, share_gammas,
    p_base, p_amp, p_freq, step_times, step_powers, v_floor,
    pv_t, pv_i,
    aux_duty, aux_e2, aux_iout, aux_sat, aux_scalars,
):
    V = x[m]
    Vsafe = V if V > 0.0 else 0.0

    p_inst = _load_power(t, p_base, p_amp, p_freq, step_times, step_powers)
    ipv = np.interp(t, pv_t, pv_i) if pv_t.size >= 2 else 0.0
    vdiv = Vsafe if Vsafe > v_floor else v_floor
    iload_raw = p_inst / vdiv
    net_load = iload_raw - ipv

    g_idx = _piecewise_index(share_times, t)

    e1_true = vref - V
    if centralized:
        iref_val = net_load
        r_common = iref_val + eta * e1_true
    else:
        iref_val = iref_fixed
        r_common = 0.0

    off_c = m
    off_xc = m + 1
    off_xv = off_xc + m * nc
    off_xr = off_xv + m * nv

    total_i = 0.0
    for k in range(m):
        iLk = x[k]
        xc = x[off_xc + k * nc: off_xc + (k + 1) * nc]
        xv = x[off_xv + k * nv: off_xv + (k + 1) * nv]
        xr = x[off_xr + k * nr: off_xr + (k + 1) * nr]
        e1k = vref - (V + noise[k])
        gk = share_gammas[g_idx, k]
        if centralized:
            refk = gk * r_common
        else:
            refk = gk * (iref_fixed + eta * e1k)

        yv = Dv * e1k
        for j in range(nv):
            yv += Cv[j] * xv[j]
        cr = 0.0
        for j in range(nr):
            cr += Cr[j] * xr[j]
        cc = 0.0
        for j in range(nc):
            cc += Cc[k, j] * xc[j]

        sat = 0.0
        if kind[k] == 0:  # boost
            if Vsafe < 1e-3:
                dprime = 1.0  # division guard: switch held off
                sat = 1.0
                i_meas = dprime * iLk
            else:
                a = 1.0 - Dc[k] * Dr * iLk / Vsafe
                if abs(a) < 1e-12:
                    a = 1e-12
                b = cc + Dc[k] * (
                    yv + cr + Dr * refk - Dr * Vg[k] * iLk / Vsafe - iLk
                )
                u_tilde = b / a
                dprime = (Vg[k] - u_tilde) / Vsafe
                if dprime < 0.0:
                    dprime = 0.0
                    sat = 1.0
                elif dprime > 1.0:
                    dprime = 1.0
                    sat = 1.0
                i_meas = dprime * iLk
            e2k = refk - i_meas
            u_hat = yv + cr + Dr * e2k
            diL = (Vg[k] - dprime * V) / L[k]
            iout = dprime * iLk
            duty = 1.0 - dprime
        else:  # buck: output current is the inductor current itself
            i_meas = iLk
            e2k = refk - i_meas
            u_hat = yv + cr + Dr * e2k
            u_tilde = cc + Dc[k] * (u_hat - iLk)
            d = (u_tilde + V) / Vg[k]
            if d < 0.0:
                d = 0.0
                sat = 1.0
            elif d > 1.0:
                d = 1.0
                sat = 1.0
            diL = (-V + d * Vg[k]) / L[k]
            iout = iLk
            duty = d

        uin_c = u_hat - iLk
        dx[k] = diL
        for i in range(nc):
            acc = Bc[k, i] * uin_c
            for j in range(nc):
                acc += Ac[k, i, j] * xc[j]
            dx[off_xc + k * nc + i] = acc
        for i in range(nv):
            acc = Bv[i] * e1k
            for j in range(nv):
                acc += Av[i, j] * xv[j]
            dx[off_xv + k * nv + i] = acc
        for i in range(nr):
            acc = Br[i] * e2k
            for j in range(nr):
                acc += Ar[i, j] * xr[j]
            dx[off_xr + k * nr + i] = acc

        total_i += iout
        aux_duty[k] = duty
        aux_e2[k] = e2k
        aux_iout[k] = iout
        aux_sat[k] = sat
        aux_scalars[4 + k] = gk

    dx[off_c] = (total_i - iload_raw + ipv) / C_link
    aux_scalars[0] = iref_val
    aux_scalars[1] = net_load
    aux_scalars[2] = ipv
    aux_scalars[3] = e1_true
    return 0


@njit(cache=True)
def _integrate(
    dt, n_steps, log_every,
    m, nc, nv, nr,
    L, Vg, kind, C_link, vref,
    Ac, Bc, Cc, Dc, Av, Bv, Cv, Dv, Ar, Br, Cr, Dr, eta,
    centralized, iref_fixed,
    share_times, share_gammas,
    p_base, p_amp, p_freq, step_times, step_powers, v_floor,
    pv_t, pv_i,
    offsets, rel_noise, seed, use_noise,
    x0,
    out_t, out_V, out_iL, out_iout, out_duty, out_e1, out_e2,
    out_iref, out_iload, out_ipv, out_gamma, out_sat,
):
    np.random.seed(seed)
    x = x0.copy()
    n_states = x.size
    dx1 = np.zeros(n_states)
    dx2 = np.zeros(n_states)
    dx3 = np.zeros(n_states)
    dx4 = np.zeros(n_states)
    noise = np.zeros(m)
    aux_duty = np.zeros(m)
    aux_e2 = np.zeros(m)
    aux_iout = np.zeros(m)
    aux_sat = np.zeros(m)
    aux_scalars = np.zeros(4 + m)
    row = 0
    for step in range(n_steps + 1):
        t = step * dt
        V = x[m]
        if use_noise:
            for k in range(m):
                noise[k] = offsets[k] + rel_noise[k] * abs(V) * np.random.normal()
        else:
            for k in range(m):
                noise[k] = offsets[k]
        _rhs(t, x, noise, dx1,
             m, nc, nv, nr, L, Vg, kind, C_link, vref,
             Ac, Bc, Cc, Dc, Av, Bv, Cv, Dv, Ar, Br, Cr, Dr, eta,
             centralized, iref_fixed, share_times, share_gammas,
             p_base, p_amp, p_freq, step_times, step_powers, v_floor,
             pv_t, pv_i, aux_duty, aux_e2, aux_iout, aux_sat, aux_scalars)
        if step % log_every == 0:
            out_t[row] = t
            out_V[row] = V
            out_e1[row] = aux_scalars[3]
            out_iref[row] = aux_scalars[0]
            out_iload[row] = aux_scalars[1]
            out_ipv[row] = aux_scalars[2]
            for k in range(m):
                out_iL[row, k] = x[k]
                out_iout[row, k] = aux_iout[k]
                out_duty[row, k] = aux_duty[k]
                out_e2[row, k] = aux_e2[k]
                out_gamma[row, k] = aux_scalars[4 + k]
                out_sat[row, k] = aux_sat[k]
            row += 1
        if step == n_steps:
            break
        half = 0.5 * dt
        xs = x + half * dx1
        _rhs(t + half, xs, noise, dx2,
             m, nc, nv, nr, L, Vg, kind, C_link, vref,
             Ac, Bc, Cc, Dc, Av, Bv, Cv, Dv, Ar, Br, Cr, Dr, eta,
             centralized, iref_fixed, share_times, share_gammas,
             p_base, p_amp, p_freq, step_times, step_powers, v_floor,
             pv_t, pv_i, aux_duty, aux_e2, aux_iout, aux_sat, aux_scalars)
        xs = x + half * dx2
        _rhs(t + half, xs, noise, dx3,
             m, nc, nv, nr, L, Vg, kind, C_link, vref,
             Ac, Bc, Cc, Dc, Av, Bv, Cv, Dv, Ar, Br, Cr, Dr, eta,
             centralized, iref_fixed, share_times, share_gammas,
             p_base, p_amp, p_freq, step_times, step_powers, v_floor,
             pv_t, pv_i, aux_duty, aux_e2, aux_iout, aux_sat, aux_scalars)
        xs = x + dt * dx3
        _rhs(t + dt, xs, noise, dx4,
             m, nc, nv, nr, L, Vg, kind, C_link, vref,
             Ac, Bc, Cc, Dc, Av, Bv, Cv, Dv, Ar, Br, Cr, Dr, eta,
             centralized, iref_fixed, share_times, share_gammas,
             p_base, p_amp, p_freq, step_times, step_powers, v_floor,
             pv_t, pv_i, aux_duty, aux_e2, aux_iout, aux_sat, aux_scalars)
        x = x + (dt / 6.0) * (dx1 + 2.0 * dx2 + 2.0 * dx3 + dx4)
        if x[m] < 0.0:
            x[m] = 0.0
        if not np.isfinite(x[m]) or abs(x[m]) > 10.0 * vref:
            return step + 1
    return -1


def _stack_unit_realizations(net: ConverterNetwork):
    mats = [realize(unit.kc) for unit in net.units]
    nc = mats[0].order
    m = net.m
    Ac = np.zeros((m, nc, nc))
    Bc = np.zeros((m, nc))
    Cc = np.zeros((m, nc))
    Dc = np.zeros(m)
    for k, ss in enumerate(mats):
        if ss.order != nc:
            raise ConfigError("inner controllers must share one structure")
        Ac[k] = ss.A
        Bc[k] = ss.B[:, 0]
        Cc[k] = ss.C[0]
        Dc[k] = ss.D[0, 0]
    return Ac, Bc, Cc, Dc


def simulate(
    net: ConverterNetwork,
    load: LoadProfile,
    noise: NoiseModel,
    mode: SimMode,
    horizon: float,
    dt: float = 2e-5,
    log_every: int = 1,
    v0: float = 0.0,
    iL0: Sequence[float] | None = None,
) -> SimTrace:
    """Integrate the closed-loop network and return the sampled trace.

    A run is strictly sequential and, for a fixed seed, bit-reproducible. The
    compiled kernel seeds a process-global random state, so parallel sweeps
    should fan out across processes, not threads.
    """
    if horizon <= 0.0:
        raise ConfigError("horizon must be positive")
    if dt > DT_MAX or dt <= 0.0:
        raise ConfigError(f"dt must lie in (0, {DT_MAX:g}] s")
    if len(noise.dc_offsets) != net.m:
        raise ConfigError("noise model width does not match converter count")
    net.share.validate()

    m = net.m
    Ac, Bc, Cc, Dc = _stack_unit_realizations(net)
    skv = realize(net.ctrl.kv)
    skr = realize(net.ctrl.kr)
    nv, nr, nc = skv.order, skr.order, Ac.shape[1]
    Av = np.ascontiguousarray(skv.A)
    Bv = np.ascontiguousarray(skv.B[:, 0])
    Cv = np.ascontiguousarray(skv.C[0] / m)   # per-converter Kv/m
    Dv = skv.D[0, 0] / m
    Ar = np.ascontiguousarray(skr.A)
    Br = np.ascontiguousarray(skr.B[:, 0])
    Cr = np.ascontiguousarray(skr.C[0])
    Dr = skr.D[0, 0]

    L = np.array([u.params.L for u in net.units])
    Vg = np.array([u.params.Vg for u in net.units])
    kind = np.array(
        [0 if u.params.kind is ConverterKind.BOOST else 1 for u in net.units],
        dtype=np.int64,
    )
    c_links = {u.params.C for u in net.units}
    if len(c_links) != 1:
        raise ConfigError("all units must quote the same shared DC-link capacitance")
    C_link = c_links.pop()
    vref = net.units[0].params.Vref

    share_times = np.array([bp[0] for bp in net.share.breakpoints])
    share_gammas = np.array([bp[1] for bp in net.share.breakpoints])

    if load.pv_current:
        pv_t = np.array([p[0] for p in load.pv_current])
        pv_i = np.array([p[1] for p in load.pv_current])
    else:
        pv_t = np.zeros(0)
        pv_i = np.zeros(0)
    step_times = np.array([t for t, _ in load.steps])
    step_powers = np.array([p for _, p in load.steps])

    n_steps = int(round(horizon / dt))
    n_logs = n_steps // log_every + 1
    x0 = np.zeros(m + 1 + m * (nc + nv + nr))
    if iL0 is not None:
        x0[:m] = np.asarray(iL0, dtype=float)
    x0[m] = v0

    out_t = np.zeros(n_logs)
    out_V = np.zeros(n_logs)
    out_iL = np.zeros((n_logs, m))
    out_iout = np.zeros((n_logs, m))
    out_duty = np.zeros((n_logs, m))
    out_e1 = np.zeros(n_logs)
    out_e2 = np.zeros((n_logs, m))
    out_iref = np.zeros(n_logs)
    out_iload = np.zeros(n_logs)
    out_ipv = np.zeros(n_logs)
    out_gamma = np.zeros((n_logs, m))
    out_sat = np.zeros((n_logs, m))

    blew = _integrate(
        dt, n_steps, log_every,
        m, nc, nv, nr,
        L, Vg, kind, C_link, vref,
        Ac, Bc, Cc, Dc, Av, Bv, Cv, float(Dv), Ar, Br, Cr, float(Dr),
        net.ctrl.eta,
        mode.centralized, mode.iref,
        share_times, share_gammas,
        load.base_power, load.square_amp, load.square_freq,
        step_times, step_powers, load.min_voltage,
        pv_t, pv_i,
        np.array(noise.dc_offsets), np.array(noise.relative_noise),
        noise.seed, noise.active,
        x0,
        out_t, out_V, out_iL, out_iout, out_duty, out_e1, out_e2,
        out_iref, out_iload, out_ipv, out_gamma, out_sat,
    )
    if blew >= 0:
        raise NumericalBlowup(
            f"state diverged at t={blew * dt:.6g} s (|V| beyond 10*Vref or non-finite)"
        )
    return SimTrace(
        t=out_t, V=out_V, iL=out_iL, i_out=out_iout, duty=out_duty,
        e1=out_e1, e2=out_e2, iref=out_iref, iload=out_iload, i_pv=out_ipv,
        gamma=out_gamma, saturated=out_sat, dt=dt * log_every, vref=vref,
        load_step_times=load.step_times(horizon),
    )


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------


def _window_mask(trace: SimTrace, window: tuple[float, float]) -> np.ndarray:
    t0, t1 = window
    if t0 >= t1 or t0 < trace.t[0] or t1 > trace.t[-1] + 1e-12:
        raise WindowTooShort(f"window ({t0:g}, {t1:g}) s not inside the trace")
    return (trace.t >= t0) & (trace.t <= t1)


def steady_state_metrics(
    trace: SimTrace,
    window: tuple[float, float],
    square_freq: float | None = None,
    settle_after_step: float = 0.1,
) -> dict:
    """Voltage and sharing statistics over a post-transient window.

    Raises WindowTooShort when the window does not cover one full period of the
    load square wave (two step intervals). V_p2p_steady masks out
    `settle_after_step` seconds after every load step.
    """
    mask = _window_mask(trace, window)
    t0, t1 = window
    if square_freq and square_freq > 0.0 and (t1 - t0) < 1.0 / square_freq - 1e-9:
        raise WindowTooShort(
            f"window shorter than one load period ({1.0 / square_freq:g} s)"
        )
    V = trace.V[mask]
    steady = mask.copy()
    for ts in trace.load_step_times:
        steady &= ~((trace.t >= ts) & (trace.t < ts + settle_after_step))
    Vs = trace.V[steady] if np.any(steady) else V

    i_mean = trace.i_out[mask].mean(axis=0)
    total = i_mean.sum()
    share_ratios = i_mean / total if total != 0.0 else i_mean * 0.0

    gammas = trace.gamma[mask]
    m = i_mean.size
    gap = np.zeros((m, m))
    scaled = trace.i_out[mask] / np.where(gammas > 0, gammas, np.nan)
    for k in range(m):
        for l in range(m):
            gap[k, l] = np.nanmean(np.abs(scaled[:, k] - scaled[:, l]))

    e1 = trace.e1[mask]
    return {
        "V_mean": float(V.mean()),
        "V_p2p": float(V.max() - V.min()),
        "V_p2p_steady": float(Vs.max() - Vs.min()),
        "share_ratios": share_ratios,
        "scaled_current_gap": gap,
        "e1_mean": float(e1.mean()),
        "abs_e1_mean": float(np.abs(e1).mean()),
        "e1_dc": float(np.abs(e1.mean())),
        "sat_fraction": float(trace.saturated[mask].mean()),
    }


def voltage_band_fraction(
    trace: SimTrace,
    window: tuple[float, float],
    band: float = 0.02,
    settle_after_step: float = 0.1,
) -> float:
    """Fraction of window samples outside Vref*(1 +/- band), step transients masked."""
    mask = _window_mask(trace, window)
    for ts in trace.load_step_times:
        mask &= ~((trace.t >= ts) & (trace.t < ts + settle_after_step))
    V = trace.V[mask]
    lo, hi = trace.vref * (1.0 - band), trace.vref * (1.0 + band)
    return float(np.mean((V < lo) | (V > hi)))


def kcl_residual(trace: SimTrace, c_link: float) -> float:
    """Max |C dV/dt - i_C| [A] from central differences of the logged voltage."""
    dv = np.gradient(trace.V, trace.t)
    return float(np.max(np.abs(c_link * dv - trace.i_C)[1:-1]))

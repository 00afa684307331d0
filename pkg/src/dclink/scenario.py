"""Scenario files: a TOML description of one complete network experiment.

A scenario pins down everything a run needs: the converter units, the nominal
single-converter design, inner-loop shaping, outer controllers (named preset or
explicit coefficient lists), share schedule, load/PV/noise models, the
reference-distribution mode, and integration settings. Parsing is strict:
unknown keys are rejected, and every value is pushed through the same
invariants the library types enforce.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
import tomli

from .converters import ConverterKind, ConverterParams
from .errors import DclinkError, ParseError, ValidationError
from .inner import InnerLoopDesign
from .lti import RationalFunction
from .network import ConverterNetwork, ConverterUnit, ShareSchedule
from .outer import ControlPreset, OuterControllers, list_presets, load_preset
from .sim import LoadProfile, NoiseModel, SimMode, synthetic_pv_trace

PRESET_DIR_ENV = "DCLINK_PRESET_DIR"
_BUILTIN_DIR = Path(__file__).parent / "presets"


@dataclass(frozen=True, eq=False)
class NetworkScenario:
    """A fully validated experiment description."""

    name: str
    net: ConverterNetwork
    load: LoadProfile
    noise: NoiseModel
    mode: SimMode
    horizon: float
    dt: float
    log_every: int
    windows: tuple
    preset: ControlPreset | None
    pv_source: str
    source: dict

    def describe(self) -> dict:
        """Canonical plain-python form; serialize/parse round-trips through it."""
        return _canonical_dict(self)


def resolve_scenario_path(name: str) -> Path:
    """Resolve a CLI argument to a scenario file.

    Tries the literal path first, then `<name>.scenario` under the directory
    named by DCLINK_PRESET_DIR, then the bundled preset directory.
    """
    p = Path(name)
    if p.exists():
        return p
    candidates = []
    env_dir = os.environ.get(PRESET_DIR_ENV)
    if env_dir:
        candidates += [Path(env_dir) / name, Path(env_dir) / f"{name}.scenario"]
    candidates += [_BUILTIN_DIR / name, _BUILTIN_DIR / f"{name}.scenario"]
    for c in candidates:
        if c.exists():
            return c
    raise ParseError(f"scenario {name!r} not found (searched {len(candidates) + 1} paths)")


def builtin_scenarios() -> list[str]:
    return sorted(p.stem for p in _BUILTIN_DIR.glob("*.scenario"))


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


_REQUIRED = object()


class _Section:
    """Key-checked view over one parsed TOML table."""

    def __init__(self, name: str, data: dict):
        if not isinstance(data, dict):
            raise ParseError(f"section [{name}] must be a table")
        self.name = name
        self.data = dict(data)

    def take(self, key: str, default=_REQUIRED):
        if key in self.data:
            return self.data.pop(key)
        if default is _REQUIRED:
            raise ParseError(f"missing required key '{key}' in [{self.name}]")
        return default

    def finish(self):
        if self.data:
            extra = ", ".join(sorted(self.data))
            raise ParseError(f"unknown keys in [{self.name}]: {extra}")


def _float(name: str, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"'{name}' must be a number, got {value!r}")
    return float(value)


def _float_list(name: str, value) -> list[float]:
    if not isinstance(value, list):
        raise ParseError(f"'{name}' must be a list of numbers")
    return [_float(f"{name}[{i}]", v) for i, v in enumerate(value)]


def parse_scenario(path) -> NetworkScenario:
    """Load and validate a scenario file; see ParseError/ValidationError."""
    path = Path(path)
    try:
        raw = tomli.loads(path.read_text())
    except FileNotFoundError:
        raise ParseError(f"scenario file not found: {path}")
    except tomli.TOMLDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    try:
        return _build_scenario(raw, name=path.stem)
    except (ParseError, ValidationError):
        raise
    except DclinkError as exc:
        raise ValidationError(f"{path}: {type(exc).__name__}: {exc}") from exc
    except (ValueError, KeyError, IndexError) as exc:
        raise ValidationError(f"{path}: {exc}") from exc


def _build_scenario(raw: dict, name: str) -> NetworkScenario:
    top = _Section("scenario", raw)

    nominal = _Section("nominal", top.take("nominal"))
    nominal_params = ConverterParams(
        L=_float("L", nominal.take("L")),
        C=_float("C", nominal.take("C")),
        Vg=_float("Vg", nominal.take("Vg")),
        Vref=_float("Vref", nominal.take("Vref")),
    )
    nominal.finish()

    inner = _Section("inner", top.take("inner"))
    design = InnerLoopDesign(
        omega0=_float("omega0", inner.take("omega0")),
        omega_tilde=_float("omega_tilde", inner.take("omega_tilde")),
        zeta1=_float("zeta1", inner.take("zeta1")),
        zeta2=_float("zeta2", inner.take("zeta2")),
    )
    inner.finish()

    outer = _Section("outer", top.take("outer"))
    eta = _float("eta", outer.take("eta"))
    preset_name = outer.take("preset", None)
    preset = None
    if preset_name is not None:
        if preset_name not in list_presets():
            raise ValidationError(
                f"unknown preset {preset_name!r}; available: {', '.join(list_presets())}"
            )
        preset = load_preset(preset_name)
        ctrl = OuterControllers(
            kv=preset.controllers.kv, kr=preset.controllers.kr, eta=eta
        )
        outer.finish()
    else:
        kv = RationalFunction(
            _float_list("kv_num", outer.take("kv_num")),
            _float_list("kv_den", outer.take("kv_den")),
        )
        kr = RationalFunction(
            _float_list("kr_num", outer.take("kr_num")),
            _float_list("kr_den", outer.take("kr_den")),
        )
        ctrl = OuterControllers(kv=kv, kr=kr, eta=eta)
        outer.finish()

    conv_raw = top.take("converters")
    if not isinstance(conv_raw, list) or not conv_raw:
        raise ParseError("[[converters]] must list at least one converter")
    units = []
    for i, entry in enumerate(conv_raw):
        sec = _Section(f"converters[{i}]", entry)
        kind_name = sec.take("kind", "boost")
        try:
            kind = ConverterKind(kind_name)
        except ValueError:
            raise ValidationError(f"converter {i}: unknown kind {kind_name!r}")
        params = ConverterParams(
            L=_float("L", sec.take("L")),
            C=_float("C", sec.take("C")),
            Vg=_float("Vg", sec.take("Vg")),
            Vref=_float("Vref", sec.take("Vref", nominal_params.Vref)),
            kind=kind,
        )
        sec.finish()
        units.append(ConverterUnit(params=params, design=design))

    shares_raw = top.take("shares")
    if not isinstance(shares_raw, list) or not shares_raw:
        raise ParseError("[[shares]] must list at least one breakpoint")
    breakpoints = []
    for i, entry in enumerate(shares_raw):
        sec = _Section(f"shares[{i}]", entry)
        breakpoints.append(
            (_float("t", sec.take("t")), _float_list("gammas", sec.take("gammas")))
        )
        sec.finish()
    share = ShareSchedule(breakpoints)
    share.validate()

    sim = _Section("sim", top.take("sim"))
    horizon = _float("horizon", sim.take("horizon"))
    dt = _float("dt", sim.take("dt", 2e-5))
    seed = int(sim.take("seed", 0))
    log_every = int(sim.take("log_every", 1))
    sim.finish()
    if horizon <= 0:
        raise ValidationError("sim.horizon must be positive")
    if log_every < 1:
        raise ValidationError("sim.log_every must be >= 1")

    load_sec = _Section("load", top.take("load"))
    pv_source = load_sec.take("pv", "none")
    vref = units[0].params.Vref
    if pv_source == "none":
        pv = None
    elif pv_source == "synthetic":
        pv = synthetic_pv_trace(vref=vref, duration=horizon)
    else:
        pv_path = Path(pv_source)
        if not pv_path.is_absolute():
            pv_path = Path(pv_source)
        data = np.loadtxt(pv_path, dtype=float)
        if data.ndim != 2 or data.shape[1] != 2:
            raise ValidationError(f"PV trace {pv_source!r} must have two columns")
        pv = tuple((float(a), float(b)) for a, b in data)
    steps = [
        (_float("steps.t", t), _float("steps.power", p))
        for t, p in load_sec.take("steps", [])
    ]
    load = LoadProfile(
        base_power=_float("base_power", load_sec.take("base_power")),
        square_amp=_float("square_amp", load_sec.take("square_amp", 0.0)),
        square_freq=_float("square_freq", load_sec.take("square_freq", 0.0)),
        steps=tuple(steps),
        pv_current=pv,
        min_voltage=_float("min_voltage", load_sec.take("min_voltage", 100.0)),
    )
    load_sec.finish()

    noise_sec = _Section("noise", top.take("noise", {"offsets": [], "relative": []}))
    offsets = _float_list("offsets", noise_sec.take("offsets", []))
    relative = _float_list("relative", noise_sec.take("relative", []))
    if not offsets:
        offsets = [0.0] * len(units)
    if not relative:
        relative = [0.0] * len(units)
    if len(offsets) != len(units) or len(relative) != len(units):
        raise ValidationError("noise lists must match the converter count")
    noise = NoiseModel(tuple(offsets), tuple(relative), seed=seed)
    noise_sec.finish()

    mode_sec = _Section("mode", top.take("mode"))
    mode_kind = mode_sec.take("kind")
    iref = _float("iref", mode_sec.take("iref", 0.0))
    mode_sec.finish()
    if mode_kind == "centralized":
        mode = SimMode.central()
    elif mode_kind == "decentralized":
        mode = SimMode.decentral(iref)
    else:
        raise ValidationError(f"mode.kind must be centralized/decentralized, got {mode_kind!r}")

    out_sec = _Section("outputs", top.take("outputs", {}))
    windows_raw = out_sec.take("windows", [])
    windows = tuple(
        (float(a), float(b)) for a, b in
        (w if isinstance(w, list) else list(w) for w in windows_raw)
    )
    out_sec.finish()
    top.finish()

    net = ConverterNetwork(
        units=tuple(units), ctrl=ctrl, share=share,
        nominal=nominal_params, inner=design,
    )
    return NetworkScenario(
        name=name, net=net, load=load, noise=noise, mode=mode,
        horizon=horizon, dt=dt, log_every=log_every, windows=windows,
        preset=preset, pv_source=str(pv_source), source=raw,
    )


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        r = repr(v)
        if "e" not in r and "." not in r and "inf" not in r and "nan" not in r:
            r += ".0"
        return r
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v).__name__}")


def _canonical_dict(sc: NetworkScenario) -> dict:
    nominal = sc.net.nominal
    design = sc.net.inner
    d: dict[str, Any] = {
        "nominal": {
            "L": nominal.L, "C": nominal.C, "Vg": nominal.Vg, "Vref": nominal.Vref,
        },
        "inner": {
            "omega0": design.omega0, "omega_tilde": design.omega_tilde,
            "zeta1": design.zeta1, "zeta2": design.zeta2,
        },
    }
    outer: dict[str, Any] = {"eta": sc.net.ctrl.eta}
    if sc.preset is not None:
        outer["preset"] = sc.preset.name
    else:
        outer["kv_num"] = list(sc.net.ctrl.kv.num.coeffs)
        outer["kv_den"] = list(sc.net.ctrl.kv.den.coeffs)
        outer["kr_num"] = list(sc.net.ctrl.kr.num.coeffs)
        outer["kr_den"] = list(sc.net.ctrl.kr.den.coeffs)
    d["outer"] = outer
    d["converters"] = [
        {
            "kind": u.params.kind.value, "L": u.params.L, "C": u.params.C,
            "Vg": u.params.Vg, "Vref": u.params.Vref,
        }
        for u in sc.net.units
    ]
    d["shares"] = [
        {"t": t, "gammas": list(g)} for t, g in sc.net.share.breakpoints
    ]
    d["load"] = {
        "base_power": sc.load.base_power,
        "square_amp": sc.load.square_amp,
        "square_freq": sc.load.square_freq,
        "steps": [list(s) for s in sc.load.steps],
        "pv": sc.pv_source,
        "min_voltage": sc.load.min_voltage,
    }
    d["noise"] = {
        "offsets": list(sc.noise.dc_offsets),
        "relative": list(sc.noise.relative_noise),
    }
    d["mode"] = {
        "kind": "centralized" if sc.mode.centralized else "decentralized",
        "iref": sc.mode.iref,
    }
    d["sim"] = {
        "horizon": sc.horizon, "dt": sc.dt, "seed": sc.noise.seed,
        "log_every": sc.log_every,
    }
    d["outputs"] = {"windows": [list(w) for w in sc.windows]}
    return d


def serialize_scenario(sc: NetworkScenario) -> str:
    """Emit the canonical TOML text; parse(serialize(parse(f))) is stable."""
    d = _canonical_dict(sc)
    lines: list[str] = []
    for section in ("nominal", "inner", "outer"):
        lines.append(f"[{section}]")
        for k, v in d[section].items():
            lines.append(f"{k} = {_toml_value(v)}")
        lines.append("")
    for conv in d["converters"]:
        lines.append("[[converters]]")
        for k, v in conv.items():
            lines.append(f"{k} = {_toml_value(v)}")
        lines.append("")
    for bp in d["shares"]:
        lines.append("[[shares]]")
        for k, v in bp.items():
            lines.append(f"{k} = {_toml_value(v)}")
        lines.append("")
    for section in ("load", "noise", "mode", "sim", "outputs"):
        lines.append(f"[{section}]")
        for k, v in d[section].items():
            lines.append(f"{k} = {_toml_value(v)}")
        lines.append("")
    return "\n".join(lines)

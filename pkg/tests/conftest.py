import numpy as np
import pytest

from dclink.converters import ConverterParams
from dclink.network import ConverterNetwork, ConverterUnit, ShareSchedule
from dclink.outer import load_preset
from dclink.sim import LoadProfile, NoiseModel, SimMode, simulate, synthetic_pv_trace

VI_INDUCTANCES = (0.096e-3, 0.12e-3, 0.14e-3)
VI_SOURCES = (135.0, 125.0, 130.0)
VI_LINK_C = 400e-6
VI_VREF = 250.0
VI_NOISE_OFFSETS = (2.0, -2.0, 3.0)
VI_NOISE_REL = (0.0005, 0.0, 0.0)
VI_SHARES = ((0.0, (1 / 3, 1 / 3, 1 / 3)), (2.0, (0.5, 0.2, 0.3)))


@pytest.fixture(scope="session")
def preset():
    return load_preset("paper-vi")


def build_case_network(preset, m: int = 3, shares=VI_SHARES) -> ConverterNetwork:
    inductances = list(VI_INDUCTANCES) * 3
    sources = list(VI_SOURCES) * 3
    units = tuple(
        ConverterUnit(
            ConverterParams(L=inductances[k], C=VI_LINK_C, Vg=sources[k], Vref=VI_VREF),
            preset.inner,
        )
        for k in range(m)
    )
    return ConverterNetwork(
        units=units, ctrl=preset.controllers, share=ShareSchedule(shares),
        nominal=preset.nominal, inner=preset.inner,
    )


def case_load(pv: bool = True, horizon: float = 19.5) -> LoadProfile:
    return LoadProfile(
        base_power=5000.0,
        square_amp=2000.0,
        square_freq=1.0,
        pv_current=synthetic_pv_trace(vref=VI_VREF, duration=horizon) if pv else None,
    )


def case_noise(seed: int = 42) -> NoiseModel:
    return NoiseModel(VI_NOISE_OFFSETS, VI_NOISE_REL, seed=seed)


@pytest.fixture(scope="session")
def vi_network(preset):
    return build_case_network(preset)


@pytest.fixture(scope="session")
def central_noisy_trace(vi_network):
    return simulate(
        vi_network, case_load(), case_noise(), SimMode.central(),
        horizon=19.5, dt=2e-5, log_every=5,
    )


@pytest.fixture(scope="session")
def central_clean_trace(vi_network):
    return simulate(
        vi_network, case_load(), NoiseModel.silent(3), SimMode.central(),
        horizon=19.5, dt=2e-5, log_every=5,
    )


@pytest.fixture(scope="session")
def decentral_noisy_trace(vi_network):
    return simulate(
        vi_network, case_load(), case_noise(), SimMode.decentral(20.0),
        horizon=19.5, dt=2e-5, log_every=5,
    )


@pytest.fixture(scope="session")
def decentral_clean_nopv_trace(vi_network):
    return simulate(
        vi_network, case_load(pv=False), NoiseModel.silent(3), SimMode.decentral(20.0),
        horizon=19.5, dt=2e-5, log_every=5,
    )


def random_stable_rational(rng: np.random.Generator, max_order: int = 5,
                           biproper: bool = False):
    """Random stable SISO transfer function with resolvable resonances.

    Pole magnitudes stay inside [1e-1, 1e4] and damping at or above 0.05 so
    grid-based peak searches on [1e-2, 1e6] rad/s are valid.
    """
    from dclink.lti import RationalFunction, poly_from_roots

    n = int(rng.integers(1, max_order + 1))
    poles = []
    while len(poles) < n:
        if n - len(poles) >= 2 and rng.random() < 0.6:
            wn = 10.0 ** rng.uniform(-1, 4)
            zeta = rng.uniform(0.05, 0.95)
            re = -zeta * wn
            im = wn * np.sqrt(1 - zeta**2)
            poles += [complex(re, im), complex(re, -im)]
        else:
            poles.append(complex(-(10.0 ** rng.uniform(-1, 4)), 0.0))
    nz = n if biproper else int(rng.integers(0, n))
    zeros = []
    while len(zeros) < nz:
        if nz - len(zeros) >= 2 and rng.random() < 0.5:
            wn = 10.0 ** rng.uniform(-1, 4)
            zeta = rng.uniform(0.05, 0.95)
            re = -zeta * wn
            zeros += [
                complex(re, wn * np.sqrt(1 - zeta**2)),
                complex(re, -wn * np.sqrt(1 - zeta**2)),
            ]
        else:
            zeros.append(complex(-(10.0 ** rng.uniform(-1, 4)), 0.0))
    gain = float(rng.uniform(0.1, 10.0)) * (1 if rng.random() < 0.5 else -1)
    num = poly_from_roots(zeros, gain)
    den = poly_from_roots(poles, 1.0)
    return RationalFunction(num, den)

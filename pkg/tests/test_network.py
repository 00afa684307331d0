import numpy as np
import pytest

from dclink.converters import ConverterParams
from dclink.errors import ShareSumViolation
from dclink.lti import dc_gain, freq_response, log_grid
from dclink.network import (
    ConverterNetwork,
    ConverterUnit,
    ShareSchedule,
    equivalence_max_error,
    multi_converter_response,
    per_converter_current,
    reduce_to_equivalent,
    sharing_bound,
    t_tilde_1,
    t_tilde_2,
    total_current_transfer,
)
from dclink.outer import build_closed_loop

from conftest import build_case_network


class TestShareSchedule:
    def test_piecewise_lookup(self):
        s = ShareSchedule([(0.0, (0.5, 0.5)), (2.0, (0.7, 0.3))])
        assert s.gamma_at(0.0) == (0.5, 0.5)
        assert s.gamma_at(1.999) == (0.5, 0.5)
        assert s.gamma_at(2.0) == (0.7, 0.3)
        assert s.gamma_at(100.0) == (0.7, 0.3)

    def test_sum_violation(self):
        s = ShareSchedule([(0.0, (0.5, 0.2, 0.2))])
        with pytest.raises(ShareSumViolation):
            s.validate()

    def test_zero_share_rejected(self):
        s = ShareSchedule([(0.0, (1.0, 0.0))])
        with pytest.raises(ShareSumViolation):
            s.validate()

    def test_times_must_increase(self):
        with pytest.raises(ValueError):
            ShareSchedule([(1.0, (1.0,)), (0.5, (1.0,))])


class TestEquivalence:
    def test_degenerate_single_converter(self, preset):
        net = build_case_network(preset, m=1, shares=((0.0, (1.0,)),))
        eq = reduce_to_equivalent(net)
        direct = build_closed_loop(
            net.nominal_gc(), net.nominal_gv(), net.nominal.dprime, net.ctrl
        )
        om = log_grid(1e-2, 1e6, 60)
        np.testing.assert_allclose(
            freq_response(eq.t_vref_v, om).values,
            freq_response(direct.t_vref_v, om).values,
            rtol=1e-12,
        )
        assert equivalence_max_error(net) <= 1e-8

    @pytest.mark.parametrize("m", [2, 3, 5, 8])
    def test_multi_converter_matches_equivalent(self, preset, m):
        rng = np.random.default_rng(100 + m)
        raw = rng.uniform(0.2, 1.0, size=m)
        gammas = tuple(raw / raw.sum())
        net = build_case_network(preset, m=m, shares=((0.0, gammas),))
        assert equivalence_max_error(net, gammas=gammas) <= 1e-8

    def test_share_sum_violation_raises(self, preset):
        net = build_case_network(preset, m=3, shares=((0.0, (0.5, 0.2, 0.2)),))
        with pytest.raises(ShareSumViolation):
            reduce_to_equivalent(net)

    def test_broken_sum_breaks_equivalence(self, preset):
        # the identity genuinely needs the shares to sum to one
        net = build_case_network(preset, m=3)
        om = log_grid(1e-2, 1e6, 100)
        eq = reduce_to_equivalent(net)
        bad = multi_converter_response(net, om, gammas=(0.5, 0.2, 0.2))
        ref = freq_response(eq.t_vref_v, om).values
        err = np.max(np.abs(bad["from_vref"] - ref) / np.abs(ref))
        assert err > 1e-3


class TestPerConverterCurrents:
    def test_conservation(self, vi_network):
        om = log_grid(1e-2, 1e6, 120)
        s = 1j * om
        tot = total_current_transfer(vi_network)
        acc_r = np.zeros_like(s)
        acc_e = np.zeros_like(s)
        for k in range(vi_network.m):
            pc = per_converter_current(vi_network, k, at_time=3.0)
            acc_r += pc["from_iref"](s)
            acc_e += pc["from_e1"](s)
        np.testing.assert_allclose(acc_r, tot["from_iref"](s), rtol=1e-8)
        np.testing.assert_allclose(acc_e, tot["from_e1"](s), rtol=1e-8)

    def test_dc_ratio_sharing(self, vi_network):
        # with zero voltage error the steady currents split exactly as gamma
        g = vi_network.share.gamma_at(3.0)
        i0 = dc_gain(per_converter_current(vi_network, 0, at_time=3.0)["from_iref"])
        i1 = dc_gain(per_converter_current(vi_network, 1, at_time=3.0)["from_iref"])
        assert abs(i0 / i1 - g[0] / g[1]) < 1e-9

    def test_zero_share_limit(self, preset):
        net = build_case_network(preset, m=2, shares=((0.0, (1.0, 1e-12)),))
        pc = per_converter_current(net, 1)
        assert abs(dc_gain(pc["from_iref"])) < 1e-9
        want = t_tilde_2(net)
        om = log_grid(1e-1, 1e5, 40)
        np.testing.assert_allclose(
            pc["from_e1"](1j * om), want(1j * om), rtol=1e-6
        )


class TestSharingBound:
    def test_zero_error_means_exact_sharing(self, vi_network):
        assert sharing_bound(vi_network, 0, 1, 0.0) == 0.0

    def test_equal_shares_drop_second_term(self, preset):
        net = build_case_network(preset, m=2, shares=((0.0, (0.5, 0.5)),))
        t1 = abs(dc_gain(t_tilde_1(net)))
        got = sharing_bound(net, 0, 1, 5.0)
        assert abs(got - net.ctrl.eta * t1 * 5.0) < 1e-12

    def test_case_study_value(self, vi_network):
        t1 = abs(dc_gain(t_tilde_1(vi_network)))
        t2 = abs(dc_gain(t_tilde_2(vi_network)))
        # second schedule phase: gammas (0.5, 0.2)
        want = (vi_network.ctrl.eta * t1 + abs(1 / 0.5 - 1 / 0.2) * t2) * 5.0
        got = sharing_bound(vi_network, 0, 1, 5.0, at_time=3.0)
        assert abs(got - want) < 1e-12

    def test_remark_design_property(self, vi_network):
        assert abs(dc_gain(t_tilde_1(vi_network))) <= 1.0
        assert abs(dc_gain(t_tilde_2(vi_network))) <= 1.0


class TestNetworkConstruction:
    def test_mismatched_design_rejected(self, preset):
        from dclink.inner import InnerLoopDesign

        other = InnerLoopDesign(
            omega_tilde=preset.inner.omega_tilde * 1.5,
            zeta1=preset.inner.zeta1,
            zeta2=preset.inner.zeta2,
            omega0=preset.inner.omega0,
        )
        units = (
            ConverterUnit(
                ConverterParams(L=0.12e-3, C=400e-6, Vg=125.0, Vref=250.0),
                other,
            ),
        )
        with pytest.raises(ValueError):
            ConverterNetwork(
                units=units, ctrl=preset.controllers,
                share=ShareSchedule([(0.0, (1.0,))]),
                nominal=preset.nominal, inner=preset.inner,
            )

    def test_schedule_width_checked(self, preset):
        units = (
            ConverterUnit(
                ConverterParams(L=0.12e-3, C=400e-6, Vg=125.0, Vref=250.0),
                preset.inner,
            ),
        )
        with pytest.raises(ValueError):
            ConverterNetwork(
                units=units, ctrl=preset.controllers,
                share=ShareSchedule([(0.0, (0.5, 0.5))]),
                nominal=preset.nominal, inner=preset.inner,
            )

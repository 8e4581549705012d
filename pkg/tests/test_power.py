import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eeplan.power import (
    SystemConfig,
    apc_zf_coefficients,
    circuit_power,
    combiner_power,
    energy_efficiency,
    evaluate_design,
    transmit_power,
)

C = 4e-7  # 3 B_w / (tau_c L_BS) at the default hardware


def test_derived_constants(config):
    assert config.rho == pytest.approx(10.0)
    assert config.P0 == pytest.approx(10**-12.4 * 10**0.5)
    assert config.flop_cost == pytest.approx(C)


def test_transmit_power_zero_U(config):
    assert transmit_power(config, 10, 2, 10, 0.0) == 0.0


def test_transmit_power_all_pilot_limit():
    cfg = SystemConfig(xi=1.0, SNRp=10**0.5)
    assert transmit_power(cfg, 10, 20, 10, 1.3) == pytest.approx(10 * 1.3)


def test_transmit_power_hand_value(config):
    U = 1.6471389999671724
    expected = (config.xi * (200 - 20) + 10 * 20) / 200 * 10 * U
    assert transmit_power(config, 10, 2, 10, U) == pytest.approx(expected, rel=1e-14)


def test_transmit_power_rejects_long_pilots(config):
    with pytest.raises(ValueError):
        transmit_power(config, 10, 30, 10, 1.0)


def test_combiner_power_rows(config):
    assert combiner_power("mr", 100, 10, 2, config) == pytest.approx(C * 7 / 3 * 10)
    assert combiner_power("mr", 100, 10, 2, config) == pytest.approx(9.33e-6, rel=1e-3)
    cp = circuit_power("zf", 100, 10, 2, 1.0, config)
    assert cp.P_CE == pytest.approx(8.4e-3)


def test_circuit_terms_sum(config):
    cp = circuit_power("mmse", 64, 8, 3, 1.2, config, lambda_=10)
    parts = cp.P_FIX + cp.P_TC + cp.P_C_BH + cp.P_CE + cp.P_LP_r + cp.P_LP_c
    assert cp.total == pytest.approx(parts)


def test_backhaul_uses_gbit_units(config):
    cp = circuit_power("mr", 10, 1, 1, 1.0, config)
    assert cp.P_C_BH == pytest.approx(20e6 * 1.0 / 1e9 * 0.115)


def test_unknown_scheme(config):
    with pytest.raises(ValueError):
        circuit_power("rzf", 10, 2, 1, 1.0, config)


def test_zero_se_gives_zero_ee(config):
    b = energy_efficiency(10, 10, 0.0, 1.0, 30.0, config)
    assert b.ase == 0 and b.ee == 0


def test_ee_identity(config):
    b = energy_efficiency(7, 10, 1.3, 2.0, 40.0, config)
    assert b.ee == config.B_w * b.ase / b.apc
    assert b.apc == pytest.approx(7 * (2.0 / 0.5 + 40.0))


def test_zero_apc_rejected(config):
    with pytest.raises(ValueError):
        energy_efficiency(1, 1, 1.0, 0.0, 0.0, config)


def test_bandwidth_does_not_cancel(config):
    a = evaluate_design("zf", 2, 100, 10, 1.0, 10, 0.1, config)
    b = evaluate_design("zf", 2, 100, 10, 1.0, 10, 0.1, config.replace(B_w=40e6))
    assert b.ee / a.ee != pytest.approx(2.0, rel=1e-3)
    assert b.ee / a.ee != pytest.approx(1.0, rel=1e-3)


def test_coefficient_constants(config):
    co = apc_zf_coefficients(config, 10, 0.1)
    assert co.C0 == pytest.approx(5.1)
    assert co.D0 == pytest.approx(0.2)
    assert co.A == pytest.approx(0.115)
    assert co.C3 == pytest.approx(1.333e-7, rel=1e-3)


@settings(max_examples=100, deadline=None)
@given(
    st.integers(2, 300), st.integers(1, 40), st.floats(1.0, 20.0), st.floats(0.0, 5.0),
    st.floats(0.1, 100.0), st.floats(0.0, 3.0), st.booleans(),
)
def test_coefficient_form_matches_term_form(M, K, zeta, se, lam, U, boost):
    cfg = SystemConfig(tx_pilot_boost=boost)
    if zeta * K >= cfg.tau_c:
        return
    term = evaluate_design("zf", zeta, M, K, se, lam, U, cfg)
    co = apc_zf_coefficients(cfg, lam, U)
    assert co.apc(lam, zeta, M, K, term.ase, cfg.B_w) == pytest.approx(term.apc, rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 200), st.integers(1, 50), st.floats(1.0, 4.0))
def test_combiner_ordering(M, K, zeta):
    cfg = SystemConfig()
    if M <= K:
        return
    mr, zf = combiner_power("mr", M, K, zeta, cfg), combiner_power("zf", M, K, zeta, cfg)
    mmse = combiner_power("mmse", M, K, zeta, cfg, lambda_=1.0)
    assert mmse >= zf >= mr


def test_apc_increasing_in_M_and_U(config):
    apcs = [evaluate_design("zf", 2, M, 10, 1.0, 10, 0.1, config).apc for M in range(11, 200, 10)]
    assert np.all(np.diff(apcs) > 0)
    by_U = [evaluate_design("zf", 2, 64, 10, 1.0, 10, U, config).apc for U in (0.0, 0.1, 1.0)]
    assert np.all(np.diff(by_U) > 0)


def test_ee_unit_invariance(config):
    # express power in mW and bandwidth in kHz: EE in bit/J must not move
    base = energy_efficiency(10, 10, 1.0, 2.0, 30.0, config)
    scaled = energy_efficiency(10, 10, 1.0, 2000.0, 30000.0, config.replace(B_w=config.B_w * 1e3))
    assert scaled.ee == pytest.approx(base.ee, rel=1e-12)


def test_config_validation():
    with pytest.raises(ValueError):
        SystemConfig(xi=0)
    with pytest.raises(ValueError):
        SystemConfig(eta=1.5)
    with pytest.raises(ValueError):
        SystemConfig(SNRp=1.0)
    with pytest.raises(ValueError):
        SystemConfig(P_BS=-1)

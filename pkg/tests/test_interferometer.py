import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from neutron_ks import algebra
from neutron_ks.errors import ConfigParse, PreparationUnavailable
from neutron_ks.interferometer import (
    InstrumentConfig,
    MeasurementContext,
    bell_discrimination_probability,
    fringe_curve,
    joint_probability,
    noisy_density_matrix,
    prepare_state,
    projection_target,
    scan_probability,
    setting_probability,
    standard_scans,
)
from neutron_ks.measurement import expectation_bell, expectation_from_counts

BELL = np.array([0, -1, 1, 0], dtype=complex) / np.sqrt(2)
angles = st.floats(-10, 10, allow_nan=False)
vis = st.floats(0, 1)


def oracle_joint(alpha, chi, rho=None):
    spin = np.array([1, np.exp(1j * alpha)]) / np.sqrt(2)
    path = np.array([1, np.exp(1j * chi)]) / np.sqrt(2)
    t = np.kron(spin, path)
    if rho is None:
        return abs(np.vdot(t, BELL)) ** 2
    return np.vdot(t, rho @ t).real


def oracle_bell(chi, rotator, rho=None):
    t = np.zeros(4, dtype=complex)
    if rotator == "pi":  # |down,I> + e^{i chi}|up,II>
        t[2], t[1] = 1, np.exp(1j * chi)
    else:  # |up,I> + e^{i chi}|down,II>
        t[0], t[3] = 1, np.exp(1j * chi)
    t /= np.sqrt(2)
    if rho is None:
        return abs(np.vdot(t, BELL)) ** 2
    return np.vdot(t, rho @ t).real


def test_prepare_state_is_bell():
    psi = prepare_state(InstrumentConfig())
    assert np.allclose(psi.amplitudes, BELL, atol=1e-15)
    assert algebra.expectation(algebra.tensor_observable("x", "x"), psi) == pytest.approx(-1, abs=1e-12)


def test_prepare_without_flipper_fails():
    with pytest.raises(PreparationUnavailable):
        prepare_state(InstrumentConfig(rf_flipper_I=False))


def test_joint_probability_spot_values():
    assert oracle_joint(0, 0) == pytest.approx(0, abs=1e-15)
    assert oracle_joint(math.pi, 0) == pytest.approx(0.5, abs=1e-15)
    assert joint_probability(0, 0, 1) == pytest.approx(0, abs=1e-15)
    assert joint_probability(math.pi, 0, 1) == pytest.approx(0.5, abs=1e-15)


def test_yy_setting_is_anticorrelated():
    # Spin along +y and path along +y are never jointly detected.
    assert joint_probability(math.pi / 2, math.pi / 2, 1) == pytest.approx(0, abs=1e-15)


def test_oracle_equivalence_grid():
    chis = np.linspace(0, 2 * math.pi, 64, endpoint=False)
    alphas = np.linspace(0, 2 * math.pi, 8, endpoint=False)
    for a in alphas:
        for c in chis:
            assert joint_probability(a, c, 1) == pytest.approx(oracle_joint(a, c), abs=1e-12)
    for c in chis:
        for rot in ("pi", "off"):
            assert bell_discrimination_probability(c, rot, 1) == pytest.approx(oracle_bell(c, rot), abs=1e-12)


@pytest.mark.parametrize("v", [0.0, 0.3, 0.679, 0.93, 1.0])
def test_closed_forms_match_mixed_state(v):
    rho_j = noisy_density_matrix("joint_xx_yy", v)
    rho_b = noisy_density_matrix("bell_discrimination", v)
    for rho in (rho_j, rho_b):
        assert np.trace(rho).real == pytest.approx(1)
        assert np.linalg.eigvalsh(rho).min() > -1e-12
    for c in np.linspace(0, 2 * math.pi, 13):
        for a in (0.0, 1.0, math.pi / 2):
            assert joint_probability(a, c, v) == pytest.approx(oracle_joint(a, c, rho_j), abs=1e-12)
        for rot in ("pi", "off"):
            assert bell_discrimination_probability(c, rot, v) == pytest.approx(oracle_bell(c, rot, rho_b), abs=1e-12)


def test_bell_projections():
    for chi in (math.pi / 2, -math.pi / 2):
        assert bell_discrimination_probability(chi, "pi", 1) == pytest.approx(0.5, abs=1e-12)
        assert bell_discrimination_probability(chi, "off", 1) == pytest.approx(0.0, abs=1e-12)


def test_bell_projection_targets_are_eigenstates():
    ctx_pi = MeasurementContext("bell_discrimination", "bell", 0.0, "pi")
    ctx_off = MeasurementContext("bell_discrimination", "bell", 0.0, "off")
    assert projection_target(ctx_pi, math.pi / 2).allclose(algebra.eigenstate("varphi", "+"))
    assert projection_target(ctx_pi, -math.pi / 2).allclose(algebra.eigenstate("varphi", "-"))
    assert projection_target(ctx_off, math.pi / 2).allclose(algebra.eigenstate("phi", "+"))
    assert projection_target(ctx_off, -math.pi / 2).allclose(algebra.eigenstate("phi", "-"))


@given(angles, angles, vis)
def test_probability_range_and_completeness(a, c, v):
    four = [joint_probability(a + da, c + dc, v) for da in (0, math.pi) for dc in (0, math.pi)]
    assert all(-1e-15 <= p <= 1 for p in four)
    assert sum(four) == pytest.approx(1, abs=1e-12)
    bell = [bell_discrimination_probability(c + dc, rot, v) for dc in (0, math.pi) for rot in ("pi", "off")]
    assert all(-1e-15 <= p <= 1 for p in bell)
    assert sum(bell) == pytest.approx(1, abs=1e-12)


@given(angles, angles, vis)
def test_visibility_linearity(a, c, v):
    expected = v * joint_probability(a, c, 1) + (1 - v) / 4
    assert joint_probability(a, c, v) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("v", [0.0, 0.5, 0.679, 0.682, 1.0])
def test_ideal_expectation_recovery(v):
    for a, c in [(0, 0), (math.pi / 2, math.pi / 2)]:
        n = [joint_probability(a, c, v), joint_probability(a + math.pi, c + math.pi, v),
             joint_probability(a + math.pi, c, v), joint_probability(a, c + math.pi, v)]
        assert expectation_from_counts(*n).value == pytest.approx(-v, abs=1e-12)
    q = [bell_discrimination_probability(c, rot, v) for rot in ("off", "pi") for c in (math.pi / 2, -math.pi / 2)]
    assert expectation_bell(*q).value == pytest.approx(-v, abs=1e-12)


def test_fringe_curve_joint_shape():
    ctx = MeasurementContext("joint_xx_yy", "xx", 0.0, "pi_half")
    curve = fringe_curve(ctx, np.linspace(0, 2 * math.pi, 9), InstrumentConfig().with_visibility(1.0))
    for chi, p in curve:
        assert p == pytest.approx((1 - math.cos(chi)) / 4, abs=1e-12)
    assert curve[0][1] == pytest.approx(0, abs=1e-15)


def test_fringe_curve_bell_channels():
    cfg = InstrumentConfig().with_visibility(1.0)
    grid = np.linspace(0, 2 * math.pi, 17)
    pi_curve = fringe_curve(MeasurementContext("bell_discrimination", "bell", 0.0, "pi"), grid, cfg)
    off_curve = fringe_curve(MeasurementContext("bell_discrimination", "bell", 0.0, "off"), grid, cfg)
    rates = np.array([p for _, p in pi_curve])
    assert rates.max() - rates.min() == pytest.approx(1.0)
    assert all(p == 0 for _, p in off_curve)


def test_fringe_curve_rejects_empty_grid():
    with pytest.raises(ValueError):
        fringe_curve(standard_scans()[0], [], InstrumentConfig())


def test_background_only_in_off_channel():
    cfg = InstrumentConfig(background=0.01)
    pi, off = standard_scans()[4:]
    assert scan_probability(off, 0.3, cfg) == pytest.approx((1 - 0.93) / 4 + 0.01)
    assert scan_probability(pi, 0.3, cfg) == pytest.approx(bell_discrimination_probability(0.3, "pi", 0.93))


def test_custom_state_uses_exact_projections():
    up_I = algebra.basis_state("up", "I")
    ctx = standard_scans()[0]
    p = scan_probability(ctx, np.array([0.0, 1.0]), InstrumentConfig(), state=up_I)
    assert np.allclose(p, 0.25)


def test_standard_scans_contexts():
    scans = standard_scans()
    assert len(scans) == 6
    assert all(not s.flipper_II for s in scans if s.id == "joint_xx_yy")
    assert all(s.flipper_II for s in scans if s.id == "bell_discrimination")
    with pytest.raises(ValueError):
        MeasurementContext("joint_xx_yy", "bell", 0.0, "pi")


def test_setting_probability():
    cfg = InstrumentConfig(alpha=math.pi, chi=0.0)
    assert setting_probability(cfg) == pytest.approx(joint_probability(math.pi, 0.0, 0.679))
    cfg = InstrumentConfig(rf_flipper_II=True, dc_rotator="off")
    assert setting_probability(cfg) == pytest.approx((1 - 0.93) / 4)


def test_config_round_trip():
    cfg = InstrumentConfig(chi=0.25, alpha=1.5, dc_rotator="pi", rf_flipper_II=True, background=0.002)
    assert InstrumentConfig.from_text(cfg.to_text()) == cfg


def test_config_degrees_and_comments():
    text = """
    # Bell discrimination setting
    flipper_II = on
    rotator = pi
    chi = 90deg   # phase shifter
    alpha = 0.5
    visibility_bell = 0.9
    """
    cfg = InstrumentConfig.from_text(text)
    assert cfg.chi == pytest.approx(math.pi / 2)
    assert cfg.alpha == 0.5
    assert cfg.rf_flipper_II and cfg.dc_rotator == "pi"
    assert cfg.visibility_bell == 0.9


@pytest.mark.parametrize("text", [
    "nonsense",
    "unknown_key = 1",
    "visibility_xx = 1.5",
    "rotator = sideways",
    "chi = 10grad",
    "flipper_I = maybe",
])
def test_config_errors(text):
    with pytest.raises(ConfigParse):
        InstrumentConfig.from_text(text)

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gcqw.analytics import bessel_j0
from gcqw.bloch import (ModeLattice, check_recursive_equation, closed_form_bloch, default_n_max,
                        discrete_vs_continuum, integrate_coupled_modes, recursion_residuals,
                        trajectory)
from gcqw.errors import DomainError, TruncationError, UnsupportedError, ValidationError
from gcqw.walk import CoinSpec, CoinVariant, InitialState, PhaseProfile, WalkConfig

SQ = math.sqrt(0.5)


def sym_config(D, phase, N=120, coin=(1, 0)):
    return WalkConfig(N, CoinSpec.from_probability(D, CoinVariant.SYMMETRIC), phase,
                      InitialState(0, coin))


# --- two-step recursion -----------------------------------------------------

@pytest.mark.parametrize("D,phase", [
    (0.0, PhaseProfile.harmonic(1, 10)),
    (0.5, PhaseProfile.harmonic(1, 10)),
    (0.5, PhaseProfile.constant()),
    (0.3, PhaseProfile.irrational(0.5)),
    (0.9, PhaseProfile.table(np.random.default_rng(3).uniform(0, 6, 120))),
])
@pytest.mark.parametrize("coin", [(1, 0), (0, 1), (SQ, 1j * SQ)])
def test_general_recursion_holds(D, phase, coin):
    config = sym_config(D, phase, coin=coin)
    assert check_recursive_equation(trajectory(config, 50), config) < 1e-12


def test_printed_recursion_exact_for_first_component_only():
    config = sym_config(0.5, PhaseProfile.irrational(2 * math.pi / 10), coin=(SQ, SQ))
    res = recursion_residuals(trajectory(config, 50), config, form="printed")
    assert res[:, 0].max() < 1e-12
    assert res[:, 1].max() > 0.1


def test_recursion_requires_symmetric_coin():
    config = WalkConfig(40, CoinSpec(0.5), PhaseProfile.harmonic(1, 4))
    with pytest.raises(UnsupportedError):
        check_recursive_equation(trajectory(config, 5), config)


def test_recursion_input_validation():
    config = sym_config(0.5, PhaseProfile.harmonic(1, 10))
    traj = trajectory(config, 4)
    with pytest.raises(DomainError):
        check_recursive_equation(traj[:2], config)
    with pytest.raises(DomainError):
        check_recursive_equation([traj[0], traj[2], traj[3]], config)
    with pytest.raises(DomainError):
        check_recursive_equation(traj, config, form="other")
    table = sym_config(0.5, PhaseProfile.table(np.zeros(120)))
    with pytest.raises(UnsupportedError):
        check_recursive_equation(trajectory(table, 3), table, form="printed")


# --- coupled-mode equation --------------------------------------------------

def test_closed_form_bloch_values():
    assert closed_form_bloch(0.5, 4 * math.pi, 0.0) == 1.0
    assert closed_form_bloch(0.5, 4 * math.pi, 4 * math.pi) == pytest.approx(1.0, abs=1e-14)
    # t = T~/2: J0(d T~/pi)**2 = J0(2)**2
    expected = float(mpmath.besselj(0, 2)) ** 2
    assert closed_form_bloch(0.5, 4 * math.pi, 2 * math.pi) == pytest.approx(expected, abs=1e-14)
    np.testing.assert_allclose(closed_form_bloch(0.7, math.inf, [0, 1, 3]), bessel_j0(0.7 * np.array([0, 1, 3])) ** 2)
    with pytest.raises(DomainError):
        closed_form_bloch(0.5, 0.0, 1.0)


def test_mode_lattice_rhs():
    lat = ModeLattice.localized(5, 0.3, 0.4)
    a = lat.amplitudes.copy()
    rhs = lat.rhs(a)
    # only the neighbours of the origin are driven, at rate i d / 2
    assert rhs[5] == 0
    assert rhs[4] == pytest.approx(0.2j) and rhs[6] == pytest.approx(0.2j)
    assert lat.norm == 1.0 and lat.edge_population == 0.0


def test_ode_trivial_coupling():
    series = integrate_coupled_modes(0.5, 0.0, 10.0)
    np.testing.assert_allclose(series.as_array(), 1.0, atol=1e-14)


@pytest.mark.parametrize("d,T_tilde", [(0.3, 8.0), (0.5, 4 * math.pi), (0.9, 20.0)])
def test_ode_matches_closed_form(d, T_tilde):
    Phi = 2 * math.pi / T_tilde
    series = integrate_coupled_modes(Phi, d, 3 * T_tilde, output_step=T_tilde / 40)
    t = np.asarray(series.t)
    assert np.max(np.abs(series.as_array() - closed_form_bloch(d, T_tilde, t))) < 1e-6


def test_ode_zero_gradient_limit():
    series = integrate_coupled_modes(0.0, 0.6, 20.0, output_step=0.5)
    t = np.asarray(series.t)
    np.testing.assert_allclose(series.as_array(), bessel_j0(0.6 * t) ** 2, atol=1e-8)


def test_ode_output_grid():
    series = integrate_coupled_modes(1.0, 0.4, 5.0, output_step=0.5)
    np.testing.assert_allclose(series.t, np.arange(0, 5.01, 0.5), atol=1e-12)


def test_ode_truncation_error():
    with pytest.raises(TruncationError) as info:
        integrate_coupled_modes(0.0, 1.0, 30.0, n_max=5)
    assert info.value.details["required_n_max"] == 10


def test_ode_step_doubling_guard():
    with pytest.raises(ValidationError) as info:
        integrate_coupled_modes(1.0, 0.9, 30.0, dt=0.02)
    assert info.value.check == "step_doubling"


def test_ode_norm_drift_guard():
    with pytest.raises(ValidationError) as info:
        integrate_coupled_modes(0.3, 0.5, 30.0, dt=0.1)
    assert info.value.check == "norm_drift"


def test_ode_input_validation():
    with pytest.raises(DomainError):
        integrate_coupled_modes(1.0, 1.5, 1.0)
    with pytest.raises(DomainError):
        integrate_coupled_modes(1.0, 0.5, -1.0)
    with pytest.raises(DomainError):
        integrate_coupled_modes(1.0, 0.5, 1.0, dt=0.0)


def test_default_n_max():
    assert default_n_max(0.5, 10.0, 100) == 25
    assert default_n_max(0.5, math.inf, 100) == 70


@settings(max_examples=10, deadline=None)
@given(st.floats(0.05, 1.0), st.floats(4.0, 20.0))
def test_ode_property_matches_closed_form(d, T_tilde):
    series = integrate_coupled_modes(2 * math.pi / T_tilde, d, T_tilde, output_step=T_tilde / 8,
                                     check_doubling=False)
    t = np.asarray(series.t)
    assert np.max(np.abs(series.as_array() - closed_form_bloch(d, T_tilde, t))) < 1e-6


# --- discrete against continuum ---------------------------------------------

def test_commensurate_peaks_align():
    cmp = discrete_vs_continuum(0.25, 2 * math.pi / 10, 100)
    assert [ev.t for ev in cmp.recurrences] == list(range(10, 101, 10))
    assert all(off == 0 for off in cmp.peak_offsets)


def test_non_integer_period_peaks_sit_beside_kT():
    cmp = discrete_vs_continuum(0.1, 0.5, 60)
    assert len(cmp.recurrences) == 4
    for ev in cmp.recurrences:
        assert ev.t % 2 == 0
        assert abs(ev.t - ev.predicted_t) < 2


def test_small_coupling_tracks_continuum():
    cmp = discrete_vs_continuum(0.01, 2 * math.pi / 10, 30)
    assert cmp.max_deviation < 0.01


def test_moderate_coupling_deviation_reported():
    cmp = discrete_vs_continuum(0.25, 2 * math.pi / 10, 30)
    assert 0 < cmp.max_deviation < 0.2


def test_localized_spread_is_bounded():
    Phi = 2 * math.pi / (4 * math.pi)
    cmp = discrete_vs_continuum(0.5, Phi, 300)
    assert cmp.max_sigma < 1.1 * cmp.sigma_max_formula
    late = cmp.sigma[cmp.t > 150].max()
    assert late <= cmp.max_sigma + 1e-12


def test_discrete_vs_continuum_validation():
    with pytest.raises(DomainError):
        discrete_vs_continuum(0.5, 0.0, 10)
    with pytest.raises(DomainError):
        discrete_vs_continuum(1.5, 1.0, 10)

import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from reference import dual_forms, random_params
from vibronic.hardware import (
    CircuitParams, DispersiveWarning, SingularityError, ancilla_frequency, chi, chi_from_participation,
    chi_prime, derived_table, detuning_for_chi, driven_kerr_shift, f_poly, g_beamsplitter, g_squeeze,
)

TWO_PI = 2 * math.pi


def test_dual_forms_agree_on_random_sets():
    rng = np.random.default_rng(12345)
    worst = 0.0
    checked = 0
    for _ in range(1000):
        try:
            p = random_params(rng)
            forms = list(dual_forms(p))
        except SingularityError:
            continue
        for _, raw, sub in forms:
            worst = max(worst, abs(raw - sub) / max(abs(raw), abs(sub)))
        checked += 1
    assert checked > 990
    assert worst < 1e-12


def test_f_normalization():
    assert f_poly(1.0) == pytest.approx(76 / 60, rel=1e-15)
    assert f_poly(0.0) == pytest.approx(1.0)


def test_chi_examples():
    assert chi(0.0, 1.0, 0.2) == 0.0
    g, d = 0.01, 1.0
    assert chi(g, d, 1e-9) == pytest.approx(2e-9 * (g / d) ** 2, rel=1e-6)
    with pytest.raises(SingularityError):
        chi(0.1, 0.0, 0.2)
    with pytest.raises(SingularityError):
        chi(0.1, -0.2, 0.2)


def test_participation_fit_reproduces_748khz():
    target = TWO_PI * 748e3
    K = TWO_PI * 150e6
    delta = detuning_for_chi(target, 0.003, K)
    g = math.sqrt(0.003) * abs(delta)
    assert chi(g, delta, K) == pytest.approx(target, rel=1e-12)
    assert chi_from_participation(0.003, delta, K) == pytest.approx(target, rel=1e-12)


def test_pump_linearity_and_zero_pump():
    p = random_params(np.random.default_rng(1))
    base = g_beamsplitter(p).value
    twice = g_beamsplitter(CircuitParams(**{**p.__dict__, "Omega_1": 2 * p.Omega_1})).value
    assert twice == pytest.approx(2 * base, rel=1e-12)
    sq = g_squeeze(p, "A").value
    assert g_squeeze(CircuitParams(**{**p.__dict__, "Omega_2": 3 * p.Omega_2}), "A").value == pytest.approx(3 * sq)
    off = CircuitParams(**{**p.__dict__, "Omega_1": 0.0})
    assert g_beamsplitter(off) == (0.0, 0.0)
    assert g_squeeze(off, "B") == (0.0, 0.0)
    assert "g_BS" not in derived_table(off)


def test_zero_coupling_gives_zero():
    p = CircuitParams(g_A=0.0, g_B=0.0, delta_A=1.0, delta_B=1.3, K_C=0.2, Omega_1=0.1, Omega_2=0.1,
                      delta_1=0.7, delta_2=0.9, Delta=0.01)
    table = derived_table(p)
    assert all(v == 0.0 for v in table.values())


@given(st.integers(0, 2**31))
def test_coupling_sign_symmetry(seed):
    p = random_params(np.random.default_rng(seed))
    q = CircuitParams(**{**p.__dict__, "g_A": -p.g_A, "g_B": -p.g_B})
    a, b = derived_table(p), derived_table(q)
    for k in a:
        assert a[k] == pytest.approx(b[k], rel=1e-14, abs=0)


def test_chi_prime_and_driven_shift():
    p = random_params(np.random.default_rng(7))
    c = chi(p.g_A, p.delta_A, p.K_C)
    assert chi_prime(p, "A") == pytest.approx(c**2 / p.delta_A * f_poly(p.delta_A / p.K_C))
    assert driven_kerr_shift(p) != 0
    with pytest.raises(ValueError):
        driven_kerr_shift(CircuitParams(**{**p.__dict__, "Delta": None}))
    with pytest.raises(SingularityError):
        driven_kerr_shift(CircuitParams(**{**p.__dict__, "Delta": 0.0}))
    with pytest.raises(SingularityError):
        driven_kerr_shift(CircuitParams(**{**p.__dict__, "delta_2": p.K_C}))


def test_ancilla_frequency_examples():
    assert ancilla_frequency(0, 5.0, 0.7, 0.01) == 5.0
    assert ancilla_frequency(1, 5.0, 0.7, 0.01) == pytest.approx(4.3)
    w = ancilla_frequency(5, 0.0, TWO_PI * 748e3, TWO_PI * 1.31e3)
    assert w / TWO_PI == pytest.approx(-5 * 748e3 + 20 * 1.31e3 / 2, rel=1e-12)
    with pytest.raises(ValueError):
        ancilla_frequency(-1, 0.0, 1.0, 0.0)


def test_singularities_and_warnings():
    with pytest.raises(SingularityError):
        CircuitParams(g_A=0.01, g_B=0.01, delta_A=0.0, delta_B=1.0, K_C=0.2)
    p = CircuitParams(g_A=0.01, g_B=0.01, delta_A=-0.1, delta_B=1.0, K_C=0.1, Omega_1=0.01,
                      Omega_2=0.01, delta_1=1.0, delta_2=1.0)
    with pytest.raises(SingularityError):
        chi(p.g_A, p.delta_A, p.K_C)
    with pytest.raises(SingularityError):
        g_squeeze(CircuitParams(0.01, 0.01, -0.1, 1.0, 0.2, 0.01, 0.01, 1.0, 1.0), "A")
    with pytest.warns(DispersiveWarning):
        CircuitParams(g_A=0.5, g_B=0.01, delta_A=1.0, delta_B=1.0, K_C=0.2)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        CircuitParams(g_A=0.05, g_B=0.01, delta_A=1.0, delta_B=1.0, K_C=0.2)

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ctdvs.energy import (
    CmosParams,
    EnergyLedger,
    energy_cmos,
    energy_cmos_normalized,
    energy_function,
    energy_quadratic,
)

from oracles import ideal_ctdvs_energy

OMEGA_HAT = 0.004 / 0.020 + 0.004 / 0.025 + 0.004 / 0.030


def test_quadratic_examples():
    assert energy_quadratic(1.0) == 1.0
    assert energy_quadratic(0.74) == pytest.approx(0.5476, abs=1e-15)
    assert round(100 * energy_quadratic(0.74), 1) == 54.8
    assert energy_quadratic(0.0) == 0.0
    with pytest.raises(ValueError):
        energy_quadratic(1.1)


@given(a=st.floats(0.01, 1.0))
def test_zero_threshold_is_cubic(a):
    p = CmosParams(1.0, 0.0, 2.0, 0.1, 1.0)
    assert energy_cmos_normalized(p, a) == pytest.approx(a**3, rel=1e-12)


def test_cmos_bracket_value():
    # V0 = (Vmax - Vt)^2 / Vmax; pick numbers so that Vt / V0 = 0.2
    vmax = 5.0
    vt = _solve_vt(vmax, 0.2)
    p = CmosParams(2.0, vt, vmax, 0.05, 3.0)
    v0 = (vmax - vt) ** 2 / vmax
    assert vt / v0 == pytest.approx(0.2, rel=1e-12)
    lead = 2.0 * v0**2 * 0.05 * 3.0
    bracket_sq = (0.2 + 0.5 + math.sqrt(0.45)) ** 2
    assert bracket_sq == pytest.approx(1.87915, abs=1e-5)
    assert energy_cmos(p, 1.0) == pytest.approx(lead * bracket_sq, rel=1e-12)


def _solve_vt(vmax, ratio):
    lo, hi = 0.0, vmax
    for _ in range(200):
        mid = (lo + hi) / 2
        if mid / ((vmax - mid) ** 2 / vmax) < ratio:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


@pytest.mark.parametrize("vt", [0.0, 0.3, 1.0, 2.5])
def test_cmos_monotone(vt):
    p = CmosParams(1.0, vt, 3.3, 0.1, 1.0)
    grid = np.linspace(1e-3, 1.0, 2000)
    e = np.array([energy_cmos(p, a) for a in grid])
    assert np.all(np.diff(e) > 0)


def test_cmos_params_validation():
    with pytest.raises(ValueError):
        CmosParams(1.0, 3.0, 2.0, 0.1, 1.0)
    with pytest.raises(ValueError):
        energy_function("cmos")
    with pytest.raises(ValueError):
        energy_function("linear")


def test_ledger_constant_and_split():
    led = EnergyLedger()
    led.add(7.3, 0.74)
    assert led.average() == pytest.approx(0.5476)
    led2 = EnergyLedger()
    led2.add(1.0, 0.0)
    led2.add(1.0, 1.0)
    assert led2.average() == 0.5
    with pytest.raises(ValueError):
        EnergyLedger().average()
    with pytest.raises(ValueError):
        led.add(-1.0, 0.5)


def test_ideal_ctdvs_average():
    led = EnergyLedger()
    for lam in (0.8, 1.0, 0.5, 1.5):
        led.add(3.0, lam * OMEGA_HAT / 0.95)
    assert led.average() == pytest.approx(ideal_ctdvs_energy([0.8, 1.0, 0.5, 1.5], OMEGA_HAT))
    assert round(100 * led.average(), 1) == 27.9

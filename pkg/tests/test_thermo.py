import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from qbath.energy_laws import Spectrum, dirac_law, haar_law, point_mass
from qbath.errors import DomainError, OutOfScopeError, UnreachableError
from qbath.thermo import (chernoff_rate, energy_variance, entropy_from_beta, entropy_of_energy,
                          eos_scan, esscher_tilt, heat_capacity, invert_beta, log_partition,
                          specific_energy, thermo_point)

D2 = dirac_law(Spectrum.parse("0,1"))
H2 = haar_law(Spectrum.parse("0,1"))
H4 = haar_law(Spectrum.parse("-1,0.3:2,2"))
LAWS = [D2, H2, H4, dirac_law(Spectrum.parse("-2,0:3,1.5"))]


def quad_log_z(law, beta):
    """Independent oracle: scipy quadrature of the continuous density."""
    knots = list(law.knots)
    z = sum(integrate.quad(lambda x: law.density_at(x) * math.exp(-beta * x), a, b,
                           epsabs=0, epsrel=1e-12)[0] for a, b in zip(knots, knots[1:]))
    return math.log(z)


# --- log Z, E, C, S ---------------------------------------------------------

@pytest.mark.parametrize("law", LAWS)
def test_log_partition_zero_at_beta_zero(law):
    assert log_partition(law, 0.0) == 0.0


def test_log_partition_examples():
    assert log_partition(D2, 1.0) == pytest.approx(math.log((1 + math.exp(-1)) / 2), abs=1e-14)
    assert log_partition(H2, 1.0) == pytest.approx(math.log(1 - math.exp(-1)), abs=1e-13)


@pytest.mark.parametrize("beta", [0.3, 2.0, 17.0])
def test_log_partition_against_quad(beta):
    assert log_partition(H4, beta) == pytest.approx(quad_log_z(H4, beta), abs=1e-10)


def test_specific_energy_examples():
    assert specific_energy(D2, 0) == 0.5
    assert specific_energy(D2, 1.0) == pytest.approx(1 / (1 + math.e), abs=1e-14)
    e = math.exp(-1)
    assert specific_energy(H2, 1.0) == pytest.approx(1 - e / (1 - e), abs=1e-12)


def test_energy_variance_examples():
    assert energy_variance(point_mass(3.0), 2.0) == 0.0
    assert energy_variance(D2, 0) == pytest.approx(0.25)
    assert energy_variance(H2, 0) == pytest.approx(1 / 12, abs=1e-12)


def test_heat_capacity_examples():
    assert heat_capacity(D2, 0) == 0.0
    assert heat_capacity(D2, 1.0) == pytest.approx(0.25 / math.cosh(0.5) ** 2, abs=1e-14)
    assert abs(heat_capacity(H2, 40.0) - 1.0) <= 1e-14


def test_heat_capacity_scales_with_k_B():
    assert heat_capacity(D2, 1.0, k_B=2.5) == pytest.approx(2.5 * heat_capacity(D2, 1.0))


def test_entropy_examples():
    assert entropy_from_beta(D2, 0) == 0.0
    assert entropy_from_beta(D2, 1.0) == pytest.approx(0.268941 - 0.379886, abs=1e-6)
    assert entropy_from_beta(point_mass(5.0), 3.0) == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("fn", [log_partition, specific_energy, energy_variance, heat_capacity,
                                entropy_from_beta, esscher_tilt])
def test_negative_beta_out_of_scope(fn):
    with pytest.raises(OutOfScopeError):
        fn(D2, -0.1)


def test_nonfinite_beta_rejected():
    with pytest.raises(DomainError):
        log_partition(D2, math.nan)


@pytest.mark.parametrize("law", [D2, H2, H4])
def test_dlogz_is_minus_energy(law):
    h = 1e-5
    for beta in np.linspace(0, 20, 21):
        fd = (log_partition(law, beta + h) - log_partition(law, beta)) / h
        mid = specific_energy(law, beta + h / 2)
        assert abs(fd + mid) <= 1e-6


@pytest.mark.parametrize("law", [D2, H2, H4])
def test_energy_strictly_decreasing(law):
    e = [specific_energy(law, b) for b in np.linspace(0, 30, 200)]
    assert np.all(np.diff(e) < 0)


@pytest.mark.parametrize("law", [D2, H2, H4])
def test_heat_capacity_finite_difference(law):
    h = 1e-5
    for beta in (0.1, 1.0, 4.0, 12.0):
        fd = (specific_energy(law, beta + h) - specific_energy(law, beta - h)) / (2 * h)
        assert heat_capacity(law, beta) == pytest.approx(-beta ** 2 * fd, rel=1e-5)


# --- inversion ----------------------------------------------------------------

def test_invert_examples():
    assert invert_beta(D2, 0.5) == 0.0
    assert invert_beta(D2, 0.268941421) == pytest.approx(1.0, abs=1e-8)
    assert invert_beta(D2, 0.3) == pytest.approx(math.log(7 / 3), abs=1e-14)


@pytest.mark.parametrize("law", [D2, H2, H4])
def test_invert_round_trip(law):
    for beta in np.linspace(0, 50, 41):
        assert invert_beta(law, specific_energy(law, beta)) == pytest.approx(beta, abs=1e-8)


def test_invert_errors():
    with pytest.raises(UnreachableError):
        invert_beta(D2, 0.0)
    with pytest.raises(UnreachableError):
        invert_beta(H2, -0.1)
    with pytest.raises(OutOfScopeError):
        invert_beta(D2, 0.6)


def test_invert_degenerate_law():
    law = point_mass(2.0)
    assert invert_beta(law, 2.0) == 0.0
    with pytest.raises(UnreachableError):
        invert_beta(law, 1.9)


def test_invert_incomplete_law_unreachable():
    # no mass near the spectrum's ground: the law's own ground is 1
    law = dirac_law(Spectrum.parse("1,2"))
    with pytest.raises(UnreachableError):
        invert_beta(law, 0.5)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.02, 0.49))
def test_entropy_of_energy_consistent(energy):
    for law in (D2, H2):
        if energy <= law.ground:
            continue
        beta = invert_beta(law, energy)
        assert entropy_from_beta(law, beta) == pytest.approx(entropy_of_energy(law, energy),
                                                             abs=1e-9)


def test_entropy_of_energy_examples():
    assert entropy_of_energy(D2, 0.5) == 0.0
    ref = math.log(0.5) - 0.3 * math.log(0.3) - 0.7 * math.log(0.7)
    assert entropy_of_energy(D2, 0.3) == pytest.approx(ref, abs=1e-13)
    assert entropy_of_energy(D2, 0.268941) == pytest.approx(-0.110944, abs=1e-6)


# --- tilt ---------------------------------------------------------------------

def test_tilt_identity_and_boltzmann():
    assert esscher_tilt(D2, 0) is D2
    t = esscher_tilt(D2, math.log(3))
    assert np.allclose(t.weights, [0.75, 0.25]) and t.mean == pytest.approx(0.25)


@pytest.mark.parametrize("law", [D2, H2, H4])
def test_tilt_mean_is_specific_energy(law):
    for beta in (0.5, 3.0, 9.0):
        assert esscher_tilt(law, beta).mean == pytest.approx(specific_energy(law, beta),
                                                             abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 5), st.floats(0, 5))
def test_tilt_composes(a, b):
    for law in (D2, H4):
        two = esscher_tilt(esscher_tilt(law, a), b)
        one = esscher_tilt(law, a + b)
        assert two.mean == pytest.approx(one.mean, abs=1e-10)
        assert two.variance == pytest.approx(one.variance, abs=1e-10)


# --- Chernoff -----------------------------------------------------------------

def test_chernoff_examples():
    assert chernoff_rate(D2, 0.5) == 0.0 and chernoff_rate(D2, 0.9) == 0.0
    assert chernoff_rate(D2, 0.3) == pytest.approx(-0.082283, abs=1e-6)
    assert chernoff_rate(H2, 0.418023) == pytest.approx(0.418023 + math.log(1 - math.exp(-1)),
                                                        abs=1e-6)


def test_chernoff_at_and_below_ground():
    assert chernoff_rate(D2, 0.0) == pytest.approx(math.log(0.5))
    assert chernoff_rate(H2, 0.0) == -math.inf
    assert chernoff_rate(H2, -1.0) == -math.inf


@settings(max_examples=40, deadline=None)
@given(st.floats(0.001, 1.0))
def test_chernoff_nonpositive(energy):
    for law in (D2, H2):
        rate = chernoff_rate(law, energy)
        assert rate <= 0
        assert (rate == 0) == (energy >= law.mean)


def test_chernoff_is_infimum_over_grid():
    betas = np.linspace(0, 30, 3001)
    for law, e in ((D2, 0.3), (H2, 0.2)):
        grid_min = min(b * e + log_partition(law, b) for b in betas)
        rate = chernoff_rate(law, e)
        assert rate <= grid_min + 1e-12
        assert rate >= grid_min - 1e-4


# --- scans ----------------------------------------------------------------------

def test_scan_beta_zero_point():
    p = eos_scan(D2, betas=[0]).points[0]
    assert (p.beta, p.log_Z, p.energy, p.entropy, p.heat_capacity) == (0, 0, 0.5, 0, 0)
    assert p.temperature == math.inf


def test_scan_second_point():
    p = eos_scan(D2, betas=[0, 1]).points[1]
    assert (p.beta, p.log_Z, p.energy, p.entropy, p.heat_capacity, p.temperature) == \
        pytest.approx((1, -0.379886, 0.268941, -0.110944, 0.196612, 1), abs=1e-6)


def test_scan_energy_grid():
    eos = eos_scan(D2, energies=[0.3])
    assert eos.points[0].beta == pytest.approx(0.847298, abs=1e-6)


def test_scan_records_errors_and_continues():
    eos = eos_scan(D2, energies=[0.3, 0.7, 0.0, 0.4])
    assert len(eos.points) == 2
    assert [e.index for e in eos.errors] == [1, 2]


def test_scan_monotone_and_identity():
    eos = eos_scan(H4, betas=np.linspace(0, 10, 51), k_B=1.7)
    assert np.all(np.diff(eos.column("energy")) < 0)
    assert np.all(np.diff(eos.column("entropy")) <= 0)
    for p in eos.points:
        assert p.entropy == 1.7 * (p.beta * p.energy + p.log_Z)
        assert p.heat_capacity >= 0


def test_thermo_point_entropy_identity_exact():
    p = thermo_point(H2, 2.3, k_B=0.5)
    assert p.entropy == 0.5 * (p.beta * p.energy + p.log_Z)

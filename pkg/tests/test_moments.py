import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qpolar import fock, moments
from qpolar.moments import PolarizationClass
from qpolar.prep import REPRESENTATIVES, named_state, noon3

Z = np.array([0.0, 0.0, 1.0])


def equator(phi):
    return np.array([np.cos(phi), np.sin(phi), 0.0])


def random_unit(rng):
    n = rng.normal(size=3)
    return n / np.linalg.norm(n)


# --- tensors -----------------------------------------------------------------

def test_identity_quarter_tensors():
    t = moments.moment_tensors(np.eye(4) / 4)
    np.testing.assert_allclose(t.mean, 0, atol=1e-14)
    np.testing.assert_allclose(t.cov, 5 * np.eye(3), atol=1e-12)
    np.testing.assert_allclose(t.skew, 0, atol=1e-12)


def test_noon_variances():
    t = moments.moment_tensors(noon3())
    np.testing.assert_allclose(np.diag(t.cov), [3, 3, 9], atol=1e-12)


def test_xox_mixture_tensors():
    rho = named_state("xox_mix")
    # oracle: diagonal arithmetic, <S1^2> = (N(N+2) - m^2)/2 per Fock state
    assert (57 - 15 - 6) / 36 == 1
    s1_sq = (19 * 3 + 15 * 7 + 2 * 3) / 36
    t = moments.moment_tensors(rho)
    np.testing.assert_allclose(t.mean, [0, 0, 1], atol=1e-12)
    np.testing.assert_allclose(t.cov, s1_sq * np.eye(3), atol=1e-12)
    assert s1_sq == pytest.approx(14 / 3)


@pytest.mark.parametrize("seed", range(5))
def test_tensor_symmetries(seed):
    t = moments.moment_tensors(fock.random_density(3, np.random.default_rng(seed)))
    np.testing.assert_allclose(t.cov, t.cov.T)
    assert np.linalg.eigvalsh(t.cov).min() >= -1e-10
    for perm in [(0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]:
        np.testing.assert_allclose(t.skew, t.skew.transpose(perm), atol=1e-12)


def test_tensor_vs_direct_operator_powers():
    rng = np.random.default_rng(2024)
    dirs = [random_unit(rng) for _ in range(50)]
    worst = 0.0
    for _ in range(200):
        rho = fock.random_density(3, rng)
        t = moments.moment_tensors(rho)
        for n in dirs:
            for m in (1, 2, 3):
                worst = max(worst, abs(moments.moment_along(rho, n, m) - t.along(n, m)))
    assert worst <= 1e-9


# --- moment along a direction ------------------------------------------------

def test_h3_mean_along_z():
    assert moments.moment_along(fock.fock_ket(3, 0), Z, 1) == pytest.approx(3)


def test_noon_equatorial_skewness():
    phis = np.linspace(0, 2 * np.pi, 361)
    direct = np.array([moments.moment_along(noon3(), equator(p), 3) for p in phis])
    # oracle: the only coupling is <3,0|(aH^+ aV)^3|0,3> = sqrt3 * 2 * sqrt3 = 6,
    # which with the -i relative phase gives -6 sin(3 phi)
    np.testing.assert_allclose(direct, -6 * np.sin(3 * phis), atol=1e-9)


def test_oox_mixture_along_z():
    rho = named_state("oox_mix")
    assert moments.moment_along(rho, Z, 1) == pytest.approx(0, abs=1e-12)
    assert moments.moment_along(rho, Z, 2) == pytest.approx(5)
    assert moments.moment_along(rho, Z, 3) == pytest.approx(9 - 0.5 - 4.5)


def test_moment_order_validated():
    with pytest.raises(ValueError):
        moments.moment_along(np.eye(4) / 4, Z, 4)
    with pytest.raises(ValueError):
        moments.moment_along(np.eye(4) / 4, [0, 0, 2], 1)


# --- sphere fields -----------------------------------------------------------

def test_isotropic_variance_field():
    fld = moments.sphere_field(np.eye(4) / 4, 2)
    np.testing.assert_allclose(fld.values, 5, atol=1e-12)


@pytest.mark.parametrize("m", [1, 3])
def test_h3_odd_moments_vanish_on_equator(m):
    fld = moments.sphere_field(fock.fock_ket(3, 0), m, grid="theta_phi", resolution=(17, 32))
    on_eq = np.abs(fld.directions[:, 2]) < 1e-12
    assert on_eq.sum() == 32
    np.testing.assert_allclose(fld.values[on_eq], 0, atol=1e-12)


@pytest.mark.parametrize("name", list(REPRESENTATIVES.values()))
def test_antipodal_identity_fibonacci(name):
    fld = moments.sphere_field(named_state(name), 3, resolution=512)
    half = len(fld.values) // 2
    np.testing.assert_allclose(fld.directions[half:], -fld.directions[:half])
    np.testing.assert_allclose(fld.values[half:], -fld.values[:half], atol=1e-13)


def test_antipodal_identity_theta_phi():
    rho = fock.random_density(3, np.random.default_rng(5))
    n_t, n_p = 9, 16
    fld = moments.sphere_field(rho, 1, grid="theta_phi", resolution=(n_t, n_p))
    vals = fld.values.reshape(n_t, n_p)
    anti = vals[::-1, np.r_[n_p // 2:n_p, 0:n_p // 2]]
    np.testing.assert_allclose(vals, -anti, atol=1e-12)


def test_sphere_field_resolution_floor():
    with pytest.raises(ValueError):
        moments.sphere_field(np.eye(4) / 4, 2, resolution=8)


def test_fibonacci_is_unit_and_quasi_uniform():
    d = moments.fibonacci_directions(2048)
    np.testing.assert_allclose(np.linalg.norm(d, axis=1), 1)
    assert np.linalg.norm(d.mean(axis=0)) < 1e-12
    # second moments of a uniform sphere sample are I/3
    np.testing.assert_allclose(d.T @ d / len(d), np.eye(3) / 3, atol=1e-3)


def test_sphere_csv_columns():
    text = moments.sphere_field(noon3(), 3, resolution=16).to_csv()
    lines = text.strip().split("\n")
    assert lines[0] == "nx,ny,nz,theta,phi,value,abs_value"
    assert len(lines) == 17
    row = [float(x) for x in lines[1].split(",")]
    assert row[6] == pytest.approx(abs(row[5]))


# --- bounds ------------------------------------------------------------------

def test_bounds_identity_quarter_is_maximum():
    b = moments.check_bounds(np.eye(4) / 4)
    assert b.variance_sum == pytest.approx(15) and b.label == "maximum"


def test_bounds_h3_is_minimum():
    b = moments.check_bounds(fock.fock_ket(3, 0))
    assert b.variance_sum == pytest.approx(6) and b.label == "minimum"


def test_bounds_oxo():
    rho = named_state("oxo_mix")
    assert moments.variance_sum(rho) == pytest.approx(15)
    np.testing.assert_allclose(np.diag(moments.moment_tensors(rho).cov), [3, 3, 9], atol=1e-12)


@pytest.mark.parametrize("name", ["identity_quarter", "noon3", "oox_mix", "oxo_mix"])
def test_maximum_sum_uncertainty_states(name):
    assert moments.check_bounds(named_state(name)).at_upper


def test_variance_sum_bounds_random_states():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        rho = fock.random_density(3, rng) if rng.random() < 0.5 else fock.random_pure(3, rng)
        assert moments.check_bounds(rho).within


@pytest.mark.parametrize("N", [1, 2, 4])
def test_variance_sum_bounds_other_photon_numbers(N):
    rng = np.random.default_rng(N)
    for _ in range(50):
        b = moments.check_bounds(fock.random_density(N, rng))
        assert b.lower == 2 * N and b.upper == N * (N + 2) and b.within


# --- uncertainty relation ----------------------------------------------------

def test_h3_saturates_on_equator_pair():
    u = moments.uncertainty_product(fock.fock_ket(3, 0), 1, 2)
    assert u.lhs == pytest.approx(3) and u.rhs == pytest.approx(3) and u.saturated


def test_uncertainty_examples():
    u = moments.uncertainty_product(np.eye(4) / 4, 2, 3)
    assert (u.lhs, u.rhs) == pytest.approx((5, 0), abs=1e-12)
    u = moments.uncertainty_product(noon3(), 1, 2)
    assert (u.lhs, u.rhs) == pytest.approx((3, 0), abs=1e-12)
    with pytest.raises(ValueError):
        moments.uncertainty_product(noon3(), 1, 1)


def test_uncertainty_relation_random_states():
    rng = np.random.default_rng(11)
    for _ in range(300):
        rho = fock.random_density(3, rng)
        for j, k in ((1, 2), (2, 3), (3, 1), (2, 1)):
            u = moments.uncertainty_product(rho, j, k)
            assert u.lhs >= u.rhs - 1e-9


# --- invariance and classes --------------------------------------------------

EXPECTED = {
    "identity_quarter": "OOO",
    "oox_mix": "OOX",
    "oxo_mix": "OXO",
    "noon3": "OXX",
    "xox_mix": "XOX",
    "h3": "XXX",
}


@pytest.mark.parametrize("name,cls", EXPECTED.items())
def test_table_classes(name, cls):
    assert moments.classify(named_state(name)) is PolarizationClass(cls)
    assert moments.invariance(named_state(name)).pattern == cls


def test_invariance_triples():
    assert moments.invariance(np.eye(4) / 4).flags == (True, True, True)
    assert moments.invariance(noon3()).flags == (True, False, False)
    inv = moments.invariance(named_state("xox_mix"))
    assert inv.flags == (False, True, False)
    assert inv.residuals[0] == pytest.approx(1)


@pytest.mark.parametrize("name,order", [("identity_quarter", 3), ("oox_mix", 2), ("oxo_mix", 1),
                                        ("noon3", 1), ("xox_mix", 0), ("h3", 0)])
def test_unpolarized_order(name, order):
    assert moments.unpolarized_order(named_state(name)) == order


def test_impossible_pattern_raises(monkeypatch):
    fake = moments.InvarianceTriple(False, False, True, (1.0, 1.0, 0.0), 1e-8)
    monkeypatch.setattr(moments, "invariance", lambda state, tol=1e-8: fake)
    with pytest.raises(moments.ImpossibleClassError):
        moments.classify(np.eye(4) / 4)


def test_classify_needs_three_photons():
    with pytest.raises(ValueError):
        moments.classify(np.eye(3) / 3)
    assert moments.invariance(np.eye(3) / 3).pattern == "OOO"


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_class_is_rotation_invariant(seed):
    rng = np.random.default_rng(seed)
    U = fock.su2_rotation(random_unit(rng), rng.uniform(0, 4 * np.pi), 3)
    for name, cls in EXPECTED.items():
        rho = named_state(name)
        assert moments.classify(U @ rho @ U.conj().T, tol=1e-7).value == cls


def test_pure_states_never_second_order_unpolarized():
    rng = np.random.default_rng(3)
    for _ in range(1000):
        inv = moments.invariance(fock.random_pure(3, rng))
        assert not inv.var_invariant


def test_experimental_profile_tolerates_noise():
    rng = np.random.default_rng(0)
    for name, cls in EXPECTED.items():
        rho = 0.995 * named_state(name) + 0.005 * fock.random_density(3, rng)
        assert moments.classify(rho, moments.EXPERIMENTAL_TOL).value == cls

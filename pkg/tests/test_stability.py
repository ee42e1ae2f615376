"""Tests for linear stability analysis on the harmonic shear-pair model."""
import math

import numpy as np
import pytest

from opsplit import catalog, stability
from opsplit.algebra import SchemeCoefficients
from opsplit.catalog import builtin_catalog, get_scheme
from opsplit.stability import (
    StabilityProfile,
    propagation_matrix,
    stability_interval,
    stability_polynomial,
    stability_profile,
)

# Stability boundaries computed independently by direct shear products
# (grid scan + bisection, tolerance 1e-10).
FROZEN_Z_STAR = {
    "chin-4-mod": 3.4639641408,
    "hmc-3stage": 4.6618460782,
    "lie-trotter-ab": 2.0,
    "lie-trotter-ba": 2.0,
    "quintuplejump-4": 2.7209745386,
    "quintuplejump-6": 3.1220536008,
    "quintuplejump-8": 6.2752282752,
    "s2m": 3.4641016151,
    "soint": 2.0,
    "strang-aba": 2.0,
    "strang-bab": 2.0,
    "symplectic-euler-tv": 2.0,
    "symplectic-euler-vt": 2.0,
    "triplejump-4": 1.5734019474,
    "triplejump-6": 1.5953731278,
    "triplejump-8": 1.5376802986,
}

SAMPLE_Z = (0.37, 0.93, 1.7)


def real_schemes():
    """Catalog schemes with a real two-part coefficient form."""
    out = []
    for scheme in builtin_catalog():
        if scheme.coefficients is None or scheme.adi_kind is not None:
            continue
        coeffs = scheme.splitting_coefficients()
        if all(complex(v).imag == 0.0 for v in coeffs.a + coeffs.b):
            out.append(scheme)
    return out


def substep_verlet(k):
    """Coefficients of ``k`` concatenated Verlet substeps of length ``h/k``."""
    a = (1.0 / (2 * k),) + (1.0 / k,) * (k - 1) + (1.0 / (2 * k),)
    b = (1.0 / k,) * k
    return SchemeCoefficients(a=a, b=b)


# --- propagation matrix ------------------------------------------------------


def test_verlet_matrix_components():
    scheme = get_scheme("strang-bab")
    for z in SAMPLE_Z:
        m = propagation_matrix(scheme, z)
        assert m[0, 0] == pytest.approx(1 - z**2 / 2, abs=1e-14)
        assert m[1, 1] == pytest.approx(1 - z**2 / 2, abs=1e-14)
        assert m[0, 1] == pytest.approx(z, abs=1e-14)
        assert m[1, 0] == pytest.approx(-z + z**3 / 4, abs=1e-14)


def test_both_strang_orientations_share_polynomial():
    aba = get_scheme("strang-aba")
    bab = get_scheme("strang-bab")
    for z in SAMPLE_Z:
        assert stability_polynomial(aba, z) == pytest.approx(
            stability_polynomial(bab, z), abs=1e-14
        )
        m = propagation_matrix(aba, z)
        assert m[0, 0] == pytest.approx(m[1, 1], abs=1e-14)


def test_lie_trotter_polynomial():
    scheme = get_scheme("lie-trotter-ab")
    for z in SAMPLE_Z:
        assert stability_polynomial(scheme, z) == pytest.approx(
            1 - z**2 / 2, abs=1e-14
        )


def test_determinant_one_across_catalog():
    for scheme in real_schemes():
        for z in SAMPLE_Z:
            det = np.linalg.det(propagation_matrix(scheme, z))
            assert det == pytest.approx(1.0, abs=1e-12), scheme.id


def test_polynomial_even_across_catalog():
    for scheme in real_schemes():
        for z in SAMPLE_Z:
            assert stability_polynomial(scheme, z) == pytest.approx(
                stability_polynomial(scheme, -z), abs=1e-12
            ), scheme.id


def test_palindromic_schemes_have_equal_diagonal():
    checked = 0
    for scheme in real_schemes():
        coeffs = scheme.splitting_coefficients()
        a = tuple(float(v) for v in coeffs.a)
        b = tuple(float(v) for v in coeffs.b)
        if a != a[::-1] or b != b[::-1] or scheme.commutator_coeffs:
            continue
        checked += 1
        for z in SAMPLE_Z:
            m = propagation_matrix(scheme, z)
            assert m[0, 0] == pytest.approx(m[1, 1], abs=1e-12), scheme.id
    assert checked >= 4


def test_modified_potential_schemes_have_equal_diagonal():
    for sid in ("s2m", "chin-4-mod"):
        scheme = get_scheme(sid)
        for z in SAMPLE_Z:
            m = propagation_matrix(scheme, z)
            assert m[0, 0] == pytest.approx(m[1, 1], abs=1e-12), sid
            assert np.linalg.det(m) == pytest.approx(1.0, abs=1e-12), sid


def test_consistent_schemes_match_quadratic_model():
    z = np.linspace(1e-3, 0.12, 40)
    for scheme in real_schemes():
        p = np.array([stability_polynomial(scheme, float(v)) for v in z])
        coef = np.polyfit(z**2, p, 2)
        assert coef[2] == pytest.approx(1.0, abs=1e-8), scheme.id
        assert coef[1] == pytest.approx(-0.5, abs=1e-4), scheme.id


def test_plain_coefficients_accepted():
    verlet = SchemeCoefficients(a=(0.5, 0.5), b=(1.0,))
    for z in SAMPLE_Z:
        got = propagation_matrix(verlet, z)
        want = propagation_matrix(get_scheme("strang-aba"), z)
        np.testing.assert_allclose(got, want, atol=1e-15)


def test_gamma_sequence_accepted():
    scheme = get_scheme("triplejump-4")
    gamma = scheme.coefficients
    for z in SAMPLE_Z:
        np.testing.assert_allclose(
            propagation_matrix(gamma, z),
            propagation_matrix(scheme, z),
            atol=1e-14,
        )


def test_adi_scheme_rejected():
    for scheme in builtin_catalog():
        if scheme.adi_kind is not None:
            with pytest.raises(ValueError):
                propagation_matrix(scheme, 1.0)
            return
    pytest.skip("no alternating-direction scheme in catalog")


def test_complex_scheme_rejected():
    complex_schemes = [
        s
        for s in builtin_catalog()
        if s.coefficients is not None
        and s.adi_kind is None
        and any(complex(v).imag != 0.0 for v in s.splitting_coefficients().a)
    ]
    assert complex_schemes
    with pytest.raises(ValueError):
        propagation_matrix(complex_schemes[0], 1.0)


# --- stability interval ------------------------------------------------------


def test_verlet_interval_is_two():
    for sid in ("strang-aba", "strang-bab"):
        z_star = stability_interval(get_scheme(sid), z_max=4.0)
        assert z_star == pytest.approx(2.0, abs=1e-10), sid


def test_lie_trotter_interval_is_two():
    for sid in ("lie-trotter-ab", "lie-trotter-ba"):
        z_star = stability_interval(get_scheme(sid), z_max=4.0)
        assert z_star == pytest.approx(2.0, abs=1e-10), sid


@pytest.mark.parametrize("k", [2, 3])
def test_substep_verlet_interval(k):
    z_star = stability_interval(substep_verlet(k), z_max=2 * k + 2)
    assert z_star == pytest.approx(2.0 * k, abs=1e-8)


def test_modified_potential_strang_interval():
    z_star = stability_interval(get_scheme("s2m"), z_max=5.0)
    assert z_star == pytest.approx(2.0 * math.sqrt(3.0), abs=1e-10)


def test_interval_bounded_by_stage_count():
    for scheme in real_schemes():
        stages = len(scheme.splitting_coefficients().b)
        z_star = stability_interval(scheme, z_max=2.0 * stages + 1.0)
        assert z_star <= 2.0 * stages + 1e-6, scheme.id


def test_frozen_interval_table():
    for sid, expected in FROZEN_Z_STAR.items():
        z_star = stability_interval(get_scheme(sid), z_max=8.0)
        assert z_star == pytest.approx(expected, abs=1e-8), sid


def test_interval_returns_cap_when_stable_throughout():
    z_star = stability_interval(get_scheme("strang-aba"), z_max=1.5)
    assert z_star == 1.5


def test_interval_rejects_nonpositive_cap():
    with pytest.raises(ValueError):
        stability_interval(get_scheme("strang-aba"), z_max=0.0)


# --- profiles ----------------------------------------------------------------


def test_profile_shape_and_consistency():
    scheme = get_scheme("strang-aba")
    profile = stability_profile(scheme, z_max=3.0, n_samples=61)
    assert isinstance(profile, StabilityProfile)
    assert profile.scheme_id == "strang-aba"
    assert len(profile.samples) == 61
    assert profile.z_values[0] == 0.0
    assert profile.z_values[-1] == pytest.approx(3.0)
    assert profile.z_star == pytest.approx(2.0, abs=1e-10)
    for z, p, k1, k2, k3, k4 in profile.samples:
        assert p == pytest.approx(0.5 * (k1 + k4), abs=1e-15)
        assert k1 * k4 - k2 * k3 == pytest.approx(1.0, abs=1e-12)
        assert p == pytest.approx(stability_polynomial(scheme, z), abs=1e-15)


def test_profile_identity_at_zero():
    profile = stability_profile(get_scheme("triplejump-4"), z_max=2.0, n_samples=11)
    z, p, k1, k2, k3, k4 = profile.samples[0]
    assert (z, p, k1, k2, k3, k4) == (0.0, 1.0, 1.0, 0.0, 0.0, 1.0)


def test_profile_rejects_degenerate_sampling():
    with pytest.raises(ValueError):
        stability_profile(get_scheme("strang-aba"), n_samples=1)


def test_profile_of_plain_coefficients_labelled_custom():
    profile = stability_profile(substep_verlet(2), z_max=5.0, n_samples=11)
    assert profile.scheme_id == "custom"
    assert profile.z_star == pytest.approx(4.0, abs=1e-8)

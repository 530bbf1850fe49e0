"""Seminorm machinery: Gagliardo integrals, Hölder moduli, product bounds."""

import numpy as np
import pytest
from scipy.integrate import quad

from ohara.curve import Field, circle, random_curve, random_field
from ohara.errors import ValidationError
from ohara.norms import (
    SeminormReport,
    gagliardo_seminorm,
    holder_seminorm,
    little_holder_flag,
    local_modulus,
    lq_norm,
    product_seminorm_check,
    sobolev_linf_norm,
    sup_norm,
)
from ohara.verify import cusp_field

from conftest import rel


def scalar_cos_field(cv, k=1):
    s = cv.h * np.arange(cv.M)
    return Field(cv, np.cos(2.0 * np.pi * k * s / cv.L))


# ----------------------------------------------------------------- gagliardo


def test_gagliardo_circle_tangent_reference():
    # tau on the unit circle: |Δtau| = 2 sin(|Δs|/2); the q-th power of the
    # seminorm reduces to a 1D integral computed here with adaptive
    # quadrature
    sigma, q = 0.25, 4.0
    ref_1d, _ = quad(
        lambda x: (2.0 * np.sin(x / 2.0)) ** q / x ** (1.0 + sigma * q),
        0.0,
        np.pi,
    )
    ref = (2.0 * 2.0 * np.pi * ref_1d) ** (1.0 / q)
    for M, tol in [(128, 1.0e-6), (256, 1.0e-8)]:
        got = gagliardo_seminorm(circle(M).tau_field, sigma, q)
        assert rel(got, ref) < tol


def test_gagliardo_resolution_convergence():
    sigma, q = 0.5, 2.0
    vals = [
        gagliardo_seminorm(circle(M).tau_field, sigma, q)
        for M in (64, 128, 256)
    ]
    # refinement settles the value; successive gaps shrink
    assert rel(vals[0], vals[2]) < 1.0e-4
    assert abs(vals[1] - vals[2]) < abs(vals[0] - vals[1])


def test_gagliardo_homogeneity(bumpy256):
    u = random_field(bumpy256, 40)
    v = Field(bumpy256, 3.0 * u.values)
    a = gagliardo_seminorm(u, 0.5, 2.0)
    assert rel(gagliardo_seminorm(v, 0.5, 2.0), 3.0 * a) < 1.0e-12


def test_gagliardo_constant_is_zero(bumpy256):
    const = Field(bumpy256, np.tile([2.0, -1.0], (bumpy256.M, 1)))
    assert gagliardo_seminorm(const, 0.5, 2.0) == 0.0


def test_gagliardo_validation(bumpy256):
    u = random_field(bumpy256, 41)
    with pytest.raises(ValidationError):
        gagliardo_seminorm(u, 0.0, 2.0)
    with pytest.raises(ValidationError):
        gagliardo_seminorm(u, 1.0, 2.0)
    with pytest.raises(ValidationError):
        gagliardo_seminorm(u, 0.5, 0.5)


def test_gagliardo_report(bumpy256):
    u = random_field(bumpy256, 42)
    rep = gagliardo_seminorm(u, 0.3, 2.0, report=True)
    assert isinstance(rep, SeminormReport)
    assert rep.kind == "gagliardo"
    assert rep.M == bumpy256.M
    d = rep.as_dict()
    assert d["sigma"] == 0.3 and d["q"] == 2.0
    assert d["value"] == rep.value > 0.0


# ----------------------------------------------------------- Hölder moduli


def test_holder_beta_one_of_tangent_is_one():
    # |Δtau| / |Δs| peaks at the curvature (=1) on the unit circle, reached
    # in the diagonal limit supplied by the derivative bound
    got = holder_seminorm(circle(256).tau_field, 1.0)
    assert rel(got, 1.0) < 1.0e-9


def test_holder_scalar_closed_form():
    # cos(s) on the unit circle, β = 1: sup |Δcos| / |Δs| = 1 = sup |sin|
    cv = circle(256)
    got = holder_seminorm(scalar_cos_field(cv), 1.0)
    assert rel(got, 1.0) < 1.0e-9


def test_local_modulus_monotone_in_R(bumpy256):
    u = random_field(bumpy256, 43)
    L = bumpy256.L
    rs = [L / 64, L / 16, L / 4, L / 2]
    vals = [local_modulus(u, 0.5, r) for r in rs]
    assert all(a <= b * (1.0 + 1.0e-12) for a, b in zip(vals, vals[1:]))
    assert vals[-1] == holder_seminorm(u, 0.5)


def test_local_modulus_validation(bumpy256):
    u = random_field(bumpy256, 44)
    with pytest.raises(ValidationError):
        local_modulus(u, 0.5, 0.0)
    with pytest.raises(ValidationError):
        local_modulus(u, 0.5, bumpy256.L)
    with pytest.raises(ValidationError):
        local_modulus(u, 1.5, 1.0)


def test_little_holder_separates_smooth_from_cusp():
    # a smooth field is little-Hölder at any β < 1 (modulus decays at fine
    # scales); the derivative of a genuine C^{1,β} cusp field is exactly
    # C^{0,β}-rough and keeps its modulus at all scales
    cv = circle(512)
    beta = 0.5
    smooth = random_field(cv, 45)
    rough = cusp_field(cv, beta).deriv
    assert little_holder_flag(smooth, beta) is True
    assert little_holder_flag(rough, beta) is False


def test_little_holder_zero_field(bumpy256):
    zero = Field(bumpy256, np.zeros((bumpy256.M, 2)))
    assert little_holder_flag(zero, 0.7) is True


# ------------------------------------------------------------ combined norm


def test_sobolev_linf_dominates_parts(bumpy256):
    u = random_field(bumpy256, 46)
    sigma, q = 0.5, 2.0
    v = sobolev_linf_norm(u, sigma, q)
    assert v >= sup_norm(u) - 1.0e-15
    assert v >= lq_norm(u, q) - 1.0e-15
    assert v >= gagliardo_seminorm(u, sigma, q) - 1.0e-15


def test_lq_norm_circle_constant():
    cv = circle(128)
    one = Field(cv, np.ones(cv.M))
    assert rel(lq_norm(one, 2.0), np.sqrt(2.0 * np.pi)) < 1.0e-12
    with pytest.raises(ValidationError):
        lq_norm(one, 0.3)


# ---------------------------------------------------------------- products


def test_product_bound_constant_one(bumpy256):
    out = product_seminorm_check(bumpy256, random_field(bumpy256, 47))
    assert out["margin"] >= -1.0e-10
    assert out["holder_lhs"] <= out["holder_rhs"] * (1.0 + 1.0e-10)
    assert 0.0 < out["fitted_constant"] <= 1.0 + 1.0e-10


def test_product_bound_many_seeds():
    cv = random_curve(9, M=128, n=3)
    for seed in range(20):
        out = product_seminorm_check(cv, random_field(cv, seed))
        assert out["margin"] >= -1.0e-10, seed

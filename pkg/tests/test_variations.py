"""Pointwise variation formulas checked against independent finite differences.

The general-parameter density (Jacobian-weighted, intrinsic-distance aware)
serves as the oracle: its eps-derivatives at eps = 0 must equal the assembled
first- and second-variation integrands pair by pair.
"""

import numpy as np
import pytest

from ohara.curve import ClosedCurve, Field, pair_frame, random_curve, random_field
from ohara.errors import NumericalError
from ohara.kernels import (
    EnergyParams,
    GeneralParamCurve,
    density,
    density_general_param,
    m_alpha,
)
from ohara.variations import (
    VariationTerms,
    delta2_chord_ratio,
    delta2_m_alpha,
    delta2_n_tau,
    delta_chord_ratio,
    delta_k,
    delta_m_alpha,
    delta_n_tau,
    first_variation_density,
    second_variation_density,
)

from conftest import rel

PAIRS = [(1, 0), (40, 10), (127, 0), (200, 70)]
FD_EPS = 1.0e-5


def fd1(fun, eps=FD_EPS):
    """Richardson-extrapolated central first derivative at 0."""

    def central(e):
        return (fun(e) - fun(-e)) / (2.0 * e)

    return (4.0 * central(eps / 2.0) - central(eps)) / 3.0


def fd2(fun, eps=1.0e-3):
    """Richardson-extrapolated central second derivative at 0."""
    f0 = fun(0.0)

    def second(e):
        return (fun(e) - 2.0 * f0 + fun(-e)) / (e * e)

    return (4.0 * second(eps / 2.0) - second(eps)) / 3.0


# ------------------------------------------------------------- direct algebra


def test_delta_chord_ratio_formula(bumpy256):
    cv = bumpy256
    phi = random_field(cv, 1)
    for i, j in PAIRS:
        pair = pair_frame(cv, i, j)
        dphi = phi.values[pair.i] - phi.values[pair.j]
        expect = 2.0 * float(np.dot(pair.dvec, dphi)) / pair.chord**2
        assert rel(delta_chord_ratio(cv, phi, pair), expect) < 1.0e-12


def test_delta2_chord_ratio_formula(bumpy256):
    cv = bumpy256
    phi, psi = random_field(cv, 1), random_field(cv, 2)
    pair = pair_frame(cv, 77, 20)
    dphi = phi.values[pair.i] - phi.values[pair.j]
    dpsi = psi.values[pair.i] - psi.values[pair.j]
    expect = 2.0 * float(np.dot(dphi, dpsi)) / pair.chord**2
    assert rel(delta2_chord_ratio(cv, phi, psi, pair), expect) < 1.0e-12


def test_delta_k_is_derivative_of_chord_ratio(bumpy256):
    # K(f, phi) varied along psi: compare against an explicit FD in the
    # chord quotient (pure vector algebra, no arclength subtleties)
    cv = bumpy256
    phi, psi = random_field(cv, 3), random_field(cv, 4)
    for i, j in [(40, 10), (150, 60)]:
        pair = pair_frame(cv, i, j)
        df = pair.dvec
        dphi = phi.values[pair.i] - phi.values[pair.j]
        dpsi = psi.values[pair.i] - psi.values[pair.j]

        def kq(e):
            d = df + e * dpsi
            return float(np.dot(d, dphi) / np.dot(d, d))

        assert rel(delta_k(cv, phi, psi, pair), fd1(kq)) < 1.0e-9


# ------------------------------------------------ structural identities


def test_term_tables_resum(bumpy256, params21):
    cv = bumpy256
    phi, psi = random_field(cv, 5), random_field(cv, 6)
    pair = pair_frame(cv, 90, 33)
    for vt in (
        delta_n_tau(cv, phi, pair),
        delta2_n_tau(cv, phi, psi, pair),
        delta_m_alpha(cv, phi, pair, params21),
        delta2_m_alpha(cv, phi, psi, pair, params21),
        first_variation_density(cv, phi, pair, params21),
        second_variation_density(cv, phi, psi, pair, params21),
    ):
        d = vt.as_dict()
        assert rel(sum(v for k, v in d.items() if k != "total"), d["total"]) < 1.0e-11 or abs(d["total"]) < 1.0e-13


def test_term_labels(bumpy256, params21):
    cv = bumpy256
    phi, psi = random_field(cv, 5), random_field(cv, 6)
    pair = pair_frame(cv, 90, 33)
    assert set(delta_n_tau(cv, phi, pair)) == {"R1", "R2"}
    assert set(delta2_n_tau(cv, phi, psi, pair)) == {"S1", "S2", "S3", "S4", "S5"}
    assert set(delta_m_alpha(cv, phi, pair, params21)) == {"P1", "P2"}
    assert set(delta2_m_alpha(cv, phi, psi, pair, params21)) == {
        "Q1", "Q2", "Q3", "Q4", "Q5", "Q6",
    }
    assert set(first_variation_density(cv, phi, pair, params21)) == {"G1", "G2"}
    assert set(second_variation_density(cv, phi, psi, pair, params21)) == {
        "H1", "H2", "H3", "H4", "H5", "H6",
    }


def test_swap_symmetry(bumpy256, params21):
    # the second variation is a symmetric bilinear form, term sums included
    cv = bumpy256
    phi, psi = random_field(cv, 7), random_field(cv, 8)
    for i, j in PAIRS:
        pair = pair_frame(cv, i, j)
        a = second_variation_density(cv, phi, psi, pair, params21).total
        b = second_variation_density(cv, psi, phi, pair, params21).total
        assert abs(a - b) <= 1.0e-10 * max(abs(a), 1.0)
        a = delta2_n_tau(cv, phi, psi, pair).total
        b = delta2_n_tau(cv, psi, phi, pair).total
        assert abs(a - b) <= 1.0e-10 * max(abs(a), 1.0)


def test_translation_invariance(bumpy256, params21):
    # constant phi: no chord change, no tangent change, zero everywhere
    cv = bumpy256
    const = Field(cv, np.tile([0.3, -0.7], (cv.M, 1)))
    pair = pair_frame(cv, 66, 9)
    assert abs(delta_chord_ratio(cv, const, pair)) < 1.0e-13
    assert abs(delta_n_tau(cv, const, pair).total) < 1.0e-13
    assert abs(delta_m_alpha(cv, const, pair, params21).total) < 1.0e-12
    assert abs(first_variation_density(cv, const, pair, params21).total) < 1.0e-12


def test_rotation_equivariance(params21):
    cv = random_curve(0, M=128, n=3)
    phi = random_field(cv, 9)
    # Rodrigues rotation about (1,1,1)/sqrt(3) by 0.7 rad
    ax = np.ones(3) / np.sqrt(3.0)
    K = np.array([[0, -ax[2], ax[1]], [ax[2], 0, -ax[0]], [-ax[1], ax[0], 0]])
    R = np.eye(3) + np.sin(0.7) * K + (1 - np.cos(0.7)) * (K @ K)
    cv_r = ClosedCurve(cv.positions @ R.T, cv.L)
    phi_r = Field(cv_r, phi.values @ R.T)
    # the recovered tangent rotates along (to interpolation accuracy), and
    # away from the diagonal the pair quantities follow at that level
    assert np.abs(cv_r.tau - cv.tau @ R.T).max() < 1.0e-8
    for i, j in [(30, 90), (64, 5)]:
        pair = pair_frame(cv, i, j)
        pair_r = pair_frame(cv_r, i, j)
        assert rel(
            density(cv, pair, params21), density(cv_r, pair_r, params21)
        ) < 1.0e-9
        a = first_variation_density(cv, phi, pair, params21).total
        b = first_variation_density(cv_r, phi_r, pair_r, params21).total
        assert abs(a - b) <= 1.0e-8 * max(abs(a), 1.0)


def test_dilation_identities(bumpy256):
    # phi = f: N is scale invariant, so delta N = 0; the assembled first
    # variation collapses to (2 - alpha p) M^p pointwise
    cv = bumpy256
    f = Field(cv, cv.positions.copy())
    for pr in (EnergyParams(2.0, 1.0), EnergyParams(2.4, 1.0), EnergyParams(2.0, 2.0)):
        for i, j in PAIRS:
            pair = pair_frame(cv, i, j)
            assert abs(delta_chord_ratio(cv, f, pair) - 2.0) < 1.0e-10
            dn = delta_n_tau(cv, f, pair).total
            assert abs(dn) < 1.0e-10
            g = first_variation_density(cv, f, pair, pr).total
            expect = (2.0 - pr.alpha * pr.p) * density(cv, pair, pr)
            assert abs(g - expect) < 1.0e-9 * max(abs(expect), 1.0)


# ----------------------------------------------------- finite-difference FD


def test_first_variation_matches_general_param_fd(bumpy256):
    # pairs stay off the antipodal set: there the intrinsic distance takes
    # the min of two arcs and its eps-derivative has a kink, so the smooth
    # per-pair identity holds only for k != M/2
    cv = bumpy256
    phi = random_field(cv, 10)
    for pr in (EnergyParams(2.0, 1.0), EnergyParams(2.4, 1.0)):
        for i, j in PAIRS:
            pair = pair_frame(cv, i, j)
            got = first_variation_density(cv, phi, pair, pr).total

            def dens(e):
                if e == 0.0:
                    return density(cv, pair, pr)
                return density_general_param(
                    GeneralParamCurve(cv, phi, e), i, j, pr
                )

            ref = fd1(dens)
            assert abs(got - ref) <= 1.0e-7 * max(abs(ref), 1.0)


def test_second_variation_matches_general_param_fd(bumpy256, params21):
    cv = bumpy256
    phi = random_field(cv, 12)
    for i, j in PAIRS:
        pair = pair_frame(cv, i, j)
        got = second_variation_density(cv, phi, phi, pair, params21).total

        def dens(e):
            if e == 0.0:
                return density(cv, pair, params21)
            return density_general_param(
                GeneralParamCurve(cv, phi, e), i, j, params21
            )

        ref = fd2(dens)
        assert abs(got - ref) <= 1.0e-5 * max(abs(ref), 1.0)


def test_delta_m_matches_unit_speed_fd():
    # vary, reparametrize to unit speed, and read M at the *materially
    # transported* pair: this is the intrinsic derivative delta M without
    # the Jacobian term, so compare against P1 + P2 alone
    from ohara.curve import from_samples

    cv = random_curve(4, M=192, n=3)
    phi = random_field(cv, 13)
    pr = EnergyParams(2.0, 1.0)
    i, j = 50, 10
    pair = pair_frame(cv, i, j)
    got = delta_m_alpha(cv, phi, pair, pr).total

    def m_of(e):
        g = GeneralParamCurve(cv, phi, e)
        c = g.chord(i, j)
        D = g.intrinsic(i, j)
        bracket = -np.expm1(pr.alpha * np.log(min(c / D, 1.0)))
        return float(bracket / c**pr.alpha)

    assert rel(got, fd1(m_of)) < 1.0e-7


def test_p_between_one_and_two_regular_pairs(bumpy256):
    # 1 < p < 2: H2 carries M^(p-2); on pairs where M is healthy nothing
    # should flag
    pr = EnergyParams(1.8, 1.5)
    cv = bumpy256
    phi, psi = random_field(cv, 14), random_field(cv, 15)
    for i, j in PAIRS:
        pair = pair_frame(cv, i, j)
        h = second_variation_density(cv, phi, psi, pair, pr)
        assert np.isfinite(h.total)


def test_variation_terms_container():
    vt = VariationTerms({"A": 1.0, "B": 2.5})
    assert vt.total == 3.5
    assert vt["B"] == 2.5
    assert vt.as_dict() == {"A": 1.0, "B": 2.5, "total": 3.5}
    assert "total=3.5" in repr(vt)

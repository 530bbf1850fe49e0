"""Energy parameters and the pointwise (alpha, p) kernel family.

The pair density of the (alpha, p) energy is evaluated through the bilinear
reformulation rather than as a difference of reciprocal powers: with

    N(u, v) = [ ds * I(u.v) - I(u) . I(v) ] / |df|^2,

where ``I`` denotes the signed short-arc integral and ``ds`` the signed
short-arc separation, one has the exact identity ``1 + N(tau, tau) =
D^2 / |df|^2``, and

    M_alpha = phi_alpha(N(tau, tau)) / |df|^alpha,
    phi_alpha(t) = 1 - (1 + t)^(-alpha/2).

This cancels the ``1/|df|^alpha - 1/D^alpha`` subtraction analytically, so
the density is computable to full relative precision arbitrarily close to
the diagonal.  The integrand of the energy is ``M_alpha ** p``.
"""

from dataclasses import dataclass, field

import numpy as np

from ._pairs import PairSet, k_raw, n_raw, n_raw_scalar
from .errors import NumericalError, ValidationError

__all__ = [
    "EnergyParams",
    "phi_alpha",
    "n_bilinear",
    "k_bilinear",
    "m_alpha",
    "density",
    "weighted_density",
    "GeneralParamCurve",
    "density_general_param",
    "N_CLAMP",
]

#: values of N(tau, tau) in [-N_CLAMP, 0) are treated as rounding noise
N_CLAMP = 1.0e-12


@dataclass(frozen=True)
class EnergyParams:
    """Parameter pair (alpha, p) with the standing assumption enforced.

    The admissible range is ``2 <= alpha * p < 2p + 1`` (scale-invariant
    case included, sub-critical regularity); ``sigma = (alpha*p - 1) / (2p)``
    is the natural fractional-smoothness exponent and ``beta`` the Hoelder
    exponent used by weighted densities (default ``min(alpha/2, 1)``).
    """

    alpha: float
    p: float = 1.0
    beta: float = field(default=None)

    def __post_init__(self):
        if not (self.alpha > 0):
            raise ValidationError("alpha must be positive")
        ap = self.alpha * self.p
        if not (2.0 <= ap < 2.0 * self.p + 1.0):
            raise ValidationError("constraint 2 <= alpha*p < 2p+1 violated")
        if not (self.p >= 1):
            raise ValidationError("p must be >= 1")
        if self.beta is None:
            object.__setattr__(self, "beta", min(self.alpha / 2.0, 1.0))
        if not (0.0 < self.beta <= 1.0):
            raise ValidationError("beta must lie in (0, 1]")

    @property
    def sigma(self):
        return (self.alpha * self.p - 1.0) / (2.0 * self.p)

    @property
    def weight_exponent(self):
        """Exponent of the D-weight that renders the density bounded."""
        return (self.alpha - 2.0 * self.beta) * self.p


def phi_alpha(t, alpha):
    """``phi_alpha(t) = 1 - (1+t)^(-alpha/2)`` and its first two derivatives.

    Evaluated via ``expm1``/``log1p`` so small ``t`` loses no precision.
    Returns ``(value, d1, d2)``.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= -1.0):
        raise ValidationError("phi_alpha requires t > -1")
    a2 = alpha / 2.0
    w = np.power(1.0 + t, -a2)  # (1+t)^(-alpha/2)
    value = -np.expm1(-a2 * np.log1p(t))
    d1 = a2 * w / (1.0 + t)
    d2 = -a2 * (a2 + 1.0) * w / (1.0 + t) ** 2
    return value, d1, d2


def _pairset(curve, pair):
    return PairSet(curve, pair.i, pair.j)


def n_bilinear(curve, u, v, pair):
    """N(u, v) at a sample pair; symmetric, bilinear, zero on constants."""
    ev = _pairset(curve, pair)
    if u.values.ndim == 1:
        return float(n_raw_scalar(ev, u, v, u.dot(v)))
    return float(n_raw(ev, u, v, u.dot(v)))


def k_bilinear(curve, u, v, pair):
    """K(u, v) = <u(s1)-u(s2), v(s1)-v(s2)> / |df|^2 at a sample pair."""
    ev = _pairset(curve, pair)
    return float(k_raw(ev, u, v))


def n_tau_checked(ntt, where=None):
    """Apply the validity policy to raw N(tau, tau) values.

    Negative values beyond rounding tolerance mean the prefix tables and the
    chord disagree -- a genuine inconsistency; small negatives are clamped.
    ``where`` optionally restricts the check (grid band columns are excluded
    by the caller).
    """
    ntt = np.asarray(ntt, dtype=float)
    bad = ntt < -N_CLAMP
    if where is not None:
        bad = bad & where
    if np.any(bad):
        raise NumericalError(
            "N(tau, tau) = %.3g < -%.1g: chord/arc tables are inconsistent"
            % (float(np.min(np.where(bad, ntt, 0.0))), N_CLAMP)
        )
    return np.where(ntt < 0.0, 0.0, ntt)


def _tt_field(curve):
    # cached pointwise tau.tau product field (samples are 1 + O(eps))
    if not hasattr(curve, "_tt_cache"):
        curve._tt_cache = curve.tau_field.dot(curve.tau_field)
    return curve._tt_cache


def n_tau_pair(curve, pair):
    """N(tau, tau) at a sample pair, validity policy applied."""
    tau = curve.tau_field
    raw = n_bilinear(curve, tau, tau, pair)
    return float(n_tau_checked(raw))


def m_alpha(curve, pair, params):
    """Reformulated kernel ``M_alpha = phi_alpha(N(tau,tau)) / |df|^alpha``."""
    ev = _pairset(curve, pair)
    ntt = n_tau_checked(n_raw(ev, curve.tau_field, curve.tau_field, _tt_field(curve)))
    value, _, _ = phi_alpha(ntt, params.alpha)
    return float(value / np.power(ev.chord2, params.alpha / 2.0))


def density(curve, pair, params):
    """Energy integrand ``M_alpha ** p`` at a sample pair."""
    return m_alpha(curve, pair, params) ** params.p


def weighted_density(curve, pair, params, beta=None):
    """``D^((alpha - 2 beta) p) * M_alpha^p`` -- bounded near the diagonal.

    With ``beta = alpha/2`` (the default for alpha <= 2) the weight is 1 and
    this is the plain density; with ``beta = 1`` it extends continuously to
    the diagonal with value ``(alpha/24 |kappa|^2)^p``.
    """
    if beta is None:
        beta = params.beta
    if not (0.0 < beta <= 1.0):
        raise ValidationError("beta must lie in (0, 1]")
    expo = (params.alpha - 2.0 * beta) * params.p
    return pair.D ** expo * density(curve, pair, params)


class GeneralParamCurve:
    """A varied curve ``f + eps*phi`` kept in the original material parameter.

    Sample ``k`` sits at material parameter ``s_k`` (the arclength of the
    *unvaried* curve); the varied curve is no longer unit speed, so densities
    carry the parametrization Jacobian ``|c'(s_i)| |c'(s_j)|`` and intrinsic
    distances are short-arc integrals of the speed.
    """

    def __init__(self, base, phi, eps):
        from .curve import Field  # local import to avoid a cycle

        self.base = base
        self.eps = float(eps)
        vals = base.positions + self.eps * phi.values
        dvals = base.tau + self.eps * phi.deriv.values
        self.speed = np.linalg.norm(dvals, axis=1)
        if float(np.min(self.speed)) <= 0.0:
            raise ValidationError("varied curve has vanishing speed")
        self.positions = vals
        self.speed_field = Field(base, self.speed)
        self.length = float(self.speed_field.prefix()[1])

    def chord(self, i, j):
        d = self.positions[i] - self.positions[j]
        return float(np.linalg.norm(d))

    def intrinsic(self, i, j):
        """Intrinsic (shorter-arc) distance between material samples."""
        P, T = self.speed_field.prefix()
        fwd = P[i] - P[j]
        if i < j:
            fwd += T
        return float(min(fwd, T - fwd))


def density_general_param(gcurve, i, j, params):
    """Jacobian-weighted density of a general-parameter curve at a pair.

    ``(1/|dc|^alpha - 1/D^alpha)^p |c'(s_i)| |c'(s_j)|`` with D the intrinsic
    distance; at ``eps = 0`` this reduces to :func:`density`.  Evaluated in
    the same bracket form as the unit-speed kernel for stability.
    """
    M = gcurve.base.M
    i, j = int(i) % M, int(j) % M
    if i == j:
        raise ValidationError("density requires two distinct samples")
    c = gcurve.chord(i, j)
    D = gcurve.intrinsic(i, j)
    if not (c <= D * (1.0 + 1.0e-9)):
        raise NumericalError("chord exceeds intrinsic distance on varied curve")
    # 1 - (c/D)^alpha, computed as -expm1(alpha * log(c/D))
    bracket = -np.expm1(params.alpha * np.log(min(c / D, 1.0)))
    dens = (bracket / c ** params.alpha) ** params.p
    return float(dens * gcurve.speed[i] * gcurve.speed[j])

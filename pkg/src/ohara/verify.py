"""Independent oracles: diagonal extrapolation, FD derivatives of E, circle forms.

Everything here recomputes a quantity the main modules produce by an
unrelated route, so that agreement is evidence rather than tautology:

* :func:`diagonal_limit` evaluates a weighted kernel quantity along the
  collapsing symmetric path ``(s + h/2, s - h/2)`` with trigonometric
  interpolation between grid points, extrapolates in ``h^2``, and compares
  with the closed forms of the diagonal module.
* :func:`fd_energy_gradient` / :func:`fd_energy_hessian` differentiate the
  assembled energy through finite perturbations of the curve, each perturbed
  curve re-parametrized to arclength from scratch.
* :func:`circle_reference` is a curve-object-free 1-D formula for the circle
  density, stable down to tiny separations via series switching.
"""

from dataclasses import dataclass

import numpy as np

from ._pairs import OffGridPair
from .curve import Field, from_samples
from .diagonal import density_limit, g_limit, h_limit, term_limits
from .errors import NumericalError, ValidationError
from .kernels import n_tau_checked
from .quadrature import energy
from .spectral import prefix_integral
from .variations import Blocks

__all__ = [
    "LimitReport",
    "LIMIT_KINDS",
    "circle_reference",
    "cusp_field",
    "diagonal_limit",
    "fd_energy_gradient",
    "fd_energy_hessian",
    "neville_h2",
]

#: number of path levels h0 / 2^k used by the diagonal extrapolation
_LEVELS = 6


@dataclass
class LimitReport:
    """Extrapolation record for one diagonal limit at one target point."""

    which: str
    s: float
    samples: list  # [(|ds|, weighted value), ...], |ds| geometrically decreasing
    extrapolated: float
    reference: float
    gap_abs: float
    gap_rel: float  # None when the reference is exactly zero

    def as_dict(self):
        return {
            "which": self.which,
            "s": self.s,
            "samples": [[d, v] for d, v in self.samples],
            "extrapolated": self.extrapolated,
            "reference": self.reference,
            "gap": {"abs": self.gap_abs, "rel": self.gap_rel},
        }


def neville_h2(hs, vals):
    """Richardson/Neville extrapolation to h = 0 assuming an h^2 expansion."""
    x = np.asarray(hs, dtype=float) ** 2
    t = [float(v) for v in vals]
    if len(t) < 4:
        raise ValidationError("extrapolation needs at least 4 values")
    for lev in range(1, len(t)):
        t = [
            (x[i + lev] * t[i] - x[i] * t[i + 1]) / (x[i + lev] - x[i])
            for i in range(len(t) - 1)
        ]
    return t[0]


# weight kinds: how the raw quantity is scaled before taking the limit.
#   n     -> D^(alpha - 2 beta) X / |df|^alpha
#   m     -> D^(alpha - 2 beta) X          (X already carries 1/|df|^alpha)
#   gh    -> D^((alpha - 2 beta) p) X
#   plain -> X
LIMIT_KINDS = {
    "m_alpha": "m",
    "density": "gh",
    "n_tau": "n",
    "chord_ratio": "plain",
    "k_ratio": "plain",
    "r1": "n",
    "r2": "n",
    "delta_n": "n",
    "s1": "n",
    "s2": "n",
    "s3": "n",
    "s4": "n",
    "s5": "n",
    "delta2_n": "n",
    "delta_m": "m",
    "delta2_m": "m",
    "g": "gh",
    "h": "gh",
}

_NEEDS_PHI = {
    "chord_ratio", "r1", "r2", "delta_n", "delta_m", "g",
}
_NEEDS_PSI = {
    "k_ratio", "s1", "s2", "s3", "s4", "s5", "delta2_n", "delta2_m", "h",
}


def _raw_values(b, which, p):
    if which == "m_alpha":
        return b.malpha()
    if which == "density":
        return b.malpha() ** p
    if which == "n_tau":
        return b.ntt()
    if which == "chord_ratio":
        return 2.0 * b.kf("phi")
    if which == "k_ratio":
        return 2.0 * b.kpq()
    if which == "r1":
        return -2.0 * b.kf("phi") * b.ntt()
    if which == "r2":
        return 2.0 * b.nt("phi")
    if which == "delta_n":
        return b.dn("phi")
    if which in ("s1", "s2", "s3", "s4", "s5"):
        return b.d2n_terms()[which.upper()]
    if which == "delta2_n":
        return sum(b.d2n_terms().values())
    if which == "delta_m":
        return b.dm("phi")
    if which == "delta2_m":
        return sum(b.d2m_terms().values())
    if which == "g":
        return sum(b.g_terms("phi").values())
    if which == "h":
        terms, flagged = b.h_terms()
        if bool(np.any(flagged)):
            raise NumericalError("H2 singular along the diagonal path")
        return sum(terms.values())
    raise ValidationError("unknown limit kind %r" % (which,))


def _reference(curve, params, phi, psi, which, idx, beta):
    kind = LIMIT_KINDS[which]
    if beta < 1.0 and kind != "plain":
        return 0.0
    if which == "density":
        return float(density_limit(curve, params, beta=1.0)[idx])
    if which == "g":
        return float(g_limit(curve, params, phi)[idx])
    if which == "h":
        return float(h_limit(curve, params, phi, psi)[idx])
    table = term_limits(curve, params, phi=phi, psi=psi)
    return float(table[which][idx])


def diagonal_limit(curve, phi, psi, params, s, which, h0=None):
    """Extrapolate a weighted kernel quantity along ``(s + h/2, s - h/2)``.

    ``which`` selects the quantity (see :data:`LIMIT_KINDS`); the weight
    exponent follows ``params.beta``, and for ``beta < 1`` the reference
    value is 0 — the weighted fields vanish on the diagonal in that branch,
    so the report's absolute gap is the decayed value itself (``gap_rel`` is
    None there).  ``s`` must be a grid point of the curve.
    """
    if which not in LIMIT_KINDS:
        raise ValidationError("unknown limit kind %r" % (which,))
    if phi is None and (which in _NEEDS_PHI or which in _NEEDS_PSI):
        raise ValidationError("%s needs a phi field" % which)
    if psi is None and which in _NEEDS_PSI:
        raise ValidationError("%s needs phi and psi fields" % which)
    idx = int(round(s / curve.h)) % curve.M
    if abs(s - round(s / curve.h) * curve.h) > 1.0e-9 * curve.L:
        raise ValidationError("s must be a grid point")

    if h0 is None:
        h0 = curve.L / 16.0
    hs = h0 / 2.0 ** np.arange(_LEVELS)
    ev = OffGridPair(curve, s + hs / 2.0, s - hs / 2.0)
    b = Blocks(ev, curve, params=params, phi=phi, psi=psi)
    n_tau_checked(b.ntt_raw())

    alpha, p, beta = params.alpha, params.p, params.beta
    kind = LIMIT_KINDS[which]
    raw = np.asarray(_raw_values(b, which, p), dtype=float)
    if kind == "n":
        weighted = ev.D ** (alpha - 2.0 * beta) * raw / b.calpha()
    elif kind == "m":
        weighted = ev.D ** (alpha - 2.0 * beta) * raw
    elif kind == "gh":
        weighted = ev.D ** ((alpha - 2.0 * beta) * p) * raw
    else:
        weighted = raw

    extrap = neville_h2(hs, weighted)
    ref = _reference(curve, params, phi, psi, which, idx, beta)
    gap_abs = abs(extrap - ref)
    gap_rel = gap_abs / abs(ref) if ref != 0.0 else None
    return LimitReport(
        which=which,
        s=float(s),
        samples=list(zip((float(x) for x in hs), (float(v) for v in weighted))),
        extrapolated=float(extrap),
        reference=float(ref),
        gap_abs=float(gap_abs),
        gap_rel=gap_rel,
    )


def _perturbed_energy(curve, values, eps, params):
    try:
        cv = from_samples(curve.positions + eps * values)
    except ValidationError as exc:
        raise ValidationError(
            "perturbed curve at eps=%g rejected: %s" % (eps, exc)
        ) from exc
    return energy(cv, params)


def fd_energy_gradient(curve, phi, params, eps=None):
    """Central finite differences of ``eps -> E(f + eps phi)`` at 0.

    Returns ``(fd_value, richardson_value)``: the plain central quotient at
    ``eps`` and the Richardson combination of the quotients at ``eps`` and
    ``eps/2`` (one order higher).  Each perturbed curve goes through the full
    arclength reparametrization, so this is a geometric derivative oracle,
    independent of the variation formulas.
    """
    if phi.values.ndim != 2:
        raise ValidationError("perturbation field must be a vector field")
    if eps is None:
        eps = 1.0e-5 * curve.L / max(phi.sup_norm(), 1.0e-12)
    vals = phi.values

    def central(e):
        return (
            _perturbed_energy(curve, vals, +e, params)
            - _perturbed_energy(curve, vals, -e, params)
        ) / (2.0 * e)

    d1 = central(eps)
    d2 = central(eps / 2.0)
    return d1, (4.0 * d2 - d1) / 3.0


def fd_energy_hessian(curve, phi, psi, params, eps=None):
    """Mixed central difference of ``E(f + e1 phi + e2 psi)`` at the origin.

    Uses the four-corner quotient on the 3x3 stencil at ``eps`` and again at
    ``eps/2``, returning the Richardson combination.
    """
    if phi.values.ndim != 2 or psi.values.ndim != 2:
        raise ValidationError("perturbation fields must be vector fields")
    if eps is None:
        sup = max(phi.sup_norm(), psi.sup_norm(), 1.0e-12)
        eps = 3.0e-4 * curve.L / sup
    vp = phi.values
    vq = psi.values

    def corner(e):
        epp = _perturbed_energy(curve, vp + vq, e, params)
        emm = _perturbed_energy(curve, vp + vq, -e, params)
        epm = _perturbed_energy(curve, vp - vq, e, params)
        emp = _perturbed_energy(curve, vp - vq, -e, params)
        return (epp - epm - emp + emm) / (4.0 * e * e)

    d1 = corner(eps)
    d2 = corner(eps / 2.0)
    return (4.0 * d2 - d1) / 3.0


def circle_reference(alpha, p, ds_list):
    """Closed-form unit-circle density table, no curve object involved.

    For intrinsic separation ``ds`` in (0, pi] the chord is ``2 sin(ds/2)``
    and the density is ``c^(-alpha p) [1 - (c/ds)^alpha]^p``.  Below
    ``ds ~ 0.15`` the bracket is evaluated from the series of
    ``(c/ds)^2 - 1`` to keep full relative accuracy through the
    cancellation.  Rows carry the weighted value ``ds^((alpha-2)p) *
    density``, whose limit is ``(alpha/24)^p``.
    """
    ds = np.asarray(ds_list, dtype=float)
    if np.any(ds <= 0.0) or np.any(ds > np.pi):
        raise ValidationError("ds values must lie in (0, pi]")
    chord = 2.0 * np.sin(ds / 2.0)
    # log r, r = (chord/ds)^2, via series for small ds
    r1_series = (
        -(ds**2) / 12.0
        + ds**4 / 360.0
        - ds**6 / 20160.0
        + ds**8 / 1814400.0
    )
    logr = np.where(
        ds < 0.15,
        np.log1p(r1_series),
        2.0 * np.log(np.sinc(ds / (2.0 * np.pi))),
    )
    bracket = -np.expm1((alpha / 2.0) * logr)
    density = chord ** (-alpha * p) * bracket**p
    weighted = ds ** ((alpha - 2.0) * p) * density
    rows = [
        {"ds": float(d), "chord": float(c), "density": float(m), "weighted": float(w)}
        for d, c, m, w in zip(ds, chord, density, weighted)
    ]
    return {"alpha": alpha, "p": p, "limit": (alpha / 24.0) ** p, "rows": rows}


def cusp_field(curve, beta, s0=0.0, scale=None):
    """Vector field whose derivative has an ``|s - s0|^beta`` cusp.

    The derivative profile is ``(d(s)^2 + scale^2)^(beta/2)`` (``d`` the
    short-arc distance to ``s0``), mean-removed and integrated into a
    periodic primitive along the first coordinate axis.  The field is thus
    C^1 with a derivative that is genuinely Hölder-beta down to ``scale``
    (default: one grid cell) — the regularity class of the beta < 1 branch.
    Its derivative fails the little-Hölder test at matching resolutions.
    """
    if not 0.0 < beta <= 1.0:
        raise ValidationError("beta must lie in (0, 1]")
    if scale is None:
        scale = curve.h
    L = curve.L
    d = np.abs((curve.s - s0 + L / 2.0) % L - L / 2.0)
    g = (d**2 + scale**2) ** (beta / 2.0)
    g -= g.mean()
    prim, _ = prefix_integral(g, L)
    vals = np.zeros((curve.M, curve.n))
    vals[:, 0] = prim
    return Field(curve, vals)

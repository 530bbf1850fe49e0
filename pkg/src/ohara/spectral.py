"""Periodic spectral calculus on uniform grids.

Everything in this package interprets ``M`` uniform samples of a periodic
function as its trigonometric interpolant (band-limited to ``M`` modes).  This
module provides the three operations the rest of the code needs: spectral
differentiation, exact antiderivatives (prefix integrals) of the interpolant,
and evaluation of the interpolant / its derivatives / its antiderivative at
arbitrary parameter values.

Conventions: samples live at ``s_k = k * L / M`` for ``k = 0..M-1`` with period
``L``; ``M`` must be even.  The Nyquist mode is treated as a pure cosine, which
matches ``numpy.fft.irfft`` at the grid points.
"""

import numpy as np

__all__ = [
    "spectral_derivative",
    "prefix_integral",
    "Interpolant",
    "short_arc_offsets",
]


def _wavenumbers(M, L):
    return 2.0 * np.pi / L * np.arange(M // 2 + 1)


def spectral_derivative(values, L, order=1):
    """Differentiate uniform periodic samples via the trig interpolant.

    Parameters
    ----------
    values : ndarray, shape (M,) or (M, d)
        Samples along axis 0; the sample axis is periodic with period ``L``.
    L : float
        Period.
    order : int
        Derivative order (>= 1).

    Returns
    -------
    ndarray, same shape as ``values``.
    """
    values = np.asarray(values, dtype=float)
    M = values.shape[0]
    c = np.fft.rfft(values, axis=0)
    fac = (1j * _wavenumbers(M, L)) ** order
    if order % 2 == 1:
        # the Nyquist cosine has no odd derivative representable on the grid
        fac[-1] = 0.0
    if values.ndim > 1:
        fac = fac.reshape((-1,) + (1,) * (values.ndim - 1))
    return np.fft.irfft(c * fac, n=M, axis=0)


def prefix_integral(values, L):
    """Antiderivative of the trig interpolant, sampled on the grid.

    Returns ``(P, total)`` where ``P[k]`` is the integral of the interpolant
    from 0 to ``s_k`` (so ``P[0] == 0``) and ``total`` is the integral over one
    full period.  Works on shape ``(M,)`` or ``(M, d)`` input.
    """
    values = np.asarray(values, dtype=float)
    M = values.shape[0]
    c = np.fft.rfft(values, axis=0)
    mu = _wavenumbers(M, L)
    mean = c[0].real / M  # shape () or (d,) after the axis juggling below
    fac = np.zeros(M // 2 + 1, dtype=complex)
    fac[1:] = 1.0 / (1j * mu[1:])
    # dividing the (real) Nyquist coefficient by i*mu makes it purely
    # imaginary, and irfft keeps only its real part -- which is exactly the
    # statement that the integral of the Nyquist cosine vanishes at the grid
    # points.  So no special case is needed.
    if values.ndim > 1:
        fac = fac.reshape((-1,) + (1,) * (values.ndim - 1))
    Q = np.fft.irfft(c * fac, n=M, axis=0)
    s = (np.arange(M) * (L / M)).reshape((M,) + (1,) * (values.ndim - 1))
    P = mean * s + (Q - Q[0])
    total = np.asarray(mean * L)
    return P, total


class Interpolant:
    """Trigonometric interpolant of uniform periodic samples.

    Supports evaluation of the interpolant, its derivatives, and its
    antiderivative at arbitrary parameter values.  Evaluation is O(M) per
    point (direct mode summation), which is fine for the handful of off-grid
    points the verification routines need.
    """

    def __init__(self, values, L):
        values = np.asarray(values, dtype=float)
        self.M = values.shape[0]
        if self.M % 2 != 0:
            raise ValueError("sample count must be even")
        self.L = float(L)
        self.shape = values.shape[1:]
        c = np.fft.rfft(values, axis=0)
        if values.ndim == 1:
            c = c[:, None]
        self._c = c  # (K, d)
        self._mu = _wavenumbers(self.M, self.L)
        w = np.full(self.M // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        self._w = w

    def _reduce(self, out):
        return out[..., 0] if not self.shape else out

    def __call__(self, s, order=0):
        """Evaluate the interpolant (or its ``order``-th derivative) at ``s``."""
        s = np.asarray(s, dtype=float)
        scalar = s.ndim == 0
        sv = np.atleast_1d(s)
        fac = (1j * self._mu) ** order if order else np.ones_like(self._mu, dtype=complex)
        if order % 2 == 1:
            fac = fac.copy()
            fac[-1] = 0.0
        E = np.exp(1j * np.outer(sv, self._mu))
        out = (E @ ((self._w * fac)[:, None] * self._c)).real / self.M
        out = self._reduce(out)
        return out[0] if scalar else out

    def prefix(self, s):
        """Integral of the interpolant from 0 to ``s`` (s need not be in [0, L))."""
        s = np.asarray(s, dtype=float)
        scalar = s.ndim == 0
        sv = np.atleast_1d(s)
        mean = self._c[0].real / self.M
        cpre = np.zeros_like(self._c)
        cpre[1:] = (self._w[1:, None] / (1j * self._mu[1:, None])) * self._c[1:]
        E = np.exp(1j * np.outer(sv, self._mu)) - 1.0
        out = (E @ cpre).real / self.M + np.outer(sv, mean)
        out = self._reduce(out)
        return out[0] if scalar else out


def short_arc_offsets(M, L):
    """Signed short-arc separation for each cyclic grid offset.

    ``out[k]`` is the representative of ``k * L / M`` in ``(-L/2, L/2]``; the
    antipodal offset ``k = M/2`` maps to ``+L/2``.
    """
    k = np.arange(M)
    k = np.where(k > M // 2, k - M, k)
    return k * (L / M)

"""Closed-form Dirichlet GP ground state on [0, 1] without external potential.

The positive solution of ``-phi'' + g*phi**3 = mu*phi``, ``phi(0) = phi(1) = 0``,
``int phi**2 = 1`` is ``phi(t) = a * sn(2K t | m)`` with

    g    = 8 K (K - E)
    mu   = 4 K**2 (1 + m)
    a**2 = m K / (K - E)

K, E being the complete elliptic integrals of parameter m. Everything is
parametrized by ``u = logit(m)`` so that both ``m -> 0`` (weak coupling) and
``1 - m -> 0`` (Thomas-Fermi) stay representable. Differences like ``K - E``
cancel badly for small m and are taken from their power series there.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import ellipe, ellipj, ellipkm1, expit

_SERIES_TERMS = 40
_SERIES_BELOW = 0.05
_ASYMPTOTIC_ABOVE = 600.0


def _series_coefficients():
    n = np.arange(_SERIES_TERMS + 1)
    c2 = np.array([(math.comb(2 * k, k) / 4.0**k) ** 2 for k in n])
    k_coef = c2
    e_coef = np.concatenate(([1.0], -c2[1:] / (2.0 * n[1:] - 1.0)))
    kme = k_coef - e_coef
    shift_k = np.concatenate(([0.0], k_coef[:-1]))
    shift_e = np.concatenate(([0.0], e_coef[:-1]))
    d = 2.0 * k_coef + shift_k - 2.0 * e_coef - 2.0 * shift_e
    return k_coef, kme, d, n


_K_COEF, _KME_COEF, _D_COEF, _N = _series_coefficients()


def _poly(c, m):
    acc = np.full_like(m, c[-1])
    for coef in c[-2::-1]:
        acc = acc * m + coef
    return 0.5 * math.pi * acc


class UnitState:
    """Elliptic quantities at parameter ``u = logit(m)`` (vectorized)."""

    def __init__(self, u):
        u0 = np.asarray(u, dtype=float)
        self.u = u0
        u = u0.reshape(-1)
        m = expit(u)
        q = expit(-u)
        huge = u > _ASYMPTOTIC_ABOVE
        # 1 - m underflows: K = ln(4/sqrt(1-m)) up to O((1-m) ln(1-m))
        K = np.where(huge, math.log(4.0) + 0.5 * u, ellipkm1(np.where(huge, 0.5, q)))
        E = ellipe(m)
        kme = K - E
        D = (2.0 + m) * K - 2.0 * (1.0 + m) * E
        dK = 0.5 * (E - q * K)
        dkme = dK + 0.5 * q * kme
        small = m < _SERIES_BELOW
        if small.any():
            ms, qs = m[small], q[small]
            kme[small] = _poly(_KME_COEF, ms)
            D[small] = _poly(_D_COEF, ms)
            dK[small] = qs * _poly(_N * _K_COEF, ms)
            dkme[small] = qs * _poly(_N * _KME_COEF, ms)
        shape = u0.shape
        self.m, self.q, self.K, self.E = (a.reshape(shape) for a in (m, q, K, E))
        self.kme, self.D, self.dK, self.dkme = (a.reshape(shape) for a in (kme, D, dK, dkme))

    @property
    def coupling(self):
        return 8.0 * self.K * self.kme

    @property
    def mu(self):
        return 4.0 * self.K**2 * (1.0 + self.m)

    @property
    def quartic(self):
        """``int_0^1 phi**4``."""
        return self.K * self.D / (3.0 * self.kme**2)

    @property
    def energy(self):
        return self.mu - 0.5 * self.coupling * self.quartic

    @property
    def amplitude2(self):
        return self.m * self.K / self.kme

    def dlog_mu(self):
        return 2.0 * self.dK / self.K + self.m * self.q / (1.0 + self.m)

    def dlog_coupling(self):
        return self.dK / self.K + self.dkme / self.kme


PI2 = math.pi**2


def _solve(target, which: str):
    """Vectorized safeguarded Newton for ``u`` with ``F(u) = target``."""
    target = np.atleast_1d(np.asarray(target, dtype=float))
    log_t = np.log(target)
    if which == "mu":
        m_guess = (2.0 / 3.0) * (target / PI2 - 1.0)
    else:
        m_guess = target / PI2
    lo = np.log(np.maximum(m_guess, 1e-300)) - 5.0
    hi = 2.0 * np.sqrt(target / 8.0) + 10.0

    def f(u):
        s = UnitState(u)
        if which == "mu":
            return np.log(s.mu) - log_t, s.dlog_mu()
        return np.log(s.coupling) - log_t, s.dlog_coupling()

    for _ in range(60):
        flo, _ = f(lo)
        bad = flo > 0
        if not bad.any():
            break
        lo = np.where(bad, lo - 20.0, lo)
    for _ in range(60):
        fhi, _ = f(hi)
        bad = fhi < 0
        if not bad.any():
            break
        hi = np.where(bad, 2.0 * hi + 10.0, hi)

    u = 0.5 * (lo + hi)
    for _ in range(200):
        fu, dfu = f(u)
        lo = np.where(fu < 0, u, lo)
        hi = np.where(fu > 0, u, hi)
        done = (np.abs(fu) <= 4e-16) | (hi - lo <= 1e-15 * np.maximum(1.0, np.abs(u)))
        if done.all():
            break
        with np.errstate(divide="ignore", invalid="ignore"):
            step = u - fu / dfu
        inside = np.isfinite(step) & (step > lo) & (step < hi)
        u = np.where(done, u, np.where(inside, step, 0.5 * (lo + hi)))
    return u


def u_from_coupling(g):
    """Parameter u for coupling ``g > 0``."""
    return _solve(g, "coupling")


def u_from_mu(mu):
    """Parameter u for unit chemical potential ``mu > pi**2``."""
    return _solve(mu, "mu")


def profile(t, u: float) -> np.ndarray:
    """Normalized profile ``phi(t)`` on [0, 1] for parameter u (scalar)."""
    t = np.asarray(t, dtype=float)
    s = UnitState(u)
    K, m = float(s.K), float(s.m)
    a = math.sqrt(float(s.amplitude2))
    x = 2.0 * K * np.minimum(t, 1.0 - t)
    sn = ellipj(x, m)[0]
    return a * np.clip(sn, 0.0, None)


def sine_profile(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    return math.sqrt(2.0) * np.sin(math.pi * t)

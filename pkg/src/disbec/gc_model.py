"""Grand-canonical mass-repartition model for the hard-wall condensate.

A gap of length l holding mass n costs ``pi^2 n/l^2 + gamma n^2/(2 l)``;
minimizing the total at fixed chemical potential gives the repartition
``n(l) = (l*gamma)^-1 [mu l^2 - pi^2]_+`` and ``mu`` is fixed by the averaged
normalization ``nu * int n(l) nu exp(-nu l) dl = 1``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field
from typing import Union

import numpy as np

from .discretize import Sigma, is_infinite
from .errors import ConvergenceError, DomainError
from .quadrature import adaptive_gauss_legendre

PI2 = math.pi**2
TAIL_CUT = 40.0


class Phase(str, enum.Enum):
    DELOCALIZED = "DELOCALIZED"
    TRANSITION = "TRANSITION"
    LOCALIZED = "LOCALIZED"
    FEW_INTERVALS = "FEW_INTERVALS"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class PhaseThresholds:
    """Cut-offs on the occupied fraction; conventions, not derived values."""

    delocalized: float = 0.9
    localized: float = 0.1
    few_intervals: float = 10.0


@dataclass(frozen=True)
class GcSolution:
    mu: float
    lam: float
    lbar: float
    norm_residual: float
    phase: Phase
    relation_constant: float
    eq_star_check: float
    e_gc: float
    gamma: float
    nu: float
    lbar_ratio: float
    iterations: int
    thresholds: PhaseThresholds = field(default_factory=PhaseThresholds)

    def as_row(self) -> dict:
        d = asdict(self)
        d["phase"] = str(self.phase)
        d.pop("thresholds")
        d.update({f"threshold_{k}": v for k, v in asdict(self.thresholds).items()})
        return d


def _check(gamma: float, nu: float):
    if not (gamma > 0 and math.isfinite(gamma)):
        raise DomainError(f"the model needs gamma > 0, got {gamma!r}")
    if not (nu > 0 and math.isfinite(nu)):
        raise DomainError(f"nu must be positive, got {nu!r}")


def mass_per_length(ell, mu: float, gamma: float):
    """``(ell*gamma)^-1 * max(mu*ell^2 - pi^2, 0)``."""
    if gamma <= 0:
        raise DomainError("mass_per_length is undefined for gamma = 0")
    if mu <= 0:
        raise DomainError(f"mu must be positive, got {mu!r}")
    ell = np.asarray(ell, dtype=float)
    if np.any(ell <= 0):
        raise DomainError("gap lengths must be positive")
    out = np.maximum(mu * ell * ell - PI2, 0.0) / (ell * gamma)
    return float(out) if out.ndim == 0 else out


def length_cutoff(nu: float) -> float:
    """Integration window width ``(40 + 3 ln nu)/nu``."""
    return (TAIL_CUT + 3.0 * math.log(max(nu, 1.0))) / nu


def _integrate(weight, mu: float, nu: float) -> float:
    # The window starts at the occupation threshold, so the neglected tail is
    # below e^-40 relative to the integral even when the threshold lies far
    # out in the exponential tail.
    lo = math.pi / math.sqrt(mu)
    hi = max(length_cutoff(nu), lo + length_cutoff(nu))
    return adaptive_gauss_legendre(lambda l: weight(l) * nu * np.exp(-nu * l), lo, hi)[0]


def normalization_integral(mu: float, gamma: float, nu: float) -> float:
    """``nu * int n(l) dP_nu(l)``: the mass the model places at chemical potential mu."""
    _check(gamma, nu)
    return nu * _integrate(lambda l: (mu * l * l - PI2) / (l * gamma), mu, nu)


def normalization_defect(mu: float, gamma: float, nu: float) -> float:
    """``F(mu) = nu * int n(l) dP_nu(l) - 1``; strictly increasing for mu > pi^2."""
    return normalization_integral(mu, gamma, nu) - 1.0


def occupied_fraction(mu: float, nu: float) -> float:
    """Probability that a gap exceeds the occupation threshold pi/sqrt(mu)."""
    if mu <= 0:
        raise DomainError(f"mu must be positive, got {mu!r}")
    return math.exp(-math.pi * nu / math.sqrt(mu))


def mean_occupied_length(mu: float, gamma: float, nu: float) -> tuple[float, float]:
    """Mass-weighted mean gap length and the ratio ``lbar*nu/(1 + ln(1 + nu^2/gamma))``."""
    _check(gamma, nu)
    lbar = nu * _integrate(lambda l: (mu * l * l - PI2) / gamma, mu, nu)
    return lbar, lbar * nu / (1.0 + math.log1p(nu * nu / gamma))


def grand_canonical_energy(mu: float, gamma: float, nu: float) -> float:
    """Model energy ``nu * int [pi^2 n/l^2 + gamma n^2/(2l)] dP_nu`` at the repartition."""
    _check(gamma, nu)
    return nu * _integrate(lambda l: (mu * mu * l**4 - PI2 * PI2) / (2.0 * gamma * l**3),
                           mu, nu)


def classify_phase(lam: Union[float, GcSolution], nu: float,
                   thresholds: PhaseThresholds = PhaseThresholds()) -> Phase:
    if isinstance(lam, GcSolution):
        lam = lam.lam
    if lam * nu <= thresholds.few_intervals:
        return Phase.FEW_INTERVALS
    if lam >= thresholds.delocalized:
        return Phase.DELOCALIZED
    if lam <= thresholds.localized:
        return Phase.LOCALIZED
    return Phase.TRANSITION


def relation_check(gamma: float, nu: float, mu: float) -> tuple[float, float]:
    """``(lam/ln(1/lam)^2 * nu^2/gamma, (mu/gamma)*lam)``.

    The first value is undefined (nan) when lam rounds to exactly 1.
    """
    _check(gamma, nu)
    lam = occupied_fraction(mu, nu)
    eq_star = mu / gamma * lam
    if lam >= 1.0:
        return math.nan, eq_star
    # ln(1/lam) = pi*nu/sqrt(mu) exactly
    x = math.pi * nu / math.sqrt(mu)
    return lam / (x * x) * nu * nu / gamma, eq_star


def solve_mu(gamma: float, nu: float, tol: float = 1e-12,
             thresholds: PhaseThresholds = PhaseThresholds(),
             max_doublings: int = 1000) -> GcSolution:
    """Chemical potential from the averaged normalization, by bisection."""
    _check(gamma, nu)
    lo = PI2 * (1.0 + 1e-9)
    f_lo = normalization_defect(lo, gamma, nu)
    if f_lo >= 0:
        raise ConvergenceError("normalization already exceeded at the lower bracket",
                               diagnostics={"mu": lo, "F": f_lo})
    hi = 2.0 * lo
    for _ in range(max_doublings):
        f_hi = normalization_defect(hi, gamma, nu)
        if f_hi > 0:
            break
        lo, f_lo = hi, f_hi
        hi *= 2.0
    else:
        raise ConvergenceError("could not bracket mu", diagnostics={"mu_hi": hi})

    it = 0
    mu, f_mu = hi, f_hi
    while it < 400:
        it += 1
        mu = 0.5 * (lo + hi)
        f_mu = normalization_defect(mu, gamma, nu)
        if abs(f_mu) < tol or hi - lo <= 2e-16 * mu:
            break
        if f_mu > 0:
            hi = mu
        else:
            lo = mu

    lam = occupied_fraction(mu, nu)
    lbar, ratio = mean_occupied_length(mu, gamma, nu)
    constant, eq_star = relation_check(gamma, nu, mu)
    return GcSolution(
        mu=mu, lam=lam, lbar=lbar, norm_residual=abs(f_mu),
        phase=classify_phase(lam, nu, thresholds), relation_constant=constant,
        eq_star_check=eq_star, e_gc=grand_canonical_energy(mu, gamma, nu),
        gamma=gamma, nu=nu, lbar_ratio=ratio, iterations=it, thresholds=thresholds,
    )


def theorem41_conditions(gamma: float, nu: float, sigma: Sigma) -> tuple[float, float]:
    """Margins ``gamma (ln nu)^2/nu`` and ``sigma (1 + ln(1 + nu^2/gamma))/nu``.

    Both large means the disorder-averaged energy is self-averaging.
    """
    if nu <= 1:
        raise DomainError(f"needs nu > 1, got {nu!r}")
    if gamma <= 0:
        raise DomainError(f"needs gamma > 0, got {gamma!r}")
    c1 = gamma * math.log(nu) ** 2 / nu
    if is_infinite(sigma):
        return c1, math.inf
    return c1, float(sigma) * (1.0 + math.log1p(nu * nu / gamma)) / nu


def scale_from_thermodynamic(L: float, b: float, d: float, g: float,
                             rho: float) -> tuple[float, float, float]:
    """Map box length L, scatterer strength b and density d, coupling g and
    particle density rho onto the unit-interval ``(sigma, nu, gamma)``."""
    for name, v in (("L", L), ("b", b), ("d", d), ("g", g), ("rho", rho)):
        if not v > 0:
            raise DomainError(f"{name} must be positive, got {v!r}")
    return L * b, L * d, L * L * rho * g


def thermodynamic_from_scaled(sigma: float, nu: float, gamma: float, L: float,
                              rho: float) -> tuple[float, float, float]:
    """Inverse of ``scale_from_thermodynamic`` at given L and rho: returns (b, d, g)."""
    if not (L > 0 and rho > 0):
        raise DomainError("L and rho must be positive")
    return sigma / L, nu / L, gamma / (L * L * rho)


@dataclass(frozen=True)
class ConditionBand:
    lower: float
    value: float
    upper: float

    @property
    def lower_margin(self) -> float:
        return self.value / self.lower

    @property
    def upper_margin(self) -> float:
        return self.upper / self.value


def thermodynamic_condition_band(L: float, d: float, g: float, rho: float) -> ConditionBand:
    """Where ``rho*g`` sits relative to ``d/(L (ln L)^2)`` and ``d^2``."""
    if L <= 1:
        raise DomainError(f"needs L > 1, got {L!r}")
    return ConditionBand(lower=d / (L * math.log(L) ** 2), value=rho * g, upper=d * d)

"""Fluctuation spectra around the mean-field state and critical exponents.

Around a stationary displacement the projected Hamiltonian stays quadratic:

    Σ_n ω ã†ã - (λ_n²/Δ'_n)(ã† + ã)² - [J1 ã†_n ã_{n+1} + J2 (-1)^n e^{iθ} ã†_n ã_{n+2} + h.c.]

with ``Δ'_n = sqrt(Δ² + 16 g² A_n²)`` and ``λ_n = g Δ / Δ'_n``. Its matrix is
the Hessian of E_g written in quadrature variables, so a strict local
minimum always gives a stable spectrum.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import meanfield
from .bogoliubov import Spectrum, diagonalize, is_positive_definite
from .errors import DomainError, FitError
from .meanfield import Displacements, MeanFieldSolution, MinimizeOptions
from .model import ModelParams, QuadraticForm, _squeezed_form, realspace_np_form

__all__ = [
    "SrForm",
    "ExponentFit",
    "sr_form",
    "spectrum_at",
    "locate_critical_coupling",
    "closing_modes",
    "spectrum_at_criticality",
    "fit_exponent",
]

EPS_FLOOR = 1e-12


@dataclass(frozen=True)
class SrForm:
    delta_prime: np.ndarray
    lam: np.ndarray
    form: QuadraticForm

    @property
    def squeezing(self) -> np.ndarray:
        """Coefficient of ``-(ã† + ã)²`` per cavity: ``λ_n² / Δ'_n``."""
        return self.lam**2 / self.delta_prime


@dataclass(frozen=True)
class ExponentFit:
    g1c_est: float
    gamma: float
    side: str
    window: tuple[float, float]
    residual: float
    mode_index: int
    distances: np.ndarray = field(repr=False)
    energies: np.ndarray = field(repr=False)
    intercept: float = 0.0


def sr_form(params: ModelParams, d: Displacements) -> SrForm:
    """Quadratic fluctuation Hamiltonian about displacements ``d``."""
    if d.n != params.n_cavities:
        raise ValueError("displacement length does not match n_cavities")
    g, delta = params.g, params.delta
    dp = np.sqrt(delta**2 + 16.0 * g**2 * d.a**2)
    lam = g * delta / dp
    squeeze = lam**2 / dp
    offset = meanfield.energy(params, d) - float(np.sum(squeeze))
    return SrForm(dp, lam, _squeezed_form(params, squeeze, offset))


def spectrum_at(params: ModelParams, options: MinimizeOptions | None = None,
                solution: MeanFieldSolution | None = None) -> tuple[Spectrum, MeanFieldSolution]:
    """Minimize, build the fluctuation form and diagonalize it."""
    sol = solution if solution is not None else meanfield.minimize(params, options)
    return diagonalize(sr_form(params, sol.displacements).form), sol


def _np_stable(params: ModelParams, g1: float) -> bool:
    return is_positive_definite(realspace_np_form(params.replace(g1=g1)).matrix)


def _bracket_critical(params: ModelParams, tol: float, g_hi: float) -> tuple[float, float]:
    lo, hi = 0.0, g_hi
    if not _np_stable(params, lo):
        raise DomainError("normal phase already unstable at g1 = 0")
    if _np_stable(params, hi):
        raise DomainError(f"normal phase still stable at g1 = {hi}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if _np_stable(params, mid):
            lo = mid
        else:
            hi = mid
    return lo, hi


def locate_critical_coupling(params: ModelParams, tol: float = 1e-10,
                             g_hi: float = 1.0) -> float:
    """Bisect the normal-phase gap closure in g1 (other parameters fixed)."""
    lo, hi = _bracket_critical(params, tol, g_hi)
    return 0.5 * (lo + hi)


def closing_modes(spectrum: Spectrum, threshold: float = 1e-5) -> int:
    """Number of excitation energies below ``threshold``."""
    return int(np.sum(spectrum.epsilons < threshold))


def spectrum_at_criticality(params: ModelParams, g_hi: float = 1.0) -> tuple[float, Spectrum]:
    """Normal-phase spectrum at the last stable coupling before the gap closes.

    The bracket is narrowed to machine resolution, so modes that close
    scale down to ~1e-8 and are easy to count with :func:`closing_modes`.
    """
    lo, _ = _bracket_critical(params, 0.0, g_hi)
    return lo, diagonalize(realspace_np_form(params.replace(g1=lo)))


def fit_exponent(params: ModelParams, side: str = "below",
                 window: tuple[float, float] = (1e-4, 1e-2), mode_index: int = 0,
                 n_points: int = 12, options: MinimizeOptions | None = None,
                 g1c: float | None = None) -> ExponentFit:
    """Slope of log ε against log |g1 - g1c| for one vanishing mode.

    ``mode_index`` counts modes upward from the lowest. ``g1c`` defaults to
    the bisected gap-closure point. Energies below ``1e-12 Δ`` are dropped.
    """
    if side not in ("below", "above"):
        raise ValueError("side must be 'below' or 'above'")
    lo, hi = window
    if not 0 < lo < hi:
        raise ValueError("window must satisfy 0 < min < max")
    if n_points < 12:
        raise ValueError("need at least 12 window points")
    gc = locate_critical_coupling(params) if g1c is None else g1c
    sign = -1.0 if side == "below" else 1.0
    dist = np.logspace(np.log10(lo), np.log10(hi), n_points)
    eps = np.empty(n_points)
    for i, dg in enumerate(dist):
        spec, _ = spectrum_at(params.replace(g1=gc + sign * dg), options)
        eps[i] = spec.ascending()[mode_index]
    keep = eps > EPS_FLOOR * params.delta
    if keep.sum() < 8:
        raise FitError(f"only {int(keep.sum())} points above the numerical floor")
    x, y = np.log(dist[keep]), np.log(eps[keep])
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.max(np.abs(y - (slope * x + intercept))))
    return ExponentFit(gc, float(slope), side, (lo, hi), resid, mode_index,
                       dist[keep], eps[keep], float(intercept))

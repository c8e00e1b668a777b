"""Model parameters and the quadratic Hamiltonians of the Rabi zigzag chain.

Cavities are labelled ``n = 1..N`` and stored at array index ``n - 1``.
Odd ``n`` form the lower (odd) species, even ``n`` the upper (even) species.
All index arithmetic is periodic modulo ``N``.

A :class:`QuadraticForm` represents

    H = a†·A·a + ½(a†·B·a† + h.c.) + offset

through the Bogoliubov matrix ``M = [[A, B], [B*, A*]]`` acting on
``ψ = [a_1..a_m, a_1†..a_m†]`` (``½ψ†Mψ`` differs from the normal-ordered
bilinear above by ``½ tr A``, which :func:`rabizigzag.bogoliubov.zero_point_offset`
accounts for).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, EvanescentMode

__all__ = [
    "ModelParams",
    "QuadraticForm",
    "momentum_grid",
    "species_signs",
    "hopping_matrix",
    "dispersion",
    "momentum_form",
    "realspace_np_form",
    "analytic_bands",
    "critical_coupling",
    "min_critical_coupling",
    "triple_point",
    "crossing_ratio",
]

_HALF_PI = 0.5 * math.pi


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of the chain. ``omega`` sets the energy unit.

    ``g1`` is the scaled coupling ``g / sqrt(delta * omega)``; ``j1`` couples
    nearest neighbours (across species), ``j2`` next-nearest neighbours
    (within a species) with the staggered phase ``theta``.
    """

    omega: float = 1.0
    delta: float = 50.0
    g1: float = 0.3
    j1: float = 0.0025
    j2: float = 0.05
    theta: float = _HALF_PI
    n_cavities: int = 6

    def __post_init__(self):
        for name in ("omega", "delta", "g1", "j1", "j2", "theta"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.omega <= 0 or self.delta <= 0:
            raise ValueError("omega and delta must be positive")
        if self.j1 < 0 or self.j2 < 0:
            raise ValueError("hopping strengths must be non-negative")
        if self.g1 < 0:
            raise ValueError("g1 must be non-negative")
        if not -math.pi < self.theta <= math.pi:
            raise ValueError("theta must lie in (-pi, pi]")
        n = self.n_cavities
        if int(n) != n or n < 6 or n % 2:
            # N=4 double counts every NNN bond; odd N breaks the bipartition
            raise ValueError("n_cavities must be an even integer >= 6")
        object.__setattr__(self, "n_cavities", int(n))

    @property
    def g(self) -> float:
        return self.g1 * math.sqrt(self.delta * self.omega)

    @property
    def ratio(self) -> float:
        """Hopping ratio J1/J2 (inf when J2 = 0)."""
        return self.j1 / self.j2 if self.j2 else math.inf

    def with_ratio(self, ratio: float) -> "ModelParams":
        return replace(self, j1=ratio * self.j2)

    def replace(self, **changes) -> "ModelParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class QuadraticForm:
    m: int
    matrix: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.shape != (2 * self.m, 2 * self.m):
            raise ValueError(f"matrix must be {2 * self.m}x{2 * self.m}")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @property
    def normal(self) -> np.ndarray:
        return self.matrix[: self.m, : self.m]

    @property
    def anomalous(self) -> np.ndarray:
        return self.matrix[: self.m, self.m :]

    def is_hermitian(self, rtol: float = 1e-12) -> bool:
        scale = max(1.0, float(np.abs(self.matrix).max()))
        return bool(np.abs(self.matrix - self.matrix.conj().T).max() <= rtol * scale)

    def has_particle_hole_structure(self, rtol: float = 1e-12) -> bool:
        """True when ``M = [[A, B], [B*, A*]]`` with A Hermitian, B symmetric."""
        m = self.m
        a, b = self.normal, self.anomalous
        scale = max(1.0, float(np.abs(self.matrix).max()))
        tol = rtol * scale
        return bool(
            np.abs(a - a.conj().T).max() <= tol
            and np.abs(b - b.T).max() <= tol
            and np.abs(self.matrix[m:, :m] - b.conj()).max() <= tol
            and np.abs(self.matrix[m:, m:] - a.conj()).max() <= tol
        )

    @classmethod
    def from_blocks(cls, a: np.ndarray, b: np.ndarray, offset: float = 0.0) -> "QuadraticForm":
        a = np.asarray(a, dtype=complex)
        b = np.asarray(b, dtype=complex)
        return cls(a.shape[0], np.block([[a, b], [b.conj(), a.conj()]]), float(offset))


def momentum_grid(n_cavities: int) -> np.ndarray:
    """Species momenta ``2πm/N`` in the reduced zone ``(-π/2, π/2]``.

    The zone edge ``k = π/2`` (present when 4 divides N) appears once, so
    there are exactly N/2 points, each carrying two bands.
    """
    n = int(n_cavities)
    ms = np.arange(-(n // 4), n // 4 + 1)
    ks = 2.0 * np.pi * ms / n
    keep = (ks > -_HALF_PI + 1e-12) & (ks <= _HALF_PI + 1e-12)
    ks = ks[keep]
    assert ks.size == n // 2
    return ks


def species_signs(n_cavities: int) -> np.ndarray:
    """``(-1)^n`` for ``n = 1..N``."""
    return np.where(np.arange(1, n_cavities + 1) % 2, -1.0, 1.0)


def hopping_matrix(params: ModelParams) -> np.ndarray:
    """Single-particle hopping block: -J1 on NN bonds, -J2 (-1)^n e^{iθ} on NNN."""
    n = params.n_cavities
    h = np.zeros((n, n), dtype=complex)
    sign = species_signs(n)
    phase = np.exp(1j * params.theta)
    for i in range(n):
        j = (i + 1) % n
        h[i, j] += -params.j1
        h[j, i] += -params.j1
        j = (i + 2) % n
        t = -params.j2 * sign[i] * phase
        h[i, j] += t
        h[j, i] += np.conj(t)
    return h


def dispersion(params: ModelParams, k: float, branch: int) -> float:
    """Species band frequency ``ω(1 - 2g1²) ± 2 J2 cos(θ - 2k)``."""
    if branch not in (1, -1):
        raise ValueError("branch must be +1 or -1")
    base = params.omega * (1.0 - 2.0 * params.g1**2)
    return base + branch * 2.0 * params.j2 * math.cos(params.theta - 2.0 * k)


def momentum_form(params: ModelParams, k: float) -> QuadraticForm:
    """4x4 Bogoliubov matrix for ``ψ = [a_k, b_k, a_{-k}†, b_{-k}†]``.

    Away from ``sin θ · sin 2k = 0`` the lower diagonal block holds the
    ``-k`` frequencies, so the form is Hermitian but not particle-hole
    symmetric; :func:`rabizigzag.bogoliubov.diagonalize` then selects the
    excitations by symplectic norm.
    """
    w = params.omega
    hop = -2.0 * params.j1 * math.cos(k)
    anom = -2.0 * w * params.g1**2
    mat = np.array(
        [
            [dispersion(params, k, 1), hop, anom, 0.0],
            [hop, dispersion(params, k, -1), 0.0, anom],
            [anom, 0.0, dispersion(params, -k, 1), hop],
            [0.0, anom, hop, dispersion(params, -k, -1)],
        ]
    )
    # constants per k point: two sites' worth of -Δ/2 - ω g1²
    offset = -2.0 * (0.5 * params.delta + w * params.g1**2)
    return QuadraticForm(2, mat, offset)


def realspace_np_form(params: ModelParams) -> QuadraticForm:
    """Normal-phase Hamiltonian projected on the atomic ground state.

    ``Σ ω a†a - ω g1² (a† + a)² - J1 (a†_n a_{n+1} + h.c.)
    - J2 [(-1)^n e^{iθ} a†_n a_{n+2} + h.c.]`` plus the constant
    ``-N(Δ/2 + ω g1²)`` collected from the projection and normal ordering.
    """
    return _squeezed_form(params, np.full(params.n_cavities, params.omega * params.g1**2),
                          -params.n_cavities * (0.5 * params.delta + params.omega * params.g1**2))


def _squeezed_form(params: ModelParams, squeeze: np.ndarray, offset: float) -> QuadraticForm:
    # -c_n (a† + a)² contributes -2c_n to A_nn and -2c_n to B_nn
    n = params.n_cavities
    a = hopping_matrix(params)
    a[np.diag_indices(n)] += params.omega - 2.0 * squeeze
    b = np.diag(-2.0 * squeeze).astype(complex)
    return QuadraticForm.from_blocks(a, b, offset)


def _band_terms(params: ModelParams, k: float):
    w, g2 = params.omega, params.g1**2
    c2 = math.cos(k) ** 2
    # NNN phase advances by 2k per intra-species step
    s2 = math.sin(2.0 * k) ** 2
    base = w**2 * (1 - 4 * g2) + 4 * params.j1**2 * c2 + 4 * params.j2**2 * s2
    inner = params.j1**2 * (1 - 2 * g2) ** 2 * c2 + params.j2**2 * (1 - 4 * g2) * s2
    return base, inner


def analytic_bands(params: ModelParams, k: float) -> tuple[float, float]:
    """Closed-form bands at θ = π/2, in halved units (ε = mode frequency / 2).

    Solves ``4ε² = ω²(1-4g1²) + 4J1²cos²k + 4J2²sin²2k
    ± 4ω sqrt(J1²(1-2g1²)²cos²k + J2²(1-4g1²) sin²2k)``.
    """
    if not math.isclose(params.theta, _HALF_PI, rel_tol=0.0, abs_tol=1e-12):
        raise DomainError("closed-form bands exist only at theta = pi/2")
    base, inner = _band_terms(params, k)
    if inner < 0:
        raise EvanescentMode(f"negative inner radicand at k={k}")
    root = 4.0 * params.omega * math.sqrt(inner)
    lower = base - root
    if lower < -1e-14 * max(1.0, abs(base)):
        raise EvanescentMode(f"lower band radicand {lower:.3e} < 0 at k={k}")
    return math.sqrt(base + root) / 2.0, math.sqrt(max(lower, 0.0)) / 2.0


def critical_coupling(params: ModelParams, k: float) -> float:
    """g1 at which the lower band at momentum k closes (θ = π/2 bands).

    ``sqrt[(ω² - 4(J1²cos²k + J2²sin²2k)) / (4ω(ω + 2J1 cos k))]``
    """
    w = params.omega
    num = w**2 - 4.0 * (params.j1**2 * math.cos(k) ** 2 + params.j2**2 * math.sin(2.0 * k) ** 2)
    den = 4.0 * w * (w + 2.0 * params.j1 * math.cos(k))
    if num <= 0 or den <= 0:
        raise DomainError("normal phase unstable already at g1 = 0")
    return math.sqrt(num / den)


def min_critical_coupling(params: ModelParams) -> tuple[float, float]:
    """Smallest :func:`critical_coupling` over the momentum grid and its k."""
    ks = momentum_grid(params.n_cavities)
    vals = [critical_coupling(params, k) for k in ks]
    i = int(np.argmin(vals))
    return vals[i], float(ks[i])


def triple_point(params: ModelParams) -> float:
    """Hopping ratio where the k=0 and k=±π/3 critical lines meet."""
    w, j2 = params.omega, params.j2
    if j2 <= 0:
        raise DomainError("triple point needs j2 > 0")
    # rationalized form of (sqrt(w² + 12 J2²) - w) / (2 J2), stable as J2 -> 0
    return 6.0 * j2 / (math.sqrt(w**2 + 12.0 * j2**2) + w)


def crossing_ratio(params: ModelParams, k_a: float, k_b: float,
                   bracket: tuple[float, float] = (1e-9, 5.0)) -> float:
    """Ratio J1/J2 where ``critical_coupling`` at k_a and k_b coincide.

    Numerical counterpart of :func:`triple_point` for any pair of momenta
    (e.g. 0 and π/4 for N = 8).
    """

    def diff(r):
        p = params.with_ratio(r)
        return critical_coupling(p, k_a) - critical_coupling(p, k_b)

    lo, hi = bracket
    return brentq(diff, lo, hi, xtol=1e-14, rtol=1e-14)

"""Superradiant mean-field energy landscape and its multi-start minimization.

With ``⟨a_n⟩ = α_n = A_n + i B_n`` and the atom relaxed into its local
ground state, the energy of the chain is

    E_g = Σ_n [ω(A_n² + B_n²) - ½ sqrt(Δ² + 16 g² A_n²)] + E_NN + E_NNN
    E_NN  = -2 J1 Σ_n (A_n A_{n+1} + B_n B_{n+1})
    E_NNN = -2 J2 Σ_n (-1)^n [cos θ (A_n A_{n+2} + B_n B_{n+2})
                              + sin θ (B_n A_{n+2} - B_{n+2} A_n)]

with every sum running over all N cavities (periodic).
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize as _scipy_minimize

from .errors import ConvergenceFailure
from .model import ModelParams, momentum_grid, species_signs

__all__ = [
    "Displacements",
    "MeanFieldSolution",
    "MinimizeOptions",
    "DEFAULT_RNG_SEED",
    "energy",
    "excess_energy",
    "gradient",
    "hessian",
    "single_cavity_amplitude",
    "seed_amplitude",
    "ansatz_seeds",
    "local_minimize",
    "minimize",
]

log = logging.getLogger(__name__)

DEFAULT_RNG_SEED = 20240917
POLISH_GTOL = 1e-15


@dataclass(frozen=True)
class Displacements:
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        b = np.array(self.b, dtype=float)
        if a.shape != b.shape or a.ndim != 1:
            raise ValueError("a and b must be 1-D arrays of equal length")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("displacements must be finite")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def zeros(cls, n: int) -> "Displacements":
        return cls(np.zeros(n), np.zeros(n))

    @classmethod
    def from_vector(cls, x: np.ndarray) -> "Displacements":
        n = len(x) // 2
        return cls(x[:n], x[n:])

    @classmethod
    def from_complex(cls, alpha) -> "Displacements":
        alpha = np.asarray(alpha, dtype=complex)
        return cls(alpha.real, alpha.imag)

    @property
    def n(self) -> int:
        return self.a.size

    @property
    def alpha(self) -> np.ndarray:
        return self.a + 1j * self.b

    @property
    def phase(self) -> np.ndarray:
        return np.arctan2(self.b, self.a)

    @property
    def photon_numbers(self) -> np.ndarray:
        return self.a**2 + self.b**2

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.a, self.b])

    def __neg__(self) -> "Displacements":
        return Displacements(-self.a, -self.b)

    def shifted(self, steps: int) -> "Displacements":
        """Relabel cavities ``n -> n + steps`` (periodic)."""
        return Displacements(np.roll(self.a, steps), np.roll(self.b, steps))


@dataclass(frozen=True)
class MeanFieldSolution:
    displacements: Displacements
    energy: float
    grad_norm: float
    seed_id: str
    n_restarts: int
    rng_seed: int = DEFAULT_RNG_SEED
    energies: dict = field(default_factory=dict, compare=False, repr=False)


@dataclass(frozen=True)
class MinimizeOptions:
    """Knobs for :func:`minimize`. ``tol_grad=None`` means ``1e-10 · Δ``."""

    tol_grad: float | None = None
    max_iter: int = 10_000
    n_random: int = 20
    rng_seed: int = DEFAULT_RNG_SEED
    structured: bool = True
    workers: int = 1


def _split(params: ModelParams, d):
    if isinstance(d, Displacements):
        a, b = d.a, d.b
    else:
        x = np.asarray(d, dtype=float)
        a, b = x[: params.n_cavities], x[params.n_cavities :]
    if a.size != params.n_cavities:
        raise ValueError("displacement length does not match n_cavities")
    return a, b


def excess_energy(params: ModelParams, d) -> float:
    """``E_g + NΔ/2``, evaluated without cancellation against the large constant.

    Near a continuous transition the landscape is flat to ~1e-13 of ``|E_g|``;
    minimizing this quantity keeps those differences resolvable.
    """
    a, b = _split(params, d)
    w, delta, g = params.omega, params.delta, params.g
    s = species_signs(params.n_cavities)
    a1, b1 = np.roll(a, -1), np.roll(b, -1)
    a2, b2 = np.roll(a, -2), np.roll(b, -2)
    x = 16.0 * g**2 * a * a
    # -½ sqrt(Δ² + x) + Δ/2 = -½ x / (Δ + sqrt(Δ² + x))
    onsite = np.sum(w * (a * a + b * b) - 0.5 * x / (delta + np.sqrt(delta**2 + x)))
    e_nn = -2.0 * params.j1 * np.sum(a * a1 + b * b1)
    ct, st = math.cos(params.theta), math.sin(params.theta)
    e_nnn = -2.0 * params.j2 * np.sum(s * (ct * (a * a2 + b * b2) + st * (b * a2 - b2 * a)))
    return float(onsite + e_nn + e_nnn)


def energy(params: ModelParams, d) -> float:
    """E_g for displacements ``d`` (a :class:`Displacements` or flat (A, B) vector)."""
    return excess_energy(params, d) - 0.5 * params.n_cavities * params.delta


def gradient(params: ModelParams, d) -> np.ndarray:
    """Exact partial derivatives, ordered ``(∂/∂A_1..A_N, ∂/∂B_1..B_N)``."""
    a, b = _split(params, d)
    w, delta, g = params.omega, params.delta, params.g
    s = species_signs(params.n_cavities)
    ct, st = math.cos(params.theta), math.sin(params.theta)
    ap1, am1 = np.roll(a, -1), np.roll(a, 1)
    bp1, bm1 = np.roll(b, -1), np.roll(b, 1)
    ap2, am2 = np.roll(a, -2), np.roll(a, 2)
    bp2, bm2 = np.roll(b, -2), np.roll(b, 2)
    # (-1)^{n-2} = (-1)^n, so both NNN partners share the sign s
    ga = (
        2.0 * w * a
        - 8.0 * g**2 * a / np.sqrt(delta**2 + 16.0 * g**2 * a * a)
        - 2.0 * params.j1 * (ap1 + am1)
        - 2.0 * params.j2 * s * (ct * ap2 - st * bp2 + ct * am2 + st * bm2)
    )
    gb = (
        2.0 * w * b
        - 2.0 * params.j1 * (bp1 + bm1)
        - 2.0 * params.j2 * s * (ct * bp2 + st * ap2 + ct * bm2 - st * am2)
    )
    return np.concatenate([ga, gb])


@lru_cache(maxsize=256)
def _quadratic_kernel(params: ModelParams) -> np.ndarray:
    # Hessian of the ω, J1 and J2 terms (constant in the displacements)
    n = params.n_cavities
    eye = np.eye(2 * n)
    k = np.column_stack([gradient(params.replace(g1=0.0), eye[i]) for i in range(2 * n)])
    k = 0.5 * (k + k.T)
    k.setflags(write=False)
    return k


def hessian(params: ModelParams, d) -> np.ndarray:
    a, _ = _split(params, d)
    h = np.array(_quadratic_kernel(params))
    delta, g = params.delta, params.g
    curv = -8.0 * g**2 * delta**2 / (delta**2 + 16.0 * g**2 * a * a) ** 1.5
    # the kernel is built at g=0, so the atomic curvature is added here
    idx = np.arange(params.n_cavities)
    h[idx, idx] += curv
    return h


def single_cavity_amplitude(params: ModelParams, omega_eff: float | None = None) -> float:
    """Stationary real displacement of one isolated cavity.

    ``A*² = (16 g⁴/ω² - Δ²) / (16 g²)``, i.e. ``Δ(16g1⁴ - 1)/(16 g1² ω)`` at
    ``ω_eff = ω``; zero below the single-cavity threshold.
    """
    w = params.omega if omega_eff is None else omega_eff
    g2 = params.g**2
    if g2 == 0 or w <= 0:
        return 0.0
    val = (16.0 * g2**2 / w**2 - params.delta**2) / (16.0 * g2)
    return math.sqrt(val) if val > 0 else 0.0


def seed_amplitude(params: ModelParams) -> float:
    """Seed amplitude from the hopping-softened cavity frequency.

    The softest direction of the quadratic part lowers the effective cavity
    frequency; with no hopping this is exactly :func:`single_cavity_amplitude`.
    """
    kernel = _quadratic_kernel(params)
    w_eff = 0.5 * float(np.linalg.eigvalsh(kernel)[0])
    return single_cavity_amplitude(params, w_eff)


def ansatz_seeds(params: ModelParams, n_random: int = 20,
                 rng_seed: int = DEFAULT_RNG_SEED,
                 structured: bool = True) -> list[tuple[str, Displacements]]:
    """Starting points for :func:`minimize`; the zero seed is always first.

    Structured seeds (when the seed amplitude is nonzero): uniform real ±A*,
    plane waves ``A* e^{ikn}`` per species and jointly for every grid
    momentum and its negative, and species-staggered real patterns. Random
    seeds are drawn uniformly in the disc ``|α_n| ≤ 2A*``; if ``A* = 0`` the
    disc radius falls back to ``0.5 sqrt(Δ/ω)``.
    """
    n = params.n_cavities
    sites = np.arange(1, n + 1)
    odd = sites % 2 == 1
    seeds: list[tuple[str, Displacements]] = [("zero", Displacements.zeros(n))]
    amp = seed_amplitude(params)

    if structured and amp > 0:
        seeds.append(("uniform+", Displacements(np.full(n, amp), np.zeros(n))))
        seeds.append(("uniform-", Displacements(np.full(n, -amp), np.zeros(n))))
        ks = momentum_grid(n)
        kset = sorted({round(float(k), 12) for k in np.concatenate([ks, -ks])})
        for k in kset:
            wave = amp * np.exp(1j * k * sites)
            seeds.append((f"wave[k={k:+.4f},odd]", Displacements.from_complex(np.where(odd, wave, 0))))
            seeds.append((f"wave[k={k:+.4f},even]", Displacements.from_complex(np.where(odd, 0, wave))))
            seeds.append((f"wave[k={k:+.4f},joint]", Displacements.from_complex(wave)))
            seeds.append((f"wave[k={k:+.4f},anti]", Displacements.from_complex(np.where(odd, wave, -wave))))
        # alternate within a species: cavity n and n+2 carry opposite signs
        alt = np.where(((sites - 1) // 2) % 2 == 0, 1.0, -1.0)
        seeds.append(("stagger[odd]", Displacements(amp * np.where(odd, alt, 1.0), np.zeros(n))))
        seeds.append(("stagger[even]", Displacements(amp * np.where(odd, 1.0, alt), np.zeros(n))))
        seeds.append(("stagger[both]", Displacements(amp * alt, np.zeros(n))))

    radius = 2.0 * amp if amp > 0 else 0.5 * math.sqrt(params.delta / params.omega)
    rng = np.random.default_rng(rng_seed)
    for i in range(n_random):
        r = radius * np.sqrt(rng.uniform(0.0, 1.0, n))
        phi = rng.uniform(-math.pi, math.pi, n)
        seeds.append((f"random[{i}]", Displacements.from_complex(r * np.exp(1j * phi))))
    return seeds


def local_minimize(params: ModelParams, start: Displacements, tol_grad: float,
                   max_iter: int = 10_000) -> tuple[Displacements, float, float]:
    """BFGS descent followed by a trust-region Newton polish with the exact Hessian.

    Returns ``(displacements, energy, grad_norm)``. The polish runs well past
    ``tol_grad``: along the soft direction near a critical point a residual
    gradient turns into a visible displacement error.
    """
    x = start.as_vector()
    if np.linalg.norm(gradient(params, x)) > tol_grad:
        res = _scipy_minimize(
            excess_energy_vec, x, args=(params,), jac=gradient_vec, method="BFGS",
            options={"gtol": tol_grad, "maxiter": max_iter},
        )
        x = res.x
    res = _scipy_minimize(
        excess_energy_vec, x, args=(params,), jac=gradient_vec, hess=hessian_vec,
        method="trust-exact", options={"gtol": POLISH_GTOL, "maxiter": 500},
    )
    if np.linalg.norm(res.jac) <= np.linalg.norm(gradient(params, x)):
        x = res.x
    x = _newton_finish(params, x)
    return Displacements.from_vector(x), energy(params, x), float(np.linalg.norm(gradient(params, x)))


def _newton_finish(params: ModelParams, x: np.ndarray, max_steps: int = 8) -> np.ndarray:
    # once energy differences drop below roundoff the trust region stalls;
    # plain Newton steps judged by the gradient alone finish the job
    gnorm = np.linalg.norm(gradient(params, x))
    for _ in range(max_steps):
        try:
            trial = x - np.linalg.solve(hessian(params, x), gradient(params, x))
        except np.linalg.LinAlgError:
            break
        tnorm = np.linalg.norm(gradient(params, trial))
        if not tnorm < gnorm:
            break
        x, gnorm = trial, tnorm
    return x


def excess_energy_vec(x, params):
    return excess_energy(params, x)


def gradient_vec(x, params):
    return gradient(params, x)


def hessian_vec(x, params):
    return hessian(params, x)


def _is_local_minimum(params: ModelParams, d: Displacements) -> bool:
    try:
        np.linalg.cholesky(hessian(params, d))
    except np.linalg.LinAlgError:
        return False
    return True


def _run_seed(args):
    params, seed_id, start, tol, max_iter = args
    d, e, gn = local_minimize(params, start, tol, max_iter)
    return seed_id, d, e, gn


def minimize(params: ModelParams, options: MinimizeOptions | None = None,
             extra_seeds: list[tuple[str, Displacements]] | None = None) -> MeanFieldSolution:
    """Global minimum of E_g over all starting points.

    Among minima within ``1e-9 Δ`` of the lowest energy the one with the
    largest ``Σ A_n`` is reported (then the earliest seed), which fixes the
    parity and translation copies deterministically.
    """
    opts = options or MinimizeOptions()
    tol = opts.tol_grad if opts.tol_grad is not None else 1e-10 * params.delta
    seeds = list(extra_seeds or []) + ansatz_seeds(params, opts.n_random, opts.rng_seed, opts.structured)
    jobs = [(params, sid, start, tol, opts.max_iter) for sid, start in seeds]
    if opts.workers > 1:
        with ProcessPoolExecutor(max_workers=opts.workers) as pool:
            results = list(pool.map(_run_seed, jobs))
    else:
        results = [_run_seed(job) for job in jobs]

    converged = [(i, r) for i, r in enumerate(results) if r[3] <= tol]
    if not converged:
        best = min(r[3] for r in results)
        raise ConvergenceFailure(f"no start reached |grad| <= {tol:.3g}", best)
    # near a continuous transition the zero saddle lies within the degeneracy
    # window of the true minimum; keep strict local minima when there are any
    minima = [(i, r) for i, r in converged if _is_local_minimum(params, r[1])]
    if minima:
        converged = minima
    e_min = min(r[2] for _, r in converged)
    band = [(i, r) for i, r in converged if r[2] <= e_min + 1e-9 * params.delta]
    s_max = max(float(np.sum(r[1].a)) for _, r in band)
    pick = min(i for i, r in band if float(np.sum(r[1].a)) >= s_max - 1e-7 * max(1.0, abs(s_max)))
    seed_id, d, e, gn = results[pick]
    log.debug("minimize %s: E=%.12g from %s (%d starts)", params, e, seed_id, len(results))
    return MeanFieldSolution(
        displacements=d, energy=e, grad_norm=gn, seed_id=seed_id, n_restarts=len(results),
        rng_seed=opts.rng_seed, energies={r[0]: r[2] for r in results},
    )

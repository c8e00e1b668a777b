"""Symplectic (Bogoliubov) diagonalization of bosonic quadratic forms.

Excitation energies are the eigenvalues of ``M·Λ`` with
``Λ = diag(+1 × m, -1 × m)``. They are the physical mode frequencies: the
closed-form bands in :func:`rabizigzag.model.analytic_bands` use a halved
normalization and equal ``epsilons / 2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import InstabilityError, PairingFailure
from .model import QuadraticForm

__all__ = ["Spectrum", "diagonalize", "zero_point_offset", "ground_energy", "is_positive_definite"]

PAIR_RTOL = 1e-8


@dataclass(frozen=True)
class Spectrum:
    """Excitation energies in non-increasing order."""

    epsilons: np.ndarray
    stable: bool
    max_imag: float

    @property
    def gap(self) -> float:
        return float(self.epsilons[-1])

    def ascending(self) -> np.ndarray:
        return self.epsilons[::-1].copy()


def is_positive_definite(matrix: np.ndarray) -> bool:
    try:
        np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError:
        return False
    return True


def _sigma(m: int) -> np.ndarray:
    return np.concatenate([np.ones(m), -np.ones(m)])


def _pair(values: np.ndarray, m: int, scale: float) -> np.ndarray:
    """Greedy ±x matching on real parts; returns the m non-negative members."""
    vals = np.sort(values.real)
    tol = PAIR_RTOL * max(scale, 1.0)
    lo, hi = 0, vals.size - 1
    out = []
    while lo < hi:
        if abs(vals[lo] + vals[hi]) > tol * max(1.0, abs(vals[hi])):
            raise PairingFailure(
                f"eigenvalues {vals[lo]:.12g} and {vals[hi]:.12g} do not form a ± pair"
            )
        out.append(abs(vals[hi]))
        lo += 1
        hi -= 1
    if len(out) != m:
        raise PairingFailure("odd number of eigenvalues")
    return np.sort(np.asarray(out))[::-1]


def diagonalize(form: QuadraticForm, tol_imag: float | None = None) -> Spectrum:
    """Excitation spectrum of ``form``.

    A positive-definite ``M`` is handled with Colpa's Cholesky construction,
    which yields exactly real frequencies. Otherwise the eigenvalues of
    ``M·Λ`` are computed directly: imaginary parts above ``tol_imag``
    (default ``1e-9 ‖M‖₂``) mark a dynamical instability. Stable
    particle-hole symmetric forms are reduced by ±ε pairing; forms without
    that symmetry (momentum-pair blocks at generic flux) keep the
    eigenvalues whose eigenvectors carry positive symplectic norm.
    """
    m = form.m
    mat = form.matrix
    if not form.is_hermitian():
        raise PairingFailure("form matrix is not Hermitian")
    sigma = _sigma(m)
    norm = float(np.linalg.norm(mat, 2))
    if tol_imag is None:
        tol_imag = 1e-9 * max(norm, 1e-300)

    try:
        lower = np.linalg.cholesky(mat)
    except np.linalg.LinAlgError:
        lower = None
    if lower is not None:
        # eig(L† Λ L) = eig(Λ M); Sylvester fixes m positive eigenvalues
        herm = lower.conj().T @ (sigma[:, None] * lower)
        w = np.linalg.eigvalsh(0.5 * (herm + herm.conj().T))
        pos = np.sort(w[w > 0])[::-1]
        if pos.size != m:
            raise PairingFailure("inertia of Colpa matrix is not (m, m)")
        return Spectrum(pos, True, 0.0)

    dyn = mat * sigma[None, :]
    if form.has_particle_hole_structure():
        vals = sla.eigvals(dyn)
        max_imag = float(np.abs(vals.imag).max())
        stable = max_imag <= tol_imag
        if stable:
            eps = _pair(vals, m, norm)
        else:
            eps = np.sort(np.abs(np.sort(vals.real)[::-1][:m]))[::-1]
        return Spectrum(eps, stable, max_imag)

    vals, vecs = sla.eig(dyn)
    max_imag = float(np.abs(vals.imag).max())
    stable = max_imag <= tol_imag
    if not stable:
        eps = np.sort(np.abs(np.sort(vals.real)[::-1][:m]))[::-1]
        return Spectrum(eps, False, max_imag)
    # symplectic norm v† Λ v separates quasiparticles from their partners
    snorm = np.einsum("ij,i,ij->j", vecs.conj(), sigma, vecs).real
    chosen = vals.real[snorm > 0]
    if chosen.size != m:
        raise PairingFailure("could not split eigenvectors by symplectic norm")
    return Spectrum(np.sort(chosen)[::-1], True, max_imag)


def zero_point_offset(form: QuadraticForm, spectrum: Spectrum) -> float:
    """Ground energy of the normal-ordered bilinear: ``½(Σε - tr A)``."""
    if not spectrum.stable:
        raise InstabilityError("zero-point energy undefined for an unstable spectrum")
    trace = float(np.trace(form.normal).real)
    return 0.5 * (float(np.sum(spectrum.epsilons)) - trace)


def ground_energy(form: QuadraticForm, spectrum: Spectrum | None = None) -> float:
    """``offset + zero_point_offset``: the quadratic-theory ground energy."""
    if spectrum is None:
        spectrum = diagonalize(form)
    return form.offset + zero_point_offset(form, spectrum)

"""Photon currents, photon-number profiles and the superradiant phase taxonomy."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import UnclassifiedPhase
from .meanfield import Displacements
from .model import ModelParams

__all__ = [
    "CurrentReport",
    "PhaseLabel",
    "LABELS",
    "currents",
    "photon_numbers",
    "classify",
]

LABELS = ("NP", "FSR", "MSR", "OCSR", "ECSR", "OAFSR", "EAFSR")

N_TOL = 1e-8
C_REL = 1e-3
PHASE_TOL = 1e-6
T_REL = 0.1


@dataclass(frozen=True)
class CurrentReport:
    i_odd: float
    i_even: float
    i_total: float

    @property
    def i_chiral(self) -> float:
        return self.i_odd - self.i_even

    def as_dict(self) -> dict:
        return {"I_O": self.i_odd, "I_E": self.i_even, "I_C": self.i_chiral, "I_T": self.i_total}

    def max_abs(self) -> float:
        return max(abs(self.i_odd), abs(self.i_even), abs(self.i_total))


@dataclass(frozen=True)
class PhaseLabel:
    label: str
    thresholds: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"unknown phase label {self.label!r}")

    def __str__(self) -> str:
        return self.label


def currents(d: Displacements) -> CurrentReport:
    """Species (NNN) currents and the total NN current of a displacement pattern.

    ``I_ν = Σ_{n ∈ ν} -2(A_n B_{n+2} - B_n A_{n+2})`` and
    ``I_T = Σ_n -2(A_n B_{n+1} - B_n A_{n+1})`` over the N periodic bonds.
    Cavity 1 (array index 0) belongs to the odd species.
    """
    a, b = d.a, d.b
    nnn = -2.0 * (a * np.roll(b, -2) - b * np.roll(a, -2))
    nn = -2.0 * (a * np.roll(b, -1) - b * np.roll(a, -1))
    return CurrentReport(float(np.sum(nnn[0::2])), float(np.sum(nnn[1::2])), float(np.sum(nn)))


def photon_numbers(d: Displacements) -> np.ndarray:
    return d.photon_numbers


def _collinear_same_sign(d: Displacements, tol: float) -> bool:
    alpha = d.alpha
    ref = alpha[np.argmax(np.abs(alpha))]
    # angle of each α_n relative to the largest one; antiparallel fails too
    rel = np.angle(alpha * np.conj(ref))
    return bool(np.all(np.abs(rel) <= tol))


def _alternates(values: np.ndarray) -> bool:
    return bool(np.all(values * np.roll(values, -1) < 0))


def classify(params: ModelParams, d: Displacements, c: CurrentReport | None = None,
             n_tol: float = N_TOL, c_rel: float = C_REL,
             phase_tol: float = PHASE_TOL, t_rel: float = T_REL) -> PhaseLabel:
    """Assign one of :data:`LABELS` to a converged mean-field state.

    Currents count as nonzero above ``c_tol = c_rel · max(1, max|I|)``. A
    Meissner state needs counter-flowing species currents above ``c_tol``
    with a net NN current below ``t_rel`` times the weaker of the two.
    Raises :class:`UnclassifiedPhase` when no branch of the decision tree fits.
    """
    if d.n != params.n_cavities:
        raise ValueError("displacement length does not match n_cavities")
    if c is None:
        c = currents(d)
    c_tol = c_rel * max(1.0, c.max_abs())
    th = {"n_tol": n_tol, "c_tol": c_tol, "phase_tol": phase_tol, "t_rel": t_rel}

    def out(label):
        return PhaseLabel(label, th)

    if float(np.max(d.photon_numbers)) < n_tol:
        return out("NP")
    if _collinear_same_sign(d, phase_tol) and abs(c.i_chiral) < c_tol:
        return out("FSR")
    weaker = min(abs(c.i_odd), abs(c.i_even))
    # away from θ = π/2 the Meissner state keeps a small net current, so the
    # total is compared with the species currents rather than with c_tol
    if weaker >= c_tol and c.i_even * c.i_odd < 0 and abs(c.i_total) < t_rel * weaker:
        return out("MSR")
    if abs(c.i_odd) >= c_tol > abs(c.i_even):
        return out("OCSR")
    if abs(c.i_even) >= c_tol > abs(c.i_odd):
        return out("ECSR")
    if max(abs(c.i_odd), abs(c.i_even), abs(c.i_total)) < c_tol:
        scale = float(np.max(np.abs(d.alpha)))
        if float(np.max(np.abs(d.b))) <= phase_tol * scale:
            odd_alt = _alternates(d.a[0::2])
            even_alt = _alternates(d.a[1::2])
            if odd_alt and not even_alt:
                return out("OAFSR")
            if even_alt and not odd_alt:
                return out("EAFSR")
    raise UnclassifiedPhase(
        f"no phase matches: I_O={c.i_odd:.6g} I_E={c.i_even:.6g} I_T={c.i_total:.6g} "
        f"max|a|^2={float(np.max(d.photon_numbers)):.6g}"
    )

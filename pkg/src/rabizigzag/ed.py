"""Exact diagonalization of the full spin-cavity chain on a truncated Fock space.

Basis convention: each cavity carries a local index ``2 * photons + spin``
(spin 0 = ``|↓⟩``, σ_z = -1), and the global index is little-endian in the
cavity label, so cavity 1 is the fastest-varying digit. Ground vectors
written by :func:`dump_vector` use this ordering.
"""

from __future__ import annotations

import json
import logging
import math
import struct
from dataclasses import asdict, dataclass, field
from functools import reduce

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .errors import DimensionCap, NoConvergence
from .model import ModelParams

__all__ = [
    "FockConfig",
    "EdReport",
    "SweepRow",
    "hilbert_dimension",
    "build_hamiltonian",
    "ground_state",
    "cutoff_sweep",
    "rabi_ground_state",
    "dump_vector",
    "write_vector",
    "load_vector",
    "DUMP_MAGIC",
]

log = logging.getLogger(__name__)

DUMP_MAGIC = b"RZED"
DUMP_VERSION = 1
_HEADER = struct.Struct("<4sIII")

DEFAULT_CAP = 500_000
DENSE_LIMIT = 2_000


@dataclass(frozen=True)
class FockConfig:
    n_max: int
    solver: str = "iterative"
    tol: float = 1e-10
    dim_cap: int = DEFAULT_CAP
    degeneracy_tol: float = 1e-8
    conv_tol: float = 1e-6

    def __post_init__(self):
        if self.n_max < 0:
            raise ValueError("n_max must be >= 0")
        if self.solver not in ("dense", "iterative"):
            raise ValueError("solver must be 'dense' or 'iterative'")

    def with_cutoff(self, n_max: int) -> "FockConfig":
        return FockConfig(n_max, self.solver, self.tol, self.dim_cap, self.degeneracy_tol, self.conv_tol)


@dataclass
class EdReport:
    energy: float
    photon_numbers: list[float]
    nn_currents: list[float]
    i_odd: float
    i_even: float
    n_max: int
    dimension: int
    convergence_delta: float | None
    degenerate: bool = False
    gap: float | None = None
    partner_photon_numbers: list[float] | None = None
    params: dict = field(default_factory=dict)

    @property
    def i_total(self) -> float:
        return float(sum(self.nn_currents))

    def to_json(self) -> str:
        doc = asdict(self)
        doc["i_total"] = self.i_total
        return json.dumps(doc, indent=2, sort_keys=True)


@dataclass(frozen=True)
class SweepRow:
    n_max: int
    dimension: int
    energy: float
    delta: float | None
    max_photons: float
    converged: bool


def hilbert_dimension(n_cavities: int, n_max: int) -> int:
    return (2 * (n_max + 1)) ** n_cavities


def _local_ops(n_max: int):
    nb = n_max + 1
    a = sp.diags(np.sqrt(np.arange(1, nb, dtype=float)), 1, shape=(nb, nb), format="csr")
    eye2 = sp.identity(2, format="csr")
    sx = sp.csr_matrix(np.array([[0.0, 1.0], [1.0, 0.0]]))
    sz = sp.csr_matrix(np.diag([-1.0, 1.0]))
    eyeb = sp.identity(nb, format="csr")
    # local index = 2 * photons + spin, so photons are the slow factor
    return sp.kron(a, eye2, format="csr"), sp.kron(eyeb, sx, format="csr"), sp.kron(eyeb, sz, format="csr")


def _embed(op, site: int, n_sites: int, d: int):
    """Place a local operator on ``site`` (0-based); site 0 is the fastest digit."""
    left = sp.identity(d ** (n_sites - 1 - site), format="csr")
    right = sp.identity(d**site, format="csr")
    return reduce(lambda x, y: sp.kron(x, y, format="csr"), (left, op, right))


def _check_dim(n_sites: int, n_max: int, cap: int) -> int:
    dim = hilbert_dimension(n_sites, n_max)
    if dim > cap:
        raise DimensionCap(f"dimension {dim} for N={n_sites}, n_max={n_max} exceeds cap {cap}")
    return dim


def _assemble(n_sites: int, omega: float, delta: float, g: float, j1: float, j2: float,
              theta: float, n_max: int):
    a, sx, sz = _local_ops(n_max)
    d = 2 * (n_max + 1)
    ann = [_embed(a, s, n_sites, d) for s in range(n_sites)]
    dim = d**n_sites
    h = sp.csr_matrix((dim, dim), dtype=complex)
    for s in range(n_sites):
        x = _embed(sx, s, n_sites, d)
        z = _embed(sz, s, n_sites, d)
        num = ann[s].T @ ann[s]
        h = h + 0.5 * delta * z + omega * num + g * ((ann[s].T + ann[s]) @ x)
    if n_sites >= 3:
        phase = complex(math.cos(theta), math.sin(theta))
        for s in range(n_sites):
            n = s + 1
            nn = ann[s].T @ ann[(s + 1) % n_sites]
            h = h - j1 * (nn + nn.T)
            t = j2 * (-1) ** n * phase
            nnn = ann[s].T @ ann[(s + 2) % n_sites]
            h = h - (t * nnn + np.conj(t) * nnn.T)
    return h.tocsr(), ann


def build_hamiltonian(params: ModelParams, cfg: FockConfig):
    """Sparse ``H_RZ`` with spins and photons, periodic in the cavity label."""
    _check_dim(params.n_cavities, cfg.n_max, cfg.dim_cap)
    h, _ = _assemble(params.n_cavities, params.omega, params.delta, params.g, params.j1,
                     params.j2, params.theta, cfg.n_max)
    return h


def _lowest(h, cfg: FockConfig, k: int = 2):
    dim = h.shape[0]
    k = min(k, dim)
    if cfg.solver == "dense" or dim <= DENSE_LIMIT:
        w, v = np.linalg.eigh(h.toarray())
        return w[:k], v[:, :k]
    try:
        w, v = eigsh(h, k=k, which="SA", tol=cfg.tol, v0=np.ones(dim, dtype=complex))
    except ArpackNoConvergence as exc:
        raise NoConvergence(f"eigsh did not converge: {exc}") from exc
    order = np.argsort(w)
    return w[order], v[:, order]


def _observables(vec: np.ndarray, ann, n_sites: int):
    w = [op @ vec for op in ann]
    nums = [float(np.vdot(x, x).real) for x in w]
    if n_sites >= 3:
        nn = [float(-2.0 * np.vdot(w[s], w[(s + 1) % n_sites]).imag) for s in range(n_sites)]
        nnn = [float(-2.0 * np.vdot(w[s], w[(s + 2) % n_sites]).imag) for s in range(n_sites)]
    else:
        nn, nnn = [0.0] * n_sites, [0.0] * n_sites
    return nums, nn, float(sum(nnn[0::2])), float(sum(nnn[1::2]))


def _solve(params: ModelParams, cfg: FockConfig):
    _check_dim(params.n_cavities, cfg.n_max, cfg.dim_cap)
    h, ann = _assemble(params.n_cavities, params.omega, params.delta, params.g, params.j1,
                       params.j2, params.theta, cfg.n_max)
    w, v = _lowest(h, cfg)
    return w, v, ann


def ground_state(params: ModelParams, cfg: FockConfig, with_delta: bool = True,
                 return_vector: bool = False):
    """Lowest eigenpair and its observables.

    With ``with_delta`` the calculation is repeated at ``n_max - 1`` to report
    the cutoff convergence delta. A (quasi-)degenerate parity doublet is
    reported through both states' photon numbers, with currents taken from
    the symmetric combination.
    """
    w, v, ann = _solve(params, cfg)
    e0 = float(w[0])
    vec = v[:, 0]
    gap = float(w[1] - w[0]) if w.size > 1 else None
    degenerate = gap is not None and gap <= cfg.degeneracy_tol * max(1.0, abs(e0))
    partner = None
    if degenerate:
        partner = _observables(v[:, 1], ann, params.n_cavities)[0]
        vec = (v[:, 0] + v[:, 1]) / math.sqrt(2.0)
    nums, nn, i_odd, i_even = _observables(vec, ann, params.n_cavities)
    if degenerate:
        nums = _observables(v[:, 0], ann, params.n_cavities)[0]
    delta = None
    if with_delta and cfg.n_max >= 1:
        w_lo, _, _ = _solve(params, cfg.with_cutoff(cfg.n_max - 1))
        delta = e0 - float(w_lo[0])
    report = EdReport(
        energy=e0, photon_numbers=nums, nn_currents=nn, i_odd=i_odd, i_even=i_even,
        n_max=cfg.n_max, dimension=hilbert_dimension(params.n_cavities, cfg.n_max), convergence_delta=delta,
        degenerate=degenerate, gap=gap, partner_photon_numbers=partner, params=asdict(params),
    )
    if return_vector:
        return report, v[:, 0]
    return report


def cutoff_sweep(params: ModelParams, cfg: FockConfig, n_max_list) -> list[SweepRow]:
    """Ground energy against the photon cutoff.

    A row counts as converged once the change from the previous cutoff is
    within ``cfg.conv_tol · max(1, |E|)``.
    """
    rows: list[SweepRow] = []
    prev = None
    for n in sorted(set(int(x) for x in n_max_list)):
        c = cfg.with_cutoff(n)
        w, v, ann = _solve(params, c)
        e = float(w[0])
        nums = _observables(v[:, 0], ann, params.n_cavities)[0]
        delta = None if prev is None else e - prev
        ok = delta is not None and abs(delta) <= cfg.conv_tol * max(1.0, abs(e))
        rows.append(SweepRow(n, hilbert_dimension(params.n_cavities, n), e, delta, max(nums), ok))
        prev = e
    return rows


def rabi_ground_state(omega: float, delta: float, g1: float, n_max: int,
                      tol: float = 1e-12) -> tuple[float, float]:
    """Ground energy and ⟨a†a⟩ of one quantum Rabi cavity (no hopping)."""
    g = g1 * math.sqrt(delta * omega)
    h, ann = _assemble(1, omega, delta, g, 0.0, 0.0, 0.0, n_max)
    cfg = FockConfig(n_max, solver="dense" if h.shape[0] <= DENSE_LIMIT else "iterative", tol=tol)
    w, v = _lowest(h, cfg, k=1)
    x = ann[0] @ v[:, 0]
    return float(w[0]), float(np.vdot(x, x).real)


def write_vector(fh, vec: np.ndarray, n_cavities: int, n_max: int) -> None:
    """Write a ground vector: 16-byte header then little-endian complex128 data."""
    vec = np.asarray(vec, dtype="<c16")
    if vec.size != hilbert_dimension(n_cavities, n_max):
        raise ValueError("vector length does not match (2(n_max+1))^N")
    fh.write(_HEADER.pack(DUMP_MAGIC, DUMP_VERSION, n_cavities, n_max))
    fh.write(vec.tobytes())


def dump_vector(path, vec: np.ndarray, n_cavities: int, n_max: int) -> None:
    with open(path, "wb") as fh:
        write_vector(fh, vec, n_cavities, n_max)


def load_vector(path) -> tuple[np.ndarray, int, int]:
    with open(path, "rb") as fh:
        magic, version, n, n_max = _HEADER.unpack(fh.read(_HEADER.size))
        if magic != DUMP_MAGIC or version != DUMP_VERSION:
            raise ValueError("not a ground-vector dump")
        vec = np.frombuffer(fh.read(), dtype="<c16")
    if vec.size != hilbert_dimension(n, n_max):
        raise ValueError("truncated ground-vector dump")
    return vec, n, n_max

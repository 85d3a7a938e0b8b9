"""Collective spin operators and states on the symmetric (Dicke) sector.

A register of ``n_spins`` spin-1/2 particles restricted to maximal total
spin S = n_spins/2 has an (n_spins + 1)-dimensional Hilbert space spanned
by |S, m>, m = S, S-1, ..., -S.  Basis ordering is fixed package-wide:
index i corresponds to m = S - i (row 0 is the fully polarized m = +S
state).  All operators are sparse and exact up to floating round-off.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import lgamma

import numpy as np
import scipy.sparse as sp

__all__ = [
    "SpinSector",
    "CollectiveOperator",
    "DensityMatrix",
    "SectorMismatchError",
    "build_collective_operator",
    "coherent_spin_state",
    "maximally_mixed_state",
    "expectation",
    "variance",
]

OPERATOR_KINDS = ("sx", "sy", "sz", "splus", "sminus")


class SectorMismatchError(ValueError):
    """Operands live on spin sectors of different dimension."""


@dataclass(frozen=True)
class SpinSector:
    """Symmetric sector of ``n_spins`` spin-1/2 particles (S = n_spins/2).

    The total spin is stored exactly through ``two_s == n_spins``; the
    Hilbert-space dimension is ``n_spins + 1``.
    """

    n_spins: int

    def __post_init__(self):
        if not isinstance(self.n_spins, (int, np.integer)) or self.n_spins < 1:
            raise ValueError(f"n_spins must be a positive integer, got {self.n_spins!r}")

    @property
    def two_s(self) -> int:
        return self.n_spins

    @property
    def spin(self) -> float:
        """Total spin S = n_spins/2 (exact in binary floating point)."""
        return self.n_spins / 2

    @property
    def dim(self) -> int:
        return self.n_spins + 1

    def m_values(self) -> np.ndarray:
        """Magnetic quantum numbers in basis order: S, S-1, ..., -S."""
        return self.spin - np.arange(self.dim)


@dataclass(frozen=True)
class CollectiveOperator:
    """A collective spin operator as a sparse matrix on a SpinSector."""

    sector: SpinSector
    matrix: sp.csr_matrix = field(repr=False)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def dagger(self) -> "CollectiveOperator":
        return CollectiveOperator(self.sector, self.matrix.conjugate().transpose().tocsr())


@dataclass(frozen=True)
class DensityMatrix:
    """Dense density matrix on a SpinSector (Hermitian, unit trace)."""

    sector: SpinSector
    entries: np.ndarray = field(repr=False)

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def purity(self) -> float:
        return float(np.real(np.einsum("ij,ji->", self.entries, self.entries)))


def _ladder_minus(sector: SpinSector) -> sp.csr_matrix:
    """Lowering operator: S-|S,m> = sqrt(S(S+1) - m(m-1)) |S,m-1>."""
    s = sector.spin
    m = sector.m_values()[:-1]  # m = S ... -S+1, each lowered one step
    coeff = np.sqrt(s * (s + 1) - m * (m - 1))
    return sp.diags(coeff.astype(complex), offsets=-1, format="csr")


def build_collective_operator(sector: SpinSector, kind: str) -> CollectiveOperator:
    """Build Sx, Sy, Sz or a ladder operator on the given sector.

    Parameters
    ----------
    sector : SpinSector
    kind : str
        One of ``"sx"``, ``"sy"``, ``"sz"``, ``"splus"``, ``"sminus"``
        (case-insensitive).

    Notes
    -----
    Conventions: Sz is diagonal with entries m; S+- are the standard
    ladder operators satisfying S+- = Sx +- i*Sy, so that
    [Sx, Sy] = i*Sz and cyclic permutations hold exactly up to round-off.
    """
    key = kind.lower()
    if key not in OPERATOR_KINDS:
        raise ValueError(f"unknown operator kind {kind!r}; expected one of {OPERATOR_KINDS}")
    sm = _ladder_minus(sector)
    if key == "sminus":
        mat = sm
    elif key == "splus":
        mat = sm.conjugate().transpose().tocsr()
    elif key == "sz":
        mat = sp.diags(sector.m_values().astype(complex), format="csr")
    elif key == "sx":
        sp_ = sm.conjugate().transpose()
        mat = ((sp_ + sm) * 0.5).tocsr()
    else:  # sy
        sp_ = sm.conjugate().transpose()
        mat = ((sp_ - sm) * (-0.5j)).tocsr()
    return CollectiveOperator(sector, mat)


def coherent_spin_state(sector: SpinSector, theta: float, phi: float) -> DensityMatrix:
    """Pure coherent spin state |theta, phi><theta, phi|.

    The Dicke amplitudes are
    c_m = sqrt(binom(2S, S+m)) cos(theta/2)^(S+m) sin(theta/2)^(S-m)
          * exp(-i (S-m) phi),
    evaluated in the log domain so the construction stays finite for
    sectors with hundreds of spins, then normalized to unit trace.
    """
    n = sector.n_spins
    k_up = n - np.arange(sector.dim)  # S + m, in basis order
    k_dn = np.arange(sector.dim)      # S - m

    c, s = np.cos(theta / 2), np.sin(theta / 2)
    log_binom = np.array(
        [lgamma(n + 1) - lgamma(k + 1) - lgamma(n - k + 1) for k in k_up]
    )

    # k * log|x| with the convention 0 * log(0) = 0, signs carried separately
    def _pow_log(base: np.ndarray, k: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            prod = k * np.log(np.abs(base))
        return np.where(k == 0, 0.0, prod)

    log_mag = 0.5 * log_binom + _pow_log(c, k_up) + _pow_log(s, k_dn)
    # cos(theta/2) or sin(theta/2) may be negative outside theta in [0, pi]
    sign_c = np.where((c < 0) & (k_up % 2 == 1), -1.0, 1.0)
    sign_s = np.where((s < 0) & (k_dn % 2 == 1), -1.0, 1.0)

    shift = np.max(log_mag)
    amp = sign_c * sign_s * np.exp(log_mag - shift)
    amp = amp.astype(complex) * np.exp(-1j * k_dn * phi)
    amp /= np.linalg.norm(amp)

    rho = np.outer(amp, amp.conjugate())
    return DensityMatrix(sector, rho)


def maximally_mixed_state(sector: SpinSector) -> DensityMatrix:
    return DensityMatrix(sector, np.eye(sector.dim, dtype=complex) / sector.dim)


def _check_same_sector(a: SpinSector, b: SpinSector) -> None:
    if a.n_spins != b.n_spins:
        raise SectorMismatchError(
            f"sector dimension mismatch: {a.dim} vs {b.dim}"
        )


def expectation(rho: DensityMatrix, op: CollectiveOperator) -> complex:
    """Tr(O rho); real up to round-off when both operands are Hermitian."""
    _check_same_sector(rho.sector, op.sector)
    return complex((op.matrix @ rho.entries).diagonal().sum())


def variance(rho: DensityMatrix, op: CollectiveOperator) -> float:
    """<O^2> - <O>^2 for a Hermitian operator."""
    _check_same_sector(rho.sector, op.sector)
    o_rho = op.matrix @ rho.entries
    mean = o_rho.diagonal().sum()
    mean_sq = (op.matrix @ o_rho).diagonal().sum()
    return float(np.real(mean_sq - mean**2))

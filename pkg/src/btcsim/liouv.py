"""Lindblad generator of the driven-dissipative collective-spin model.

The master equation is

    d rho / dt = i [rho, H] + (kappa/S) ( S- rho S+ - {S+ S-, rho}/2 ),
    H = omega0 Sx + (omega_x/S) Sx^2 + (omega_z/S) Sz^2,

with S = n_spins/2.  The generator is exposed both as a materialized
sparse superoperator on vectorized density matrices and as a matrix-free
action for sectors too large to materialize.

Vectorization convention (fixed package-wide, asserted by tests):
column-major stacking, ``vec(rho)[i + dim*j] = rho[i, j]``, so that
``vec(A rho B) = (B^T kron A) vec(rho)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .spinops import CollectiveOperator, SpinSector, build_collective_operator

__all__ = [
    "ModelParams",
    "Superoperator",
    "CapacityError",
    "build_superoperator",
    "apply_superoperator",
    "superoperator_action",
    "hamiltonian_matrix",
    "vectorize",
    "unvectorize",
    "DEFAULT_MATRIX_CAP",
]

# Refuse to materialize superoperators with more rows than this.
DEFAULT_MATRIX_CAP = 4_000_000


class CapacityError(ValueError):
    """Requested sector exceeds the configured materialization cap."""


@dataclass(frozen=True)
class ModelParams:
    """Model parameters; all frequencies in units of kappa, times in 1/kappa."""

    n_spins: int
    omega0: float
    kappa: float = 1.0
    omega_x: float = 0.0
    omega_z: float = 0.0

    def __post_init__(self):
        if not isinstance(self.n_spins, (int, np.integer)) or self.n_spins < 1:
            raise ValueError(f"n_spins must be a positive integer, got {self.n_spins!r}")
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa!r}")

    @property
    def sector(self) -> SpinSector:
        return SpinSector(self.n_spins)

    def replace(self, **kwargs) -> "ModelParams":
        from dataclasses import replace as _replace

        return _replace(self, **kwargs)


@dataclass(frozen=True)
class Superoperator:
    """Materialized Lindblad generator acting on vectorized density matrices."""

    params: ModelParams
    sector: SpinSector
    matrix: sp.csr_matrix = field(repr=False)

    @property
    def dim(self) -> int:
        """Dimension of the vectorized space, (n_spins + 1)^2."""
        return self.matrix.shape[0]


def vectorize(rho: np.ndarray) -> np.ndarray:
    """Column-major stacking of a density matrix (see module docstring)."""
    return np.asarray(rho).reshape(-1, order="F")


def unvectorize(vec: np.ndarray) -> np.ndarray:
    dim = int(round(np.sqrt(vec.size)))
    if dim * dim != vec.size:
        raise ValueError(f"vector of length {vec.size} is not a stacked square matrix")
    return np.asarray(vec).reshape((dim, dim), order="F")


def hamiltonian_matrix(params: ModelParams) -> CollectiveOperator:
    """H = omega0 Sx + (omega_x/S) Sx^2 + (omega_z/S) Sz^2 (Hermitian)."""
    sector = params.sector
    s = sector.spin
    sx = build_collective_operator(sector, "sx").matrix
    h = params.omega0 * sx
    if params.omega_x != 0.0:
        h = h + (params.omega_x / s) * (sx @ sx)
    if params.omega_z != 0.0:
        sz = build_collective_operator(sector, "sz").matrix
        h = h + (params.omega_z / s) * (sz @ sz)
    return CollectiveOperator(sector, h.tocsr())


def _model_operators(params: ModelParams):
    sector = params.sector
    sm = build_collective_operator(sector, "sminus").matrix
    splus = build_collective_operator(sector, "splus").matrix
    spsm = (splus @ sm).tocsr()
    h = hamiltonian_matrix(params).matrix
    return h, sm, splus, spsm


def build_superoperator(params: ModelParams, *, matrix_cap: int = DEFAULT_MATRIX_CAP) -> Superoperator:
    """Materialize the generator as a sparse (dim^2 x dim^2) matrix.

    Raises
    ------
    CapacityError
        If (n_spins + 1)^2 exceeds ``matrix_cap`` rows.
    """
    sector = params.sector
    dim = sector.dim
    if dim * dim > matrix_cap:
        raise CapacityError(
            f"superoperator would have {dim * dim} rows, above the cap of "
            f"{matrix_cap}; use the matrix-free action instead"
        )
    h, sm, splus, spsm = _model_operators(params)
    eye = sp.identity(dim, dtype=complex, format="csr")
    rate = params.kappa / sector.spin

    # vec(A rho B) = (B^T kron A) vec(rho) under column-major stacking
    lind = 1j * (sp.kron(h.T, eye) - sp.kron(eye, h))
    lind = lind + rate * (
        sp.kron(splus.T, sm)
        - 0.5 * sp.kron(eye, spsm)
        - 0.5 * sp.kron(spsm.T, eye)
    )
    return Superoperator(params, sector, lind.tocsr())


def superoperator_action(params: ModelParams) -> Callable[[np.ndarray], np.ndarray]:
    """Matrix-free action of the generator, for repeated application.

    Returns a function mapping vec(rho) to vec(d rho/dt) without ever
    forming the dim^2 x dim^2 matrix; cost is O(dim^2) per call because
    every model operator is banded.
    """
    h, sm, splus, spsm = _model_operators(params)
    rate = params.kappa / params.sector.spin
    dim = params.sector.dim

    def apply(rho_vec: np.ndarray) -> np.ndarray:
        if rho_vec.size != dim * dim:
            raise ValueError(
                f"expected vector of length {dim * dim}, got {rho_vec.size}"
            )
        rho = unvectorize(rho_vec)
        comm = 1j * (rho @ h - h @ rho)
        jump = sm @ rho @ splus
        anti = 0.5 * (spsm @ rho + rho @ spsm)
        return vectorize(comm + rate * (jump - anti))

    return apply


def apply_superoperator(params: ModelParams, rho_vec: np.ndarray) -> np.ndarray:
    """One-shot matrix-free application (see ``superoperator_action``)."""
    return superoperator_action(params)(rho_vec)

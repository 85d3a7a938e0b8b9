"""Master-equation time evolution and the non-equilibrium steady state.

Evolution uses classical fixed-step fourth-order Runge-Kutta on the
vectorized density matrix with matrix-free application of the generator;
an adaptive step-doubling variant is available.  The steady state is
obtained from a sparse LU solve of the trace-completed linear system,
with shifted inverse iteration as a fallback.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .liouv import (
    ModelParams,
    build_superoperator,
    superoperator_action,
    unvectorize,
    vectorize,
)
from .spinops import (
    DensityMatrix,
    build_collective_operator,
    maximally_mixed_state,
)

__all__ = [
    "Trajectory",
    "TraceDriftError",
    "SteadyStateError",
    "evolve",
    "steady_state",
]

TRACE_DRIFT_ABORT = 1e-5


class TraceDriftError(RuntimeError):
    """Trace left unity beyond tolerance during integration (step too large)."""


class SteadyStateError(RuntimeError):
    """Steady-state solver did not reach the requested residual."""


@dataclass(frozen=True)
class Trajectory:
    """Recorded observables of a master-equation integration.

    Spin expectations are normalized by S, spin variances by S.  The
    final density matrix is kept for steady-state comparisons.
    """

    params: ModelParams
    times: np.ndarray = field(repr=False)
    sx: np.ndarray = field(repr=False)
    sy: np.ndarray = field(repr=False)
    sz: np.ndarray = field(repr=False)
    var_x: np.ndarray = field(repr=False)
    var_y: np.ndarray = field(repr=False)
    var_z: np.ndarray = field(repr=False)
    trace: np.ndarray = field(repr=False)
    purity: np.ndarray = field(repr=False)
    rho_final: DensityMatrix = field(repr=False)

    def observable(self, name: str) -> np.ndarray:
        known = ("sx", "sy", "sz", "var_x", "var_y", "var_z", "trace", "purity")
        if name not in known:
            raise ValueError(f"unknown observable {name!r}; expected one of {known}")
        return getattr(self, name)


class _Recorder:
    """Accumulates normalized spin observables along the integration."""

    def __init__(self, params: ModelParams):
        sector = params.sector
        self.spin = sector.spin
        self.ops = [
            build_collective_operator(sector, kind).matrix for kind in ("sx", "sy", "sz")
        ]
        self.rows: list[list[float]] = []
        self.times: list[float] = []

    def record(self, t: float, rho: np.ndarray) -> float:
        means, variances = [], []
        for op in self.ops:
            o_rho = op @ rho
            mean = o_rho.diagonal().sum()
            mean_sq = (op @ o_rho).diagonal().sum()
            means.append(float(mean.real))
            variances.append(float((mean_sq - mean**2).real))
        trace = float(rho.diagonal().sum().real)
        purity = float(np.real(np.einsum("ij,ji->", rho, rho)))
        s = self.spin
        self.times.append(t)
        self.rows.append(
            [m / s for m in means] + [v / s for v in variances] + [trace, purity]
        )
        return trace


def _rk4_step(apply_fn, v: np.ndarray, dt: float) -> np.ndarray:
    k1 = apply_fn(v)
    k2 = apply_fn(v + 0.5 * dt * k1)
    k3 = apply_fn(v + 0.5 * dt * k2)
    k4 = apply_fn(v + dt * k3)
    return v + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def evolve(
    params: ModelParams,
    rho0: DensityMatrix,
    t_max: float,
    dt: Optional[float] = None,
    *,
    record_stride: int = 10,
    adaptive: bool = False,
    adaptive_tol: float = 1e-8,
) -> Trajectory:
    """Integrate the master equation from ``rho0`` until ``t_max``.

    Fixed-step RK4 with step ``dt`` (default 0.01/kappa); observables
    are recorded every ``record_stride`` steps, so the recorded grid is
    uniform with spacing ``record_stride * dt``.  With ``adaptive=True``
    each recording interval is covered by step-doubling RK4 controlled
    by ``adaptive_tol`` and the recorded grid is unchanged.

    Raises
    ------
    TraceDriftError
        If |Tr rho - 1| exceeds 1e-5 at any recorded time.
    """
    if dt is None:
        dt = 0.01 / params.kappa
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if record_stride < 1:
        raise ValueError(f"record_stride must be >= 1, got {record_stride}")
    if rho0.sector.n_spins != params.n_spins:
        raise ValueError(
            f"initial state lives on n_spins={rho0.sector.n_spins}, "
            f"params have n_spins={params.n_spins}"
        )

    apply_fn = superoperator_action(params)
    recorder = _Recorder(params)
    v = vectorize(rho0.entries).astype(complex)
    recorder.record(0.0, rho0.entries)

    n_steps = int(round(t_max / dt))
    n_records = n_steps // record_stride
    dt_rec = record_stride * dt

    for rec in range(1, n_records + 1):
        if adaptive:
            v = _advance_adaptive(apply_fn, v, dt_rec, dt, adaptive_tol)
        else:
            for _ in range(record_stride):
                v = _rk4_step(apply_fn, v, dt)
        t = rec * dt_rec
        rho = unvectorize(v)
        trace = recorder.record(t, rho)
        if abs(trace - 1.0) > TRACE_DRIFT_ABORT:
            raise TraceDriftError(
                f"trace drifted to {trace:.3e} at t={t:.4g} "
                f"(dt={dt:.3g} too large for this sector)"
            )

    rho = unvectorize(v)
    data = np.asarray(recorder.rows)
    return Trajectory(
        params,
        np.asarray(recorder.times),
        *(data[:, k] for k in range(8)),
        DensityMatrix(params.sector, rho),
    )


def _advance_adaptive(apply_fn, v, span, dt0, tol):
    """Cover ``span`` with step-doubled RK4 steps, adapting dt to tol."""
    remaining = span
    dt = min(dt0, span)
    while remaining > 1e-15 * span:
        dt = min(dt, remaining)
        full = _rk4_step(apply_fn, v, dt)
        half = _rk4_step(apply_fn, _rk4_step(apply_fn, v, dt / 2), dt / 2)
        err = float(np.linalg.norm(half - full)) / 15.0
        if err <= tol or dt <= 1e-12 * span:
            v = half
            remaining -= dt
            if err < tol / 32 and dt < remaining:
                dt *= 2.0
        else:
            dt /= 2.0
    return v


def steady_state(
    params: ModelParams,
    *,
    method: str = "lu",
    tol: float = 1e-9,
    max_iter: int = 50,
) -> DensityMatrix:
    """Unique steady state of the generator at finite size.

    ``method="lu"`` (default) solves the trace-completed sparse system:
    the generator row for the (0, 0) density-matrix component - linearly
    dependent on the remaining rows because the generator is trace
    preserving - is replaced by the unit-trace constraint.
    ``method="inverse-iteration"`` applies shifted inverse iteration
    starting from the maximally mixed state.

    Raises
    ------
    SteadyStateError
        If the residual ||L vec(rho)|| exceeds ``tol * kappa``.
    """
    sup = build_superoperator(params)
    dim = params.sector.dim
    matrix = sup.matrix.tolil()
    diag_idx = np.arange(dim) * (dim + 1)  # vec indices of rho[i, i]

    if method == "lu":
        trace_row = np.zeros(dim * dim, dtype=complex)
        trace_row[diag_idx] = 1.0
        matrix[0, :] = trace_row
        rhs = np.zeros(dim * dim, dtype=complex)
        rhs[0] = 1.0
        vec = spla.spsolve(matrix.tocsc(), rhs)
    elif method == "inverse-iteration":
        shift = 1e-8 * params.kappa
        eye = sp.identity(dim * dim, dtype=complex, format="csc")
        lu = spla.splu((sup.matrix - shift * eye).tocsc())
        vec = vectorize(maximally_mixed_state(params.sector).entries)
        for _ in range(max_iter):
            vec = lu.solve(vec)
            vec = vec / vec[diag_idx].sum()
            if np.linalg.norm(sup.matrix @ vec) <= tol * params.kappa:
                break
    else:
        raise ValueError(f"unknown steady-state method {method!r}")

    rho = unvectorize(vec)
    rho = 0.5 * (rho + rho.conjugate().T)  # clean round-off asymmetry
    rho = rho / rho.diagonal().sum().real

    residual = float(np.linalg.norm(sup.matrix @ vectorize(rho)))
    if residual > tol * params.kappa:
        raise SteadyStateError(
            f"steady-state residual {residual:.3e} above {tol * params.kappa:.3e} "
            f"(method={method}, n_spins={params.n_spins})"
        )
    return DensityMatrix(params.sector, rho)

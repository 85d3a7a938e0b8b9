"""Exact thermodynamic-limit dynamics of the reduced magnetization.

For m = (m_x, m_y, m_z) = <S_alpha>/S the equations of motion close as
S -> infinity:

    dm_x/dt = -2 w_z m_y m_z + kappa m_x m_z
    dm_y/dt =  2 (w_z - w_x) m_x m_z - w_0 m_z + kappa m_y m_z
    dm_z/dt =  w_0 m_y - kappa (m_x^2 + m_y^2) + 2 w_x m_x m_y

These conserve the norm |m|^2 and, in addition, one nontrivial quantity:
the ratio M = m_x / (m_y - w_0/kappa) when w_x = w_z = 0, and for
w_z > w_x >= 0 the multi-branch quantity

    R = W log(X^2 + Y^2) + 2 kappa atan(Y/X) + 2 pi kappa n,
    W = 2 sqrt(w_z (w_z - w_x)),      beta = sqrt(w_z / (w_z - w_x)),
    X = W m_x + kappa beta m_y - beta w_0,
    Y = kappa m_x - 2 w_z m_y,

whose branch index n increments whenever a trajectory crosses the line
X = 0, keeping R continuous (so conservation is compatible with spirals
into a fixed point).  R derives from decoupling (m_x, m_y) along the
left eigenvectors of the linearized drift; its complex-logarithm form is
kept alongside as a reality cross-check.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import least_squares

from .liouv import ModelParams

__all__ = [
    "MeanFieldTrajectory",
    "BranchState",
    "FixedPoint",
    "PortraitSeed",
    "PortraitResult",
    "InvolutionReport",
    "NormDriftError",
    "mf_derivative",
    "mf_jacobian",
    "mf_integrate",
    "conserved_M",
    "conserved_R",
    "conserved_R_complex",
    "fixed_points",
    "phase_portrait",
    "classify_orbit",
    "involution_check",
    "qp_to_bloch",
]


class NormDriftError(RuntimeError):
    """|m|^2 drifted beyond tolerance during integration (step too large)."""


def mf_derivative(m: np.ndarray, params: ModelParams) -> np.ndarray:
    """Right-hand side of the thermodynamic-limit equations of motion."""
    mx, my, mz = m
    w0, k = params.omega0, params.kappa
    wx, wz = params.omega_x, params.omega_z
    return np.array(
        [
            -2.0 * wz * my * mz + k * mx * mz,
            2.0 * (wz - wx) * mx * mz - w0 * mz + k * my * mz,
            w0 * my - k * (mx * mx + my * my) + 2.0 * wx * mx * my,
        ]
    )


def mf_jacobian(m: np.ndarray, params: ModelParams) -> np.ndarray:
    mx, my, mz = m
    w0, k = params.omega0, params.kappa
    wx, wz = params.omega_x, params.omega_z
    return np.array(
        [
            [k * mz, -2.0 * wz * mz, -2.0 * wz * my + k * mx],
            [2.0 * (wz - wx) * mz, k * mz, 2.0 * (wz - wx) * mx - w0 + k * my],
            [-2.0 * k * mx + 2.0 * wx * my, w0 - 2.0 * k * my + 2.0 * wx * mx, 0.0],
        ]
    )


def conserved_M(m: np.ndarray, params: ModelParams) -> float:
    """Ratio m_x / (m_y - w_0/kappa), conserved when w_x = w_z = 0.

    Returns NaN when the denominator is within 1e-12 of zero (the
    trajectory touches the singular line).
    """
    if params.omega_x != 0.0 or params.omega_z != 0.0:
        raise ValueError("M is conserved only for omega_x = omega_z = 0")
    den = m[1] - params.omega0 / params.kappa
    if abs(den) <= 1e-12:
        return float("nan")
    return float(m[0] / den)


@dataclass(frozen=True)
class BranchState:
    """Branch bookkeeping for the multi-valued conserved quantity R."""

    n: int = 0
    prev_R: Optional[float] = None
    crossings: int = 0


def _r_geometry(m, params):
    w0, k = params.omega0, params.kappa
    wx, wz = params.omega_x, params.omega_z
    if not (wz > 0.0 and wz > wx >= 0.0):
        raise ValueError(
            "R requires omega_z > omega_x >= 0 (oscillatory drift eigenvalues); "
            f"got omega_z={wz}, omega_x={wx}"
        )
    big_w = 2.0 * np.sqrt(wz * (wz - wx))
    beta = np.sqrt(wz / (wz - wx))
    x = big_w * m[0] + k * beta * m[1] - beta * w0
    y = k * m[0] - 2.0 * wz * m[1]
    return big_w, beta, x, y


def conserved_R(
    m: np.ndarray, params: ModelParams, branch: Optional[BranchState] = None
) -> tuple[float, BranchState]:
    """Evaluate R at a point, carrying the branch of the arctangent.

    The principal value jumps by 2 pi kappa whenever the trajectory
    crosses the branch line X = 0; continuity selects the integer
    multiple that minimizes the jump, and ``crossings`` counts how often
    the branch index moved.  Branch tracking assumes successive calls
    are spaced well below the winding period.

    On trajectories spiraling into a fixed point, (X, Y) -> (0, 0)
    exponentially: the log term diverges while the accumulating branch
    offsets compensate, which is exactly how conservation coexists with
    a spiral.  Once |(X, Y)| decays toward round-off (about 40 decay
    times in double precision) the evaluated value turns into noise, so
    conservation checks must stop before that point.
    """
    big_w, _, x, y = _r_geometry(m, params)
    k = params.kappa
    with np.errstate(divide="ignore", invalid="ignore"):
        principal = big_w * np.log(x * x + y * y) + 2.0 * k * np.arctan(y / x)
    if branch is None:
        branch = BranchState()
    value = principal + 2.0 * np.pi * k * branch.n
    if branch.prev_R is not None and np.isfinite(value):
        jump = round((branch.prev_R - value) / (2.0 * np.pi * k))
        if jump != 0:
            value += 2.0 * np.pi * k * jump
            branch = replace(
                branch, n=branch.n + int(jump), crossings=branch.crossings + 1
            )
    branch = replace(branch, prev_R=float(value))
    return float(value), branch


def conserved_R_complex(m: np.ndarray, params: ModelParams) -> complex:
    """R evaluated through the complex-logarithm form (reality check).

    Built from the decoupled coordinates eta+- = m_x +- i beta m_y: with
    lam+- = kappa +- i W the combination

        i [ lam- log(lam+ eta+ - i beta w_0) - lam+ log(lam- eta- + i beta w_0) ]

    is real up to round-off and equals R modulo an additive constant and
    the branch offset.
    """
    big_w, beta, _, _ = _r_geometry(m, params)
    w0, k = params.omega0, params.kappa
    lam_p = complex(k, big_w)
    lam_m = complex(k, -big_w)
    eta_p = complex(m[0], beta * m[1])
    eta_m = complex(m[0], -beta * m[1])
    w_p = lam_p * eta_p - 1j * beta * w0
    w_m = lam_m * eta_m + 1j * beta * w0
    term_p = cmath.log(w_p)
    # w_m is the conjugate of w_p; exactly on the negative real axis the
    # principal branch breaks the conjugate pairing, so take arg = -pi there
    if w_m.imag == 0.0 and w_m.real < 0.0:
        term_m = complex(cmath.log(abs(w_m)).real, -cmath.pi)
    else:
        term_m = cmath.log(w_m)
    return 1j * (lam_m * term_p - lam_p * term_m)


@dataclass(frozen=True)
class MeanFieldTrajectory:
    params: ModelParams
    times: np.ndarray = field(repr=False)
    m: np.ndarray = field(repr=False)  # shape (n_records, 3)
    norm_sq: np.ndarray = field(repr=False)
    M: np.ndarray = field(repr=False)  # NaN when undefined or singular
    R: np.ndarray = field(repr=False)  # NaN when undefined
    branch_n: np.ndarray = field(repr=False)

    @property
    def final(self) -> np.ndarray:
        return self.m[-1]


def _rk4(f, y, dt):
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def mf_integrate(
    m0: Sequence[float],
    params: ModelParams,
    t_max: float,
    dt: float = 0.005,
    *,
    record_stride: int = 1,
    adaptive: bool = False,
    adaptive_tol: float = 1e-12,
    norm_drift_abort: float = 1e-7,
) -> MeanFieldTrajectory:
    """Integrate the mean-field equations, tracking conserved quantities.

    The conserved-quantity columns hold M when w_x = w_z = 0 (NaN at
    singular points) and R with branch tracking when w_z > w_x >= 0;
    columns that do not apply are NaN throughout.

    Raises
    ------
    NormDriftError
        If ||m|^2 - |m0|^2| exceeds ``norm_drift_abort`` at a record.
    """
    m = np.asarray(m0, dtype=float)
    if m.shape != (3,):
        raise ValueError(f"m0 must be a 3-vector, got shape {m.shape}")
    f = lambda y: mf_derivative(y, params)  # noqa: E731

    track_m = params.omega_x == 0.0 and params.omega_z == 0.0
    track_r = params.omega_z > params.omega_x >= 0.0 and params.omega_z > 0.0
    branch = BranchState() if track_r else None

    norm0 = float(m @ m)
    times = [0.0]
    records = [m.copy()]
    m_vals = [conserved_M(m, params) if track_m else float("nan")]
    if track_r:
        r0, branch = conserved_R(m, params, branch)
    r_vals = [r0 if track_r else float("nan")]
    branches = [branch.n if track_r else 0]

    n_steps = int(round(t_max / dt))
    n_records = n_steps // record_stride
    for rec in range(1, n_records + 1):
        if adaptive:
            m = _advance_adaptive_mf(f, m, record_stride * dt, dt, adaptive_tol)
        else:
            for _ in range(record_stride):
                m = _rk4(f, m, dt)
        t = rec * record_stride * dt
        norm = float(m @ m)
        if abs(norm - norm0) > norm_drift_abort:
            raise NormDriftError(
                f"|m|^2 drifted by {abs(norm - norm0):.3e} at t={t:.4g}; reduce dt"
            )
        times.append(t)
        records.append(m.copy())
        m_vals.append(conserved_M(m, params) if track_m else float("nan"))
        if track_r:
            r, branch = conserved_R(m, params, branch)
            r_vals.append(r)
            branches.append(branch.n)
        else:
            r_vals.append(float("nan"))
            branches.append(0)

    traj_m = np.asarray(records)
    return MeanFieldTrajectory(
        params,
        np.asarray(times),
        traj_m,
        np.einsum("ij,ij->i", traj_m, traj_m),
        np.asarray(m_vals),
        np.asarray(r_vals),
        np.asarray(branches, dtype=int),
    )


def _advance_adaptive_mf(f, y, span, dt0, tol):
    remaining = span
    dt = min(dt0, span)
    while remaining > 1e-15 * span:
        dt = min(dt, remaining)
        full = _rk4(f, y, dt)
        half = _rk4(f, _rk4(f, y, dt / 2), dt / 2)
        err = float(np.linalg.norm(half - full)) / 15.0
        if err <= tol or dt <= 1e-12 * span:
            y = half
            remaining -= dt
            if err < tol / 32 and dt < remaining:
                dt *= 2.0
        else:
            dt /= 2.0
    return y


# ---------------------------------------------------------------------------
# fixed points


@dataclass(frozen=True)
class FixedPoint:
    m: np.ndarray
    classification: str  # center-like | attracting | repelling | saddle
    jacobian_eigenvalues: np.ndarray


def _classify(m: np.ndarray, params: ModelParams) -> tuple[str, np.ndarray]:
    eigs = np.linalg.eigvals(mf_jacobian(m, params))
    # one eigenvalue is always ~0 (norm conservation); drop it and read
    # the on-sphere stability from the remaining pair
    keep = np.argsort(np.abs(eigs))[1:]
    pair = eigs[keep]
    scale = params.kappa + abs(params.omega0) + params.omega_x + abs(params.omega_z)
    tol = 1e-8 * scale
    neg = int(np.sum(pair.real < -tol))
    pos = int(np.sum(pair.real > tol))
    if neg == 2:
        label = "attracting"
    elif pos == 2:
        label = "repelling"
    elif neg == 1 and pos == 1:
        label = "saddle"
    else:
        label = "center-like"
    return label, eigs


def _closed_form_fixed_points(params: ModelParams) -> list[np.ndarray]:
    """Unit-norm fixed points for w_x = 0, verified by direct substitution.

    The on-axis pair (0, w0/k, +-sqrt(...)) for w_z = 0 is the special
    case of the tilted pair below, which exists for k^2 + 4 w_z^2 >= w0^2;
    the equatorial pair exists for w0 >= k.
    """
    w0, k, wz = params.omega0, params.kappa, params.omega_z
    points = []
    if abs(w0) >= k > 0:
        my = k / w0
        mx = np.sqrt(max(1.0 - my * my, 0.0))
        points += [np.array([mx, my, 0.0]), np.array([-mx, my, 0.0])]
    denom = k * k + 4.0 * wz * wz
    if denom >= w0 * w0 and w0 != 0.0:
        mx = 2.0 * wz * w0 / denom
        my = k * w0 / denom
        mz = np.sqrt(max(1.0 - w0 * w0 / denom, 0.0))
        points += [np.array([mx, my, mz]), np.array([mx, my, -mz])]
    if w0 == 0.0:
        # pure decay: every point on the z-axis is stationary; report the poles
        points += [np.array([0.0, 0.0, 1.0]), np.array([0.0, 0.0, -1.0])]
    return points


def _sphere_seeds(n: int) -> np.ndarray:
    """Deterministic quasi-uniform seeds (Fibonacci lattice)."""
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    r = np.sqrt(1.0 - z * z)
    golden = np.pi * (3.0 - np.sqrt(5.0))
    phi = golden * i
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def fixed_points(
    params: ModelParams,
    *,
    n_seeds: int = 128,
    residual_tol: float = 1e-12,
    merge_tol: float = 1e-8,
) -> list[FixedPoint]:
    """Unit-norm stationary points of the flow, with stability labels.

    For w_x = 0 the closed forms are used (their residual is checked
    against ``residual_tol`` like every other candidate); otherwise
    roots are found numerically from a deterministic grid of seeds,
    deduplicated within ``merge_tol``.
    """
    candidates: list[np.ndarray] = []
    if params.omega_x == 0.0:
        candidates = _closed_form_fixed_points(params)
    else:
        def residuals(m):
            return np.concatenate([mf_derivative(m, params), [m @ m - 1.0]])

        for seed in _sphere_seeds(n_seeds):
            sol = least_squares(
                residuals, seed, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15
            )
            if sol.success:
                candidates.append(sol.x)

    accepted: list[np.ndarray] = []
    for m in candidates:
        if np.linalg.norm(mf_derivative(m, params)) > residual_tol:
            continue
        if abs(m @ m - 1.0) > 1e-9:
            continue
        if any(np.linalg.norm(m - other) < merge_tol for other in accepted):
            continue
        accepted.append(m)

    accepted.sort(key=lambda v: (round(v[0], 10), round(v[1], 10), round(v[2], 10)))
    return [FixedPoint(m, *_classify(m, params)) for m in accepted]


# ---------------------------------------------------------------------------
# phase portraits and reversibility


def qp_to_bloch(q: float, p: float) -> np.ndarray:
    """Canonical phase-space coordinates to a unit Bloch vector.

    Q = m_z and P is the half-angle in the equatorial plane:
    m_x = sqrt(1-Q^2) cos(2P), m_y = sqrt(1-Q^2) sin(2P).
    """
    r = np.sqrt(max(1.0 - q * q, 0.0))
    return np.array([r * np.cos(2.0 * p), r * np.sin(2.0 * p), q])


@dataclass(frozen=True)
class PortraitSeed:
    q: float
    p: float
    classification: str  # closed | attracted | escaped
    period_estimate: float  # NaN unless closed


@dataclass(frozen=True)
class PortraitResult:
    params: ModelParams
    seeds: tuple
    fixed_points: tuple

    def fraction(self, label: str) -> float:
        if not self.seeds:
            return 0.0
        return sum(s.classification == label for s in self.seeds) / len(self.seeds)


def _refined_return_distances(times, traj, seed, params=None):
    """Local minima of the distance to the seed along recorded samples.

    Grid minima resolve the distance only to about (speed * spacing);
    with ``params`` each candidate is re-integrated across its bracketing
    interval at a 50x finer step, resolving true returns to integration
    accuracy.
    """
    d2 = np.einsum("ij,ij->i", traj - seed, traj - seed)
    spacing = float(times[1] - times[0])
    out = []
    for i in range(1, len(d2) - 1):
        if d2[i] <= d2[i - 1] and d2[i] <= d2[i + 1]:
            t_best, d_best = float(times[i]), float(np.sqrt(d2[i]))
            if params is not None:
                f = lambda y: mf_derivative(y, params)  # noqa: E731
                fine = spacing / 50.0
                m = traj[i - 1].copy()
                for k in range(100):
                    m = _rk4(f, m, fine)
                    d = float(np.linalg.norm(m - seed))
                    if d < d_best:
                        t_best, d_best = float(times[i - 1] + (k + 1) * fine), d
            out.append((t_best, d_best))
    return out


def classify_orbit(
    traj: MeanFieldTrajectory,
    attractors: Sequence[FixedPoint],
    *,
    return_tol: float = 1e-4,
    attract_tol: float = 1e-3,
) -> tuple[str, float]:
    """Classify one integrated orbit as closed, attracted, or escaped.

    Closed means a Poincare-style return to within ``return_tol`` of the
    initial point with no monotone contraction of the return distances
    (a contraction would indicate asymptotic approach, not periodicity).
    """
    seed = traj.m[0]
    end = traj.m[-1]
    for fp in attractors:
        if fp.classification == "attracting" and np.linalg.norm(end - fp.m) < attract_tol:
            return "attracted", float("nan")

    # skip the trivial minimum at t=0
    quarter = max(2, len(traj.times) // 200)
    returns = _refined_return_distances(
        traj.times[quarter:], traj.m[quarter:], seed, traj.params
    )
    close = [(t, r) for t, r in returns if r <= return_tol]
    if close:
        rs = [r for _, r in returns[: max(len(close), 3)]]
        contracting = len(rs) >= 3 and all(b < 0.5 * a for a, b in zip(rs, rs[1:]))
        if not contracting:
            return "closed", close[0][0]
    return "escaped", float("nan")


def phase_portrait(
    params: ModelParams,
    *,
    n_q: int = 10,
    n_p: int = 10,
    t_max: float = 150.0,
    dt: float = 0.005,
    record_stride: int = 2,
    return_tol: float = 1e-4,
) -> PortraitResult:
    """Integrate a uniform (Q, P) grid of seeds and classify each orbit.

    Per-seed integration failures are recorded as ``escaped`` and the
    portrait continues.
    """
    if n_q < 2 or n_p < 2:
        raise ValueError("portrait grid must be at least 2 x 2")
    fps = tuple(fixed_points(params))
    qs = [-1.0 + 2.0 * (i + 0.5) / n_q for i in range(n_q)]
    ps = [np.pi * j / n_p for j in range(n_p)]
    seeds = []
    for q in qs:
        for p in ps:
            m0 = qp_to_bloch(q, p)
            try:
                traj = mf_integrate(m0, params, t_max, dt, record_stride=record_stride)
                label, period = classify_orbit(traj, fps, return_tol=return_tol)
            except NormDriftError:
                label, period = "escaped", float("nan")
            seeds.append(PortraitSeed(float(q), float(p), label, period))
    return PortraitResult(params, tuple(seeds), fps)


@dataclass(frozen=True)
class InvolutionReport:
    passed: bool
    deviation: float
    tolerance: float


def involution_check(
    traj: MeanFieldTrajectory, *, tol: float = 1e-6
) -> InvolutionReport:
    """Time-reversal test under the involution (m_x, m_y, m_z) -> (m_x, m_y, -m_z).

    If m(t) solves the flow then so does the involution image run
    backward: integrating from the flipped endpoint for the same
    duration must land on the flipped starting point.
    """
    flip = np.array([1.0, 1.0, -1.0])
    duration = float(traj.times[-1] - traj.times[0])
    dt = float(traj.times[1] - traj.times[0]) if len(traj.times) > 1 else 0.001
    back = mf_integrate(traj.m[-1] * flip, traj.params, duration, min(dt, 0.005))
    deviation = float(np.linalg.norm(back.final - traj.m[0] * flip))
    return InvolutionReport(deviation <= tol, deviation, tol)

"""Spectral diagnostics of the Lindblad generator.

Full dense non-Hermitian diagonalization, finite-size gap scans, the
band structure of the imaginary parts of the slow eigenvalues with its
fundamental frequency, and power-law fitting for scaling analyses.

Eigenvalues are always sorted by |Re| ascending (ties broken by Im
ascending), so index 0 is the steady-state eigenvalue lambda_0 = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .liouv import ModelParams, Superoperator, build_superoperator

__all__ = [
    "EigenSpectrum",
    "BandStructure",
    "GapScanRow",
    "PowerLawFit",
    "EigensolverError",
    "full_spectrum",
    "gap_scan",
    "band_structure",
    "lowest_imaginary_excitation",
    "fit_power_law",
    "DEFAULT_MAX_N_SPINS",
    "DEFAULT_NU_THRESHOLD",
]

# Full diagonalization is O(dim^6) in n_spins; keep desk-scale by default.
DEFAULT_MAX_N_SPINS = 40

# Retention threshold for the band structure (see band_structure).
DEFAULT_NU_THRESHOLD = 0.025


class EigensolverError(RuntimeError):
    """Dense eigendecomposition failed to converge."""


@dataclass(frozen=True)
class EigenSpectrum:
    """All (n_spins + 1)^2 eigenvalues, sorted by |Re| then Im."""

    params: ModelParams
    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: Optional[np.ndarray] = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.eigenvalues)


@dataclass(frozen=True)
class BandStructure:
    """Bands of imaginary parts of the slow eigenvalues.

    ``gamma`` is the fundamental frequency: the mean spacing between
    adjacent band centers.  It is None when fewer than two bands exist
    (for instance in the gapped phase, where the slow eigenvalues are
    all real).
    """

    nu_threshold: float
    retained: tuple  # of (j, complex eigenvalue)
    band_centers: tuple
    gamma: Optional[float]

    @property
    def has_bands(self) -> bool:
        return self.gamma is not None


@dataclass(frozen=True)
class GapScanRow:
    n_spins: int
    re_leading: Optional[np.ndarray]
    error: Optional[str] = None


@dataclass(frozen=True)
class PowerLawFit:
    amplitude: float
    exponent: float
    r_squared: float
    exponent_stderr: float


def _sort_spectrum(values: np.ndarray, vectors: Optional[np.ndarray]):
    order = np.lexsort((values.imag, np.abs(values.real)))
    if vectors is None:
        return values[order], None
    return values[order], vectors[:, order]


def full_spectrum(
    superop: Superoperator,
    *,
    compute_eigenvectors: bool = False,
    max_n_spins: int = DEFAULT_MAX_N_SPINS,
) -> EigenSpectrum:
    """Dense eigendecomposition of the materialized generator.

    Uses the LAPACK general complex eigensolver (Hessenberg reduction
    followed by shifted QR iteration).

    Raises
    ------
    EigensolverError
        If the QR iteration fails to converge; the message carries the
        LAPACK diagnostic.
    ValueError
        If the sector exceeds ``max_n_spins``.
    """
    n = superop.params.n_spins
    if n > max_n_spins:
        raise ValueError(
            f"full spectrum for n_spins={n} refused (cap {max_n_spins}); "
            "raise max_n_spins explicitly if you accept the runtime"
        )
    dense = superop.matrix.toarray()
    try:
        if compute_eigenvectors:
            values, vectors = np.linalg.eig(dense)
        else:
            values, vectors = np.linalg.eigvals(dense), None
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(f"eigendecomposition did not converge: {exc}") from exc
    values, vectors = _sort_spectrum(values, vectors)
    return EigenSpectrum(superop.params, values, vectors)


def gap_scan(
    params_base: ModelParams,
    sizes: Sequence[int],
    *,
    n_leading: int = 6,
    max_workers: int = 1,
) -> list[GapScanRow]:
    """Leading |Re|-sorted eigenvalue real parts for each system size.

    Per-size eigensolver failures are recorded in the row and the scan
    continues.  Rows are returned in input order regardless of worker
    count.
    """

    def one(n: int) -> GapScanRow:
        try:
            sup = build_superoperator(params_base.replace(n_spins=int(n)))
            spec = full_spectrum(sup)
            k = min(n_leading, len(spec.eigenvalues))
            return GapScanRow(int(n), spec.eigenvalues[:k].real.copy())
        except Exception as exc:  # noqa: BLE001 - per-size failures must not stop the scan
            return GapScanRow(int(n), None, error=str(exc))

    if max_workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            return list(pool.map(one, sizes))
    return [one(n) for n in sizes]


def band_structure(
    spec: EigenSpectrum,
    epsilon: float = DEFAULT_NU_THRESHOLD,
    *,
    split_factor: float = 0.5,
    im_floor: float = 1e-8,
) -> BandStructure:
    """Group the imaginary parts of the slow eigenvalues into bands.

    An eigenvalue is retained when its decay rate sits below the
    excitation threshold: |Re lambda_j| <= epsilon * n_spins * kappa.
    At the default epsilon this keeps the slow modes whose imaginary
    parts form the band structure in the symmetry-breaking phase, and
    only the real slow modes in the gapped phase.

    Retained imaginary parts are sorted and split into clusters wherever
    an adjacent gap exceeds ``split_factor`` times the largest adjacent
    gap; each cluster is a band, its center the mean.  The fundamental
    frequency is the mean difference between adjacent band centers.

    No bands are reported (gamma None) when fewer than two clusters
    exist or when every retained imaginary part is below
    ``im_floor * kappa`` in magnitude.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    kappa = spec.params.kappa
    threshold = epsilon * spec.params.n_spins * kappa
    values = spec.eigenvalues
    keep = np.abs(values.real) <= threshold
    retained = tuple((int(j), complex(values[j])) for j in np.flatnonzero(keep))

    ims = np.sort(values.imag[keep])
    if ims.size == 0 or np.abs(ims).max() <= im_floor * kappa:
        return BandStructure(epsilon, retained, (), None)

    gaps = np.diff(ims)
    largest = gaps.max() if gaps.size else 0.0
    if largest <= 0:
        return BandStructure(epsilon, retained, (float(ims.mean()),), None)
    cuts = np.flatnonzero(gaps > split_factor * largest)
    clusters = np.split(ims, cuts + 1)
    centers = tuple(float(c.mean()) for c in clusters)
    if len(centers) < 2:
        return BandStructure(epsilon, retained, centers, None)
    gamma = float(np.mean(np.diff(centers)))
    return BandStructure(epsilon, retained, centers, gamma)


def lowest_imaginary_excitation(
    spec: EigenSpectrum, *, tol_im: float = 1e-6
) -> Optional[complex]:
    """The eigenvalue of smallest sorted index with |Im| > tol_im * kappa.

    Returns None when the spectrum has no such eigenvalue (gapped phase).
    """
    mask = np.abs(spec.eigenvalues.imag) > tol_im * spec.params.kappa
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return None
    return complex(spec.eigenvalues[idx[0]])


def fit_power_law(x: Sequence[float], y: Sequence[float]) -> PowerLawFit:
    """Least-squares fit of y = amplitude * x**exponent on log-log axes.

    Requires at least 3 strictly positive points.  The exponent standard
    error comes from the linear-regression covariance; r_squared is the
    coefficient of determination in log space (1.0 for a perfect or
    constant fit).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size != y.size:
        raise ValueError("x and y must have equal length")
    if x.size < 3:
        raise ValueError(f"need at least 3 points, got {x.size}")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("power-law fit requires strictly positive x and y")

    lx, ly = np.log(x), np.log(y)
    design = np.vstack([lx, np.ones_like(lx)]).T
    coef, _, _, _ = np.linalg.lstsq(design, ly, rcond=None)
    pred = design @ coef
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r_squared = 1.0 if ss_tot < 1e-30 else 1.0 - ss_res / ss_tot

    dof = max(x.size - 2, 1)
    sigma_sq = ss_res / dof
    sxx = float(np.sum((lx - lx.mean()) ** 2))
    stderr = float(np.sqrt(sigma_sq / sxx)) if sxx > 0 else float("inf")
    return PowerLawFit(float(np.exp(coef[1])), float(coef[0]), r_squared, stderr)

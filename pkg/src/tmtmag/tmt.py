"""Template-margin-threshold (TMT) wavelet denoiser for Ramsey PL traces.

The pipeline estimates the fringe frequency of a raw trace by template
cross-correlation, builds time-dependent upper/lower margins around the
analytic template from the shot-noise model, decomposes both margins with
the undecimated transform, and clamps each raw detail coefficient into the
per-coefficient margin interval before reconstructing.  The approximation
band is kept raw.

The margin half-width is ``10**(-beta) * dN(t) / sqrt(T_I * M * f_sample)``;
``beta`` is the filter order.  ``beta -> -inf`` is the raw (untouched)
limit, ``beta -> +inf`` pins the trace to the template.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ramsey import AcquisitionPlan, PLTrace, SensorParams, shot_noise, template
from .wavelets import (
    WaveletBasis,
    WaveletDecomposition,
    default_levels,
    iuwt_reconstruct,
    uwt_analyze,
    uwt_decompose,
)


class FrequencySearchError(ValueError):
    """Raised when the template-frequency search cannot produce a maximum."""


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform angular-frequency search grid."""

    omega_min: float
    omega_max: float
    n_points: int = 2001

    def __post_init__(self):
        if not (self.omega_max > self.omega_min > 0.0):
            raise ValueError(f"need omega_max > omega_min > 0, got [{self.omega_min}, {self.omega_max}]")
        if self.n_points < 3:
            raise ValueError(f"grid needs at least 3 points, got {self.n_points}")

    @classmethod
    def around(cls, omega_center: float, fraction: float = 0.15,
               n_points: int = 2001) -> "FrequencyGrid":
        return cls(omega_center * (1.0 - fraction), omega_center * (1.0 + fraction), n_points)

    @property
    def omegas(self) -> np.ndarray:
        return np.linspace(self.omega_min, self.omega_max, self.n_points)

    @property
    def step(self) -> float:
        return (self.omega_max - self.omega_min) / (self.n_points - 1)


def correlation_spectrum(values: np.ndarray, times: np.ndarray,
                         params: SensorParams, omegas: np.ndarray) -> np.ndarray:
    """Trace/template overlap versus trial frequency.

    Trapezoid-weighted inner product of the DC-removed trace with the
    DC-removed template sampled on the trace grid; DC removal subtracts
    each series' arithmetic mean over the window.
    """
    arr = np.asarray(values, dtype=float)
    single = arr.ndim == 1
    v = np.atleast_2d(arr)
    times = np.asarray(times, dtype=float)
    n = times.size
    if n < 2:
        raise FrequencySearchError("trace too short for a correlation search")
    dt = times[1] - times[0]
    weights = np.full(n, dt)
    weights[0] = weights[-1] = 0.5 * dt
    kernel = template(times[None, :], omegas[:, None], params)
    kernel = kernel - kernel.mean(axis=1, keepdims=True)
    centered = v - v.mean(axis=1, keepdims=True)
    # einsum with optimize=False keeps the reduction order fixed, so results
    # do not depend on BLAS threading
    r = np.einsum("en,gn->eg", centered * weights, kernel, optimize=False)
    return r[0] if single else r


@dataclass(frozen=True)
class TemplateEstimate:
    """Result of the template-frequency search."""

    omega_temp: float
    correlation_curve: np.ndarray  # (n_points, 2) columns (omega, R)
    grid: FrequencyGrid


def _refine_parabolic(omegas: np.ndarray, r: np.ndarray, k: int) -> float:
    denom = r[k - 1] - 2.0 * r[k] + r[k + 1]
    if denom == 0.0:
        return omegas[k]
    shift = 0.5 * (r[k - 1] - r[k + 1]) / denom
    return omegas[k] + shift * (omegas[1] - omegas[0])


def estimate_template_frequency(trace: PLTrace, params: SensorParams,
                                grid: FrequencyGrid) -> TemplateEstimate:
    """Maximize the trace/template correlation over ``grid``.

    The discrete maximizer is refined by one parabolic interpolation
    through its two neighbours.  A maximum on the grid boundary (search
    window too narrow) or an all-constant trace is an error.
    """
    values = np.asarray(trace.values, dtype=float)
    if values.size == 0:
        raise FrequencySearchError("empty trace")
    if np.ptp(values) == 0.0:
        raise FrequencySearchError("constant trace: correlation is identically zero after DC removal")
    omegas = grid.omegas
    r = correlation_spectrum(values, trace.times, params, omegas)
    k = int(np.argmax(r))
    if k == 0 or k == omegas.size - 1:
        raise FrequencySearchError(
            f"correlation maximum at the grid boundary (omega={omegas[k]:.6g}); widen the search grid"
        )
    omega_temp = _refine_parabolic(omegas, r, k)
    curve = np.column_stack([omegas, r])
    return TemplateEstimate(omega_temp=omega_temp, correlation_curve=curve, grid=grid)


def estimate_frequencies(values: np.ndarray, times: np.ndarray, params: SensorParams,
                         grid: FrequencyGrid, chunk: int = 16) -> np.ndarray:
    """Per-trace template frequencies for a whole ensemble.

    ``values`` has shape (n_traces, n_samples); evaluation is chunked to
    bound the size of the correlation temporaries.
    """
    values = np.asarray(values, dtype=float)
    omegas = grid.omegas
    out = np.empty(values.shape[0])
    for start in range(0, values.shape[0], chunk):
        block = values[start:start + chunk]
        r = correlation_spectrum(block, times, params, omegas)
        ks = np.argmax(r, axis=1)
        for i, k in enumerate(ks):
            if np.ptp(block[i]) == 0.0:
                raise FrequencySearchError(
                    f"trace {start + i}: constant trace, correlation identically zero"
                )
            if k == 0 or k == omegas.size - 1:
                raise FrequencySearchError(
                    f"trace {start + i}: correlation maximum at the grid boundary; widen the grid"
                )
            out[start + i] = _refine_parabolic(omegas, r[i], int(k))
    return out


# ---------------------------------------------------------------------------
# margins and shrinkage
# ---------------------------------------------------------------------------

def margin_width(beta: float, plan: AcquisitionPlan) -> float:
    """Margin scale 10**(-beta) / sqrt(T_I * M * f_sample)."""
    return 10.0 ** (-beta) / np.sqrt(plan.duration * plan.repetitions * plan.f_sample)


@dataclass(frozen=True)
class MarginSet:
    """Per-coefficient clamp intervals for one (omega_temp, beta) pair."""

    upper_time: np.ndarray
    lower_time: np.ndarray
    upper_coeffs: list[np.ndarray]
    lower_coeffs: list[np.ndarray]
    beta: float
    levels: int
    times: np.ndarray
    basis_name: str
    boundary: str

    def __post_init__(self):
        for lo, hi in zip(self.lower_coeffs, self.upper_coeffs):
            if np.any(lo > hi):
                raise ValueError("lower margin exceeds upper margin")


def build_margins(omega_temp: float, beta: float, params: SensorParams,
                  plan: AcquisitionPlan, basis: WaveletBasis | str,
                  levels: int | None = None, boundary: str = "periodic",
                  squared_contrast: bool = False) -> MarginSet:
    """Margins around the template, decomposed to per-level clamp intervals.

    Upper/lower time-domain margins are the template plus/minus the scaled
    shot-noise profile; each detail coefficient interval is the elementwise
    min/max of the two decompositions.  ``squared_contrast`` switches the
    shot-noise model variant (see :func:`tmtmag.ramsey.shot_noise`).
    """
    times = plan.times
    if levels is None:
        levels = default_levels(times.size)
    kernel = template(times, omega_temp, params)
    width = margin_width(beta, plan) * shot_noise(times, omega_temp, params,
                                                  squared_contrast=squared_contrast)
    upper = kernel + width
    lower = kernel - width
    du, _ = uwt_analyze(upper, basis, levels, boundary)
    dl, _ = uwt_analyze(lower, basis, levels, boundary)
    basis_name = basis if isinstance(basis, str) else basis.name
    return MarginSet(
        upper_time=upper,
        lower_time=lower,
        upper_coeffs=[np.maximum(du[j], dl[j]) for j in range(levels + 1)],
        lower_coeffs=[np.minimum(du[j], dl[j]) for j in range(levels + 1)],
        beta=beta,
        levels=levels,
        times=times,
        basis_name=basis_name,
        boundary=boundary,
    )


def hard_clamp(raw, lower, upper):
    """Hard shrinkage: pass in-margin values, pin the rest to the nearest margin."""
    return np.clip(raw, lower, upper)


def clamp_decomposition(decomp: WaveletDecomposition, margins: MarginSet) -> WaveletDecomposition:
    """Clamp every detail level into its margin interval; keep the approximation raw."""
    clamped = [hard_clamp(d, lo, hi)
               for d, lo, hi in zip(decomp.details, margins.lower_coeffs, margins.upper_coeffs)]
    return WaveletDecomposition(
        details=clamped,
        approximation=decomp.approximation,
        levels=decomp.levels,
        mode=decomp.mode,
        boundary=decomp.boundary,
        signal_length=decomp.signal_length,
    )


def tmt_denoise(trace: PLTrace, margins: MarginSet, basis: WaveletBasis | str) -> PLTrace:
    """Denoise one trace against prebuilt margins.

    The raw trace is decomposed with the same basis, depth and boundary as
    the margins, detail coefficients are clamped into [lower, upper], the
    raw approximation band is kept, and the result is reconstructed.
    """
    basis_name = basis if isinstance(basis, str) else basis.name
    if basis_name != margins.basis_name:
        raise ValueError(f"margins were built for basis {margins.basis_name!r}, got {basis_name!r}")
    if trace.values.size != margins.times.size or not np.allclose(trace.times, margins.times):
        raise ValueError("margins were built for a different time grid")
    decomp = uwt_decompose(trace.values, basis, margins.levels, margins.boundary)
    denoised = iuwt_reconstruct(clamp_decomposition(decomp, margins), basis)
    return PLTrace(times=trace.times, values=denoised, params=trace.params, plan=trace.plan)


def denoise_pipeline(trace: PLTrace, params: SensorParams, plan: AcquisitionPlan,
                     beta: float, basis: WaveletBasis | str,
                     levels: int | None = None, grid: FrequencyGrid | None = None,
                     boundary: str = "periodic") -> tuple[PLTrace, TemplateEstimate]:
    """Estimate the template frequency, build margins, denoise; returns both artifacts."""
    if grid is None:
        grid = FrequencyGrid.around(params.omega_calib)
    estimate = estimate_template_frequency(trace, params, grid)
    margins = build_margins(estimate.omega_temp, beta, params, plan, basis, levels, boundary)
    return tmt_denoise(trace, margins, basis), estimate

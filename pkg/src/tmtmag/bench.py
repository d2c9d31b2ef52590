"""Monte-Carlo benchmark harness for the TMT denoiser.

Collects ensemble error statistics at slope detection points, scans the
filter order for the bias/variance trade-off, transfers the optimum order
from calibration runs, and fits SNR power laws against integration time.

Statistics use population normalization (divide by the ensemble size), so
``mse == bias**2 + variance`` holds exactly for every detection point.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .ramsey import (
    AcquisitionPlan,
    PLTrace,
    SensorParams,
    shot_noise,
    simulate_ensemble,
    template,
)
from .tmt import FrequencyGrid, estimate_frequencies, margin_width
from .wavelets import default_levels, uwt_analyze, uwt_synthesize


def child_seed(seed: int, *indices: int) -> int:
    """Deterministic sub-seed for an indexed configuration."""
    entropy = [int(seed)] + [int(i) for i in indices]
    return int(np.random.SeedSequence(entropy=entropy).generate_state(1, np.uint64)[0])


# ---------------------------------------------------------------------------
# detection points
# ---------------------------------------------------------------------------

def detection_crossings(omega: float, t_start: float, t_stop: float) -> np.ndarray:
    """Times with omega*t = pi/2 (mod 2*pi) inside [t_start, t_stop].

    These sit on the negative slopes of the PL fringes, where the template
    crosses its midline going down.
    """
    period = 2.0 * np.pi / omega
    m_lo = int(np.ceil((t_start / period) - 0.25))
    m_hi = int(np.floor((t_stop / period) - 0.25))
    return (0.25 + np.arange(max(m_lo, 0), m_hi + 1)) * period


@dataclass(frozen=True)
class DetectionPointSet:
    """Sample indices on negative fringe slopes, with true template values."""

    indices: np.ndarray
    times: np.ndarray
    truths: np.ndarray

    def __post_init__(self):
        if len(self.indices) < 1:
            raise ValueError("need at least one detection point")
        if np.any(np.diff(self.indices) <= 0):
            raise ValueError("detection indices must be strictly increasing")

    def __len__(self) -> int:
        return len(self.indices)


def find_detection_points(omega: float, plan: AcquisitionPlan, n_sd: int,
                          params: SensorParams) -> DetectionPointSet:
    """First ``n_sd`` samples nearest the negative-slope fringe crossings."""
    if n_sd < 1:
        raise ValueError(f"n_sd must be >= 1, got {n_sd}")
    times = plan.times
    crossings = detection_crossings(omega, plan.t_start, times[-1])
    if crossings.size < n_sd:
        raise ValueError(
            f"window [{plan.t_start:.4g}, {plan.t_stop:.4g}] s contains only "
            f"{crossings.size} negative-slope crossings, need {n_sd}"
        )
    idx = np.round((crossings[:n_sd] - plan.t_start) * plan.f_sample).astype(int)
    idx = np.clip(idx, 0, times.size - 1)
    t_q = times[idx]
    return DetectionPointSet(indices=idx, times=t_q,
                             truths=template(t_q, omega, params))


def plan_for_detection_count(plan: AcquisitionPlan, omega: float, n_sd: int) -> AcquisitionPlan:
    """Shorten/extend ``t_stop`` so the window holds exactly ``n_sd`` crossings."""
    if n_sd < 1:
        raise ValueError(f"n_sd must be >= 1, got {n_sd}")
    period = 2.0 * np.pi / omega
    first = detection_crossings(omega, plan.t_start, plan.t_start + (n_sd + 2) * period)
    t_stop = 0.5 * (first[n_sd - 1] + first[n_sd])
    return plan.with_(t_stop=t_stop)


# ---------------------------------------------------------------------------
# ensemble statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnsembleStats:
    """Per-detection-point ensemble error metrics.

    ``mse``, ``bias``, ``variance``, ``sample_mean`` and ``mse_stderr`` are
    arrays over detection points; ``mse = bias**2 + variance`` exactly.
    """

    mse: np.ndarray
    bias: np.ndarray
    variance: np.ndarray
    sample_mean: np.ndarray
    mse_stderr: np.ndarray
    fringe_averaged_mse: float
    n_exp: int
    beta: float | None = None

    def __post_init__(self):
        if self.n_exp < 2:
            raise ValueError("ensemble statistics need at least 2 experiments")


def _as_value_matrix(traces) -> np.ndarray:
    if isinstance(traces, np.ndarray):
        values = traces
    else:
        rows = [t.values if isinstance(t, PLTrace) else np.asarray(t, dtype=float) for t in traces]
        lengths = {r.size for r in rows}
        if len(lengths) != 1:
            raise ValueError("ensemble traces do not share one time grid")
        values = np.stack(rows)
    if values.ndim != 2:
        raise ValueError(f"expected an (n_exp, n_samples) ensemble, got shape {values.shape}")
    return values


def ensemble_stats(traces, points: DetectionPointSet, beta: float | None = None) -> EnsembleStats:
    """MSE/bias/variance over an ensemble at the detection points.

    Accepts an (n_exp, n_samples) array or a sequence of traces.  The
    variance divides by n_exp (not n_exp - 1) to keep the decomposition
    identity exact.
    """
    values = _as_value_matrix(traces)
    n_exp = values.shape[0]
    if n_exp < 2:
        raise ValueError("need at least 2 experiments for ensemble statistics")
    if np.any(points.indices >= values.shape[1]):
        raise ValueError("detection indices fall outside the trace grid")
    at_points = values[:, points.indices]            # (n_exp, n_sd)
    dev = at_points - points.truths[None, :]
    mse = np.mean(dev ** 2, axis=0)
    bias = np.mean(dev, axis=0)
    sample_mean = np.mean(at_points, axis=0)
    variance = np.mean((at_points - sample_mean[None, :]) ** 2, axis=0)
    fourth = np.mean(dev ** 4, axis=0)
    mse_stderr = np.sqrt(np.maximum(fourth - mse ** 2, 0.0) / n_exp)
    return EnsembleStats(
        mse=mse,
        bias=bias,
        variance=variance,
        sample_mean=sample_mean,
        mse_stderr=mse_stderr,
        fringe_averaged_mse=float(np.mean(mse)),
        n_exp=n_exp,
        beta=beta,
    )


def signal_amplitude(points: DetectionPointSet, params: SensorParams,
                     omega_sense: float, omega_calib: float) -> float:
    """Mean absolute template shift produced by the sensing field.

    delta_N = mean over detection points of
    |template(t_q, omega_sense) - template(t_q, omega_calib)|.
    """
    shift = template(points.times, omega_sense, params) - template(points.times, omega_calib, params)
    return float(np.mean(np.abs(shift)))


def snr(stats: EnsembleStats, delta_n: float) -> float:
    """Signal amplitude over the root fringe-averaged MSE."""
    if stats.fringe_averaged_mse <= 0.0:
        raise ValueError("fringe-averaged MSE must be positive (degenerate noiseless ensemble)")
    return delta_n / np.sqrt(stats.fringe_averaged_mse)


def snr_stderr(stats: EnsembleStats, delta_n: float) -> float:
    """Delta-method standard error of :func:`snr` from the MSE sampling noise."""
    fringe_se = np.sqrt(np.sum(stats.mse_stderr ** 2)) / len(stats.mse)
    value = snr(stats, delta_n)
    return 0.5 * value * fringe_se / stats.fringe_averaged_mse


# ---------------------------------------------------------------------------
# benchmark configurations and the beta sweep
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BenchmarkSetup:
    """One simulate/denoise/evaluate configuration."""

    params: SensorParams
    plan: AcquisitionPlan
    omega_true: float
    n_sd: int
    basis: str = "bior6.8"
    levels: int | None = None
    grid: FrequencyGrid | None = None
    boundary: str = "periodic"
    photon_stats: str = "bernoulli-poisson"
    shared_estimate: bool = False
    squared_contrast: bool = False

    def resolved_levels(self) -> int:
        if self.levels is not None:
            return self.levels
        return default_levels(self.plan.n_samples)

    def resolved_grid(self) -> FrequencyGrid:
        return self.grid if self.grid is not None else FrequencyGrid.around(self.params.omega_calib)

    def with_plan(self, **kwargs) -> "BenchmarkSetup":
        return replace(self, plan=self.plan.with_(**kwargs))


class EnsembleRun:
    """One simulated ensemble with decompositions cached for beta scans.

    Margins are linear in the width factor, so the template and shot-noise
    decompositions are computed once per experiment and recombined for
    every beta; this matches the per-trace pipeline to rounding.
    """

    def __init__(self, setup: BenchmarkSetup):
        self.setup = setup
        plan, params = setup.plan, setup.params
        self.times = plan.times
        self.levels = setup.resolved_levels()
        self.values = simulate_ensemble(params, plan, setup.omega_true, setup.photon_stats)
        grid = setup.resolved_grid()
        if setup.shared_estimate:
            shared = estimate_frequencies(self.values.mean(axis=0, keepdims=True),
                                          self.times, params, grid)
            self.omega_temps = np.full(plan.n_experiments, shared[0])
        else:
            self.omega_temps = estimate_frequencies(self.values, self.times, params, grid)
        self._raw_details, self._raw_approx = uwt_analyze(
            self.values, setup.basis, self.levels, setup.boundary)
        kernels = template(self.times[None, :], self.omega_temps[:, None], params)
        noise = shot_noise(self.times[None, :], self.omega_temps[:, None], params,
                           squared_contrast=setup.squared_contrast)
        self._kernel_details, _ = uwt_analyze(kernels, setup.basis, self.levels, setup.boundary)
        noise_details, _ = uwt_analyze(noise, setup.basis, self.levels, setup.boundary)
        self._noise_details = np.abs(noise_details)

    def denoised(self, beta: float) -> np.ndarray:
        half = margin_width(beta, self.setup.plan) * self._noise_details
        clamped = np.clip(self._raw_details,
                          self._kernel_details - half,
                          self._kernel_details + half)
        return uwt_synthesize(clamped, self._raw_approx, self.setup.basis, self.setup.boundary)


@dataclass
class BetaSweepResult:
    """Filter-order scan of one configuration."""

    betas: np.ndarray
    stats: list[EnsembleStats]
    raw_stats: EnsembleStats
    beta_opt: float
    opt_stats: EnsembleStats
    beta_opt_on_edge: bool
    omega_temps: np.ndarray
    points: DetectionPointSet


def sweep_beta(setup: BenchmarkSetup, beta_grid) -> BetaSweepResult:
    """Simulate once, denoise at every filter order, collect statistics.

    The same ensemble (common random numbers) is reused across the whole
    grid, so curves are directly comparable; the argmin of the
    fringe-averaged MSE is reported and flagged if it sits on a grid edge.
    """
    betas = np.asarray(beta_grid, dtype=float)
    if betas.size < 3:
        raise ValueError(f"beta grid needs at least 3 values, got {betas.size}")
    if np.any(np.diff(betas) <= 0):
        raise ValueError("beta grid must be strictly increasing")
    points = find_detection_points(setup.omega_true, setup.plan, setup.n_sd, setup.params)
    run = EnsembleRun(setup)
    raw_stats = ensemble_stats(run.values, points)
    stats = [ensemble_stats(run.denoised(beta), points, beta=float(beta)) for beta in betas]
    k_opt = int(np.argmin([s.fringe_averaged_mse for s in stats]))
    return BetaSweepResult(
        betas=betas,
        stats=stats,
        raw_stats=raw_stats,
        beta_opt=float(betas[k_opt]),
        opt_stats=stats[k_opt],
        beta_opt_on_edge=k_opt in (0, betas.size - 1),
        omega_temps=run.omega_temps,
        points=points,
    )


def default_beta_grid(start: float = -4.0, stop: float = 2.0, step: float = 0.1) -> np.ndarray:
    n = int(round((stop - start) / step))
    return start + step * np.arange(n + 1)


def calibrate_beta(setup: BenchmarkSetup, beta_grid) -> float:
    """Optimum filter order measured on calibration-field-only runs.

    Simulates at the calibration frequency (truths from the calibration
    template) with the same window, repetition count and sampling rate,
    and returns the MSE-minimizing order.
    """
    calib = replace(setup, omega_true=setup.params.omega_calib)
    return sweep_beta(calib, beta_grid).beta_opt


# ---------------------------------------------------------------------------
# scaling fits and derived analyses
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalingFit:
    """Power law y = c * x**alpha fitted by least squares in log-log space."""

    prefactor: float
    exponent: float
    r_squared: float
    points: np.ndarray

    def predict(self, x) -> np.ndarray:
        return self.prefactor * np.asarray(x, dtype=float) ** self.exponent


def fit_scaling(points) -> ScalingFit:
    """Fit (x, y) pairs to c * x**alpha; requires >= 3 strictly positive pairs."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"expected an (n, 2) array of (x, y) pairs, got shape {pts.shape}")
    if pts.shape[0] < 3:
        raise ValueError(f"need at least 3 points for a scaling fit, got {pts.shape[0]}")
    if np.any(pts <= 0.0):
        raise ValueError("scaling fits need strictly positive coordinates")
    lx = np.log(pts[:, 0])
    ly = np.log(pts[:, 1])
    lx_c = lx - lx.mean()
    slope = float(np.sum(lx_c * ly) / np.sum(lx_c ** 2))
    intercept = float(ly.mean() - slope * lx.mean())
    residuals = ly - (intercept + slope * lx)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(residuals ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return ScalingFit(prefactor=float(np.exp(intercept)), exponent=slope,
                      r_squared=r2, points=pts)


@dataclass(frozen=True)
class SnrPoint:
    """Raw and TMT-enhanced SNR for one repetition count."""

    repetitions: int
    integration_time: float
    raw_snr: float
    tmt_snr: float
    beta_opt: float
    beta_opt_on_edge: bool
    raw_fringe_mse: float
    tmt_fringe_mse: float
    delta_n: float


def benchmark_snr(setup: BenchmarkSetup, m_values, beta_grid) -> list[SnrPoint]:
    """Raw and optimum-order TMT SNR for a family of repetition counts.

    Each repetition count gets an independent random stream (sub-seeded
    from the plan seed), while every beta within one count shares its
    ensemble.
    """
    points = find_detection_points(setup.omega_true, setup.plan, setup.n_sd, setup.params)
    delta_n = signal_amplitude(points, setup.params, setup.omega_true, setup.params.omega_calib)
    out = []
    for k, m in enumerate(m_values):
        sub = setup.with_plan(repetitions=int(m), seed=child_seed(setup.plan.seed, k))
        result = sweep_beta(sub, beta_grid)
        out.append(SnrPoint(
            repetitions=int(m),
            integration_time=float(m * sub.plan.t_stop),
            raw_snr=snr(result.raw_stats, delta_n),
            tmt_snr=snr(result.opt_stats, delta_n),
            beta_opt=result.beta_opt,
            beta_opt_on_edge=result.beta_opt_on_edge,
            raw_fringe_mse=result.raw_stats.fringe_averaged_mse,
            tmt_fringe_mse=result.opt_stats.fringe_averaged_mse,
            delta_n=delta_n,
        ))
    return out


@dataclass(frozen=True)
class GainPoint:
    """Calibration-transferred TMT gain for one PL duration."""

    n_sd: int
    t_stop: float
    beta_calib: float
    raw_fringe_mse: float
    tmt_fringe_mse: float
    gain: float


def gain_profile(setup: BenchmarkSetup, n_sd_values, beta_grid) -> list[GainPoint]:
    """TMT gain sqrt(MSE_raw / MSE_TMT) across PL durations.

    For each requested detection-point count the window is resized to hold
    exactly that many negative-slope crossings; the filter order comes
    from a calibration sweep with the same duration, repetitions and
    sampling rate, then is applied to an independent sensing ensemble.
    """
    out = []
    for k, n_sd in enumerate(n_sd_values):
        plan_k = plan_for_detection_count(setup.plan, setup.omega_true, int(n_sd))
        calib_setup = replace(setup, n_sd=int(n_sd),
                              plan=plan_k.with_(seed=child_seed(setup.plan.seed, k, 0)))
        beta_calib = calibrate_beta(calib_setup, beta_grid)
        sense_setup = replace(setup, n_sd=int(n_sd),
                              plan=plan_k.with_(seed=child_seed(setup.plan.seed, k, 1)))
        points = find_detection_points(sense_setup.omega_true, sense_setup.plan,
                                       int(n_sd), sense_setup.params)
        run = EnsembleRun(sense_setup)
        raw_stats = ensemble_stats(run.values, points)
        tmt_stats = ensemble_stats(run.denoised(beta_calib), points, beta=beta_calib)
        out.append(GainPoint(
            n_sd=int(n_sd),
            t_stop=plan_k.t_stop,
            beta_calib=beta_calib,
            raw_fringe_mse=raw_stats.fringe_averaged_mse,
            tmt_fringe_mse=tmt_stats.fringe_averaged_mse,
            gain=float(np.sqrt(raw_stats.fringe_averaged_mse / tmt_stats.fringe_averaged_mse)),
        ))
    return out

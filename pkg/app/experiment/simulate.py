"""
Time-domain Brownian motion of the cantilever and the thermal calibration pipeline:
simulate x(t), estimate its autocorrelation, fit the damped-cosine model and
recover the force noise from the fit.

The oscillator m x'' + g x' + k x = F(t), <F(t)F(t')> = S delta(t - t') is stepped
with its exact one-step transition (Van Loan), in units where time is 1/omega0
and x is the stationary rms, then rescaled.
"""

import logging
import math
from dataclasses import asdict, dataclass, replace
from typing import Dict, Iterator, Optional, Tuple

import numpy as np
from scipy import fft, linalg, optimize, signal

from app import config
from app.errors import DomainError, FitError
from app.experiment.predict import CantileverParams, quantum_regime_ratio
from app.numerics.specfun import K_B
from app.numerics.tables import PathLike, read_columns, write_columns

logger = logging.getLogger(__name__)

# dt must resolve a period at least this finely
MAX_PHASE_STEP = 0.05 * 2.0 * math.pi
TRANSIENT_RINGDOWNS = 10
FIT_QUALITY_RINGDOWNS = 100
FIT_WINDOW_RINGDOWNS = 5
MIN_PERIODS = 20
CHUNK_SAMPLES = 1 << 20


@dataclass(frozen=True)
class SimulationConfig:
    """Step, duration, seed and cantilever, plus optional injected noise and damping"""
    dt: float
    duration: float
    params: CantileverParams
    seed: int = config.DEFAULT_SEED
    extra_force_psd: float = 0.0
    extra_damping: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise DomainError(f"dt must be > 0, got {self.dt}")
        if self.dt * self.params.omega0 >= MAX_PHASE_STEP:
            raise DomainError(
                f"dt = {self.dt} is too coarse: need dt < 0.05 * 2 pi / omega0 = {MAX_PHASE_STEP / self.params.omega0:.3e}"
            )
        if not (math.isfinite(self.duration) and self.duration > self.dt):
            raise DomainError(f"duration must exceed dt, got {self.duration}")
        if not (math.isfinite(self.extra_force_psd) and self.extra_force_psd >= 0):
            raise DomainError(f"extra_force_psd must be >= 0, got {self.extra_force_psd}")
        if not math.isfinite(self.extra_damping) or self.total_damping <= 0:
            raise DomainError(f"total damping must be > 0, got {self.total_damping}")

    @property
    def total_damping(self) -> float:
        return self.params.damping + self.extra_damping

    @property
    def total_force_psd(self) -> float:
        return 2.0 * K_B * self.params.temperature * self.params.damping + self.extra_force_psd

    @property
    def effective_quality(self) -> float:
        return self.params.mass * self.params.omega0 / self.total_damping

    @property
    def ringdown_time(self) -> float:
        """2 Q_eff / omega0"""
        return 2.0 * self.effective_quality / self.params.omega0

    @property
    def stationary_x2(self) -> float:
        """S / (2 g k)"""
        return self.total_force_psd / (2.0 * self.total_damping * self.params.spring)

    @property
    def ringdowns(self) -> float:
        return self.duration / self.ringdown_time


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Uniformly sampled positions (m)"""
    dt: float
    samples: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=float))
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise DomainError(f"dt must be > 0, got {self.dt}")
        if self.samples.ndim != 1 or self.samples.size < 2:
            raise DomainError("a time series needs at least two samples")
        if not np.all(np.isfinite(self.samples)):
            raise DomainError("time series contains non-finite samples")

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.samples.size) * self.dt

    @property
    def duration(self) -> float:
        return self.samples.size * self.dt

    def __len__(self) -> int:
        return self.samples.size


@dataclass(frozen=True, eq=False)
class Autocorrelation:
    """Biased autocorrelation estimate at lags k*dt"""
    lags: np.ndarray
    values: np.ndarray

    def __iter__(self) -> Iterator[Tuple[float, float]]:
        return iter(zip(self.lags.tolist(), self.values.tolist()))

    def __len__(self) -> int:
        return self.lags.size


@dataclass(frozen=True)
class FitResult:
    """Fitted damped-cosine parameters; sf_extracted is filled once the mass is known"""
    x2_mean: float
    omega0_fit: float
    q_fit: float
    fit_residual: float
    sf_extracted: Optional[float] = None

    def with_mass(self, mass: float) -> "FitResult":
        return replace(self, sf_extracted=extract_force_psd(self, mass))

    def to_dict(self) -> Dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------

def _discrete_model(step: float, inverse_q: float) -> Tuple[np.ndarray, np.ndarray]:
    """Transition matrix and process-noise covariance for one scaled step"""
    drift = np.array([[0.0, 1.0], [-1.0, -inverse_q]])
    diffusion = np.array([[0.0, 0.0], [0.0, 2.0 * inverse_q]])
    block = np.zeros((4, 4))
    block[:2, :2] = -drift
    block[:2, 2:] = diffusion
    block[2:, 2:] = drift.T
    exponential = linalg.expm(block * step)
    transition = exponential[2:, 2:].T
    covariance = transition @ exponential[:2, 2:]
    return transition, 0.5 * (covariance + covariance.T)


def simulate_brownian(cfg: SimulationConfig) -> TimeSeries:
    """
    Stationary Brownian motion x(t) for the configured cantilever, started at rest
    with the first ten ring-down times discarded. Deterministic for a fixed seed.
    """
    params = cfg.params
    if cfg.ringdowns < FIT_QUALITY_RINGDOWNS:
        logger.warning(
            f"[Simulate] duration covers {cfg.ringdowns:.1f} ring-down times; fits want >= {FIT_QUALITY_RINGDOWNS}"
        )
    ratio = quantum_regime_ratio(params)
    if ratio > 0.1:
        logger.warning(f"[Simulate] hbar omega0 / k_B T = {ratio:.3g}; the classical bath assumption is strained")

    n_keep = int(round(cfg.duration / cfg.dt))
    n_burn = int(math.ceil(TRANSIENT_RINGDOWNS * cfg.ringdown_time / cfg.dt))
    if cfg.total_force_psd == 0:
        logger.warning("[Simulate] no noise source configured; returning the rest state")
        return TimeSeries(cfg.dt, np.zeros(n_keep))

    transition, covariance = _discrete_model(params.omega0 * cfg.dt, 1.0 / cfg.effective_quality)
    factor = np.linalg.cholesky(covariance)
    denominator = np.array([1.0, -np.trace(transition), np.linalg.det(transition)])
    from_position = np.array([0.0, 1.0, -transition[1, 1]])
    from_velocity = np.array([0.0, 0.0, transition[0, 1]])
    state_position = np.zeros(2)
    state_velocity = np.zeros(2)

    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(cfg.seed)))
    total = n_burn + n_keep
    out = np.empty(total)
    logger.info(f"[Simulate] {total} steps ({n_burn} transient), Q_eff = {cfg.effective_quality:.4g}")
    for start in range(0, total, CHUNK_SAMPLES):
        count = min(CHUNK_SAMPLES, total - start)
        kicks = rng.standard_normal((count, 2)) @ factor.T
        x_pos, state_position = signal.lfilter(from_position, denominator, kicks[:, 0], zi=state_position)
        x_vel, state_velocity = signal.lfilter(from_velocity, denominator, kicks[:, 1], zi=state_velocity)
        out[start:start + count] = x_pos + x_vel

    scale = math.sqrt(cfg.stationary_x2)
    return TimeSeries(cfg.dt, scale * out[n_burn:])


def transfer_psd(cfg: SimulationConfig, omega):
    """Two-sided position spectrum |chi(omega)|^2 S for the configured drive"""
    w = np.asarray(omega, dtype=float)
    p = cfg.params
    response = (p.spring - p.mass * w * w) ** 2 + (cfg.total_damping * w) ** 2
    return cfg.total_force_psd / response


def peak_psd_ratio(ts: TimeSeries, cfg: SimulationConfig) -> float:
    """
    Welch estimate of the position spectrum averaged across the resonance
    (omega0 +/- linewidth/2), divided by the same average of |chi|^2 S.
    """
    fs = 1.0 / ts.dt
    f0 = cfg.params.omega0 / (2.0 * math.pi)
    linewidth = f0 / cfg.effective_quality
    nperseg = int(min(ts.samples.size // 8, fft.next_fast_len(int(math.ceil(10.0 * fs / linewidth)))))
    freqs, one_sided = signal.welch(ts.samples, fs=fs, nperseg=nperseg, detrend=False)
    band = np.abs(freqs - f0) <= 0.5 * linewidth
    if np.count_nonzero(band) < 3:
        raise DomainError("series too short to resolve the resonance linewidth")
    measured = float(np.mean(one_sided[band]))
    predicted = float(np.mean(2.0 * transfer_psd(cfg, 2.0 * math.pi * freqs[band])))
    return measured / predicted


# ---------------------------------------------------------------------------
# Autocorrelation and fit
# ---------------------------------------------------------------------------

def estimate_autocorrelation(ts: TimeSeries, max_lag: float, block: Optional[int] = None) -> Autocorrelation:
    """
    Biased estimator C(k dt) = (1/N) sum_n d_n d_{n+k} of the mean-removed series,
    accumulated block by block with FFTs so memory stays O(block).
    """
    if not (math.isfinite(max_lag) and max_lag >= 0):
        raise DomainError(f"max_lag must be >= 0, got {max_lag}")
    if max_lag > ts.duration / 10.0:
        raise DomainError(f"max_lag = {max_lag} exceeds a tenth of the duration {ts.duration}")
    n = ts.samples.size
    lags = int(math.floor(max_lag / ts.dt + 1e-9))
    d = ts.samples - np.mean(ts.samples)
    block = block or max(4 * lags, 1 << 16)
    nfft = fft.next_fast_len(block + lags + block)
    acc = np.zeros(lags + 1)
    for start in range(0, n, block):
        seg = d[start:start + block]
        ext = d[start:start + seg.size + lags]
        spectrum = np.conj(fft.rfft(seg, nfft)) * fft.rfft(ext, nfft)
        acc += fft.irfft(spectrum, nfft)[: lags + 1]
    values = acc / n
    values[0] = float(np.dot(d, d)) / n
    return Autocorrelation(lags=np.arange(lags + 1) * ts.dt, values=values)


def damped_cosine(tau, amplitude, omega0, quality):
    """<x^2> exp(-omega0 tau / 2Q) cos(omega0 tau)"""
    return amplitude * np.exp(-omega0 * tau / (2.0 * quality)) * np.cos(omega0 * tau)


def _zero_crossings(lags: np.ndarray, values: np.ndarray) -> np.ndarray:
    sign_change = np.nonzero(np.signbit(values[:-1]) != np.signbit(values[1:]))[0]
    left, right = values[sign_change], values[sign_change + 1]
    return lags[sign_change] + (lags[sign_change + 1] - lags[sign_change]) * left / (left - right)


def _initial_guess(acf: Autocorrelation) -> Tuple[float, float]:
    """omega0 from zero crossings, Q from a log-linear fit of the Hilbert envelope"""
    c0 = acf.values[0]
    envelope = np.abs(signal.hilbert(acf.values))
    strong = envelope > 0.1 * c0
    # first index where the envelope falls below the threshold ends the usable region
    cutoff = int(np.argmin(strong)) if not np.all(strong) else strong.size
    cutoff = max(cutoff, 8)
    crossings = _zero_crossings(acf.lags[:cutoff], acf.values[:cutoff])
    if crossings.size < 2:
        crossings = _zero_crossings(acf.lags, acf.values)
    if crossings.size < 2:
        raise FitError("autocorrelation has fewer than two zero crossings")
    omega0 = math.pi * (crossings.size - 1) / (crossings[-1] - crossings[0])

    window = slice(0, cutoff)
    slope = np.polyfit(acf.lags[window], np.log(envelope[window]), 1)[0]
    if slope < 0:
        quality = -omega0 / (2.0 * slope)
    else:
        quality = 10.0 * omega0 * acf.lags[-1]
    return omega0, quality


def fit_autocorrelation(acf: Autocorrelation, mass: Optional[float] = None) -> FitResult:
    """
    Least-squares fit of <x^2> exp(-omega0 tau / 2Q) cos(omega0 tau) over lags up
    to five ring-down times, uniformly weighted.

    Raises:
        FitError: fewer than 20 periods covered, no convergence, or Q <= 0
    """
    c0 = float(acf.values[0])
    if not c0 > 0:
        raise FitError(f"zero-lag value must be positive, got {c0}")
    omega0, quality = _initial_guess(acf)
    periods = acf.lags[-1] * omega0 / (2.0 * math.pi)
    if periods < MIN_PERIODS:
        raise FitError(f"autocorrelation covers {periods:.1f} periods; at least {MIN_PERIODS} are needed")

    horizon = min(acf.lags[-1], FIT_WINDOW_RINGDOWNS * 2.0 * quality / omega0)
    use = acf.lags <= horizon
    tau = acf.lags[use]
    data = acf.values[use] / c0
    try:
        best, _ = optimize.curve_fit(
            damped_cosine,
            tau,
            data,
            p0=(1.0, omega0, quality),
            ftol=1e-14,
            xtol=1e-14,
            gtol=1e-14,
            maxfev=20000,
        )
    except (RuntimeError, ValueError) as e:
        raise FitError(f"autocorrelation fit did not converge: {e}")
    amplitude, omega_fit, q_fit = (float(v) for v in best)
    if not (q_fit > 0 and omega_fit > 0 and amplitude > 0):
        raise FitError(f"unphysical fit: amplitude={amplitude}, omega0={omega_fit}, Q={q_fit}")
    residual = float(np.sqrt(np.mean((damped_cosine(tau, *best) - data) ** 2)))
    logger.info(f"[Fit] omega0={omega_fit:.6e} Q={q_fit:.6g} <x2>={amplitude * c0:.6e} residual={residual:.2e}")
    result = FitResult(x2_mean=amplitude * c0, omega0_fit=abs(omega_fit), q_fit=q_fit, fit_residual=residual)
    return result.with_mass(mass) if mass is not None else result


def extract_force_psd(fit: FitResult, mass: float) -> float:
    """S_f = 2 k^2 <x^2> / (Q omega0) with k = m omega0_fit^2"""
    if not (math.isfinite(mass) and mass > 0):
        raise DomainError(f"mass must be > 0, got {mass}")
    spring = mass * fit.omega0_fit ** 2
    return 2.0 * spring ** 2 * fit.x2_mean / (fit.q_fit * fit.omega0_fit)


def equipartition_ratio(fit: FitResult, mass: float, temperature: float) -> float:
    """k <x^2> / k_B T"""
    if not temperature > 0:
        raise DomainError(f"temperature must be > 0, got {temperature}")
    return mass * fit.omega0_fit ** 2 * fit.x2_mean / (K_B * temperature)


# ---------------------------------------------------------------------------
# Files
# ---------------------------------------------------------------------------

def write_timeseries_csv(ts: TimeSeries, path: PathLike) -> None:
    write_columns(path, ("t", "x"), ts.times, ts.samples)


def read_timeseries_csv(path: PathLike) -> TimeSeries:
    """Read a `t,x` table and check the spacing is uniform"""
    t, x = read_columns(path, ("t", "x"))
    if t.size < 2:
        raise DomainError("time series file needs at least two rows")
    steps = np.diff(t)
    dt = float((t[-1] - t[0]) / (t.size - 1))
    if dt <= 0 or np.max(np.abs(steps - dt)) > 1e-6 * dt:
        raise DomainError("time column is not uniformly spaced")
    return TimeSeries(dt, x)

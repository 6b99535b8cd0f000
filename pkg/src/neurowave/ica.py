"""Independent component analysis for artifact removal.

FastICA (log-cosh contrast, symmetric decorrelation) on PCA-whitened data
reduced to k dimensions, a rule-based component labeler standing in for a
pretrained classifier, and reconstruction with selected components zeroed.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import signal as sps

from .errors import DataError, IcaConvergenceError
from .recording import Recording

COMPONENT_CATEGORIES = (
    "muscle",
    "heartbeat",
    "line_noise",
    "channel_noise",
    "eye_blink",
    "brain",
    "other",
)

# Artifact categories; "other" is deliberately absent so a cautious default
# removal pass never touches unclassifiable components.
DEFAULT_REMOVE = frozenset({"muscle", "heartbeat", "line_noise", "channel_noise", "eye_blink"})


@dataclass(frozen=True)
class IcaModel:
    """Fitted decomposition: sources = unmixing @ (data - mean).

    ``mixing @ unmixing`` is the projector onto the retained k-dimensional
    PCA subspace. Scores are None until label_components fills them.
    """

    unmixing: np.ndarray  # (k, channels)
    mixing: np.ndarray  # (channels, k)
    mean_uv: np.ndarray  # (channels,)
    sample_rate_hz: float
    channel_names: tuple[str, ...]
    n_iterations: int
    component_scores: tuple[dict[str, float], ...] | None = None
    dominant_freq_hz: tuple[float, ...] | None = None

    @property
    def k(self) -> int:
        return self.unmixing.shape[0]

    @property
    def n_channels(self) -> int:
        return self.unmixing.shape[1]

    def sources(self, rec: Recording) -> np.ndarray:
        """Component time courses, shape (k, n_samples)."""
        return self.unmixing @ (rec.data - self.mean_uv[:, np.newaxis])

    def argmax_categories(self) -> tuple[str, ...]:
        if self.component_scores is None:
            raise DataError("component scores not filled; run label_components first")
        return tuple(max(s, key=s.get) for s in self.component_scores)


@dataclass(frozen=True)
class LabelerConfig:
    """Thresholds for the rule-based component labeler."""

    mains_hz: float = 50.0
    line_band_hz: float = 1.0
    line_power_fraction: float = 0.6
    muscle_min_hz: float = 30.0
    muscle_power_fraction: float = 0.5
    heartbeat_lag_range_s: tuple[float, float] = (0.6, 1.5)
    heartbeat_prominence: float = 0.1
    channel_energy_fraction: float = 0.9
    brain_slope_max: float = -0.3
    eyes_closed: bool = True


def _sym_orthonormalize(w: np.ndarray) -> np.ndarray:
    """W <- (W W^T)^{-1/2} W (symmetric decorrelation)."""
    vals, vecs = np.linalg.eigh(w @ w.T)
    if np.min(vals) <= 0:
        raise DataError("degenerate rotation during ICA orthonormalization")
    return (vecs * (1.0 / np.sqrt(vals))) @ vecs.T @ w


def fit_ica(
    rec: Recording,
    k: int,
    seed: int,
    tolerance: float = 1e-6,
    max_iterations: int = 500,
    fit_max_samples: int | None = None,
) -> IcaModel:
    """Fit FastICA with k components on PCA-whitened data.

    The fixed-point iteration uses the tanh nonlinearity and symmetric
    decorrelation, is deterministic given the seed, and raises
    IcaConvergenceError (carrying the iteration count) if the rotation has
    not stabilized to ``tolerance`` within ``max_iterations``.

    fit_max_samples, when set, estimates whitening and rotation on an
    evenly strided subsample; the returned transform still applies to
    full-rate data.
    """
    n_channels, n_samples = rec.data.shape
    if k < 1 or k > n_channels:
        raise DataError(f"k must be in [1, {n_channels}], got {k}")
    if n_samples <= k:
        raise DataError(f"{n_samples} samples cannot support {k} components")

    mean = rec.data.mean(axis=1)
    centered = rec.data - mean[:, np.newaxis]
    fit_data = centered
    if fit_max_samples is not None and n_samples > fit_max_samples:
        stride = int(np.ceil(n_samples / fit_max_samples))
        fit_data = centered[:, ::stride]
    n_fit = fit_data.shape[1]

    cov = (fit_data @ fit_data.T) / (n_fit - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order]
    eigvecs = eigvecs[:, order]
    if eigvals[k - 1] <= 1e-12 * max(eigvals[0], 1e-30):
        raise DataError(f"rank-deficient data: eigenvalue {k - 1} is {eigvals[k - 1]:.3e}")
    # Fix eigenvector sign so the decomposition does not depend on LAPACK details.
    flip = np.sign(eigvecs[np.argmax(np.abs(eigvecs), axis=0), np.arange(n_channels)])
    eigvecs = eigvecs * flip

    basis = eigvecs[:, :k]
    scales = np.sqrt(eigvals[:k])
    whitener = (basis / scales).T  # (k, channels)
    z = whitener @ fit_data

    rng = np.random.default_rng(seed)
    w = _sym_orthonormalize(rng.standard_normal((k, k)))

    change = np.inf
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        u = w @ z
        g = np.tanh(u)
        g_prime_mean = np.mean(1.0 - g**2, axis=1)
        w_new = (g @ z.T) / n_fit - g_prime_mean[:, np.newaxis] * w
        w_new = _sym_orthonormalize(w_new)
        change = float(np.max(np.abs(np.abs(np.sum(w_new * w, axis=1)) - 1.0)))
        w = w_new
        if change < tolerance:
            break
    else:
        raise IcaConvergenceError(iterations=max_iterations, tolerance=tolerance, last_change=change)

    unmixing = w @ whitener
    mixing = (basis * scales) @ w.T
    return IcaModel(
        unmixing=unmixing,
        mixing=mixing,
        mean_uv=mean,
        sample_rate_hz=rec.sample_rate_hz,
        channel_names=rec.channel_names,
        n_iterations=iterations,
    )


def _decimated(x: np.ndarray, rate_hz: float, target_hz: float = 250.0) -> tuple[np.ndarray, float]:
    """Box-filtered stride decimation, good enough for autocorrelation scans."""
    stride = max(int(rate_hz // target_hz), 1)
    if stride == 1:
        return x, rate_hz
    n = (x.shape[-1] // stride) * stride
    boxed = x[..., :n].reshape(*x.shape[:-1], n // stride, stride).mean(axis=-1)
    return boxed, rate_hz / stride


def _autocorr_peak(component: np.ndarray, rate_hz: float, lag_range_s: tuple[float, float]):
    """(peak value, prominence) of the normalized autocorrelation in the lag window."""
    x, rate = _decimated(component - component.mean(), rate_hz)
    n = x.shape[0]
    lo = int(lag_range_s[0] * rate)
    hi = int(lag_range_s[1] * rate)
    if hi <= lo + 2 or hi >= n:
        return 0.0, 0.0
    nfft = int(2 ** np.ceil(np.log2(2 * n)))
    spectrum = np.fft.rfft(x, nfft)
    acf = np.fft.irfft(spectrum * np.conj(spectrum), nfft)[: hi + 2]
    if acf[0] <= 0:
        return 0.0, 0.0
    acf = acf / acf[0]
    window = acf[lo : hi + 1]
    peaks, props = sps.find_peaks(window, prominence=0.0)
    if len(peaks) == 0:
        return 0.0, 0.0
    best = np.argmax(window[peaks])
    return float(window[peaks[best]]), float(props["prominences"][best])


def _spectral_slope(freqs: np.ndarray, psd: np.ndarray, mains_hz: float) -> float:
    """Log-log slope of the PSD over 1-40 Hz, skipping the mains neighborhood."""
    mask = (freqs >= 1.0) & (freqs <= min(40.0, 0.8 * freqs[-1]))
    mask &= np.abs(freqs - mains_hz) > 2.0
    mask &= psd > 0
    if mask.sum() < 4:
        return 0.0
    coeffs = np.polyfit(np.log10(freqs[mask]), np.log10(psd[mask]), 1)
    return float(coeffs[0])


def _score_vector(matched: str, evidence: float, eyes_closed: bool,
                  brain_affinity: float | None = None) -> dict[str, float]:
    """Distribute probability mass so the matched category holds the argmax."""
    base = 0.02
    weights = {cat: base for cat in COMPONENT_CATEGORIES}
    if eyes_closed:
        weights["eye_blink"] = 0.0
    if brain_affinity is None:
        weights[matched] = max(float(evidence), 2.5 * base)
    else:
        weights["brain"] = float(brain_affinity)
        weights["other"] = 1.0 - float(brain_affinity)
    total = sum(weights.values())
    return {cat: w / total for cat, w in weights.items()}


def label_components(model: IcaModel, rec: Recording, config: LabelerConfig | None = None) -> IcaModel:
    """Fill component scores with rule-based heuristics.

    Sequential rules on each component's spectrum, autocorrelation, and
    mixing column: mains-locked power -> line_noise; mostly-high-frequency
    power -> muscle; strong periodicity at heartbeat lags -> heartbeat;
    single-channel mixing energy -> channel_noise; otherwise the 1/f
    spectral slope splits brain vs other. Deterministic and pure; always
    produces scores that sum to 1 per component.
    """
    cfg = config or LabelerConfig()
    src = model.sources(rec)
    nperseg = min(4096, src.shape[1])
    freqs, psd = sps.welch(src, fs=rec.sample_rate_hz, nperseg=nperseg, axis=1)

    scores = []
    dominant = []
    for i in range(model.k):
        power = psd[i]
        total = float(power.sum()) + 1e-30
        dominant.append(float(freqs[int(np.argmax(power))]))

        line_mask = np.abs(freqs - cfg.mains_hz) <= cfg.line_band_hz
        line_frac = float(power[line_mask].sum()) / total
        muscle_frac = float(power[freqs > cfg.muscle_min_hz].sum()) / total
        col = model.mixing[:, i]
        col_energy = float(np.sum(col**2)) + 1e-30
        channel_frac = float(np.max(col**2)) / col_energy

        if line_frac >= cfg.line_power_fraction:
            scores.append(_score_vector("line_noise", line_frac, cfg.eyes_closed))
            continue
        if muscle_frac > cfg.muscle_power_fraction:
            scores.append(_score_vector("muscle", muscle_frac, cfg.eyes_closed))
            continue
        peak, prominence = _autocorr_peak(src[i], rec.sample_rate_hz, cfg.heartbeat_lag_range_s)
        if prominence >= cfg.heartbeat_prominence:
            scores.append(_score_vector("heartbeat", max(peak, 0.0), cfg.eyes_closed))
            continue
        if channel_frac >= cfg.channel_energy_fraction:
            scores.append(_score_vector("channel_noise", channel_frac, cfg.eyes_closed))
            continue
        slope = _spectral_slope(freqs, power, cfg.mains_hz)
        affinity = 1.0 / (1.0 + np.exp(4.0 * (slope - cfg.brain_slope_max)))
        scores.append(_score_vector("brain", affinity, cfg.eyes_closed, brain_affinity=affinity))

    return replace(model, component_scores=tuple(scores), dominant_freq_hz=tuple(dominant))


def remove_and_reconstruct(
    model: IcaModel,
    rec: Recording,
    remove: set[str] | frozenset[str] = DEFAULT_REMOVE,
    threshold: float = 0.5,
    add_back_remainder: bool = True,
) -> Recording:
    """Zero out matching components and map sources back to channel space.

    A component is removed when its argmax category is in ``remove`` and
    that category's score is >= ``threshold``. "other" is never removed,
    whatever the caller passes. With add_back_remainder the variance
    outside the retained k-dimensional subspace is restored, so removing
    nothing reproduces the input exactly.
    """
    if model.component_scores is None:
        raise DataError("component scores not filled; run label_components first")
    effective = set(remove) - {"other"}
    centered = rec.data - model.mean_uv[:, np.newaxis]
    sources = model.unmixing @ centered
    drop = np.zeros(model.k, dtype=bool)
    for i, cat in enumerate(model.argmax_categories()):
        if cat in effective and model.component_scores[i][cat] >= threshold:
            drop[i] = True

    if add_back_remainder:
        # data - mixing @ dropped_sources keeps both retained components
        # and the PCA remainder.
        out = centered - model.mixing[:, drop] @ sources[drop]
    else:
        out = model.mixing[:, ~drop] @ sources[~drop]
    return rec.with_data(out + model.mean_uv[:, np.newaxis])


def component_report(model: IcaModel) -> list[dict]:
    """Per-component rows: index, argmax category, scores, dominant frequency."""
    if model.component_scores is None:
        raise DataError("component scores not filled; run label_components first")
    rows = []
    for i, cat in enumerate(model.argmax_categories()):
        rows.append(
            {
                "index": i,
                "category": cat,
                "scores": dict(model.component_scores[i]),
                "dominant_freq_hz": model.dominant_freq_hz[i],
            }
        )
    return rows

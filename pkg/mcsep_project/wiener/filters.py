"""Time-domain Wiener filters between separated estimates and mixtures.

Filter convention: yhat[n] = sum_k h[k] * z[n - k + future_taps], so tap
`future_taps` multiplies the current sample, lower taps look ahead and
higher taps look back. Filters are fitted over the full support of the
linear convolution with y taken as zero outside [0, N), which makes the
normal equations Toeplitz in the autocorrelation of z.
"""

import logging
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from django.conf import settings
from mcsep_project.exceptions import (
    ConfigurationError,
    DegenerateInputError,
    GeometryError,
    NumericalError,
)
from scipy.signal import correlate, fftconvolve

logger = logging.getLogger(__name__)

METHODS = ("dense", "levinson")


def taps_from_stft_filter(
    n_taps, hop_ms=8.0, win_ms=32.0, sample_rate=8000
) -> int:
    """Samples spanned by a K-tap sub-band filter: K - 1 hops plus a window."""

    if n_taps < 1:
        raise ConfigurationError("a sub-band filter has at least one tap")
    return int(round(((n_taps - 1) * hop_ms + win_ms) / 1000 * sample_rate))


@dataclass(frozen=True)
class WienerConfig:
    taps: int = settings.WIENER["taps"]
    future_taps: int = settings.WIENER["future_taps"]
    ridge: float = settings.WIENER["ridge"]
    method: str = "dense"

    def __post_init__(self):
        if self.taps < 1:
            raise ConfigurationError("taps must be at least 1")
        if not 0 <= self.future_taps < self.taps:
            raise ConfigurationError(
                f"future_taps ({self.future_taps}) must lie in "
                f"[0, {self.taps})"
            )
        if self.ridge < 0:
            raise ConfigurationError("ridge cannot be negative")
        if self.method not in METHODS:
            raise ConfigurationError(f"unknown method {self.method!r}")

    @classmethod
    def from_stft_filter(cls, n_taps, future_taps=None, **kwargs):
        taps = taps_from_stft_filter(n_taps, **kwargs)
        if future_taps is None:
            future_taps = min(settings.WIENER["future_taps"], taps - 1)
        return cls(taps=taps, future_taps=future_taps)


def _at_lags(full, n_ref, lags):
    """Entries of a full-mode correlation at the given lags; zero outside."""

    index = np.asarray(lags) + n_ref - 1
    valid = (index >= 0) & (index < len(full))
    values = np.zeros(len(index))
    values[valid] = full[index[valid]]
    return values


def _check_pair(zhat, y_p):
    zhat = np.asarray(zhat, dtype=np.float64)
    y_p = np.asarray(y_p, dtype=np.float64)
    if zhat.ndim != 1 or zhat.shape != y_p.shape:
        raise GeometryError(
            f"estimate {zhat.shape} and mixture {y_p.shape} must be equal "
            "length 1-D signals"
        )
    if not (np.all(np.isfinite(zhat)) and np.all(np.isfinite(y_p))):
        raise NumericalError("signals contain NaN or Inf")
    return zhat, y_p


def estimate_wiener(zhat, y_p, cfg: WienerConfig = None) -> np.ndarray:
    """Least-squares filter h minimising ||y_p - h * zhat||^2."""

    cfg = cfg or WienerConfig()
    zhat, y_p = _check_pair(zhat, y_p)
    if not np.any(zhat):
        raise DegenerateInputError("cannot fit a filter to a silent estimate")

    n = len(zhat)
    auto = _at_lags(correlate(zhat, zhat), n, np.arange(cfg.taps))
    cross = _at_lags(
        correlate(y_p, zhat), n, np.arange(cfg.taps) - cfg.future_taps
    )
    auto[0] += cfg.ridge

    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
            if cfg.method == "levinson":
                h = scipy.linalg.solve_toeplitz(auto, cross)
            else:
                h = scipy.linalg.solve(
                    scipy.linalg.toeplitz(auto), cross, assume_a="pos"
                )
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as error:
        raise NumericalError(
            f"Wiener normal equations with {cfg.taps} taps are singular; "
            "set ridge > 0"
        ) from error
    if not np.all(np.isfinite(h)):
        raise NumericalError(
            f"Wiener solve with {cfg.taps} taps is not finite; set ridge > 0"
        )
    return h


def apply_wiener(h, zhat, cfg: WienerConfig = None) -> np.ndarray:
    """Filter zhat with h, keeping its length."""

    cfg = cfg or WienerConfig()
    h = np.asarray(h, dtype=np.float64)
    if h.shape != (cfg.taps,):
        raise GeometryError(f"filter has shape {h.shape}, want ({cfg.taps},)")
    zhat = np.asarray(zhat, dtype=np.float64)
    n = zhat.shape[-1]
    full = fftconvolve(zhat, h, axes=-1)
    return full[..., cfg.future_taps : cfg.future_taps + n]


def squared_residual(h, zhat, y_p, cfg: WienerConfig = None) -> float:
    """The fitted objective: residual energy over the full convolution."""

    cfg = cfg or WienerConfig()
    zhat, y_p = _check_pair(zhat, y_p)
    full = np.convolve(zhat, h)
    target = np.zeros_like(full)
    target[cfg.future_taps : cfg.future_taps + len(y_p)] = y_p
    return float(np.sum((target - full) ** 2))


def _check_mixtures(mixtures, zhats):
    mixtures = np.atleast_2d(np.asarray(mixtures, dtype=np.float64))
    zhats = np.atleast_2d(np.asarray(zhats, dtype=np.float64))
    if mixtures.shape[-1] != zhats.shape[-1]:
        raise GeometryError(
            f"mixtures {mixtures.shape} and estimates {zhats.shape} differ "
            "in length"
        )
    return mixtures, zhats


def wiener_images(mixtures, zhats, cfg: WienerConfig = None) -> np.ndarray:
    """Every estimate Wiener-filtered towards every mic, shaped (P, C, N).

    Each (mic, speaker) filter is fitted on its own; silent estimates stay
    silent.
    """

    cfg = cfg or WienerConfig()
    mixtures, zhats = _check_mixtures(mixtures, zhats)
    images = np.zeros((mixtures.shape[0],) + zhats.shape)
    for p, y_p in enumerate(mixtures):
        for c, zhat in enumerate(zhats):
            if np.any(zhat):
                h = estimate_wiener(zhat, y_p, cfg)
                images[p, c] = apply_wiener(h, zhat, cfg)
    return images


def iras_loss_per_mic(
    mixtures, zhats, cfg: WienerConfig = None, alpha=None, images=None
):
    """Per-mic L1 residual of the Wiener-filtered estimate sum, relative to
    the mixture's L1 norm and weighted by alpha.

    `images` takes precomputed wiener_images of the same inputs.
    """

    mixtures, zhats = _check_mixtures(mixtures, zhats)
    n_mics = mixtures.shape[0]
    alpha = np.ones(n_mics) if alpha is None else np.asarray(alpha, float)
    if alpha.shape != (n_mics,):
        raise GeometryError(f"{alpha.size} mic weights for {n_mics} mics")

    norms = np.sum(np.abs(mixtures), axis=-1)
    silent = np.flatnonzero(norms == 0)
    if silent.size:
        raise DegenerateInputError(f"mixture at mic {silent[0] + 1} is silent")
    if images is None:
        images = wiener_images(mixtures, zhats, cfg)

    per_mic = np.zeros(n_mics)
    for p, y_p in enumerate(mixtures):
        estimate = images[p].sum(axis=0)
        per_mic[p] = alpha[p] * np.sum(np.abs(y_p - estimate)) / norms[p]
        logger.debug("iRAS term at mic %d: %.6g", p + 1, per_mic[p])
    return per_mic


def iras_loss(mixtures, zhats, cfg: WienerConfig = None, alpha=None) -> float:
    return float(np.sum(iras_loss_per_mic(mixtures, zhats, cfg, alpha)))

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from mcsep_project.exceptions import DegenerateInputError, GeometryError
from signal_core.stft import StftConfig, stft


@dataclass(frozen=True)
class UnknownCount:
    """Size of the separation problem with and without the relative-RIR
    constraint."""

    unconstrained: int
    constrained: int
    equations: int

    @property
    def overdetermined(self) -> bool:
        return self.equations > self.constrained


def count_unknowns(n_frames, n_freqs, n_speakers, n_mics, relative_taps):
    """Count unknowns and equations of the multi-mic model.

    Without constraints every image at every mic is free (T*F*P*C). Tying
    mic p's image to mic 1's through an E-tap relative filter leaves the
    mic-1 images plus (P-1)*E filter taps per speaker and frequency.
    """

    t, f, c, p = n_frames, n_freqs, n_speakers, n_mics
    return UnknownCount(
        unconstrained=t * f * p * c,
        constrained=t * f * c + f * (p - 1) * relative_taps * c,
        equations=t * f * p,
    )


def oracle_relative_rir(
    image_ref,
    image_p,
    past_taps,
    future_taps,
    cfg: StftConfig = None,
    weights=None,
):
    """Least-squares STFT-domain filter mapping one mic's image to another's.

    Solved per frequency with an explicit (T, K) design matrix through
    scipy.linalg.lstsq; rank-deficient frequencies get the minimum-norm
    filter. Returns (F, K) taps where tap k multiplies frame t - (k - J),
    applied as conj(g) . stacked frames. `weights` (T, F) divides the
    squared residual of each T-F unit.
    """

    cfg = cfg or StftConfig()
    image_ref = np.asarray(image_ref, dtype=np.float64)
    image_p = np.asarray(image_p, dtype=np.float64)
    if image_ref.shape != image_p.shape:
        raise GeometryError("images must have the same length")
    if not np.any(image_ref) or not np.any(image_p):
        raise DegenerateInputError("oracle filters need nonzero images")

    source = stft(image_ref, cfg).data
    target = stft(image_p, cfg).data
    n_frames, n_freqs = source.shape
    lags = np.arange(-future_taps, past_taps + 1)

    design = np.zeros((n_freqs, n_frames, len(lags)), dtype=complex)
    for k, lag in enumerate(lags):
        if lag >= 0:
            design[:, lag:, k] = source[: n_frames - lag].T
        else:
            design[:, :lag, k] = source[-lag:].T

    scale = np.ones((n_frames, n_freqs))
    if weights is not None:
        scale = 1.0 / np.sqrt(np.asarray(weights))

    filters = np.zeros((n_freqs, len(lags)), dtype=complex)
    for f in range(n_freqs):
        rows = scale[:, f, None] * np.conj(design[f])
        rhs = scale[:, f] * np.conj(target[:, f])
        filters[f] = scipy.linalg.lstsq(rows, rhs)[0]
    return filters

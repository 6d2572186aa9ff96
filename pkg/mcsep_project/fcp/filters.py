import logging
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

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FcpConfig:
    """Taps and regularisation of a sub-band relative filter.

    A filter has K = past_taps + 1 + future_taps taps; tap k multiplies
    frame t - (k - future_taps).
    """

    past_taps: int = settings.FCP["past_taps"]
    future_taps: int = settings.FCP["future_taps"]
    xi: float = settings.FCP["xi"]
    ridge: float = settings.FCP["ridge"]

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.past_taps < 0 or self.future_taps < 0:
            raise ConfigurationError("tap counts cannot be negative")
        if self.n_taps > settings.FCP_MAX_TAPS:
            raise ConfigurationError(
                f"{self.n_taps} taps exceed the limit of "
                f"{settings.FCP_MAX_TAPS}"
            )
        if self.xi <= 0:
            raise ConfigurationError("xi must be positive")
        if self.ridge < 0:
            raise ConfigurationError("ridge cannot be negative")

    @property
    def n_taps(self) -> int:
        return self.past_taps + 1 + self.future_taps

    @property
    def lags(self) -> np.ndarray:
        return np.arange(-self.future_taps, self.past_taps + 1)

    @property
    def causal(self) -> bool:
        return self.future_taps == 0


def stack_frames(z, cfg: FcpConfig) -> np.ndarray:
    """Stack (..., T, F) frames into (..., T, F, K) windows.

    Frames outside [0, T) are zero.
    """

    z = np.asarray(z)
    n_frames = z.shape[-2]
    stacked = np.zeros(z.shape + (cfg.n_taps,), dtype=complex)
    for k, lag in enumerate(cfg.lags):
        if abs(lag) >= n_frames:
            continue
        if lag >= 0:
            stacked[..., lag:, :, k] = z[..., : n_frames - lag, :]
        else:
            stacked[..., :lag, :, k] = z[..., -lag:, :]
    return stacked


def fcp_weight(mixtures, cfg: FcpConfig = None) -> np.ndarray:
    """Per-mic weights: xi * max_tf(mean_p |Y_p|^2) + |Y_p(t, f)|^2.

    The weight has no speaker dependence, so one array serves every
    speaker.
    """

    cfg = cfg or FcpConfig()
    power = np.abs(np.asarray(mixtures)) ** 2
    if power.ndim != 3:
        raise GeometryError("mixtures must be shaped (P, T, F)")
    peak = np.max(power.mean(axis=0))
    if peak == 0:
        raise DegenerateInputError("all-zero mixtures have no weighting")
    return cfg.xi * peak + power


def solve_hermitian(gram, rhs, loading=None) -> np.ndarray:
    """Solve (gram[f] + loading[f] I) x = rhs[f] for every f.

    All bins are factorised together first. If any of them is not
    positive definite, every bin is solved on its own and the failing
    ones fall back to minimum-norm least squares. An all-zero system
    returns zeros.
    """

    n_freqs, size, _ = gram.shape
    if loading is None:
        loading = np.zeros(n_freqs)
    systems = gram + loading[:, None, None] * np.eye(size)
    active = np.any(systems, axis=(1, 2))
    solution = np.zeros(rhs.shape, dtype=complex)
    try:
        np.linalg.cholesky(systems[active])
    except np.linalg.LinAlgError:
        pass
    else:
        solution[active] = np.linalg.solve(
            systems[active], rhs[active][..., None]
        )[..., 0]
        return solution

    eye = np.eye(size)
    for f in range(n_freqs):
        system = gram[f] + loading[f] * eye
        if not np.any(system):
            continue
        try:
            factor = scipy.linalg.cho_factor(system)
            solution[f] = scipy.linalg.cho_solve(factor, rhs[f])
        except np.linalg.LinAlgError:
            logger.warning(
                "normal equations at bin %d are singular, using lstsq", f
            )
            solution[f] = scipy.linalg.lstsq(system, rhs[f])[0]
    return solution


def _check_finite(*arrays):
    for array in arrays:
        if not np.all(np.isfinite(array)):
            raise NumericalError("inputs contain NaN or Inf")


def estimate_filter(zhat, y_p, weights=None, cfg: FcpConfig = None):
    """Weighted least-squares relative filter from zhat to y_p.

    Per frequency, g = (sum_t z z^H / w)^-1 sum_t z conj(Y) / w with
    ridge * trace / K added to the diagonal. Without weights every T-F
    unit counts equally. Returns (F, K) complex taps.
    """

    cfg = cfg or FcpConfig()
    zhat = np.asarray(zhat)
    y_p = np.asarray(y_p)
    if zhat.shape != y_p.shape or zhat.ndim != 2:
        raise GeometryError(
            f"estimate {zhat.shape} and mixture {y_p.shape} must both be "
            "(T, F)"
        )
    _check_finite(zhat, y_p)

    return _solve_stacked(stack_frames(zhat, cfg), y_p, weights, cfg)


def _solve_stacked(stacked, y_p, weights, cfg):
    inverse = np.ones(y_p.shape)
    if weights is not None:
        inverse = 1.0 / np.asarray(weights)
    # (F, T, K) so the sums over frames run as batched matmuls
    frames = np.moveaxis(stacked, 0, 1)
    weighted = np.swapaxes(frames * inverse.T[..., None], 1, 2)
    gram = weighted @ frames.conj()
    rhs = (weighted @ y_p.T.conj()[..., None])[..., 0]
    loading = cfg.ridge * np.trace(gram, axis1=1, axis2=2).real / cfg.n_taps
    return solve_hermitian(gram, rhs, loading)


def fcp_image(zhat, filters, cfg: FcpConfig = None) -> np.ndarray:
    """Filtered estimate conj(g(f)) . stacked zhat(t, f), shaped like zhat."""

    cfg = cfg or FcpConfig()
    filters = np.asarray(filters)
    zhat = np.asarray(zhat)
    if filters.shape[-1] != cfg.n_taps or filters.shape[-2] != zhat.shape[-1]:
        raise GeometryError(
            f"filters {filters.shape} do not fit estimate {zhat.shape} "
            f"with {cfg.n_taps} taps"
        )
    stacked = stack_frames(zhat, cfg)
    return np.einsum("...tfk,...fk->...tf", stacked, filters.conj())


@dataclass(frozen=True)
class RelativeFilterBank:
    """Relative filters indexed (mic, speaker, frequency, tap)."""

    filters: np.ndarray
    config: FcpConfig

    def __post_init__(self):
        if self.filters.ndim != 4:
            raise GeometryError("filters must be shaped (P, C, F, K)")
        if self.filters.shape[-1] != self.config.n_taps:
            raise GeometryError(
                f"filters have {self.filters.shape[-1]} taps, config "
                f"says {self.config.n_taps}"
            )
        _check_finite(self.filters)

    @classmethod
    def identity(cls, n_mics, n_speakers, n_freqs, cfg: FcpConfig = None):
        cfg = cfg or FcpConfig()
        filters = np.zeros((n_mics, n_speakers, n_freqs, cfg.n_taps), complex)
        filters[..., cfg.future_taps] = 1.0
        return cls(filters=filters, config=cfg)

    @property
    def n_mics(self) -> int:
        return self.filters.shape[0]

    @property
    def n_speakers(self) -> int:
        return self.filters.shape[1]

    @property
    def n_freqs(self) -> int:
        return self.filters.shape[2]

    def with_identity_reference(self):
        """Copy whose mic-1 filters pass the estimates through unchanged."""

        filters = self.filters.copy()
        filters[0] = 0.0
        filters[0, ..., self.config.future_taps] = 1.0
        return RelativeFilterBank(filters=filters, config=self.config)

    def images(self, zhats) -> np.ndarray:
        """Filtered images of (C, T, F) estimates at every mic, shaped
        (P, C, T, F)."""

        zhats = np.asarray(zhats)
        expected = (self.n_speakers, self.n_freqs)
        if (zhats.shape[0], zhats.shape[-1]) != expected:
            raise GeometryError(
                f"estimates {zhats.shape} do not match a bank of "
                f"{self.n_speakers} speakers and {self.n_freqs} bins"
            )
        stacked = stack_frames(zhats, self.config)
        return np.einsum("ctfk,pcfk->pctf", stacked, self.filters.conj())


def estimate_filterbank(zhats, mixtures, cfg: FcpConfig = None, weights=None):
    """Estimate one filter per (mic, speaker) from (C, T, F) estimates to
    (P, T, F) mixtures, each speaker on its own."""

    cfg = cfg or FcpConfig()
    zhats = np.asarray(zhats)
    mixtures = np.asarray(mixtures)
    if zhats.ndim != 3 or mixtures.ndim != 3:
        raise GeometryError("estimates and mixtures must be 3-dimensional")
    if zhats.shape[1:] != mixtures.shape[1:]:
        raise GeometryError(
            f"estimates {zhats.shape} and mixtures {mixtures.shape} differ "
            "in (T, F)"
        )

    n_mics, n_speakers = mixtures.shape[0], zhats.shape[0]
    filters = np.zeros(
        (n_mics, n_speakers, mixtures.shape[-1], cfg.n_taps), dtype=complex
    )
    _check_finite(zhats, mixtures)
    for c in range(n_speakers):
        stacked = stack_frames(zhats[c], cfg)
        for p in range(n_mics):
            weight = None if weights is None else weights[p]
            filters[p, c] = _solve_stacked(stacked, mixtures[p], weight, cfg)
    return RelativeFilterBank(filters=filters, config=cfg)

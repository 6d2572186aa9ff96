import enum
import logging
from dataclasses import dataclass, field

import numpy as np
from django.conf import settings
from fcp.filters import (
    FcpConfig,
    RelativeFilterBank,
    estimate_filterbank,
    fcp_weight,
)
from mcsep_project.exceptions import (
    ConfigurationError,
    DegenerateInputError,
    GeometryError,
)

logger = logging.getLogger(__name__)


class LossVariant(enum.Enum):
    """Which mics see filtered estimates in the mixture-consistency loss."""

    REFERENCE_UNFILTERED = "ref-unfiltered"
    ALL_FILTERED = "all-filtered"

    @property
    def default_fcp(self) -> FcpConfig:
        if self is LossVariant.ALL_FILTERED:
            return FcpConfig(past_taps=19, future_taps=0)
        return FcpConfig(past_taps=19, future_taps=1)


@dataclass(frozen=True)
class LossWeights:
    alpha: tuple = settings.LOSS_WEIGHTS["alpha"]
    gamma: float = settings.LOSS_WEIGHTS["gamma"]

    def __post_init__(self):
        if self.gamma < 0:
            raise ConfigurationError("gamma cannot be negative")
        if self.alpha is not None:
            alpha = np.asarray(self.alpha, dtype=float)
            if np.any(alpha < 0) or not np.any(alpha > 0):
                raise ConfigurationError(
                    "alpha must be non-negative with a positive entry"
                )

    def alpha_for(self, n_mics) -> np.ndarray:
        if self.alpha is None:
            return np.ones(n_mics)
        alpha = np.asarray(self.alpha, dtype=float)
        if alpha.shape != (n_mics,):
            raise GeometryError(
                f"{alpha.size} mic weights given for {n_mics} mics"
            )
        return alpha


@dataclass(frozen=True)
class LossBreakdown:
    """Alpha-weighted per-mic loss terms and their totals."""

    mc_per_mic: np.ndarray
    isms_per_mic: np.ndarray = None
    gamma: float = 0.0
    variant: LossVariant = LossVariant.REFERENCE_UNFILTERED
    filters: RelativeFilterBank = field(default=None, repr=False)

    def __post_init__(self):
        if self.isms_per_mic is None:
            object.__setattr__(
                self, "isms_per_mic", np.zeros_like(self.mc_per_mic)
            )
        if np.any(self.mc_per_mic < 0) or np.any(self.isms_per_mic < 0):
            raise DegenerateInputError("loss terms must be non-negative")

    @property
    def mc_total(self) -> float:
        return float(np.sum(self.mc_per_mic))

    @property
    def isms_total(self) -> float:
        return float(np.sum(self.isms_per_mic))

    @property
    def combined(self) -> float:
        return self.mc_total + self.gamma * self.isms_total


def tf_abs_loss(y, yhat) -> float:
    """Absolute error on real, imaginary and magnitude parts, normalised by
    the mixture magnitude sum."""

    y = np.asarray(y)
    yhat = np.asarray(yhat)
    if y.shape != yhat.shape:
        raise GeometryError(
            f"target {y.shape} and estimate {yhat.shape} differ"
        )
    norm = np.sum(np.abs(y))
    if norm == 0:
        raise DegenerateInputError("all-zero target has no normaliser")
    diff = y - yhat
    error = (
        np.abs(diff.real)
        + np.abs(diff.imag)
        + np.abs(np.abs(y) - np.abs(yhat))
    )
    return float(np.sum(error) / norm)


def _check_geometry(mixtures, zhats):
    mixtures = np.asarray(mixtures)
    zhats = np.asarray(zhats)
    if mixtures.ndim != 3 or zhats.ndim != 3:
        raise GeometryError(
            "mixtures must be (P, T, F) and estimates (C, T, F)"
        )
    if mixtures.shape[1:] != zhats.shape[1:]:
        raise GeometryError(
            f"mixtures {mixtures.shape} and estimates {zhats.shape} differ "
            "in (T, F)"
        )
    return mixtures, zhats


def _mc_per_mic(mixtures, images, alpha):
    summed = images.sum(axis=1)
    return np.array(
        [a * tf_abs_loss(y, s) for a, y, s in zip(alpha, mixtures, summed)]
    )


def mc_loss_ref_unfiltered(
    mixtures, zhats, filterbank, weights: LossWeights = None
) -> LossBreakdown:
    """Mixture consistency with mic 1 compared against the raw sum of
    estimates.

    `filterbank` covers either mics 2..P or all P mics; in the latter case
    its mic-1 filters are ignored.
    """

    mixtures, zhats = _check_geometry(mixtures, zhats)
    weights = weights or LossWeights()
    n_mics = mixtures.shape[0]
    if filterbank.n_mics == n_mics - 1:
        identity = RelativeFilterBank.identity(
            1, filterbank.n_speakers, filterbank.n_freqs, filterbank.config
        )
        filterbank = RelativeFilterBank(
            filters=np.concatenate([identity.filters, filterbank.filters]),
            config=filterbank.config,
        )
    elif filterbank.n_mics != n_mics:
        raise GeometryError(
            f"filter bank has {filterbank.n_mics} mics, mixtures have "
            f"{n_mics}"
        )
    filterbank = filterbank.with_identity_reference()

    images = filterbank.images(zhats)
    return LossBreakdown(
        mc_per_mic=_mc_per_mic(mixtures, images, weights.alpha_for(n_mics)),
        gamma=weights.gamma,
        variant=LossVariant.REFERENCE_UNFILTERED,
        filters=filterbank,
    )


def mc_loss_all_filtered(
    mixtures, zhats, fcp_cfg: FcpConfig = None, weights: LossWeights = None
):
    """Mixture consistency with filters re-estimated at every mic,
    reference included. Returns the breakdown and the filter bank."""

    breakdown = mc_loss(
        mixtures, zhats, LossVariant.ALL_FILTERED, fcp_cfg, weights
    )
    return breakdown, breakdown.filters


def estimate_variant_filters(
    mixtures, zhats, variant: LossVariant, fcp_cfg: FcpConfig = None
) -> RelativeFilterBank:
    mixtures, zhats = _check_geometry(mixtures, zhats)
    fcp_cfg = fcp_cfg or variant.default_fcp
    bank = estimate_filterbank(
        zhats, mixtures, fcp_cfg, fcp_weight(mixtures, fcp_cfg)
    )
    if variant is LossVariant.REFERENCE_UNFILTERED:
        bank = bank.with_identity_reference()
    return bank


def mc_loss(
    mixtures,
    zhats,
    variant: LossVariant = LossVariant.REFERENCE_UNFILTERED,
    fcp_cfg: FcpConfig = None,
    weights: LossWeights = None,
    filterbank: RelativeFilterBank = None,
) -> LossBreakdown:
    """Mixture-consistency loss of either variant.

    Filters are estimated from the estimates unless `filterbank` is given.
    """

    variant = LossVariant(variant)
    if filterbank is None:
        filterbank = estimate_variant_filters(
            mixtures, zhats, variant, fcp_cfg
        )
    if variant is LossVariant.REFERENCE_UNFILTERED:
        return mc_loss_ref_unfiltered(mixtures, zhats, filterbank, weights)

    mixtures, zhats = _check_geometry(mixtures, zhats)
    weights = weights or LossWeights()
    images = filterbank.images(zhats)
    return LossBreakdown(
        mc_per_mic=_mc_per_mic(
            mixtures, images, weights.alpha_for(mixtures.shape[0])
        ),
        gamma=weights.gamma,
        variant=variant,
        filters=filterbank,
    )


def log_magnitude(spec, log_floor=settings.LOG_FLOOR) -> np.ndarray:
    return np.log(np.maximum(np.abs(spec), log_floor))


def isms_per_mic(
    fcp_images, mixtures, weights: LossWeights = None, log_floor=None
) -> np.ndarray:
    """Alpha-weighted intra-source magnitude scattering of every mic.

    Per frame, the variance of log magnitudes over frequency (population
    convention) is averaged over speakers, summed over frames and divided
    by the same sum for the mixture.
    """

    log_floor = settings.LOG_FLOOR if log_floor is None else log_floor
    weights = weights or LossWeights()
    fcp_images = np.asarray(fcp_images)
    mixtures = np.asarray(mixtures)
    if fcp_images.ndim != 4 or fcp_images.shape[0] != mixtures.shape[0]:
        raise GeometryError(
            f"images {fcp_images.shape} must be (P, C, T, F) for "
            f"mixtures {mixtures.shape}"
        )
    if fcp_images.shape[2:] != mixtures.shape[1:]:
        raise GeometryError("images and mixtures differ in (T, F)")

    spread = log_magnitude(fcp_images, log_floor).var(axis=-1)
    numerator = spread.mean(axis=1).sum(axis=-1)
    denominator = log_magnitude(mixtures, log_floor).var(axis=-1).sum(axis=-1)
    if np.any(denominator == 0):
        raise DegenerateInputError(
            "a mixture has constant log magnitude in every frame"
        )
    alpha = weights.alpha_for(mixtures.shape[0])
    return alpha * numerator / denominator


def isms_loss(
    fcp_images, mixtures, weights: LossWeights = None, log_floor=None
) -> float:
    per_mic = isms_per_mic(fcp_images, mixtures, weights, log_floor)
    return float(np.sum(per_mic))


def combined_loss(
    mixtures,
    zhats,
    variant: LossVariant = LossVariant.REFERENCE_UNFILTERED,
    fcp_cfg: FcpConfig = None,
    weights: LossWeights = None,
    filterbank: RelativeFilterBank = None,
    log_floor=None,
) -> LossBreakdown:
    """Mixture consistency plus gamma times ISMS on the filtered images."""

    weights = weights or LossWeights()
    mc = mc_loss(mixtures, zhats, variant, fcp_cfg, weights, filterbank)
    images = mc.filters.images(np.asarray(zhats))
    breakdown = LossBreakdown(
        mc_per_mic=mc.mc_per_mic,
        isms_per_mic=isms_per_mic(images, mixtures, weights, log_floor),
        gamma=weights.gamma,
        variant=mc.variant,
        filters=mc.filters,
    )
    logger.debug(
        "%s loss: mc=%.6g isms=%.6g combined=%.6g",
        breakdown.variant.value,
        breakdown.mc_total,
        breakdown.isms_total,
        breakdown.combined,
    )
    return breakdown

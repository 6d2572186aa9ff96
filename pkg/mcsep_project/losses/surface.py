import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from fcp.filters import FcpConfig
from losses.loss import (
    LossVariant,
    LossWeights,
    estimate_variant_filters,
    mc_loss,
)
from mcsep_project.exceptions import ConfigurationError, GeometryError
from mcsep_project.tables import write_csv
from signal_core.stft import StftConfig, stft
from simkit.scene import SceneTruth

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LossSurface:
    mu: np.ndarray
    nu: np.ndarray
    loss: np.ndarray
    variant: LossVariant

    def value(self, mu, nu) -> float:
        i = int(np.argmin(np.abs(self.mu - mu)))
        j = int(np.argmin(np.abs(self.nu - nu)))
        return float(self.loss[i, j])

    def smallest(self, count=2):
        """Grid points of the `count` smallest losses, smallest first."""

        order = np.argsort(self.loss, axis=None, kind="stable")[:count]
        return [
            (float(self.mu[i]), float(self.nu[j]))
            for i, j in zip(*np.unravel_index(order, self.loss.shape))
        ]

    def rows(self):
        for i, mu in enumerate(self.mu):
            for j, nu in enumerate(self.nu):
                yield float(mu), float(nu), float(self.loss[i, j])


def mixed_estimates(references, noise_ref, mu, nu):
    """Blend two reference images: speaker 1 gets mu and nu of each, speaker
    2 the rest, and both get half of the reference-mic noise."""

    first, second = references
    return np.stack(
        [
            mu * first + nu * second + noise_ref / 2,
            (1 - mu) * first + (1 - nu) * second + noise_ref / 2,
        ]
    )


def loss_surface(
    truth: SceneTruth,
    grid_n=21,
    variant=LossVariant.REFERENCE_UNFILTERED,
    fcp_cfg: FcpConfig = None,
    weights: LossWeights = None,
    freeze_filters=False,
    stft_cfg: StftConfig = None,
) -> LossSurface:
    """Mixture-consistency loss over a uniform (mu, nu) grid on [0, 1]^2.

    Filters are re-estimated at every grid point unless `freeze_filters`,
    which estimates them once at the separated corner (1, 0).
    """

    variant = LossVariant(variant)
    if truth.n_speakers != 2:
        raise GeometryError(
            f"the loss surface needs 2 speakers, scene has {truth.n_speakers}"
        )
    if grid_n < 2:
        raise ConfigurationError("grid_n must be at least 2")
    stft_cfg = stft_cfg or StftConfig(sample_rate=truth.sample_rate)

    mixtures = stft(truth.mixtures, stft_cfg).data
    references = stft(truth.reference_images, stft_cfg).data
    noise_ref = stft(truth.noise[0], stft_cfg).data

    frozen = None
    if freeze_filters:
        corner = mixed_estimates(references, noise_ref, 1.0, 0.0)
        frozen = estimate_variant_filters(mixtures, corner, variant, fcp_cfg)

    grid = np.linspace(0.0, 1.0, grid_n)
    loss = np.zeros((grid_n, grid_n))
    for i, mu in enumerate(grid):
        for j, nu in enumerate(grid):
            zhats = mixed_estimates(references, noise_ref, mu, nu)
            breakdown = mc_loss(
                mixtures, zhats, variant, fcp_cfg, weights, filterbank=frozen
            )
            loss[i, j] = breakdown.mc_total
    logger.info(
        "loss surface %dx%d (%s): min %.6g max %.6g",
        grid_n,
        grid_n,
        variant.value,
        loss.min(),
        loss.max(),
    )
    return LossSurface(mu=grid, nu=grid.copy(), loss=loss, variant=variant)


def write_surface_csv(surface: LossSurface, path) -> Path:
    return write_csv(path, ["mu", "nu", "loss"], surface.rows())

import logging
from dataclasses import dataclass, field

import numpy as np
from django.conf import settings
from fcp.filters import FcpConfig, RelativeFilterBank, fcp_weight
from mcsep_project.exceptions import (
    ConfigurationError,
    DegenerateInputError,
    DivergenceError,
    GeometryError,
    NumericalError,
)
from mcsep_project.streams import substream
from mcsep_project.tables import write_csv
from signal_core.stft import Spectrogram, StftConfig, istft
from solver.steps import filter_ridge, filter_step, objective, source_step

logger = logging.getLogger(__name__)

INITS = ("mixture_split_random", "oracle", "user")
WEIGHTINGS = ("unweighted", "fcp")


@dataclass(frozen=True)
class AlsConfig:
    max_iters: int = settings.ALS["max_iters"]
    tol_rel: float = settings.ALS["tol_rel"]
    fcp: FcpConfig = field(
        default_factory=lambda: FcpConfig(ridge=settings.ALS["filter_ridge"])
    )
    init: str = settings.ALS["init"]
    source_ridge: float = settings.ALS["source_ridge"]
    filter_weighting: str = settings.ALS["filter_weighting"]
    seed: int = settings.ALS["seed"]

    def __post_init__(self):
        if self.max_iters < 1:
            raise ConfigurationError("max_iters must be at least 1")
        if self.tol_rel <= 0:
            raise ConfigurationError("tol_rel must be positive")
        if self.init not in INITS:
            raise ConfigurationError(f"unknown init {self.init!r}")
        if self.source_ridge < 0:
            raise ConfigurationError("source_ridge cannot be negative")
        if self.filter_weighting not in WEIGHTINGS:
            raise ConfigurationError(
                f"unknown filter weighting {self.filter_weighting!r}"
            )


@dataclass
class AlsTrace:
    """Objective history of one run.

    `initial_objective` follows the first filter step; `objectives[i]`
    closes iteration i + 1. `half_steps` has every half-step value in
    order, `data_terms` the ridge-free part at the end of each iteration.
    """

    filter_weighting: str = "unweighted"
    init: str = "mixture_split_random"
    initial_objective: float = None
    objectives: list = field(default_factory=list)
    half_steps: list = field(default_factory=list)
    data_terms: list = field(default_factory=list)
    conditions: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False

    def rows(self):
        yield 0, self.initial_objective
        for i, value in enumerate(self.objectives, start=1):
            yield i, value


def write_trace_csv(trace: AlsTrace, path):
    return write_csv(path, ["iter", "objective"], trace.rows())


@dataclass(frozen=True)
class SeparationEstimate:
    """Mic-1 estimates (C, T, F) and their filtered images at every mic
    (P, C, T, F)."""

    estimates: np.ndarray
    fcp_images: np.ndarray
    stft: StftConfig

    @property
    def n_speakers(self) -> int:
        return self.estimates.shape[0]


def extract_reference_images(
    estimate: SeparationEstimate,
    filterbank: RelativeFilterBank = None,
    out_len=None,
) -> np.ndarray:
    """Time-domain images of every speaker at mic 1, shaped (C, N)."""

    if filterbank is None:
        images = estimate.fcp_images[0]
    else:
        images = filterbank.images(estimate.estimates)[0]
    return istft(images, estimate.stft, out_len)


def initial_estimates(mixtures, n_speakers, cfg: AlsConfig, init_estimates):
    if cfg.init != "mixture_split_random":
        if init_estimates is None:
            raise ConfigurationError(
                f"init {cfg.init!r} needs initial estimates"
            )
        init_estimates = np.asarray(init_estimates, dtype=complex)
        expected = (n_speakers,) + mixtures.shape[1:]
        if init_estimates.shape != expected:
            raise GeometryError(
                f"initial estimates {init_estimates.shape}, want {expected}"
            )
        return init_estimates.copy()

    rng = substream(cfg.seed, "solver.init")
    shape = (n_speakers,) + mixtures.shape[1:]
    noise = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return mixtures[0] / n_speakers * (1 + 0.1 * noise / np.sqrt(2))


def _check_descent(previous, current, energy, step):
    allowed = (
        previous * (1 + settings.MONOTONE_SLACK_REL)
        + settings.MONOTONE_SLACK_ABS * energy
    )
    if current > allowed:
        raise DivergenceError(
            f"objective rose from {previous:.12g} to {current:.12g} in the "
            f"{step} step; check the ridge settings"
        )


def solve(
    mixtures,
    n_speakers,
    cfg: AlsConfig = None,
    init_estimates=None,
    stft_cfg: StftConfig = None,
):
    """Alternate joint filter solves and banded source solves.

    Returns the estimate, the trace and the final filter bank.
    """

    cfg = cfg or AlsConfig()
    if isinstance(mixtures, Spectrogram):
        stft_cfg = mixtures.config
    stft_cfg = stft_cfg or StftConfig()
    mixtures = np.asarray(mixtures)
    if mixtures.ndim != 3:
        raise GeometryError("mixtures must be shaped (P, T, F)")
    if not np.all(np.isfinite(mixtures)):
        raise NumericalError("mixtures contain NaN or Inf")
    if n_speakers < 1:
        raise ConfigurationError("need at least one speaker")
    energy = float(np.sum(np.abs(mixtures) ** 2))
    if energy == 0:
        raise DegenerateInputError("all-zero mixtures cannot be separated")

    n_mics = mixtures.shape[0]
    if n_mics <= n_speakers:
        logger.warning(
            "%d mics for %d speakers: the problem is not over-determined",
            n_mics,
            n_speakers,
        )

    estimates = initial_estimates(mixtures, n_speakers, cfg, init_estimates)
    ridge = filter_ridge(mixtures, cfg.fcp)
    weights = None
    if cfg.filter_weighting == "fcp":
        weights = fcp_weight(mixtures, cfg.fcp)
    monotone = weights is None

    def evaluate(bank, estimates):
        return objective(estimates, bank, mixtures, ridge, cfg.source_ridge)

    trace = AlsTrace(filter_weighting=cfg.filter_weighting, init=cfg.init)
    bank = filter_step(estimates, mixtures, cfg.fcp, ridge, weights)
    previous, _ = evaluate(bank, estimates)
    trace.initial_objective = previous
    trace.half_steps.append(previous)
    logger.info(
        "ALS start: %d speakers, %d mics, objective %.6g",
        n_speakers,
        n_mics,
        previous / energy,
    )

    current = previous
    for iteration in range(1, cfg.max_iters + 1):
        if iteration > 1:
            bank = filter_step(estimates, mixtures, cfg.fcp, ridge, weights)
            value, _ = evaluate(bank, estimates)
            if monotone:
                _check_descent(current, value, energy, "filter")
            trace.half_steps.append(value)
            current = value

        estimates, condition = source_step(bank, mixtures, cfg.source_ridge)
        value, data = evaluate(bank, estimates)
        if monotone:
            _check_descent(current, value, energy, "source")
        trace.half_steps.append(value)
        trace.objectives.append(value)
        trace.data_terms.append(data)
        trace.conditions.append(float(np.max(condition)))
        trace.iterations = iteration
        current = value
        logger.debug(
            "ALS iteration %d: objective %.9g (relative %.3e)",
            iteration,
            value,
            value / energy,
        )

        if previous - value < cfg.tol_rel * energy:
            trace.converged = True
            break
        previous = value

    logger.info(
        "ALS %s after %d iterations, relative objective %.3e",
        "converged" if trace.converged else "stopped",
        trace.iterations,
        current / energy,
    )
    estimate = SeparationEstimate(
        estimates=estimates,
        fcp_images=bank.images(estimates),
        stft=stft_cfg,
    )
    return estimate, trace, bank

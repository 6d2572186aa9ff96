import logging
from pathlib import Path

import numpy as np
from fcp.filters import FcpConfig
from mcsep_project.exceptions import ConfigurationError, GeometryError
from signal_core.stft import StftConfig, stft
from signal_core.wavio import read_wav
from simkit.storage import load_scene

logger = logging.getLogger(__name__)

FCP_OPTIONS = {
    "past_taps": None,
    "future_taps": None,
    "fcp_ridge": None,
    "xi": None,
}


def add_fcp_arguments(parser):
    group = parser.add_argument_group("sub-band filters")
    group.add_argument("--past-taps", dest="past_taps", type=int)
    group.add_argument("--future-taps", dest="future_taps", type=int)
    group.add_argument("--fcp-ridge", dest="fcp_ridge", type=float)
    group.add_argument("--xi", type=float)


def fcp_config(options, base: FcpConfig = None) -> FcpConfig:
    """Override `base` with whichever filter options were given."""

    base = base or FcpConfig()
    return FcpConfig(
        past_taps=_pick(options["past_taps"], base.past_taps),
        future_taps=_pick(options["future_taps"], base.future_taps),
        xi=_pick(options["xi"], base.xi),
        ridge=_pick(options["fcp_ridge"], base.ridge),
    )


def _pick(value, fallback):
    return fallback if value is None else value


def stft_config(sample_rate) -> StftConfig:
    return StftConfig(sample_rate=int(sample_rate))


def read_scene(options, needed=True):
    """The saved scene named by --scene as (truth, description), or
    (None, None) when absent and not needed."""

    if options.get("scene") is None:
        if needed:
            raise ConfigurationError("--scene is required")
        return None, None
    return load_scene(options["scene"])


def read_estimates(path, n_samples=None, sample_rate=None):
    """Load a (C, N) estimate WAV, checked against the scene geometry."""

    estimates, rate = read_wav(Path(path))
    if sample_rate is not None and rate != sample_rate:
        raise GeometryError(
            f"{path} is sampled at {rate} Hz, the scene at {sample_rate} Hz"
        )
    if n_samples is not None and estimates.shape[-1] != n_samples:
        raise GeometryError(
            f"{path} has {estimates.shape[-1]} samples, the scene "
            f"{n_samples}"
        )
    logger.debug("read %d estimates from %s", estimates.shape[0], path)
    return estimates, rate


def estimates_or_references(options, truth):
    """Time-domain estimates from --estimates, or the scene's true
    reference-mic images when none are given."""

    if options.get("estimates") is None:
        logger.info("no --estimates given, scoring the true images")
        return np.array(truth.reference_images)
    estimates, _ = read_estimates(
        options["estimates"], truth.mixtures.shape[-1], truth.sample_rate
    )
    return estimates


def analyse(audio, sample_rate):
    return stft(audio, stft_config(sample_rate))

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from django.conf import settings
from mcsep_project.exceptions import (
    ConfigurationError,
    DegenerateInputError,
    GeometryError,
)
from mcsep_project.streams import substream
from scipy.signal import butter, convolve, lfilter, sosfiltfilt

logger = logging.getLogger(__name__)

DRY_RMS = 0.05


@dataclass(frozen=True)
class SimScene:
    """Dry sources plus one FIR room response per (speaker, mic) pair."""

    dry: np.ndarray
    rirs: tuple
    sample_rate: int = settings.STFT["sample_rate"]
    noise_snr_db: Optional[float] = None
    seed: int = 0
    max_delay: Optional[int] = None

    def __post_init__(self):
        self.validate()

    @property
    def n_speakers(self) -> int:
        return self.dry.shape[0]

    @property
    def n_mics(self) -> int:
        return len(self.rirs[0])

    @property
    def n_samples(self) -> int:
        return self.dry.shape[1]

    def validate(self):
        if self.dry.ndim != 2 or self.dry.shape[0] < 1:
            raise GeometryError("dry sources must be shaped (C, N), C >= 1")
        if self.dry.shape[1] == 0:
            raise DegenerateInputError("dry sources are empty")
        if len(self.rirs) != self.n_speakers:
            raise GeometryError(
                f"{len(self.rirs)} RIR sets for {self.n_speakers} speakers"
            )
        if self.n_mics < 1 or any(len(r) != self.n_mics for r in self.rirs):
            raise GeometryError("every speaker needs one RIR per mic, P >= 1")
        for c, per_mic in enumerate(self.rirs):
            for p, rir in enumerate(per_mic):
                if len(rir) == 0:
                    raise DegenerateInputError(
                        f"RIR for speaker {c + 1}, mic {p + 1} is empty"
                    )
                lead = rir
                if self.max_delay is not None:
                    lead = rir[: self.max_delay + 1]
                if not np.any(lead):
                    raise ConfigurationError(
                        f"RIR for speaker {c + 1}, mic {p + 1} has no direct "
                        f"path within {self.max_delay} taps"
                    )


@dataclass(frozen=True)
class SceneTruth:
    images: np.ndarray
    mixtures: np.ndarray
    noise: np.ndarray
    sample_rate: int = settings.STFT["sample_rate"]

    @property
    def n_speakers(self) -> int:
        return self.images.shape[0]

    @property
    def n_mics(self) -> int:
        return self.images.shape[1]

    @property
    def reference_images(self) -> np.ndarray:
        """Speaker images at mic 1, shaped (C, N)."""

        return self.images[:, 0]


def render(scene: SimScene) -> SceneTruth:
    """Convolve every dry source with every RIR and sum at each mic.

    Outputs keep the full linear-convolution length, so the mixture is the
    exact sum of images (plus noise) on every sample.
    """

    longest = max(len(rir) for per_mic in scene.rirs for rir in per_mic)
    length = scene.n_samples + longest - 1
    images = np.zeros((scene.n_speakers, scene.n_mics, length))
    for c, per_mic in enumerate(scene.rirs):
        for p, rir in enumerate(per_mic):
            image = convolve(scene.dry[c], rir)
            images[c, p, : len(image)] = image

    clean = images.sum(axis=0)
    noise = np.zeros_like(clean)
    if scene.noise_snr_db is not None:
        noise = substream(scene.seed, "simkit.noise").standard_normal(
            clean.shape
        )
        signal_energy = np.sum(clean**2, axis=-1, keepdims=True)
        if np.any(signal_energy == 0):
            raise DegenerateInputError("cannot set an SNR on a silent mic")
        noise_energy = np.sum(noise**2, axis=-1, keepdims=True)
        noise *= np.sqrt(
            signal_energy / (noise_energy * 10 ** (scene.noise_snr_db / 10))
        )

    return SceneTruth(
        images=images,
        mixtures=clean + noise,
        noise=noise,
        sample_rate=scene.sample_rate,
    )


def rir_envelope(rir_len, delay, decay_ms, sample_rate):
    """Amplitude envelope that starts at `delay` and falls 20 dB per decay_ms.

    A 60 dB drop therefore takes 3 * decay_ms.
    """

    n = np.arange(rir_len)
    decay = decay_ms * sample_rate / 1000
    if decay <= 0:
        return (n == delay).astype(float)
    lag = np.maximum(n - delay, 0)
    return np.power(10.0, -lag / decay) * (n >= delay)


def random_rirs(
    n_speakers,
    n_mics,
    rng,
    rir_len,
    decay_ms,
    max_delay,
    sample_rate,
    reference_closest=False,
    tap_grid=None,
    direct_reference=False,
):
    grid = tap_grid or 1
    max_delay = min(max_delay, rir_len - 1)
    delays = grid * rng.integers(
        0, max_delay // grid + 1, size=(n_speakers, n_mics)
    )
    if reference_closest:
        delays[:, 0] = delays.min(axis=1)

    rirs = []
    for c in range(n_speakers):
        per_mic = []
        for p in range(n_mics):
            delay = int(delays[c, p])
            rir = 0.5 * rir_envelope(rir_len, delay, decay_ms, sample_rate)
            rir *= rng.standard_normal(rir_len)
            if direct_reference and p == 0:
                rir[:] = 0.0
            rir[delay] = 1.0
            if tap_grid:
                rir[np.arange(rir_len) % tap_grid != 0] = 0.0
            per_mic.append(rir)
        rirs.append(tuple(per_mic))
    return tuple(rirs)


def speech_like_source(n_samples, rng, sample_rate):
    """Resonant Gaussian noise under a slow log-normal syllable envelope."""

    theta = 2 * np.pi * rng.uniform(300, 2500) / sample_rate
    radius = rng.uniform(0.85, 0.95)
    coloured = lfilter(
        [1.0],
        [1.0, -2 * radius * np.cos(theta), radius**2],
        rng.standard_normal(n_samples),
    )

    sos = butter(2, rng.uniform(2, 6), fs=sample_rate, output="sos")
    slow = sosfiltfilt(sos, rng.standard_normal(n_samples))
    slow /= np.std(slow) or 1.0
    source = coloured * 10 ** (15 * slow / 20)
    return DRY_RMS * source / np.sqrt(np.mean(source**2))


def random_scene(
    n_speakers=settings.SCENE["n_speakers"],
    n_mics=settings.SCENE["n_mics"],
    seed=0,
    rir_len=settings.SCENE["rir_len"],
    decay_ms=settings.SCENE["decay_ms"],
    max_delay=settings.SCENE["max_delay"],
    n_samples=settings.SCENE["n_samples"],
    sample_rate=settings.STFT["sample_rate"],
    noise_snr_db=settings.SCENE["noise_snr_db"],
    reference_closest=False,
    tap_grid=None,
    direct_reference=False,
    dry=None,
) -> SimScene:
    """Draw a seeded over-determined scene with decaying Gaussian RIRs.

    `tap_grid` keeps only taps at multiples of the grid; with the STFT hop
    as grid and `direct_reference` (mic 1 hears only the direct path) the
    sub-band convolutive model relating mic 1 to every other mic is exact
    within a few frames. `dry` replaces the synthetic sources, e.g. with
    speech loaded from WAV files.
    """

    if n_speakers < 1 or n_mics < 1:
        raise ConfigurationError("need at least one speaker and one mic")
    if rir_len < 1:
        raise ConfigurationError("rir_len must be at least 1")
    if max_delay < 0 or decay_ms < 0:
        raise ConfigurationError("max_delay and decay_ms cannot be negative")
    if tap_grid is not None and tap_grid < 1:
        raise ConfigurationError("tap_grid must be positive")

    if dry is None:
        if n_samples < 32:
            raise ConfigurationError("n_samples must be at least 32")
        rng = substream(seed, "simkit.dry")
        dry = np.stack(
            [
                speech_like_source(n_samples, rng, sample_rate)
                for _ in range(n_speakers)
            ]
        )
    else:
        dry = np.atleast_2d(np.asarray(dry, dtype=np.float64))
        if dry.shape[0] != n_speakers:
            raise GeometryError(
                f"{dry.shape[0]} dry sources given for {n_speakers} speakers"
            )

    rirs = random_rirs(
        n_speakers,
        n_mics,
        substream(seed, "simkit.rir"),
        rir_len,
        decay_ms,
        max_delay,
        sample_rate,
        reference_closest=reference_closest,
        tap_grid=tap_grid,
        direct_reference=direct_reference,
    )
    logger.debug(
        "drew scene seed=%d C=%d P=%d rir_len=%d",
        seed,
        n_speakers,
        n_mics,
        rir_len,
    )
    return SimScene(
        dry=dry,
        rirs=rirs,
        sample_rate=sample_rate,
        noise_snr_db=noise_snr_db,
        seed=seed,
        max_delay=max_delay,
    )

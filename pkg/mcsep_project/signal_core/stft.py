from dataclasses import dataclass
from functools import cached_property

import numpy as np
from django.conf import settings
from mcsep_project.exceptions import (
    ConfigurationError,
    DegenerateInputError,
    GeometryError,
    NumericalError,
)
from scipy.signal import get_window

WINDOW_KINDS = ("sqrt_hann", "hann")


@dataclass(frozen=True)
class StftConfig:
    sample_rate: int = settings.STFT["sample_rate"]
    win_len: int = settings.STFT["win_len"]
    hop: int = settings.STFT["hop"]
    fft_size: int = settings.STFT["fft_size"]
    window: str = settings.STFT["window"]

    def __post_init__(self):
        self.validate()

    @classmethod
    def from_ms(cls, win_ms, hop_ms, sample_rate, fft_size=None, **kwargs):
        win_len = int(round(win_ms * sample_rate / 1000))
        hop = int(round(hop_ms * sample_rate / 1000))
        return cls(
            sample_rate=sample_rate,
            win_len=win_len,
            hop=hop,
            fft_size=fft_size or win_len,
            **kwargs,
        )

    def validate(self):
        if self.sample_rate <= 0:
            raise ConfigurationError("sample_rate must be positive")
        if self.win_len <= 0 or self.hop <= 0:
            raise ConfigurationError("win_len and hop must be positive")
        if self.win_len % self.hop:
            raise ConfigurationError(
                f"hop ({self.hop}) must divide win_len ({self.win_len})"
            )
        if self.fft_size < self.win_len:
            raise ConfigurationError(
                f"fft_size ({self.fft_size}) is shorter than "
                f"win_len ({self.win_len})"
            )
        if self.window not in WINDOW_KINDS:
            raise ConfigurationError(f"unknown window kind {self.window!r}")

    @property
    def n_freqs(self) -> int:
        return self.fft_size // 2 + 1

    @property
    def pad_head(self) -> int:
        return self.win_len - self.hop

    @property
    def hop_ms(self) -> float:
        return 1000 * self.hop / self.sample_rate

    @property
    def win_ms(self) -> float:
        return 1000 * self.win_len / self.sample_rate

    def n_frames(self, n_samples: int) -> int:
        """Frames needed so every sample is covered by a full overlap."""

        return (self.pad_head + n_samples - 1) // self.hop + 1

    @cached_property
    def analysis_window(self) -> np.ndarray:
        window = get_window("hann", self.win_len, fftbins=True)
        if self.window == "sqrt_hann":
            window = np.sqrt(window)
        return window

    @cached_property
    def synthesis_window(self) -> np.ndarray:
        window = self.analysis_window
        folded = np.sum((window**2).reshape(-1, self.hop), axis=0)
        return window / np.tile(folded, self.win_len // self.hop)


@dataclass(frozen=True)
class Spectrogram:
    """Complex STFT data of shape (..., T, F)."""

    data: np.ndarray
    config: StftConfig

    def __post_init__(self):
        if self.data.shape[-1] != self.config.n_freqs:
            raise GeometryError(
                f"spectrogram has {self.data.shape[-1]} bins, config "
                f"expects {self.config.n_freqs}"
            )
        if not np.all(np.isfinite(self.data)):
            raise NumericalError("spectrogram contains NaN or Inf")

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.data
        return self.data.astype(dtype)

    @property
    def n_frames(self) -> int:
        return self.data.shape[-2]

    @property
    def n_freqs(self) -> int:
        return self.data.shape[-1]


def stft(audio, cfg: StftConfig = None) -> Spectrogram:
    """Analyse (..., N) real audio into a (..., T, F) spectrogram.

    win_len - hop zeros go in front and the tail is padded up to the last
    frame, so istft reconstructs every input sample exactly.
    """

    cfg = cfg or StftConfig()
    audio = np.asarray(audio, dtype=np.float64)
    if audio.ndim == 0 or audio.shape[-1] == 0:
        raise DegenerateInputError("cannot analyse empty audio")

    n_samples = audio.shape[-1]
    n_frames = cfg.n_frames(n_samples)
    total = (n_frames - 1) * cfg.hop + cfg.win_len
    widths = [(0, 0)] * (audio.ndim - 1)
    widths.append((cfg.pad_head, total - cfg.pad_head - n_samples))
    padded = np.pad(audio, widths)

    frames = np.lib.stride_tricks.sliding_window_view(
        padded, cfg.win_len, axis=-1
    )[..., :: cfg.hop, :]
    data = np.fft.rfft(frames * cfg.analysis_window, n=cfg.fft_size, axis=-1)
    return Spectrogram(data=data, config=cfg)


def istft(spec, cfg: StftConfig = None, out_len: int = None) -> np.ndarray:
    """Overlap-add synthesis, the inverse of stft."""

    if cfg is None:
        if not isinstance(spec, Spectrogram):
            raise ConfigurationError("istft needs a config for raw arrays")
        cfg = spec.config
    data = np.asarray(spec)
    if data.ndim < 2 or data.shape[-1] != cfg.n_freqs:
        raise GeometryError(
            f"spectrogram of shape {data.shape} does not match "
            f"{cfg.n_freqs} frequency bins"
        )

    n_frames = data.shape[-2]
    lead = data.shape[:-2]
    overlap = cfg.win_len // cfg.hop
    frames = np.fft.irfft(data, n=cfg.fft_size, axis=-1)[..., : cfg.win_len]
    blocks = (frames * cfg.synthesis_window).reshape(
        *lead, n_frames, overlap, cfg.hop
    )
    out = np.zeros((*lead, n_frames + overlap - 1, cfg.hop))
    for r in range(overlap):
        out[..., r : r + n_frames, :] += blocks[..., :, r, :]
    out = out.reshape(*lead, -1)[..., cfg.pad_head :]

    if out_len is None:
        return out
    if out_len > out.shape[-1]:
        raise GeometryError(
            f"{n_frames} frames hold {out.shape[-1]} samples, "
            f"{out_len} requested"
        )
    return out[..., :out_len]

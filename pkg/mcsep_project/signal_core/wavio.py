import logging
from pathlib import Path

import numpy as np
import soundfile as sf
from django.conf import settings
from mcsep_project.exceptions import ConfigurationError

logger = logging.getLogger(__name__)

SUBTYPES = ("PCM_16", "FLOAT")

# sndfile.h command codes
SFC_SET_ADD_PEAK_CHUNK = 0x1050
SF_FALSE = 0


def read_wav(path):
    """Return (audio, sample_rate) with audio shaped (channels, samples)."""

    audio, sample_rate = sf.read(str(path), dtype="float64", always_2d=True)
    return audio.T, sample_rate


def write_wav(path, audio, sample_rate, subtype=None):
    subtype = subtype or settings.WAV_SUBTYPE
    if subtype not in SUBTYPES:
        raise ConfigurationError(f"unsupported WAV subtype {subtype!r}")

    audio = np.atleast_2d(np.asarray(audio, dtype=np.float64))
    if subtype == "PCM_16":
        peak = np.max(np.abs(audio), initial=0.0)
        if peak > 1.0:
            logger.warning("clipping %s, peak %.3f exceeds 1.0", path, peak)
        audio = np.clip(audio, -1.0, 1.0)

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with sf.SoundFile(
        str(path),
        "w",
        samplerate=sample_rate,
        channels=audio.shape[0],
        subtype=subtype,
    ) as handle:
        if subtype == "FLOAT":
            _drop_peak_chunk(handle)
        handle.write(audio.T.astype(np.float32))
    return path


def _drop_peak_chunk(handle):
    # libsndfile stamps the PEAK chunk of float files with the wall clock;
    # it can only be switched off before the first frame is written
    sf._snd.sf_command(
        handle._file, SFC_SET_ADD_PEAK_CHUNK, sf._ffi.NULL, SF_FALSE
    )
